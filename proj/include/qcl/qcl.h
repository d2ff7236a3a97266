/* qcl — quantum control landscape analysis.
 *
 * C interface to a library for single-input bilinear Schrödinger dynamics:
 * piecewise-constant propagation with exact step exponentials, end-point-map
 * rank analysis (singular controls), feedback generation of singular
 * extremals, landscape gradients / steepest ascent / critical-point
 * classification, and a perturbed-restart escape experiment.
 *
 * Conventions
 *   - Complex scalars cross the ABI as interleaved doubles [re, im]; complex
 *     vectors of length n occupy 2n doubles; complex matrices are row-major,
 *     2*n*n doubles.
 *   - Every function returns a qcl_status; outputs go through pointers.
 *     On failure qcl_last_error_message() describes the problem; the message
 *     is thread-local and valid until the next qcl call on that thread.
 *   - Objects are opaque handles created/destroyed by matching qcl_*_destroy;
 *     destroy functions accept NULL.
 *   - Buffer sizes are documented per call and are the caller's duty; size
 *     query functions exist for everything variable-length.
 */

#ifndef QCL_H
#define QCL_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define QCL_API __attribute__((visibility("default")))

typedef enum qcl_status {
    QCL_OK = 0,
    QCL_ERR_ARGUMENT = 1,        /* malformed input (sizes, ranges, NULLs) */
    QCL_ERR_VALIDATION = 2,      /* inputs well-formed but violate a contract */
    QCL_ERR_UNDER_RESOLVED = 3,  /* grid too coarse for the requested analysis */
    QCL_ERR_ORDER_CAP = 4,       /* bracket order above the supported cap */
    QCL_ERR_NO_SEED = 5,         /* seed sampling exhausted its attempts */
    QCL_ERR_ARC_TRANSITION = 6,  /* feedback denominator crossed its floor */
    QCL_ERR_NOT_ON_SURFACE = 7,  /* terminal state fails the surface membership test */
    QCL_ERR_INTERNAL = 8         /* anything else (I/O, solver failure, ...) */
} qcl_status;

/* Default tolerances mirrored from the core (checked at build time). */
#define QCL_DEFAULT_RANK_THRESHOLD_REL 1e-8
#define QCL_DEFAULT_DEN_FLOOR_REL 1e-8
#define QCL_DEFAULT_SURFACE_TOL 1e-8
#define QCL_MAX_BRACKET_ORDER 6
/* Feedback-denominator margin (relative to ||phi0||) below which a generated
 * arc is considered under-resolved by the fixed-step integrator; see
 * qcl_extremal_den_min. */
#define QCL_DEN_HEALTHY_REL 1e-2

QCL_API const char* qcl_last_error_message(void);

/* ---------------------------------------------------------------- systems */

typedef struct qcl_system qcl_system;

/* h0, h1: Hermitian matrices, row-major interleaved, 2*dim*dim doubles each.
 * Internally the generators become -i*h0, -i*h1. */
QCL_API qcl_status qcl_system_create_hermitian(int64_t dim, const double* h0, const double* h1,
                                               qcl_system** out);

/* a0, a1: skew-Hermitian generators, same layout. */
QCL_API qcl_status qcl_system_create_skew(int64_t dim, const double* a0, const double* a1,
                                          qcl_system** out);

QCL_API qcl_status qcl_system_dim(const qcl_system* sys, int64_t* dim);
QCL_API void qcl_system_destroy(qcl_system* sys);

/* --------------------------------------------------------------- controls */

typedef struct qcl_control qcl_control;

/* Piecewise-constant control: samples[j] holds on interval j of m equal
 * intervals spanning [0, duration]. */
QCL_API qcl_status qcl_control_create(double duration, const double* samples, int64_t m,
                                      qcl_control** out);
QCL_API qcl_status qcl_control_num_samples(const qcl_control* c, int64_t* m);
QCL_API qcl_status qcl_control_duration(const qcl_control* c, double* duration);
/* buf: m doubles. */
QCL_API qcl_status qcl_control_samples(const qcl_control* c, double* buf);
QCL_API void qcl_control_destroy(qcl_control* c);

/* ----------------------------------------------------------- propagation */

typedef struct qcl_trajectory qcl_trajectory;

/* psi0: unit state, 2*dim doubles. The trajectory holds m+1 grid nodes. */
QCL_API qcl_status qcl_propagate(const qcl_system* sys, const qcl_control* c, const double* psi0,
                                 qcl_trajectory** out);
QCL_API qcl_status qcl_trajectory_num_nodes(const qcl_trajectory* t, int64_t* nodes);
/* buf: nodes doubles. */
QCL_API qcl_status qcl_trajectory_times(const qcl_trajectory* t, double* buf);
/* buf: 2*dim doubles. */
QCL_API qcl_status qcl_trajectory_state(const qcl_trajectory* t, int64_t node, double* buf);
/* buf: 2*dim*dim doubles, row-major. */
QCL_API qcl_status qcl_trajectory_propagator(const qcl_trajectory* t, int64_t node, double* buf);
QCL_API void qcl_trajectory_destroy(qcl_trajectory* t);

/* -------------------------------------------------------- rank deficiency */

typedef struct qcl_corank_report {
    int64_t ambient_dim;
    int64_t rank;
    int64_t corank;
    double threshold;      /* absolute singular-value cut actually applied */
    double threshold_rel;  /* requested relative cut */
    double spectral_gap;   /* sigma_rank / sigma_rank+1; +inf when undefined */
} qcl_corank_report;

/* Corank of the end-point state map psi(T) over the given control; ambient
 * dimension 2*dim-1. sv/sv_count (optional, pass NULL to skip): the singular
 * values of the scaled response matrix, sv holds up to sv_capacity entries,
 * *sv_count receives the total available. threshold_rel <= 0 selects the
 * default QCL_DEFAULT_RANK_THRESHOLD_REL. */
QCL_API qcl_status qcl_corank_state(const qcl_system* sys, const qcl_control* c,
                                    const double* psi0, double threshold_rel,
                                    qcl_corank_report* report, double* sv, int64_t sv_capacity,
                                    int64_t* sv_count);

/* Same for the end-point propagator map U(T); ambient dimension dim*dim. */
QCL_API qcl_status qcl_corank_propagator(const qcl_system* sys, const qcl_control* c,
                                         double threshold_rel, qcl_corank_report* report,
                                         double* sv, int64_t sv_capacity, int64_t* sv_count);

/* ---------------------------------------------------------- singular arcs */

typedef struct qcl_seed qcl_seed;
typedef struct qcl_extremal qcl_extremal;

/* Rejection-sample a seed (psi0, phi0) for an order-`order` singular arc:
 * phi0 lies in the bracket-orthogonal subspace at psi0 and clears the
 * denominator cone floor. phase_orthogonal != 0 additionally enforces
 * real_inner(phi0, i*psi0) = 0. max_attempts <= 0 selects the default. */
QCL_API qcl_status qcl_sample_seed_pair(const qcl_system* sys, int64_t order, uint64_t rng_seed,
                                        int phase_orthogonal, int64_t max_attempts,
                                        qcl_seed** out);

/* Wrap explicit data as a seed; full admissibility is checked by
 * qcl_validate_seed / generation. psi0, phi0: 2*dim doubles. */
QCL_API qcl_status qcl_seed_create(const qcl_system* sys, const double* psi0, const double* phi0,
                                   int64_t order, qcl_seed** out);
/* Any of psi0 / phi0 / order may be NULL. Buffers: 2*dim doubles. */
QCL_API qcl_status qcl_seed_data(const qcl_seed* seed, double* psi0, double* phi0, int64_t* order);
QCL_API qcl_status qcl_validate_seed(const qcl_system* sys, const qcl_seed* seed);
QCL_API void qcl_seed_destroy(qcl_seed* seed);

/* Integrate the feedback-closed arc from the seed over [0, duration] with
 * num_samples grid intervals. den_floor_rel <= 0 selects the default. */
QCL_API qcl_status qcl_generate_singular_extremal(const qcl_system* sys, const qcl_seed* seed,
                                                  double duration, int64_t num_samples,
                                                  double den_floor_rel, qcl_extremal** out);

/* Construct a singular arc ending at psi_T on the order-`order` singular
 * surface for target psif, by integrating the feedback system backward from
 * the terminal pair (psi_T, gradF(psi_T)). surface_tol <= 0 selects the
 * default. psi_T, psif: unit states, 2*dim doubles. */
QCL_API qcl_status qcl_backward_singular_from_surface(const qcl_system* sys, const double* psi_T,
                                                      const double* psif, int64_t order,
                                                      double duration, int64_t num_samples,
                                                      double surface_tol, qcl_extremal** out);

QCL_API qcl_status qcl_extremal_num_samples(const qcl_extremal* e, int64_t* m);
QCL_API qcl_status qcl_extremal_order(const qcl_extremal* e, int64_t* order);
/* pattern: bracket index word defining the feedback ratio. buf holds up to
 * capacity entries; *len receives the total length. */
QCL_API qcl_status qcl_extremal_pattern(const qcl_extremal* e, int64_t* buf, int64_t capacity,
                                        int64_t* len);
/* New handle holding the midpoint control samples. */
QCL_API qcl_status qcl_extremal_control(const qcl_extremal* e, qcl_control** out);
/* buf: m+1 doubles — feedback evaluated on the grid nodes. */
QCL_API qcl_status qcl_extremal_feedback_at_grid(const qcl_extremal* e, double* buf);
/* Each non-NULL buffer receives m doubles: midpoint times and the three
 * constraint residual series (conjugate pairing with A1, with [A0,A1], and
 * the feedback-stationarity combination). */
QCL_API qcl_status qcl_extremal_residuals(const qcl_extremal* e, double* times, double* r1,
                                          double* r2, double* r3);
/* Minimum |feedback denominator| over the arc's midpoints. Arcs where this
 * stays above ~1e-2 * ||phi0|| are well resolved by the fixed-step
 * integrator; smaller margins let the feedback spike and the residual
 * series degrade. */
QCL_API qcl_status qcl_extremal_den_min(const qcl_extremal* e, double* den_min);
/* New handle with the arc's realized seed (for backward arcs: the t = 0 pair). */
QCL_API qcl_status qcl_extremal_seed(const qcl_extremal* e, qcl_seed** out);
/* New handle with the arc's grid trajectory. */
QCL_API qcl_status qcl_extremal_trajectory(const qcl_extremal* e, qcl_trajectory** out);
QCL_API void qcl_extremal_destroy(qcl_extremal* e);

/* Normalized Wronskian-style determinant series of the response functions
 * (N = 2 uses exact derivative rows; larger N differentiates numerically, so
 * the series is shorter than m). times/values hold up to capacity entries;
 * *count receives the total; degenerate flags a vanishing row. times, values
 * may be NULL for a size query. */
QCL_API qcl_status qcl_wronskian(const qcl_system* sys, const qcl_control* c, const double* psi0,
                                 double* times, double* values, int64_t capacity, int64_t* count,
                                 int* degenerate);

/* Verdict rule on a Wronskian series: singular iff the 0.9-quantile of the
 * normalized determinants falls below tol. */
QCL_API qcl_status qcl_wronskian_singular_verdict(const double* values, int64_t n, double tol,
                                                  int* singular);

/* Distance of the terminal kinematic gradient from the order-`order` singular
 * cone at psi, relative to its norm; kinematic != 0 means the gradient
 * vanishes outright. */
QCL_API qcl_status qcl_singular_surface_residual(const qcl_system* sys, const double* psi,
                                                 const double* psif, int64_t order,
                                                 double threshold_rel, double* residual,
                                                 int* kinematic);

/* -------------------------------------------------------------- landscape */

/* J = |psif^dag psi(T)|^2. */
QCL_API qcl_status qcl_objective(const qcl_system* sys, const qcl_control* c, const double* psi0,
                                 const double* psif, double* j);

/* buf: m doubles — exact gradient of J with respect to the control samples. */
QCL_API qcl_status qcl_gradient(const qcl_system* sys, const qcl_control* c, const double* psi0,
                                const double* psif, double* buf);

/* buf: m doubles — conjugate-state switching function at interval midpoints;
 * equals gradient / dt up to rounding. */
QCL_API qcl_status qcl_pmp_residual(const qcl_system* sys, const qcl_control* c,
                                    const double* psi0, const double* psif, double* buf);

typedef struct qcl_ascent_options {
    int64_t max_iters;
    double step0;
    double backtrack;
    double growth;
    double step_max;
    double grad_tol;   /* stop when sup_j |g_j| <= grad_tol */
    double j_tol;      /* stop when J >= 1 - j_tol */
    double alpha_min;  /* line search fails below this step */
} qcl_ascent_options;

QCL_API void qcl_ascent_options_default(qcl_ascent_options* opts);

typedef enum qcl_termination {
    QCL_TERM_GRAD_TOL = 0,
    QCL_TERM_J_TOL = 1,
    QCL_TERM_MAX_ITERS = 2,
    QCL_TERM_LINE_SEARCH_FAILURE = 3
} qcl_termination;

typedef struct qcl_ascent qcl_ascent;

/* Monotone steepest ascent from c0. opts NULL selects defaults; reference
 * (optional, same grid) feeds the per-iterate sup-norm distance trace.
 * A line-search failure is reported in the record, not as an error status. */
QCL_API qcl_status qcl_steepest_ascent(const qcl_system* sys, const qcl_control* c0,
                                       const double* psi0, const double* psif,
                                       const qcl_ascent_options* opts,
                                       const qcl_control* reference, qcl_ascent** out);

/* Any output may be NULL. termination takes qcl_termination values. */
QCL_API qcl_status qcl_ascent_summary(const qcl_ascent* a, double* final_j, int* termination,
                                      int* converged, double* smallest_alpha);
QCL_API qcl_status qcl_ascent_num_iterates(const qcl_ascent* a, int64_t* n);
/* Per-iterate data; any output may be NULL. ref_distance is NaN without a
 * reference control. */
QCL_API qcl_status qcl_ascent_iterate(const qcl_ascent* a, int64_t idx, double* j,
                                      double* grad_sup, double* step, double* ref_distance);
QCL_API qcl_status qcl_ascent_final_control(const qcl_ascent* a, qcl_control** out);
QCL_API void qcl_ascent_destroy(qcl_ascent* a);

typedef enum qcl_critical_class {
    QCL_CLASS_NOT_CRITICAL = 0,
    QCL_CLASS_REGULAR_KINEMATIC = 1,
    QCL_CLASS_SINGULAR_KINEMATIC = 2,
    QCL_CLASS_NONKINEMATIC = 3
} qcl_critical_class;

typedef struct qcl_classify_options {
    double crit_tol;            /* on the L2 norm of the functional gradient */
    double kin_tol;             /* on the projected terminal gradient */
    double rank_threshold_rel;  /* corank cut */
    int with_hessian;
    double hessian_fd_step;
    int force_hessian;          /* allow m > 512 */
} qcl_classify_options;

QCL_API void qcl_classify_options_default(qcl_classify_options* opts);

typedef struct qcl_critical_report {
    int classification;  /* qcl_critical_class */
    double j;
    double grad_norm;                    /* L2 norm of the functional gradient */
    double kinematic_grad_norm;          /* terminal gradient, phase/radial projected */
    double kinematic_grad_norm_ambient;  /* terminal gradient before projection */
    qcl_corank_report corank;            /* state-map corank at this control */
    int has_hessian;
    double hessian_min;
    double hessian_max;
} qcl_critical_report;

QCL_API qcl_status qcl_classify(const qcl_system* sys, const qcl_control* c, const double* psi0,
                                const double* psif, const qcl_classify_options* opts,
                                qcl_critical_report* report);

/* buf: m doubles, eigenvalues ascending of the second-difference Hessian. */
QCL_API qcl_status qcl_hessian_spectrum(const qcl_system* sys, const qcl_control* c,
                                        const double* psi0, const double* psif, double fd_step,
                                        int force, double* buf);

typedef struct qcl_trap_options {
    int64_t num_trials;
    double radius;     /* exact sup-norm of each perturbation */
    double success_j;  /* yield threshold for a successful climb */
    uint64_t rng_seed;
    qcl_ascent_options ascent;
} qcl_trap_options;

QCL_API void qcl_trap_options_default(qcl_trap_options* opts);

typedef struct qcl_trap qcl_trap;

/* Perturb the reference control num_trials times, ascend from each start, and
 * aggregate; success_fraction counts successes over non-stalled trials. */
QCL_API qcl_status qcl_trap_experiment(const qcl_system* sys, const qcl_control* reference,
                                       const double* psi0, const double* psif,
                                       const qcl_trap_options* opts, qcl_trap** out);

/* Any output may be NULL. */
QCL_API qcl_status qcl_trap_summary(const qcl_trap* t, int64_t* num_trials, int64_t* num_success,
                                    int64_t* num_stalled, double* success_fraction,
                                    double* min_final_j, int* on_critical_start);
QCL_API qcl_status qcl_trap_trial(const qcl_trap* t, int64_t idx, double* initial_j,
                                  double* final_j, int* success, int* stalled,
                                  double* initial_distance, double* final_distance);
/* New handle with trial idx's full ascent record. */
QCL_API qcl_status qcl_trap_trial_record(const qcl_trap* t, int64_t idx, qcl_ascent** out);
QCL_API void qcl_trap_destroy(qcl_trap* t);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* QCL_H */
