#pragma once

// Transition-probability landscape J[eps] = |psif^dag psi(T)|^2 over piecewise
// constant controls: objective, exact discretized gradient, conjugate-state
// residuals, steepest ascent with backtracking, critical-point classification,
// finite-difference Hessian spectra, and the perturbed-restart experiment.
//
// The gradient is assembled from the Frechet columns of the end-point map and
// is therefore exact for the discretized dynamics; pmp_residual computes the
// same object through the conjugate trajectory phi(t) = U(t)U(T)^dag gradF and
// the two must agree to rounding.

#include <cstdint>
#include <vector>

#include "dynamics.hpp"
#include "singular.hpp"

namespace qcl {

// J = |psif^dag psi(T)|^2 in [0,1].
double objective(const QuantumSystem& sys, const ControlField& c, const Eigen::VectorXcd& psi0,
                 const Eigen::VectorXcd& psif);

// Ambient gradient of F(psi) = |psif^dag psi|^2: gradF = 2 (psif^dag psi) psif,
// in the sense F(psi + d) - F(psi) = real_inner(gradF, d) + O(|d|^2).
Eigen::VectorXcd kinematic_gradient(const Eigen::VectorXcd& psiT, const Eigen::VectorXcd& psif);

// g_j = dt * real_inner(gradF(psi(T)), U(T) Umid_j^dag A1hat_j psi(tmid_j)),
// the exact derivative of J with respect to sample j.
Eigen::VectorXd gradient(const QuantumSystem& sys, const ControlField& c,
                         const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif);

// Switching-function samples s_j = real_inner(phi(tmid_j), A1hat_j psi(tmid_j))
// with phi(t) = U(t) U(T)^dag gradF(psi(T)), evaluated at interval midpoints;
// satisfies s_j * dt == g_j up to rounding.
Eigen::VectorXd pmp_residual(const QuantumSystem& sys, const ControlField& c,
                             const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif);

struct AscentOptions {
    int max_iters = 5000;
    double step0 = 0.05;       // initial line-search step
    double backtrack = 0.5;    // step shrink factor on rejection
    double growth = 2.0;       // step growth factor after acceptance
    double step_max = 1.0;     // cap on the trial step
    double grad_tol = 1e-6;    // terminate when sup_j |g_j| <= grad_tol
    double j_tol = 1e-6;       // terminate when J >= 1 - j_tol
    double alpha_min = 1e-12;  // below this the line search has failed
};

enum class AscentTermination { GradTol, JTol, MaxIters, LineSearchFailure };

const char* to_string(AscentTermination t);

struct AscentIterate {
    int iteration = 0;
    double j = 0.0;
    double grad_sup = 0.0;      // sup_j |g_j| at this iterate
    double step = 0.0;          // accepted step that produced this iterate (0 for the start)
    double ref_distance = 0.0;  // sup-norm distance to the reference control (NaN without one)
};

struct AscentRecord {
    ControlField final_control;
    double final_j = 0.0;
    AscentTermination termination = AscentTermination::MaxIters;
    bool converged = false;        // true for GradTol / JTol
    double smallest_alpha = 0.0;   // last step tried when the line search failed
    std::vector<AscentIterate> iterates;
};

// Monotone steepest ascent eps <- eps + alpha * g/dt with backtracking.
// The optional reference control (same grid) feeds the per-iterate distance.
AscentRecord steepest_ascent(const QuantumSystem& sys, const ControlField& c0,
                             const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif,
                             const AscentOptions& opts = {},
                             const ControlField* reference = nullptr);

enum class CriticalClass { NotCritical, RegularKinematic, SingularKinematic, Nonkinematic };

const char* to_string(CriticalClass c);

struct ClassifyTolerances {
    double crit_tol = 1e-6;        // on the L2 norm of the functional gradient
    double kin_tol = 1e-6;         // on the projected terminal gradient
    double rank_threshold_rel = kRankThresholdRel;
    bool with_hessian = false;
    double hessian_fd_step = 1e-4;
    bool force_hessian = false;    // allow M > 512 Hessians
};

struct CriticalPointReport {
    CriticalClass classification = CriticalClass::NotCritical;
    double j = 0.0;
    double grad_norm = 0.0;                    // L2 norm of g/dt, i.e. sqrt(sum s_j^2 dt)
    double kinematic_grad_norm = 0.0;          // |gradF| projected orthogonal to psiT and i*psiT
    double kinematic_grad_norm_ambient = 0.0;  // |gradF| before projection (= 2 sqrt(J))
    CorankReport corank;                       // state-map corank at this control
    Eigen::VectorXd hessian_eigenvalues;       // ascending; empty unless requested
    bool has_hessian = false;
    double hessian_min = 0.0;
    double hessian_max = 0.0;
};

// Classification per the regular/singular x kinematic/nonkinematic taxonomy.
// NotCritical iff grad_norm > crit_tol; otherwise kinematic iff the projected
// terminal gradient is <= kin_tol (the ambient gradient never vanishes at the
// top of the landscape, so the test quotients out the psiT phase/radial
// directions); regular vs singular by the corank of the state map.
CriticalPointReport classify(const QuantumSystem& sys, const ControlField& c,
                             const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif,
                             const ClassifyTolerances& tol = {});

// Symmetric M x M matrix of second central differences of J over the control
// samples. Refuses M > 512 unless forced (O(M^2) propagations otherwise kept
// cheap by prefix/suffix caching).
Eigen::MatrixXd hessian_matrix(const QuantumSystem& sys, const ControlField& c,
                               const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif,
                               double fd_step = 1e-4, bool force = false);

// Eigenvalues of hessian_matrix, ascending.
Eigen::VectorXd hessian_spectrum(const QuantumSystem& sys, const ControlField& c,
                                 const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif,
                                 double fd_step = 1e-4, bool force = false);

struct TrapExperimentOptions {
    int num_trials = 2;
    double radius = 0.01;     // exact sup-norm of each perturbation
    double success_j = 0.99;  // yield threshold for a successful climb
    std::uint64_t rng_seed = 0;
    AscentOptions ascent;
};

struct TrapTrialRecord {
    double initial_j = 0.0;
    double final_j = 0.0;
    bool success = false;
    bool stalled = false;  // gradient-tolerance stop below the success yield
    double initial_distance = 0.0;
    double final_distance = 0.0;
    AscentRecord record;
};

struct TrapExperimentReport {
    std::vector<TrapTrialRecord> trials;
    int num_success = 0;
    int num_stalled = 0;
    double success_fraction = 0.0;  // successes over trials that did not stall
    double min_final_j = 1.0;
    bool on_critical_start = false;  // radius 0 and the reference itself is critical
};

// Perturb a reference control by i.i.d. uniform noise scaled to exact sup-norm
// `radius`, run steepest ascent from each perturbed start, and aggregate.
TrapExperimentReport trap_experiment(const QuantumSystem& sys, const ControlField& reference,
                                     const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif,
                                     const TrapExperimentOptions& opts);

}  // namespace qcl
