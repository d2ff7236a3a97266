#include "qcl/qcl.h"

#include <climits>
#include <string>
#include <utility>

#include "landscape.hpp"

struct qcl_system {
    qcl::QuantumSystem sys;
};
struct qcl_control {
    qcl::ControlField c;
};
struct qcl_trajectory {
    qcl::Trajectory tr;
};
struct qcl_seed {
    qcl::SeedPair seed;
};
struct qcl_extremal {
    qcl::SingularExtremal arc;
};
struct qcl_ascent {
    qcl::AscentRecord rec;
};
struct qcl_trap {
    qcl::TrapExperimentReport rep;
};

namespace {

static_assert(QCL_DEFAULT_RANK_THRESHOLD_REL == qcl::kRankThresholdRel);
static_assert(QCL_DEFAULT_DEN_FLOOR_REL == qcl::kDenFloorRel);
static_assert(QCL_MAX_BRACKET_ORDER == qcl::kMaxBracketOrder);
static_assert(QCL_DEN_HEALTHY_REL == qcl::kDenHealthyRel);

thread_local std::string t_error;

qcl_status fail(qcl_status s, const char* msg) {
    t_error = msg;
    return s;
}

template <class F>
qcl_status wrap(F&& f) {
    try {
        f();
        t_error.clear();
        return QCL_OK;
    } catch (const qcl::ArgumentError& e) {
        t_error = e.what();
        return QCL_ERR_ARGUMENT;
    } catch (const qcl::ValidationError& e) {
        t_error = e.what();
        return QCL_ERR_VALIDATION;
    } catch (const qcl::UnderResolvedError& e) {
        t_error = e.what();
        return QCL_ERR_UNDER_RESOLVED;
    } catch (const qcl::OrderCapError& e) {
        t_error = e.what();
        return QCL_ERR_ORDER_CAP;
    } catch (const qcl::NoSeedFoundError& e) {
        t_error = e.what();
        return QCL_ERR_NO_SEED;
    } catch (const qcl::SingularArcTransitionError& e) {
        t_error = e.what();
        return QCL_ERR_ARC_TRANSITION;
    } catch (const qcl::NotOnSurfaceError& e) {
        t_error = e.what();
        return QCL_ERR_NOT_ON_SURFACE;
    } catch (const std::exception& e) {
        t_error = e.what();
        return QCL_ERR_INTERNAL;
    } catch (...) {
        t_error = "unknown failure";
        return QCL_ERR_INTERNAL;
    }
}

#define QCL_REQUIRE(cond, msg)                      \
    do {                                            \
        if (!(cond)) return fail(QCL_ERR_ARGUMENT, msg); \
    } while (0)

Eigen::MatrixXcd read_matrix(Eigen::Index dim, const double* data) {
    Eigen::MatrixXcd m(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            const Eigen::Index i = 2 * (r * dim + c);
            m(r, c) = qcl::Complex(data[i], data[i + 1]);
        }
    }
    return m;
}

Eigen::VectorXcd read_vector(Eigen::Index dim, const double* data) {
    Eigen::VectorXcd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = qcl::Complex(data[2 * i], data[2 * i + 1]);
    return v;
}

void write_vector(const Eigen::VectorXcd& v, double* buf) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        buf[2 * i] = v[i].real();
        buf[2 * i + 1] = v[i].imag();
    }
}

void write_matrix(const Eigen::MatrixXcd& m, double* buf) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const Eigen::Index i = 2 * (r * m.cols() + c);
            buf[i] = m(r, c).real();
            buf[i + 1] = m(r, c).imag();
        }
    }
}

void fill_corank(const qcl::CorankReport& in, qcl_corank_report* out) {
    out->ambient_dim = in.ambient_dim;
    out->rank = in.rank;
    out->corank = in.corank;
    out->threshold = in.threshold;
    out->threshold_rel = in.threshold_rel;
    out->spectral_gap = in.spectral_gap;
}

void corank_common(const qcl::CorankReport& rep, qcl_corank_report* report, double* sv,
                   int64_t sv_capacity, int64_t* sv_count) {
    fill_corank(rep, report);
    if (sv_count) *sv_count = rep.singular_values.size();
    if (sv) {
        if (sv_capacity < rep.singular_values.size()) {
            throw qcl::ArgumentError("corank: singular-value buffer too small");
        }
        Eigen::Map<Eigen::VectorXd>(sv, rep.singular_values.size()) = rep.singular_values;
    }
}

qcl::AscentOptions convert(const qcl_ascent_options* opts) {
    qcl::AscentOptions a;
    if (!opts) return a;
    if (opts->max_iters > INT_MAX) throw qcl::ArgumentError("ascent options: max_iters too large");
    a.max_iters = static_cast<int>(opts->max_iters);
    a.step0 = opts->step0;
    a.backtrack = opts->backtrack;
    a.growth = opts->growth;
    a.step_max = opts->step_max;
    a.grad_tol = opts->grad_tol;
    a.j_tol = opts->j_tol;
    a.alpha_min = opts->alpha_min;
    return a;
}

}  // namespace

extern "C" {

const char* qcl_last_error_message(void) { return t_error.c_str(); }

/* systems */

qcl_status qcl_system_create_hermitian(int64_t dim, const double* h0, const double* h1,
                                       qcl_system** out) {
    QCL_REQUIRE(h0 && h1 && out, "qcl_system_create_hermitian: null pointer");
    QCL_REQUIRE(dim >= 2, "qcl_system_create_hermitian: dim must be >= 2");
    return wrap([&] {
        *out = new qcl_system{qcl::QuantumSystem::from_hermitian(read_matrix(dim, h0),
                                                                 read_matrix(dim, h1))};
    });
}

qcl_status qcl_system_create_skew(int64_t dim, const double* a0, const double* a1,
                                  qcl_system** out) {
    QCL_REQUIRE(a0 && a1 && out, "qcl_system_create_skew: null pointer");
    QCL_REQUIRE(dim >= 2, "qcl_system_create_skew: dim must be >= 2");
    return wrap([&] {
        *out = new qcl_system{qcl::QuantumSystem::from_skew(read_matrix(dim, a0),
                                                            read_matrix(dim, a1))};
    });
}

qcl_status qcl_system_dim(const qcl_system* sys, int64_t* dim) {
    QCL_REQUIRE(sys && dim, "qcl_system_dim: null pointer");
    *dim = sys->sys.dim;
    return QCL_OK;
}

void qcl_system_destroy(qcl_system* sys) { delete sys; }

/* controls */

qcl_status qcl_control_create(double duration, const double* samples, int64_t m,
                              qcl_control** out) {
    QCL_REQUIRE(samples && out, "qcl_control_create: null pointer");
    QCL_REQUIRE(m >= 1, "qcl_control_create: need at least one sample");
    return wrap([&] {
        qcl::ControlField c;
        c.duration = duration;
        c.samples = Eigen::Map<const Eigen::VectorXd>(samples, m);
        qcl::validate_control(c);
        *out = new qcl_control{std::move(c)};
    });
}

qcl_status qcl_control_num_samples(const qcl_control* c, int64_t* m) {
    QCL_REQUIRE(c && m, "qcl_control_num_samples: null pointer");
    *m = c->c.samples.size();
    return QCL_OK;
}

qcl_status qcl_control_duration(const qcl_control* c, double* duration) {
    QCL_REQUIRE(c && duration, "qcl_control_duration: null pointer");
    *duration = c->c.duration;
    return QCL_OK;
}

qcl_status qcl_control_samples(const qcl_control* c, double* buf) {
    QCL_REQUIRE(c && buf, "qcl_control_samples: null pointer");
    Eigen::Map<Eigen::VectorXd>(buf, c->c.samples.size()) = c->c.samples;
    return QCL_OK;
}

void qcl_control_destroy(qcl_control* c) { delete c; }

/* propagation */

qcl_status qcl_propagate(const qcl_system* sys, const qcl_control* c, const double* psi0,
                         qcl_trajectory** out) {
    QCL_REQUIRE(sys && c && psi0 && out, "qcl_propagate: null pointer");
    return wrap([&] {
        *out = new qcl_trajectory{qcl::propagate(sys->sys, c->c, read_vector(sys->sys.dim, psi0))};
    });
}

qcl_status qcl_trajectory_num_nodes(const qcl_trajectory* t, int64_t* nodes) {
    QCL_REQUIRE(t && nodes, "qcl_trajectory_num_nodes: null pointer");
    *nodes = static_cast<int64_t>(t->tr.states.size());
    return QCL_OK;
}

qcl_status qcl_trajectory_times(const qcl_trajectory* t, double* buf) {
    QCL_REQUIRE(t && buf, "qcl_trajectory_times: null pointer");
    Eigen::Map<Eigen::VectorXd>(buf, t->tr.times.size()) = t->tr.times;
    return QCL_OK;
}

qcl_status qcl_trajectory_state(const qcl_trajectory* t, int64_t node, double* buf) {
    QCL_REQUIRE(t && buf, "qcl_trajectory_state: null pointer");
    QCL_REQUIRE(node >= 0 && node < static_cast<int64_t>(t->tr.states.size()),
                "qcl_trajectory_state: node out of range");
    write_vector(t->tr.states[static_cast<size_t>(node)], buf);
    return QCL_OK;
}

qcl_status qcl_trajectory_propagator(const qcl_trajectory* t, int64_t node, double* buf) {
    QCL_REQUIRE(t && buf, "qcl_trajectory_propagator: null pointer");
    QCL_REQUIRE(node >= 0 && node < static_cast<int64_t>(t->tr.propagators.size()),
                "qcl_trajectory_propagator: node out of range");
    write_matrix(t->tr.propagators[static_cast<size_t>(node)], buf);
    return QCL_OK;
}

void qcl_trajectory_destroy(qcl_trajectory* t) { delete t; }

/* rank deficiency */

qcl_status qcl_corank_state(const qcl_system* sys, const qcl_control* c, const double* psi0,
                            double threshold_rel, qcl_corank_report* report, double* sv,
                            int64_t sv_capacity, int64_t* sv_count) {
    QCL_REQUIRE(sys && c && psi0 && report, "qcl_corank_state: null pointer");
    return wrap([&] {
        const double tr = threshold_rel > 0.0 ? threshold_rel : qcl::kRankThresholdRel;
        corank_common(qcl::corank_state(sys->sys, c->c, read_vector(sys->sys.dim, psi0), tr),
                      report, sv, sv_capacity, sv_count);
    });
}

qcl_status qcl_corank_propagator(const qcl_system* sys, const qcl_control* c, double threshold_rel,
                                 qcl_corank_report* report, double* sv, int64_t sv_capacity,
                                 int64_t* sv_count) {
    QCL_REQUIRE(sys && c && report, "qcl_corank_propagator: null pointer");
    return wrap([&] {
        const double tr = threshold_rel > 0.0 ? threshold_rel : qcl::kRankThresholdRel;
        corank_common(qcl::corank_propagator(sys->sys, c->c, tr), report, sv, sv_capacity,
                      sv_count);
    });
}

/* singular arcs */

qcl_status qcl_sample_seed_pair(const qcl_system* sys, int64_t order, uint64_t rng_seed,
                                int phase_orthogonal, int64_t max_attempts, qcl_seed** out) {
    QCL_REQUIRE(sys && out, "qcl_sample_seed_pair: null pointer");
    return wrap([&] {
        qcl::SeedOptions opts;
        opts.phase_orthogonal = phase_orthogonal != 0;
        if (max_attempts > 0) {
            if (max_attempts > INT_MAX) throw qcl::ArgumentError("qcl_sample_seed_pair: max_attempts too large");
            opts.max_attempts = static_cast<int>(max_attempts);
        }
        *out = new qcl_seed{
            qcl::sample_seed_pair(sys->sys, static_cast<int>(order), rng_seed, opts)};
    });
}

qcl_status qcl_seed_create(const qcl_system* sys, const double* psi0, const double* phi0,
                           int64_t order, qcl_seed** out) {
    QCL_REQUIRE(sys && psi0 && phi0 && out, "qcl_seed_create: null pointer");
    return wrap([&] {
        qcl::SeedPair seed;
        seed.psi0 = read_vector(sys->sys.dim, psi0);
        seed.phi0 = read_vector(sys->sys.dim, phi0);
        seed.order = static_cast<int>(order);
        *out = new qcl_seed{std::move(seed)};
    });
}

qcl_status qcl_seed_data(const qcl_seed* seed, double* psi0, double* phi0, int64_t* order) {
    QCL_REQUIRE(seed, "qcl_seed_data: null pointer");
    if (psi0) write_vector(seed->seed.psi0, psi0);
    if (phi0) write_vector(seed->seed.phi0, phi0);
    if (order) *order = seed->seed.order;
    return QCL_OK;
}

qcl_status qcl_validate_seed(const qcl_system* sys, const qcl_seed* seed) {
    QCL_REQUIRE(sys && seed, "qcl_validate_seed: null pointer");
    return wrap([&] { qcl::validate_seed(sys->sys, seed->seed); });
}

void qcl_seed_destroy(qcl_seed* seed) { delete seed; }

qcl_status qcl_generate_singular_extremal(const qcl_system* sys, const qcl_seed* seed,
                                          double duration, int64_t num_samples,
                                          double den_floor_rel, qcl_extremal** out) {
    QCL_REQUIRE(sys && seed && out, "qcl_generate_singular_extremal: null pointer");
    return wrap([&] {
        qcl::GenerateOptions opts;
        if (den_floor_rel > 0.0) opts.den_floor_rel = den_floor_rel;
        *out = new qcl_extremal{
            qcl::generate_singular_extremal(sys->sys, seed->seed, duration, num_samples, opts)};
    });
}

qcl_status qcl_backward_singular_from_surface(const qcl_system* sys, const double* psi_T,
                                              const double* psif, int64_t order, double duration,
                                              int64_t num_samples, double surface_tol,
                                              qcl_extremal** out) {
    QCL_REQUIRE(sys && psi_T && psif && out, "qcl_backward_singular_from_surface: null pointer");
    return wrap([&] {
        qcl::BackwardOptions opts;
        if (surface_tol > 0.0) opts.surface_tol = surface_tol;
        *out = new qcl_extremal{qcl::backward_singular_from_surface(
            sys->sys, read_vector(sys->sys.dim, psi_T), read_vector(sys->sys.dim, psif),
            static_cast<int>(order), duration, num_samples, opts)};
    });
}

qcl_status qcl_extremal_num_samples(const qcl_extremal* e, int64_t* m) {
    QCL_REQUIRE(e && m, "qcl_extremal_num_samples: null pointer");
    *m = e->arc.control.samples.size();
    return QCL_OK;
}

qcl_status qcl_extremal_order(const qcl_extremal* e, int64_t* order) {
    QCL_REQUIRE(e && order, "qcl_extremal_order: null pointer");
    *order = e->arc.order;
    return QCL_OK;
}

qcl_status qcl_extremal_pattern(const qcl_extremal* e, int64_t* buf, int64_t capacity,
                                int64_t* len) {
    QCL_REQUIRE(e, "qcl_extremal_pattern: null pointer");
    const int64_t n = static_cast<int64_t>(e->arc.pattern.size());
    if (len) *len = n;
    if (buf) {
        QCL_REQUIRE(capacity >= n, "qcl_extremal_pattern: buffer too small");
        for (int64_t i = 0; i < n; ++i) buf[i] = e->arc.pattern[static_cast<size_t>(i)];
    }
    return QCL_OK;
}

qcl_status qcl_extremal_control(const qcl_extremal* e, qcl_control** out) {
    QCL_REQUIRE(e && out, "qcl_extremal_control: null pointer");
    return wrap([&] { *out = new qcl_control{e->arc.control}; });
}

qcl_status qcl_extremal_feedback_at_grid(const qcl_extremal* e, double* buf) {
    QCL_REQUIRE(e && buf, "qcl_extremal_feedback_at_grid: null pointer");
    Eigen::Map<Eigen::VectorXd>(buf, e->arc.feedback_at_grid.size()) = e->arc.feedback_at_grid;
    return QCL_OK;
}

qcl_status qcl_extremal_residuals(const qcl_extremal* e, double* times, double* r1, double* r2,
                                  double* r3) {
    QCL_REQUIRE(e, "qcl_extremal_residuals: null pointer");
    const Eigen::Index m = e->arc.residuals.times.size();
    if (times) Eigen::Map<Eigen::VectorXd>(times, m) = e->arc.residuals.times;
    if (r1) Eigen::Map<Eigen::VectorXd>(r1, m) = e->arc.residuals.r1;
    if (r2) Eigen::Map<Eigen::VectorXd>(r2, m) = e->arc.residuals.r2;
    if (r3) Eigen::Map<Eigen::VectorXd>(r3, m) = e->arc.residuals.r3;
    return QCL_OK;
}

qcl_status qcl_extremal_den_min(const qcl_extremal* e, double* den_min) {
    QCL_REQUIRE(e && den_min, "qcl_extremal_den_min: null pointer");
    *den_min = e->arc.den_min;
    return QCL_OK;
}

qcl_status qcl_extremal_seed(const qcl_extremal* e, qcl_seed** out) {
    QCL_REQUIRE(e && out, "qcl_extremal_seed: null pointer");
    return wrap([&] { *out = new qcl_seed{e->arc.seed}; });
}

qcl_status qcl_extremal_trajectory(const qcl_extremal* e, qcl_trajectory** out) {
    QCL_REQUIRE(e && out, "qcl_extremal_trajectory: null pointer");
    return wrap([&] { *out = new qcl_trajectory{e->arc.trajectory}; });
}

void qcl_extremal_destroy(qcl_extremal* e) { delete e; }

qcl_status qcl_wronskian(const qcl_system* sys, const qcl_control* c, const double* psi0,
                         double* times, double* values, int64_t capacity, int64_t* count,
                         int* degenerate) {
    QCL_REQUIRE(sys && c && psi0, "qcl_wronskian: null pointer");
    return wrap([&] {
        const qcl::WronskianSeries w =
            qcl::wronskian_residual(sys->sys, c->c, read_vector(sys->sys.dim, psi0));
        if (count) *count = w.values.size();
        if (degenerate) *degenerate = w.degenerate ? 1 : 0;
        if (times || values) {
            if (capacity < w.values.size()) {
                throw qcl::ArgumentError("qcl_wronskian: buffer too small");
            }
            if (times) Eigen::Map<Eigen::VectorXd>(times, w.times.size()) = w.times;
            if (values) Eigen::Map<Eigen::VectorXd>(values, w.values.size()) = w.values;
        }
    });
}

qcl_status qcl_wronskian_singular_verdict(const double* values, int64_t n, double tol,
                                          int* singular) {
    QCL_REQUIRE(values && singular, "qcl_wronskian_singular_verdict: null pointer");
    QCL_REQUIRE(n >= 1, "qcl_wronskian_singular_verdict: need at least one value");
    return wrap([&] {
        qcl::WronskianSeries w;
        w.values = Eigen::Map<const Eigen::VectorXd>(values, n);
        *singular = qcl::wronskian_singular_verdict(w, tol) ? 1 : 0;
    });
}

qcl_status qcl_singular_surface_residual(const qcl_system* sys, const double* psi,
                                         const double* psif, int64_t order, double threshold_rel,
                                         double* residual, int* kinematic) {
    QCL_REQUIRE(sys && psi && psif && residual && kinematic,
                "qcl_singular_surface_residual: null pointer");
    return wrap([&] {
        const double tr = threshold_rel > 0.0 ? threshold_rel : qcl::kRankThresholdRel;
        const qcl::SurfaceResidual sr = qcl::singular_surface_residual(
            sys->sys, read_vector(sys->sys.dim, psi), read_vector(sys->sys.dim, psif),
            static_cast<int>(order), tr);
        *residual = sr.residual;
        *kinematic = sr.kinematic ? 1 : 0;
    });
}

/* landscape */

qcl_status qcl_objective(const qcl_system* sys, const qcl_control* c, const double* psi0,
                         const double* psif, double* j) {
    QCL_REQUIRE(sys && c && psi0 && psif && j, "qcl_objective: null pointer");
    return wrap([&] {
        *j = qcl::objective(sys->sys, c->c, read_vector(sys->sys.dim, psi0),
                            read_vector(sys->sys.dim, psif));
    });
}

qcl_status qcl_gradient(const qcl_system* sys, const qcl_control* c, const double* psi0,
                        const double* psif, double* buf) {
    QCL_REQUIRE(sys && c && psi0 && psif && buf, "qcl_gradient: null pointer");
    return wrap([&] {
        const Eigen::VectorXd g = qcl::gradient(sys->sys, c->c, read_vector(sys->sys.dim, psi0),
                                                read_vector(sys->sys.dim, psif));
        Eigen::Map<Eigen::VectorXd>(buf, g.size()) = g;
    });
}

qcl_status qcl_pmp_residual(const qcl_system* sys, const qcl_control* c, const double* psi0,
                            const double* psif, double* buf) {
    QCL_REQUIRE(sys && c && psi0 && psif && buf, "qcl_pmp_residual: null pointer");
    return wrap([&] {
        const Eigen::VectorXd s = qcl::pmp_residual(
            sys->sys, c->c, read_vector(sys->sys.dim, psi0), read_vector(sys->sys.dim, psif));
        Eigen::Map<Eigen::VectorXd>(buf, s.size()) = s;
    });
}

void qcl_ascent_options_default(qcl_ascent_options* opts) {
    if (!opts) return;
    const qcl::AscentOptions a;
    opts->max_iters = a.max_iters;
    opts->step0 = a.step0;
    opts->backtrack = a.backtrack;
    opts->growth = a.growth;
    opts->step_max = a.step_max;
    opts->grad_tol = a.grad_tol;
    opts->j_tol = a.j_tol;
    opts->alpha_min = a.alpha_min;
}

qcl_status qcl_steepest_ascent(const qcl_system* sys, const qcl_control* c0, const double* psi0,
                               const double* psif, const qcl_ascent_options* opts,
                               const qcl_control* reference, qcl_ascent** out) {
    QCL_REQUIRE(sys && c0 && psi0 && psif && out, "qcl_steepest_ascent: null pointer");
    return wrap([&] {
        *out = new qcl_ascent{qcl::steepest_ascent(
            sys->sys, c0->c, read_vector(sys->sys.dim, psi0), read_vector(sys->sys.dim, psif),
            convert(opts), reference ? &reference->c : nullptr)};
    });
}

qcl_status qcl_ascent_summary(const qcl_ascent* a, double* final_j, int* termination,
                              int* converged, double* smallest_alpha) {
    QCL_REQUIRE(a, "qcl_ascent_summary: null pointer");
    if (final_j) *final_j = a->rec.final_j;
    if (termination) *termination = static_cast<int>(a->rec.termination);
    if (converged) *converged = a->rec.converged ? 1 : 0;
    if (smallest_alpha) *smallest_alpha = a->rec.smallest_alpha;
    return QCL_OK;
}

qcl_status qcl_ascent_num_iterates(const qcl_ascent* a, int64_t* n) {
    QCL_REQUIRE(a && n, "qcl_ascent_num_iterates: null pointer");
    *n = static_cast<int64_t>(a->rec.iterates.size());
    return QCL_OK;
}

qcl_status qcl_ascent_iterate(const qcl_ascent* a, int64_t idx, double* j, double* grad_sup,
                              double* step, double* ref_distance) {
    QCL_REQUIRE(a, "qcl_ascent_iterate: null pointer");
    QCL_REQUIRE(idx >= 0 && idx < static_cast<int64_t>(a->rec.iterates.size()),
                "qcl_ascent_iterate: index out of range");
    const qcl::AscentIterate& it = a->rec.iterates[static_cast<size_t>(idx)];
    if (j) *j = it.j;
    if (grad_sup) *grad_sup = it.grad_sup;
    if (step) *step = it.step;
    if (ref_distance) *ref_distance = it.ref_distance;
    return QCL_OK;
}

qcl_status qcl_ascent_final_control(const qcl_ascent* a, qcl_control** out) {
    QCL_REQUIRE(a && out, "qcl_ascent_final_control: null pointer");
    return wrap([&] { *out = new qcl_control{a->rec.final_control}; });
}

void qcl_ascent_destroy(qcl_ascent* a) { delete a; }

void qcl_classify_options_default(qcl_classify_options* opts) {
    if (!opts) return;
    const qcl::ClassifyTolerances t;
    opts->crit_tol = t.crit_tol;
    opts->kin_tol = t.kin_tol;
    opts->rank_threshold_rel = t.rank_threshold_rel;
    opts->with_hessian = t.with_hessian ? 1 : 0;
    opts->hessian_fd_step = t.hessian_fd_step;
    opts->force_hessian = t.force_hessian ? 1 : 0;
}

qcl_status qcl_classify(const qcl_system* sys, const qcl_control* c, const double* psi0,
                        const double* psif, const qcl_classify_options* opts,
                        qcl_critical_report* report) {
    QCL_REQUIRE(sys && c && psi0 && psif && report, "qcl_classify: null pointer");
    return wrap([&] {
        qcl::ClassifyTolerances t;
        if (opts) {
            t.crit_tol = opts->crit_tol;
            t.kin_tol = opts->kin_tol;
            t.rank_threshold_rel = opts->rank_threshold_rel;
            t.with_hessian = opts->with_hessian != 0;
            t.hessian_fd_step = opts->hessian_fd_step;
            t.force_hessian = opts->force_hessian != 0;
        }
        const qcl::CriticalPointReport rep = qcl::classify(
            sys->sys, c->c, read_vector(sys->sys.dim, psi0), read_vector(sys->sys.dim, psif), t);
        report->classification = static_cast<int>(rep.classification);
        report->j = rep.j;
        report->grad_norm = rep.grad_norm;
        report->kinematic_grad_norm = rep.kinematic_grad_norm;
        report->kinematic_grad_norm_ambient = rep.kinematic_grad_norm_ambient;
        fill_corank(rep.corank, &report->corank);
        report->has_hessian = rep.has_hessian ? 1 : 0;
        report->hessian_min = rep.hessian_min;
        report->hessian_max = rep.hessian_max;
    });
}

qcl_status qcl_hessian_spectrum(const qcl_system* sys, const qcl_control* c, const double* psi0,
                                const double* psif, double fd_step, int force, double* buf) {
    QCL_REQUIRE(sys && c && psi0 && psif && buf, "qcl_hessian_spectrum: null pointer");
    return wrap([&] {
        const Eigen::VectorXd ev =
            qcl::hessian_spectrum(sys->sys, c->c, read_vector(sys->sys.dim, psi0),
                                  read_vector(sys->sys.dim, psif), fd_step, force != 0);
        Eigen::Map<Eigen::VectorXd>(buf, ev.size()) = ev;
    });
}

void qcl_trap_options_default(qcl_trap_options* opts) {
    if (!opts) return;
    const qcl::TrapExperimentOptions t;
    opts->num_trials = t.num_trials;
    opts->radius = t.radius;
    opts->success_j = t.success_j;
    opts->rng_seed = t.rng_seed;
    qcl_ascent_options_default(&opts->ascent);
}

qcl_status qcl_trap_experiment(const qcl_system* sys, const qcl_control* reference,
                               const double* psi0, const double* psif,
                               const qcl_trap_options* opts, qcl_trap** out) {
    QCL_REQUIRE(sys && reference && psi0 && psif && out, "qcl_trap_experiment: null pointer");
    return wrap([&] {
        qcl::TrapExperimentOptions t;
        if (opts) {
            if (opts->num_trials > INT_MAX) {
                throw qcl::ArgumentError("qcl_trap_experiment: num_trials too large");
            }
            t.num_trials = static_cast<int>(opts->num_trials);
            t.radius = opts->radius;
            t.success_j = opts->success_j;
            t.rng_seed = opts->rng_seed;
            t.ascent = convert(&opts->ascent);
        }
        *out = new qcl_trap{qcl::trap_experiment(sys->sys, reference->c,
                                                 read_vector(sys->sys.dim, psi0),
                                                 read_vector(sys->sys.dim, psif), t)};
    });
}

qcl_status qcl_trap_summary(const qcl_trap* t, int64_t* num_trials, int64_t* num_success,
                            int64_t* num_stalled, double* success_fraction, double* min_final_j,
                            int* on_critical_start) {
    QCL_REQUIRE(t, "qcl_trap_summary: null pointer");
    if (num_trials) *num_trials = static_cast<int64_t>(t->rep.trials.size());
    if (num_success) *num_success = t->rep.num_success;
    if (num_stalled) *num_stalled = t->rep.num_stalled;
    if (success_fraction) *success_fraction = t->rep.success_fraction;
    if (min_final_j) *min_final_j = t->rep.min_final_j;
    if (on_critical_start) *on_critical_start = t->rep.on_critical_start ? 1 : 0;
    return QCL_OK;
}

qcl_status qcl_trap_trial(const qcl_trap* t, int64_t idx, double* initial_j, double* final_j,
                          int* success, int* stalled, double* initial_distance,
                          double* final_distance) {
    QCL_REQUIRE(t, "qcl_trap_trial: null pointer");
    QCL_REQUIRE(idx >= 0 && idx < static_cast<int64_t>(t->rep.trials.size()),
                "qcl_trap_trial: index out of range");
    const qcl::TrapTrialRecord& tr = t->rep.trials[static_cast<size_t>(idx)];
    if (initial_j) *initial_j = tr.initial_j;
    if (final_j) *final_j = tr.final_j;
    if (success) *success = tr.success ? 1 : 0;
    if (stalled) *stalled = tr.stalled ? 1 : 0;
    if (initial_distance) *initial_distance = tr.initial_distance;
    if (final_distance) *final_distance = tr.final_distance;
    return QCL_OK;
}

qcl_status qcl_trap_trial_record(const qcl_trap* t, int64_t idx, qcl_ascent** out) {
    QCL_REQUIRE(t && out, "qcl_trap_trial_record: null pointer");
    QCL_REQUIRE(idx >= 0 && idx < static_cast<int64_t>(t->rep.trials.size()),
                "qcl_trap_trial_record: index out of range");
    return wrap([&] { *out = new qcl_ascent{t->rep.trials[static_cast<size_t>(idx)].record}; });
}

void qcl_trap_destroy(qcl_trap* t) { delete t; }

} /* extern "C" */
