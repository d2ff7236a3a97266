#include "landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

namespace qcl {

namespace {

double yield(const Eigen::VectorXcd& psif, const Eigen::VectorXcd& psiT) {
    return std::norm(psif.dot(psiT));
}

// Exact gradient of J with respect to the control samples, assembled from the
// Frechet columns of an already-computed flow.
Eigen::VectorXd gradient_from_flow(const QuantumSystem& sys, const Flow& flow, double dt,
                                   const Eigen::VectorXcd& psif) {
    const Eigen::VectorXcd& psi0 = flow.trajectory.states.front();
    const Eigen::MatrixXcd& u_final = flow.trajectory.propagators.back();
    const Eigen::VectorXd gf = real_stack(kinematic_gradient(flow.trajectory.states.back(), psif));

    const Eigen::Index m = static_cast<Eigen::Index>(flow.mid_propagators.size());
    Eigen::VectorXd g(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::MatrixXcd& umid = flow.mid_propagators[static_cast<size_t>(j)];
        const Eigen::VectorXcd col =
            dt * (u_final * (umid.adjoint() * (flow.a1_avg[static_cast<size_t>(j)] * (umid * psi0))));
        g[j] = gf.dot(real_stack(col));
    }
    return g;
}

double sup_distance(const ControlField& a, const ControlField& b) {
    return (a.samples - b.samples).cwiseAbs().maxCoeff();
}

}  // namespace

double objective(const QuantumSystem& sys, const ControlField& c, const Eigen::VectorXcd& psi0,
                 const Eigen::VectorXcd& psif) {
    require_unit(psif, "objective: psif");
    const Trajectory tr = propagate(sys, c, psi0);
    return yield(psif, tr.states.back());
}

Eigen::VectorXcd kinematic_gradient(const Eigen::VectorXcd& psiT, const Eigen::VectorXcd& psif) {
    return 2.0 * psif.dot(psiT) * psif;
}

Eigen::VectorXd gradient(const QuantumSystem& sys, const ControlField& c,
                         const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif) {
    require_unit(psif, "gradient: psif");
    const Flow flow = propagate_flow(sys, c, psi0);
    return gradient_from_flow(sys, flow, c.dt(), psif);
}

Eigen::VectorXd pmp_residual(const QuantumSystem& sys, const ControlField& c,
                             const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif) {
    require_unit(psif, "pmp_residual: psif");
    const Flow flow = propagate_flow(sys, c, psi0);
    const Eigen::MatrixXcd& u_final = flow.trajectory.propagators.back();
    const Eigen::VectorXcd gf = kinematic_gradient(flow.trajectory.states.back(), psif);
    const Eigen::VectorXcd chi = u_final.adjoint() * gf;  // conjugate state pulled back to t = 0

    Eigen::VectorXd s(c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        const Eigen::MatrixXcd& umid = flow.mid_propagators[static_cast<size_t>(j)];
        const Eigen::VectorXcd phi_mid = umid * chi;
        const Eigen::VectorXcd psi_mid = umid * psi0;
        s[j] = real_inner(phi_mid, flow.a1_avg[static_cast<size_t>(j)] * psi_mid);
    }
    return s;
}

const char* to_string(AscentTermination t) {
    switch (t) {
        case AscentTermination::GradTol: return "grad_tol";
        case AscentTermination::JTol: return "j_tol";
        case AscentTermination::MaxIters: return "max_iters";
        case AscentTermination::LineSearchFailure: return "line_search_failure";
    }
    return "unknown";
}

const char* to_string(CriticalClass c) {
    switch (c) {
        case CriticalClass::NotCritical: return "not_critical";
        case CriticalClass::RegularKinematic: return "regular_kinematic";
        case CriticalClass::SingularKinematic: return "singular_kinematic";
        case CriticalClass::Nonkinematic: return "nonkinematic";
    }
    return "unknown";
}

AscentRecord steepest_ascent(const QuantumSystem& sys, const ControlField& c0,
                             const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif,
                             const AscentOptions& opts, const ControlField* reference) {
    validate_control(c0);
    require_unit(psi0, "steepest_ascent: psi0");
    require_unit(psif, "steepest_ascent: psif");
    if (opts.max_iters < 0 || !(opts.step0 > 0.0) || !(opts.backtrack > 0.0) ||
        !(opts.backtrack < 1.0) || !(opts.growth >= 1.0) || !(opts.alpha_min > 0.0)) {
        throw ArgumentError("steepest_ascent: invalid options");
    }
    if (reference && (reference->samples.size() != c0.samples.size() ||
                      reference->duration != c0.duration)) {
        throw ArgumentError("steepest_ascent: reference control grid mismatch");
    }

    const double dt = c0.dt();
    ControlField c = c0;
    AscentRecord rec;
    double alpha_next = opts.step0;
    double accepted_step = 0.0;

    for (int iter = 0;; ++iter) {
        const Flow flow = propagate_flow(sys, c, psi0);
        const double jval = yield(psif, flow.trajectory.states.back());
        const Eigen::VectorXd g = gradient_from_flow(sys, flow, dt, psif);

        AscentIterate it;
        it.iteration = iter;
        it.j = jval;
        it.grad_sup = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
        it.step = accepted_step;
        it.ref_distance =
            reference ? sup_distance(c, *reference) : std::numeric_limits<double>::quiet_NaN();
        rec.iterates.push_back(it);

        if (jval >= 1.0 - opts.j_tol) {
            rec.termination = AscentTermination::JTol;
            rec.converged = true;
            break;
        }
        if (it.grad_sup <= opts.grad_tol) {
            rec.termination = AscentTermination::GradTol;
            rec.converged = true;
            break;
        }
        if (iter >= opts.max_iters) {
            rec.termination = AscentTermination::MaxIters;
            rec.converged = false;
            break;
        }

        const Eigen::VectorXd d = g / dt;
        double alpha = alpha_next;
        double last_tried = alpha;
        bool accepted = false;
        ControlField trial;
        trial.duration = c.duration;
        while (alpha >= opts.alpha_min) {
            last_tried = alpha;
            trial.samples = c.samples + alpha * d;
            if (objective(sys, trial, psi0, psif) > jval) {
                accepted = true;
                break;
            }
            alpha *= opts.backtrack;
        }
        if (!accepted) {
            rec.termination = AscentTermination::LineSearchFailure;
            rec.converged = false;
            rec.smallest_alpha = last_tried;
            break;
        }
        c = trial;
        accepted_step = alpha;
        alpha_next = std::min(alpha * opts.growth, opts.step_max);
    }

    rec.final_control = c;
    rec.final_j = rec.iterates.back().j;
    return rec;
}

CriticalPointReport classify(const QuantumSystem& sys, const ControlField& c,
                             const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif,
                             const ClassifyTolerances& tol) {
    require_unit(psif, "classify: psif");
    const Flow flow = propagate_flow(sys, c, psi0);
    const double dt = c.dt();
    const Eigen::VectorXcd& psiT = flow.trajectory.states.back();
    const Eigen::VectorXd g = gradient_from_flow(sys, flow, dt, psif);

    CriticalPointReport rep;
    rep.j = yield(psif, psiT);
    rep.grad_norm = g.norm() / std::sqrt(dt);  // L2 norm of the functional gradient g/dt

    const Eigen::VectorXcd gf = kinematic_gradient(psiT, psif);
    rep.kinematic_grad_norm_ambient = gf.norm();
    const Eigen::VectorXcd ipsi = Complex(0.0, 1.0) * psiT;
    const Eigen::VectorXcd proj =
        gf - real_inner(psiT, gf) * psiT - real_inner(ipsi, gf) * ipsi;
    rep.kinematic_grad_norm = proj.norm();

    rep.corank = corank_state(sys, c, psi0, tol.rank_threshold_rel);

    if (rep.grad_norm > tol.crit_tol) {
        rep.classification = CriticalClass::NotCritical;
    } else if (rep.kinematic_grad_norm > tol.kin_tol) {
        rep.classification = CriticalClass::Nonkinematic;
    } else {
        rep.classification = rep.corank.corank == 0 ? CriticalClass::RegularKinematic
                                                    : CriticalClass::SingularKinematic;
    }

    if (tol.with_hessian) {
        rep.hessian_eigenvalues =
            hessian_spectrum(sys, c, psi0, psif, tol.hessian_fd_step, tol.force_hessian);
        rep.has_hessian = true;
        rep.hessian_min = rep.hessian_eigenvalues[0];
        rep.hessian_max = rep.hessian_eigenvalues[rep.hessian_eigenvalues.size() - 1];
    }
    return rep;
}

Eigen::MatrixXd hessian_matrix(const QuantumSystem& sys, const ControlField& c,
                               const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif,
                               double fd_step, bool force) {
    validate_control(c);
    require_unit(psi0, "hessian_matrix: psi0");
    require_unit(psif, "hessian_matrix: psif");
    if (!(fd_step > 0.0)) throw ArgumentError("hessian_matrix: fd_step must be positive");
    const Eigen::Index m = c.size();
    if (m > 512 && !force) {
        std::ostringstream os;
        os << "hessian_matrix: " << m << " samples means " << m << "x" << m
           << " second differences; pass force to proceed";
        throw ArgumentError(os.str());
    }

    const double dt = c.dt();
    const double h = fd_step;
    const Trajectory tr = propagate(sys, c, psi0);
    const double j0 = yield(psif, tr.states.back());
    const Eigen::VectorXcd y = tr.propagators.back().adjoint() * psif;

    // z_j = U(t_{j+1}) U(T)^dag psif turns each perturbed propagation into a
    // handful of matrix-vector products.
    std::vector<Eigen::VectorXcd> z(static_cast<size_t>(m));
    std::vector<Eigen::MatrixXcd> e0(static_cast<size_t>(m));
    std::vector<Eigen::MatrixXcd> ep(static_cast<size_t>(m));
    std::vector<Eigen::MatrixXcd> em(static_cast<size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
        z[static_cast<size_t>(j)] = tr.propagators[static_cast<size_t>(j + 1)] * y;
        e0[static_cast<size_t>(j)] = step_exponential(sys, c.samples[j], dt);
        ep[static_cast<size_t>(j)] = step_exponential(sys, c.samples[j] + h, dt);
        em[static_cast<size_t>(j)] = step_exponential(sys, c.samples[j] - h, dt);
    }

    Eigen::MatrixXd hess(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::VectorXcd& pi = tr.states[static_cast<size_t>(i)];
        const Eigen::VectorXcd vip = ep[static_cast<size_t>(i)] * pi;
        const Eigen::VectorXcd vim = em[static_cast<size_t>(i)] * pi;

        const double jp = std::norm(z[static_cast<size_t>(i)].dot(vip));
        const double jm = std::norm(z[static_cast<size_t>(i)].dot(vim));
        hess(i, i) = (jp - 2.0 * j0 + jm) / (h * h);

        Eigen::MatrixXcd b = Eigen::MatrixXcd::Identity(sys.dim, sys.dim);
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const Eigen::VectorXcd xp = b * vip;
            const Eigen::VectorXcd xm = b * vim;
            const Eigen::VectorXcd& zj = z[static_cast<size_t>(j)];
            const double jpp = std::norm(zj.dot(ep[static_cast<size_t>(j)] * xp));
            const double jpm = std::norm(zj.dot(em[static_cast<size_t>(j)] * xp));
            const double jmp = std::norm(zj.dot(ep[static_cast<size_t>(j)] * xm));
            const double jmm = std::norm(zj.dot(em[static_cast<size_t>(j)] * xm));
            hess(i, j) = hess(j, i) = (jpp - jpm - jmp + jmm) / (4.0 * h * h);
            b = e0[static_cast<size_t>(j)] * b;
        }
    }
    return hess;
}

Eigen::VectorXd hessian_spectrum(const QuantumSystem& sys, const ControlField& c,
                                 const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif,
                                 double fd_step, bool force) {
    const Eigen::MatrixXd h = hessian_matrix(sys, c, psi0, psif, fd_step, force);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error("hessian_spectrum: eigensolver failed");
    return es.eigenvalues();
}

TrapExperimentReport trap_experiment(const QuantumSystem& sys, const ControlField& reference,
                                     const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif,
                                     const TrapExperimentOptions& opts) {
    validate_control(reference);
    if (opts.num_trials < 1) throw ArgumentError("trap_experiment: num_trials must be >= 1");
    if (!(opts.radius >= 0.0)) throw ArgumentError("trap_experiment: radius must be >= 0");
    if (!(opts.success_j > 0.0) || !(opts.success_j <= 1.0)) {
        throw ArgumentError("trap_experiment: success_j must lie in (0, 1]");
    }

    TrapExperimentReport report;
    if (opts.radius == 0.0) {
        const Eigen::VectorXd gref = gradient(sys, reference, psi0, psif);
        report.on_critical_start = gref.cwiseAbs().maxCoeff() <= opts.ascent.grad_tol;
    }

    std::mt19937_64 rng(opts.rng_seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    const Eigen::Index m = reference.samples.size();

    for (int t = 0; t < opts.num_trials; ++t) {
        Eigen::VectorXd delta = Eigen::VectorXd::Zero(m);
        if (opts.radius > 0.0) {
            double sup = 0.0;
            while (sup == 0.0) {
                for (Eigen::Index j = 0; j < m; ++j) delta[j] = uniform(rng);
                sup = delta.cwiseAbs().maxCoeff();
            }
            delta *= opts.radius / sup;  // exact sup-norm radius
        }

        ControlField start;
        start.duration = reference.duration;
        start.samples = reference.samples + delta;

        TrapTrialRecord trial;
        trial.record = steepest_ascent(sys, start, psi0, psif, opts.ascent, &reference);
        trial.initial_j = trial.record.iterates.front().j;
        trial.final_j = trial.record.final_j;
        trial.success = trial.final_j >= opts.success_j;
        trial.stalled =
            trial.record.termination == AscentTermination::GradTol && !trial.success;
        trial.initial_distance = trial.record.iterates.front().ref_distance;
        trial.final_distance = trial.record.iterates.back().ref_distance;

        report.num_success += trial.success ? 1 : 0;
        report.num_stalled += trial.stalled ? 1 : 0;
        report.min_final_j = std::min(report.min_final_j, trial.final_j);
        report.trials.push_back(std::move(trial));
    }
    // Stalled trials sit on a critical point rather than sampling the climb,
    // so the yield fraction is taken over the trials that actually moved.
    const int moved = opts.num_trials - report.num_stalled;
    report.success_fraction =
        moved > 0 ? static_cast<double>(report.num_success) / static_cast<double>(moved) : 0.0;
    return report;
}

}  // namespace qcl
