#include "dynamics.hpp"

#include <cmath>
#include <sstream>

namespace qcl {

void validate_control(const ControlField& c) {
    if (c.samples.size() < 1) throw ArgumentError("control: needs at least one sample");
    if (!(c.duration > 0.0) || !std::isfinite(c.duration)) {
        throw ArgumentError("control: duration must be positive and finite");
    }
    if (!c.samples.allFinite()) throw ArgumentError("control: non-finite sample");
}

ControlField refine(const ControlField& c, int factor) {
    validate_control(c);
    if (factor < 1) throw ArgumentError("refine: factor must be >= 1");
    ControlField out;
    out.duration = c.duration;
    out.samples.resize(c.samples.size() * factor);
    for (Eigen::Index j = 0; j < c.samples.size(); ++j) {
        out.samples.segment(j * factor, factor).setConstant(c.samples[j]);
    }
    return out;
}

namespace {

double sinc_half(double x) {
    // sin(x/2) / (x/2), the interval average of e^{i v x} over v in [-1/2, 1/2].
    const double h = 0.5 * x;
    if (std::abs(h) < 1e-8) return 1.0 - h * h / 6.0;
    return std::sin(h) / h;
}

// Spectral data of one frozen interval: exact full- and half-step
// exponentials plus the interaction-frame average of a1.
struct StepFlow {
    Eigen::MatrixXcd full;
    Eigen::MatrixXcd half;
    Eigen::MatrixXcd a1_avg;
};

StepFlow make_step(const QuantumSystem& sys, double eps, double dt) {
    const Eigen::MatrixXcd g = sys.a0 + eps * sys.a1;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Complex(0.0, 1.0) * g);
    if (es.info() != Eigen::Success) throw Error("step eigendecomposition failed");
    const Eigen::VectorXd& lam = es.eigenvalues();
    const Eigen::MatrixXcd& q = es.eigenvectors();

    const Eigen::Index n = sys.dim;
    Eigen::VectorXcd phase_full(n), phase_half(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        phase_full[i] = std::exp(Complex(0.0, -dt * lam[i]));
        phase_half[i] = std::exp(Complex(0.0, -0.5 * dt * lam[i]));
    }
    StepFlow sf;
    sf.full = q * phase_full.asDiagonal() * q.adjoint();
    sf.half = q * phase_half.asDiagonal() * q.adjoint();

    Eigen::MatrixXcd a1_eig = q.adjoint() * sys.a1 * q;
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            a1_eig(a, b) *= sinc_half(dt * (lam[a] - lam[b]));
        }
    }
    sf.a1_avg = q * a1_eig * q.adjoint();
    return sf;
}

}  // namespace

Eigen::MatrixXcd step_exponential(const QuantumSystem& sys, double eps, double tau) {
    const Eigen::MatrixXcd g = sys.a0 + eps * sys.a1;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Complex(0.0, 1.0) * g);
    if (es.info() != Eigen::Success) throw Error("step eigendecomposition failed");
    Eigen::VectorXcd phase(sys.dim);
    for (Eigen::Index i = 0; i < sys.dim; ++i) {
        phase[i] = std::exp(Complex(0.0, -tau * es.eigenvalues()[i]));
    }
    return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

Flow propagate_flow(const QuantumSystem& sys, const ControlField& c, const Eigen::VectorXcd& psi0) {
    validate_control(c);
    if (psi0.size() != sys.dim) throw ArgumentError("propagate: psi0 dimension mismatch");
    require_unit(psi0, "propagate: psi0");

    const Eigen::Index m = c.size();
    const double dt = c.dt();

    Flow flow;
    flow.trajectory.times.resize(m + 1);
    flow.trajectory.states.reserve(m + 1);
    flow.trajectory.propagators.reserve(m + 1);
    flow.mid_propagators.reserve(m);
    flow.a1_avg.reserve(m);

    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(sys.dim, sys.dim);
    flow.trajectory.times[0] = 0.0;
    flow.trajectory.states.push_back(psi0);
    flow.trajectory.propagators.push_back(u);

    StepFlow step;
    bool have_step = false;
    for (Eigen::Index j = 0; j < m; ++j) {
        // Frozen generators recur verbatim for constant stretches; reuse them.
        if (!have_step || c.samples[j] != c.samples[j - 1]) {
            step = make_step(sys, c.samples[j], dt);
            have_step = true;
        }
        flow.mid_propagators.push_back(step.half * u);
        flow.a1_avg.push_back(step.a1_avg);
        u = step.full * u;
        flow.trajectory.times[j + 1] = static_cast<double>(j + 1) * dt;
        flow.trajectory.states.push_back(u * psi0);
        flow.trajectory.propagators.push_back(u);
    }
    return flow;
}

Trajectory propagate(const QuantumSystem& sys, const ControlField& c, const Eigen::VectorXcd& psi0) {
    return propagate_flow(sys, c, psi0).trajectory;
}

FrechetMatrix frechet_state(const QuantumSystem& sys, const ControlField& c,
                            const Eigen::VectorXcd& psi0) {
    const Flow flow = propagate_flow(sys, c, psi0);
    const Eigen::Index m = c.size();
    const double dt = c.dt();
    const Eigen::MatrixXcd& u_final = flow.trajectory.propagators.back();

    FrechetMatrix fm;
    fm.which = FrechetMatrix::Map::State;
    fm.columns.resize(2 * sys.dim, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::MatrixXcd& umid = flow.mid_propagators[static_cast<size_t>(j)];
        const Eigen::VectorXcd psi_mid = umid * psi0;
        const Eigen::VectorXcd col = dt * (u_final * (umid.adjoint() * (flow.a1_avg[static_cast<size_t>(j)] * psi_mid)));
        fm.columns.col(j) = real_stack(col);
    }
    return fm;
}

FrechetMatrix frechet_propagator(const QuantumSystem& sys, const ControlField& c) {
    // psi0 is irrelevant for the propagator map; any unit vector works.
    Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(sys.dim);
    e0[0] = 1.0;
    const Flow flow = propagate_flow(sys, c, e0);
    const Eigen::Index m = c.size();
    const double dt = c.dt();

    FrechetMatrix fm;
    fm.which = FrechetMatrix::Map::Propagator;
    fm.columns.resize(sys.dim * sys.dim, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::MatrixXcd& umid = flow.mid_propagators[static_cast<size_t>(j)];
        const Eigen::MatrixXcd w = umid.adjoint() * flow.a1_avg[static_cast<size_t>(j)] * umid;
        fm.columns.col(j) = skew_coords(dt * w);
    }
    return fm;
}

}  // namespace qcl
