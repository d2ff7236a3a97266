// support.hpp — fixtures and oracles shared by the test binaries.
//
// Everything here is independent of the library internals on purpose: the
// finite-difference oracles recompute derivatives straight from objective
// evaluations so the exact derivative code is checked against something it
// does not share a line with.
#pragma once

#include <random>

#include <Eigen/Dense>

#include "dynamics.hpp"
#include "landscape.hpp"
#include "linalg.hpp"

namespace testsup {

using qcl::Complex;
using qcl::ControlField;
using qcl::QuantumSystem;

// Four-level benchmark system: diagonal drift, dense coupling, e1 -> e4.
struct FourLevel {
    QuantumSystem sys;
    Eigen::VectorXcd psi0;
    Eigen::VectorXcd psif;
    double duration = 10.0;
};

inline FourLevel fourlevel() {
    Eigen::MatrixXcd h0 = Eigen::MatrixXcd::Zero(4, 4);
    h0(0, 0) = -0.50;
    h0(1, 1) = 0.00;
    h0(2, 2) = 0.20;
    h0(3, 3) = 0.60;
    Eigen::MatrixXcd h1(4, 4);
    h1 << Complex(0.30, 0.0), Complex(0.75, -0.20), Complex(0.65, 0.0), Complex(0.40, 0.0),
        Complex(0.75, 0.20), Complex(0.70, 0.0), Complex(0.70, -0.50), Complex(0.20, 0.30),
        Complex(0.65, 0.0), Complex(0.70, 0.50), Complex(0.30, 0.0), Complex(0.50, 0.0),
        Complex(0.40, 0.0), Complex(0.20, -0.30), Complex(0.50, 0.0), Complex(0.60, 0.0);
    FourLevel f;
    f.sys = QuantumSystem::from_hermitian(h0, h1);
    f.psi0 = Eigen::VectorXcd::Zero(4);
    f.psi0(0) = 1.0;
    f.psif = Eigen::VectorXcd::Zero(4);
    f.psif(3) = 1.0;
    return f;
}

// Three-level system with a short horizon; cheap enough for Hessian work.
struct ThreeLevel {
    QuantumSystem sys;
    Eigen::VectorXcd psi0;
    Eigen::VectorXcd psif;
    double duration = 6.0;
};

inline ThreeLevel threelevel() {
    Eigen::MatrixXcd h0 = Eigen::MatrixXcd::Zero(3, 3);
    h0(0, 0) = -0.4;
    h0(1, 1) = 0.1;
    h0(2, 2) = 0.5;
    Eigen::MatrixXcd h1(3, 3);
    h1 << Complex(0.2, 0.0), Complex(0.5, -0.3), Complex(0.4, 0.0),
        Complex(0.5, 0.3), Complex(-0.1, 0.0), Complex(0.6, 0.2),
        Complex(0.4, 0.0), Complex(0.6, -0.2), Complex(0.3, 0.0);
    ThreeLevel f;
    f.sys = QuantumSystem::from_hermitian(h0, h1);
    f.psi0 = Eigen::VectorXcd::Zero(3);
    f.psi0(0) = 1.0;
    f.psif = Eigen::VectorXcd::Zero(3);
    f.psif(2) = 1.0;
    return f;
}

// Generic two-level system used by the Wronskian agreement studies. Values
// are a frozen random draw so verdicts are reproducible.
struct TwoLevel {
    QuantumSystem sys;
    double duration = 5.0;
};

inline TwoLevel twolevel() {
    Eigen::MatrixXcd h0(2, 2), h1(2, 2);
    h0 << Complex(0.50877060830571597, 0.0),
        Complex(-0.76517143793096376, 0.89860240578528838),
        Complex(-0.76517143793096376, -0.89860240578528838),
        Complex(0.78382635342495277, 0.0);
    h1 << Complex(-0.71745687359242627, 0.0),
        Complex(0.6650459610628916, -0.88981368299211394),
        Complex(0.6650459610628916, 0.88981368299211394),
        Complex(0.80142095291941673, 0.0);
    TwoLevel f;
    f.sys = QuantumSystem::from_hermitian(h0, h1);
    return f;
}

// Dense random Hermitian matrix with entries O(1).
inline Eigen::MatrixXcd random_hermitian(Eigen::Index n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXcd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) = u(rng);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            Complex z(u(rng), u(rng));
            m(i, j) = z;
            m(j, i) = std::conj(z);
        }
    }
    return m;
}

inline QuantumSystem random_system(Eigen::Index n, std::mt19937_64& rng) {
    Eigen::MatrixXcd h0 = random_hermitian(n, rng);
    Eigen::MatrixXcd h1 = random_hermitian(n, rng);
    return QuantumSystem::from_hermitian(h0, h1);
}

inline ControlField random_control(double duration, Eigen::Index m, std::mt19937_64& rng,
                                   double amplitude = 1.0) {
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    ControlField c;
    c.duration = duration;
    c.samples.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) c.samples(j) = u(rng);
    return c;
}

inline ControlField constant_control(double duration, Eigen::Index m, double value) {
    ControlField c;
    c.duration = duration;
    c.samples = Eigen::VectorXd::Constant(m, value);
    return c;
}

inline Eigen::VectorXcd random_state(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(g(rng), g(rng));
    v.normalize();
    return v;
}

// ||U^dag U - I||_F.
inline double unitarity_defect(const Eigen::MatrixXcd& u) {
    Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(u.rows(), u.cols());
    return (u.adjoint() * u - id).norm();
}

// Central-difference gradient of the objective with respect to each sample.
inline Eigen::VectorXd fd_gradient(const QuantumSystem& sys, const ControlField& c,
                                   const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif,
                                   double step = 1e-6) {
    Eigen::VectorXd g(c.size());
    ControlField work = c;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        const double saved = work.samples(j);
        work.samples(j) = saved + step;
        const double jp = qcl::objective(sys, work, psi0, psif);
        work.samples(j) = saved - step;
        const double jm = qcl::objective(sys, work, psi0, psif);
        work.samples(j) = saved;
        g(j) = (jp - jm) / (2.0 * step);
    }
    return g;
}

// Central-difference directional derivative of the state map psi(T) along a
// control direction d (complex vector result).
inline Eigen::VectorXcd fd_state_directional(const QuantumSystem& sys, const ControlField& c,
                                             const Eigen::VectorXcd& psi0,
                                             const Eigen::VectorXd& d, double step = 1e-6) {
    ControlField plus = c;
    plus.samples += step * d;
    ControlField minus = c;
    minus.samples -= step * d;
    const Eigen::VectorXcd p = qcl::propagate(sys, plus, psi0).states.back();
    const Eigen::VectorXcd m = qcl::propagate(sys, minus, psi0).states.back();
    return (p - m) / (2.0 * step);
}

// Second difference of J along a fixed direction: d^T H d oracle.
inline double fd_second_directional(const QuantumSystem& sys, const ControlField& c,
                                    const Eigen::VectorXcd& psi0, const Eigen::VectorXcd& psif,
                                    const Eigen::VectorXd& d, double step) {
    ControlField plus = c;
    plus.samples += step * d;
    ControlField minus = c;
    minus.samples -= step * d;
    const double jp = qcl::objective(sys, plus, psi0, psif);
    const double j0 = qcl::objective(sys, c, psi0, psif);
    const double jm = qcl::objective(sys, minus, psi0, psif);
    return (jp - 2.0 * j0 + jm) / (step * step);
}

}  // namespace testsup
