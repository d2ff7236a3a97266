#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dynamics.hpp"
#include "support.hpp"

using namespace qcl;
using testsup::constant_control;
using testsup::fourlevel;
using testsup::random_control;
using testsup::random_system;
using testsup::unitarity_defect;

TEST_CASE("control field validation and refinement") {
    ControlField c = constant_control(2.0, 8, 0.5);
    CHECK(c.dt() == doctest::Approx(0.25));
    CHECK(c.mid_time(0) == doctest::Approx(0.125));

    SUBCASE("rejects empty, nonpositive duration, non-finite") {
        ControlField bad;
        bad.duration = 1.0;
        CHECK_THROWS_AS(validate_control(bad), ArgumentError);
        bad = c;
        bad.duration = 0.0;
        CHECK_THROWS_AS(validate_control(bad), ArgumentError);
        bad = c;
        bad.samples(3) = std::nan("");
        CHECK_THROWS_AS(validate_control(bad), ArgumentError);
    }
    SUBCASE("refine keeps the function, multiplies the grid") {
        ControlField r = refine(c, 4);
        CHECK(r.size() == 32);
        CHECK(r.duration == c.duration);
        for (Eigen::Index j = 0; j < r.size(); ++j) CHECK(r.samples(j) == c.samples(j / 4));
        CHECK_THROWS_AS(refine(c, 0), ArgumentError);
    }
}

TEST_CASE("propagation of a pure drift is the diagonal phase flow") {
    // a0 = -i h0 diagonal: psi(T) = e^{-i h0_11 T} e1.
    Eigen::MatrixXcd h0 = Eigen::MatrixXcd::Zero(3, 3);
    h0(0, 0) = 0.7;
    h0(1, 1) = -0.3;
    h0(2, 2) = 1.9;
    Eigen::MatrixXcd h1 = Eigen::MatrixXcd::Zero(3, 3);
    h1(0, 1) = Complex(0.4, 0.1);
    h1(1, 0) = Complex(0.4, -0.1);
    QuantumSystem sys = QuantumSystem::from_hermitian(h0, h1);

    ControlField c = constant_control(5.0, 16, 0.0);
    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(3);
    psi0(0) = 1.0;
    Trajectory tr = propagate(sys, c, psi0);
    REQUIRE(tr.states.size() == 17);
    Eigen::VectorXcd expect = Eigen::VectorXcd::Zero(3);
    expect(0) = std::exp(Complex(0, -0.7 * 5.0));
    CHECK((tr.states.back() - expect).norm() <= 1e-12);
    CHECK(tr.times(16) == doctest::Approx(5.0));
}

TEST_CASE("tiny horizon leaves the identity") {
    testsup::FourLevel f = fourlevel();
    ControlField c = constant_control(1e-12, 4, 0.3);
    Trajectory tr = propagate(f.sys, c, f.psi0);
    CHECK((tr.propagators.back() - Eigen::MatrixXcd::Identity(4, 4)).norm() <= 1e-10);
}

TEST_CASE("four-level drift keeps e1 orthogonal to e4") {
    testsup::FourLevel f = fourlevel();
    ControlField c = constant_control(f.duration, 256, 0.0);
    Trajectory tr = propagate(f.sys, c, f.psi0);
    CHECK(std::abs(f.psif.dot(tr.states.back())) <= 1e-14);
}

TEST_CASE("unitarity and norm conservation at scale") {
    std::mt19937_64 rng(21);
    for (Eigen::Index n : {2, 5, 8}) {
        QuantumSystem sys = random_system(n, rng);
        Eigen::VectorXcd psi0 = testsup::random_state(n, rng);
        ControlField c = random_control(7.0, 4096, rng);
        Trajectory tr = propagate(sys, c, psi0);
        double worst_u = 0.0, worst_n = 0.0;
        for (std::size_t j = 0; j < tr.propagators.size(); ++j) {
            worst_u = std::max(worst_u, unitarity_defect(tr.propagators[j]));
            worst_n = std::max(worst_n, std::abs(tr.states[j].norm() - 1.0));
        }
        CAPTURE(n);
        CHECK(worst_u <= 1e-10);
        CHECK(worst_n <= 1e-10);
    }
}

TEST_CASE("flow composes: full horizon equals two half horizons") {
    std::mt19937_64 rng(22);
    QuantumSystem sys = random_system(4, rng);
    Eigen::VectorXcd psi0 = testsup::random_state(4, rng);
    ControlField c = random_control(6.0, 64, rng);

    Trajectory full = propagate(sys, c, psi0);

    ControlField first, second;
    first.duration = second.duration = 3.0;
    first.samples = c.samples.head(32);
    second.samples = c.samples.tail(32);
    Trajectory t1 = propagate(sys, first, psi0);
    Eigen::VectorXcd mid = t1.states.back();
    Trajectory t2 = propagate(sys, second, mid);

    CHECK((t2.states.back() - full.states.back()).norm() <= 1e-10);
    CHECK((t2.propagators.back() * t1.propagators.back() - full.propagators.back()).norm() <=
          1e-10);
}

TEST_CASE("step exponential matches a scaled-and-squared reference") {
    std::mt19937_64 rng(23);
    QuantumSystem sys = random_system(3, rng);
    const double eps = 0.37, tau = 0.5;
    Eigen::MatrixXcd g = sys.a0 + eps * sys.a1;
    // crude independent reference: 2^20 Euler-ish substeps of the series
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(3, 3);
    const int steps = 1 << 14;
    Eigen::MatrixXcd small = Eigen::MatrixXcd::Identity(3, 3);
    const Eigen::MatrixXcd h = g * (tau / steps);
    small += h + 0.5 * h * h + (1.0 / 6.0) * h * h * h + (1.0 / 24.0) * h * h * h * h;
    for (int i = 0; i < steps; ++i) u = small * u;
    CHECK((step_exponential(sys, eps, tau) - u).norm() <= 1e-9);
}

TEST_CASE("state-map derivative columns are true derivatives of the discretized map") {
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 3; ++trial) {
        const Eigen::Index n = 2 + trial;
        QuantumSystem sys = random_system(n, rng);
        Eigen::VectorXcd psi0 = testsup::random_state(n, rng);
        ControlField c = random_control(3.0, 24, rng);

        FrechetMatrix fm = frechet_state(sys, c, psi0);
        REQUIRE(fm.columns.rows() == 2 * n);
        REQUIRE(fm.columns.cols() == 24);

        for (Eigen::Index j = 0; j < c.size(); j += 5) {
            Eigen::VectorXd dir = Eigen::VectorXd::Zero(c.size());
            dir(j) = 1.0;
            Eigen::VectorXcd fd = testsup::fd_state_directional(sys, c, psi0, dir, 1e-6);
            Eigen::VectorXd fd_stacked = real_stack(fd);
            const double rel =
                (fm.columns.col(j) - fd_stacked).norm() / std::max(fd_stacked.norm(), 1e-12);
            CAPTURE(n);
            CAPTURE(j);
            CHECK(rel <= 1e-4);
        }
    }
}

TEST_CASE("derivative columns are tangent to the sphere at psi(T)") {
    std::mt19937_64 rng(25);
    QuantumSystem sys = random_system(4, rng);
    Eigen::VectorXcd psi0 = testsup::random_state(4, rng);
    ControlField c = random_control(4.0, 32, rng);
    Trajectory tr = propagate(sys, c, psi0);
    Eigen::VectorXd psiT = real_stack(tr.states.back());
    FrechetMatrix fm = frechet_state(sys, c, psi0);
    for (Eigen::Index j = 0; j < fm.columns.cols(); ++j) {
        CHECK(std::abs(psiT.dot(fm.columns.col(j))) <= 1e-9);
    }
}

TEST_CASE("zero coupling produces zero derivative columns") {
    Eigen::MatrixXcd h0 = Eigen::MatrixXcd::Zero(3, 3);
    h0(0, 0) = 1.0;
    h0(1, 1) = 0.5;
    h0(2, 2) = -0.5;
    Eigen::MatrixXcd h1 = Eigen::MatrixXcd::Zero(3, 3);
    QuantumSystem sys = QuantumSystem::from_hermitian(h0, h1);
    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(3);
    psi0(1) = 1.0;
    ControlField c = constant_control(2.0, 16, 0.8);
    CHECK(frechet_state(sys, c, psi0).columns.norm() == 0.0);
    CHECK(frechet_propagator(sys, c).columns.norm() == 0.0);
}

TEST_CASE("propagator-map derivative columns match finite differences") {
    std::mt19937_64 rng(26);
    QuantumSystem sys = random_system(3, rng);
    ControlField c = random_control(2.5, 16, rng);
    FrechetMatrix fm = frechet_propagator(sys, c);
    REQUIRE(fm.columns.rows() == 9);
    REQUIRE(fm.which == FrechetMatrix::Map::Propagator);

    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(3);
    psi0(0) = 1.0;
    Eigen::MatrixXcd uT = propagate(sys, c, psi0).propagators.back();
    const double step = 1e-6;
    for (Eigen::Index j = 0; j < c.size(); j += 3) {
        ControlField plus = c, minus = c;
        plus.samples(j) += step;
        minus.samples(j) -= step;
        Eigen::MatrixXcd up = propagate(sys, plus, psi0).propagators.back();
        Eigen::MatrixXcd um = propagate(sys, minus, psi0).propagators.back();
        Eigen::MatrixXcd body = uT.adjoint() * ((up - um) / (2.0 * step));
        Eigen::VectorXd fd = skew_coords(body);
        const double rel = (fm.columns.col(j) - fd).norm() / std::max(fd.norm(), 1e-12);
        CAPTURE(j);
        CHECK(rel <= 1e-4);
    }
}

TEST_CASE("constant control: conjugated coupling has constant eigenbasis diagonal") {
    // Mechanism behind the constant-control rank deficiency: in the eigenbasis
    // of the frozen generator, the diagonal of U^dag(t) a1 U(t) does not move.
    testsup::FourLevel f = fourlevel();
    const double cval = 0.311;
    Eigen::MatrixXcd g = f.sys.a0 + cval * f.sys.a1;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Complex(0, 1) * g);
    Eigen::MatrixXcd v = es.eigenvectors();

    Eigen::VectorXd first_diag;
    for (double t : {0.3, 1.7, 4.9}) {
        Eigen::MatrixXcd u = step_exponential(f.sys, cval, t);
        Eigen::MatrixXcd m = v.adjoint() * (u.adjoint() * f.sys.a1 * u) * v;
        Eigen::VectorXd d(4);
        for (int i = 0; i < 4; ++i) d(i) = m(i, i).imag();
        if (first_diag.size() == 0)
            first_diag = d;
        else
            CHECK((d - first_diag).norm() <= 1e-12);
    }
}

TEST_CASE("propagation rejects bad states") {
    testsup::FourLevel f = fourlevel();
    ControlField c = constant_control(1.0, 4, 0.0);
    Eigen::VectorXcd unnormalized = 2.0 * f.psi0;
    CHECK_THROWS_AS(propagate(f.sys, c, unnormalized), ArgumentError);
    Eigen::VectorXcd wrong_dim = Eigen::VectorXcd::Zero(3);
    wrong_dim(0) = 1.0;
    CHECK_THROWS_AS(propagate(f.sys, c, wrong_dim), ArgumentError);
}
