#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "linalg.hpp"
#include "support.hpp"

using namespace qcl;
using testsup::fourlevel;
using testsup::random_hermitian;
using testsup::random_system;

namespace {

Eigen::MatrixXcd pauli_x() {
    Eigen::MatrixXcd m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Eigen::MatrixXcd pauli_y() {
    Eigen::MatrixXcd m(2, 2);
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return m;
}

}  // namespace

TEST_CASE("real inner product") {
    SUBCASE("hand example: (1+i,0) vs (1-i,0) is orthogonal in the real sense") {
        Eigen::VectorXcd v(2), w(2);
        v << Complex(1, 1), 0;
        w << Complex(1, -1), 0;
        CHECK(real_inner(v, w) == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("agrees with the stacked real dot product") {
        std::mt19937_64 rng(11);
        for (int t = 0; t < 20; ++t) {
            Eigen::VectorXcd v = testsup::random_state(5, rng);
            Eigen::VectorXcd w = testsup::random_state(5, rng);
            const double direct = real_inner(v, w);
            const double stacked = real_stack(v).dot(real_stack(w));
            CHECK(std::abs(direct - stacked) <= 1e-14);
        }
    }
    SUBCASE("skew-Hermitian action is tangent: <psi, A psi> = 0") {
        std::mt19937_64 rng(12);
        for (int t = 0; t < 20; ++t) {
            QuantumSystem sys = random_system(4, rng);
            Eigen::VectorXcd psi = testsup::random_state(4, rng);
            CHECK(std::abs(real_inner(psi, sys.a0 * psi)) <= 1e-12);
            CHECK(std::abs(real_inner(psi, sys.a1 * psi)) <= 1e-12);
        }
    }
}

TEST_CASE("commutator") {
    SUBCASE("Pauli hand result: [-i sx, -i sy] = diag(-2i, 2i)") {
        Eigen::MatrixXcd a = Complex(0, -1) * pauli_x();
        Eigen::MatrixXcd b = Complex(0, -1) * pauli_y();
        Eigen::MatrixXcd c = commutator(a, b);
        Eigen::MatrixXcd expect(2, 2);
        expect << Complex(0, -2), 0, 0, Complex(0, 2);
        CHECK((c - expect).norm() <= 1e-14);
    }
    SUBCASE("antisymmetry") {
        std::mt19937_64 rng(13);
        for (int t = 0; t < 10; ++t) {
            Eigen::MatrixXcd a = random_hermitian(4, rng);
            Eigen::MatrixXcd b = random_hermitian(4, rng);
            CHECK((commutator(a, b) + commutator(b, a)).norm() <= 1e-14);
        }
    }
    SUBCASE("Jacobi identity") {
        std::mt19937_64 rng(14);
        for (int t = 0; t < 10; ++t) {
            Eigen::MatrixXcd a = random_hermitian(3, rng);
            Eigen::MatrixXcd b = random_hermitian(3, rng);
            Eigen::MatrixXcd c = random_hermitian(3, rng);
            Eigen::MatrixXcd sum = commutator(a, commutator(b, c)) +
                                   commutator(b, commutator(c, a)) +
                                   commutator(c, commutator(a, b));
            CHECK(sum.norm() <= 1e-12);
        }
    }
    SUBCASE("commutator of skew-Hermitians is skew-Hermitian") {
        std::mt19937_64 rng(15);
        QuantumSystem sys = random_system(5, rng);
        Eigen::MatrixXcd c = commutator(sys.a0, sys.a1);
        CHECK((c + c.adjoint()).norm() <= 1e-13);
    }
}

TEST_CASE("nested commutator right-nesting and index semantics") {
    std::mt19937_64 rng(16);
    QuantumSystem sys = random_system(4, rng);
    SUBCASE("single index returns the generator") {
        CHECK((nested_commutator(sys, {0}) - sys.a0).norm() == 0.0);
        CHECK((nested_commutator(sys, {1}) - sys.a1).norm() == 0.0);
    }
    SUBCASE("two indices are a plain commutator") {
        CHECK((nested_commutator(sys, {0, 1}) - commutator(sys.a0, sys.a1)).norm() <= 1e-15);
    }
    SUBCASE("right nesting: (0,0,1) = [a0, [a0, a1]]") {
        Eigen::MatrixXcd expect = commutator(sys.a0, commutator(sys.a0, sys.a1));
        CHECK((nested_commutator(sys, {0, 0, 1}) - expect).norm() <= 1e-15);
        Eigen::MatrixXcd expect101 = commutator(sys.a1, commutator(sys.a0, sys.a1));
        CHECK((nested_commutator(sys, {1, 0, 1}) - expect101).norm() <= 1e-15);
    }
    SUBCASE("empty index list is rejected") {
        CHECK_THROWS_AS(nested_commutator(sys, {}), ArgumentError);
    }
}

TEST_CASE("bracket space basis matches a brute-force span computation") {
    // Independent oracle: enumerate every bracket pattern of the level,
    // stack canonical coordinates, and take the SVD rank directly.
    auto brute_rank = [](const QuantumSystem& sys, int level) {
        std::vector<Eigen::MatrixXcd> all;
        const int count = 1 << (level - 1);
        for (int bits = 0; bits < count; ++bits) {
            std::vector<int> idx(level);
            idx[level - 1] = 1;
            for (int p = 0; p < level - 1; ++p) idx[p] = (bits >> p) & 1;
            all.push_back(nested_commutator(sys, idx));
        }
        const Eigen::Index n = sys.dim;
        Eigen::MatrixXd stacked(n * n, static_cast<Eigen::Index>(all.size()));
        for (std::size_t i = 0; i < all.size(); ++i)
            stacked.col(static_cast<Eigen::Index>(i)) = skew_coords(all[i]);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
        const double smax = svd.singularValues()(0);
        int rank = 0;
        for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > 1e-8 * smax) ++rank;
        return rank;
    };

    testsup::FourLevel f = fourlevel();
    for (int level = 1; level <= 4; ++level) {
        CAPTURE(level);
        auto basis = bracket_space_basis(f.sys, level);
        CHECK(static_cast<int>(basis.size()) == brute_rank(f.sys, level));
        // returned elements are themselves independent brackets
        if (!basis.empty()) {
            Eigen::MatrixXd stacked(16, static_cast<Eigen::Index>(basis.size()));
            for (std::size_t i = 0; i < basis.size(); ++i)
                stacked.col(static_cast<Eigen::Index>(i)) = skew_coords(basis[i]);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
            CHECK(svd.singularValues()(svd.singularValues().size() - 1) >
                  1e-8 * svd.singularValues()(0));
        }
    }

    SUBCASE("level 1 is exactly span{a1}") {
        auto basis = bracket_space_basis(f.sys, 1);
        REQUIRE(basis.size() == 1);
        CHECK((basis[0] - f.sys.a1).norm() <= 1e-15);
    }

    SUBCASE("commuting generators collapse level 2") {
        Eigen::MatrixXcd h0 = Eigen::MatrixXcd::Zero(3, 3);
        h0(0, 0) = 1.0;
        h0(1, 1) = 2.0;
        h0(2, 2) = -1.0;
        Eigen::MatrixXcd h1 = Eigen::MatrixXcd::Zero(3, 3);
        h1(0, 0) = 0.5;
        h1(1, 1) = -0.25;
        h1(2, 2) = 1.5;
        QuantumSystem diag = QuantumSystem::from_hermitian(h0, h1);
        CHECK(bracket_space_basis(diag, 2).empty());
    }

    SUBCASE("chain agrees with per-level calls") {
        auto chain = bracket_space_chain(f.sys, 3);
        REQUIRE(chain.size() == 3);
        for (int level = 1; level <= 3; ++level)
            CHECK(chain[static_cast<std::size_t>(level - 1)].size() ==
                  bracket_space_basis(f.sys, level).size());
    }

    SUBCASE("order cap") {
        // levels run one past the singularity-order cap (order k needs level k+1)
        CHECK_THROWS_AS(bracket_space_basis(f.sys, kMaxBracketOrder + 2), OrderCapError);
        CHECK_THROWS_AS(bracket_space_basis(f.sys, 0), ArgumentError);
    }
}

TEST_CASE("tangent projection") {
    SUBCASE("hand example: base e1, v = (2+i, 3) -> (i, 3)") {
        Eigen::VectorXcd base(2), v(2);
        base << 1, 0;
        v << Complex(2, 1), 3;
        TangentVector t = tangent_project(base, v);
        Eigen::VectorXcd expect(2);
        expect << Complex(0, 1), 3;
        CHECK((t.direction - expect).norm() <= 1e-15);
        CHECK(std::abs(real_inner(base, t.direction)) <= 1e-15);
    }
    SUBCASE("idempotence and tangency on random data") {
        std::mt19937_64 rng(17);
        for (int t = 0; t < 20; ++t) {
            Eigen::VectorXcd base = testsup::random_state(4, rng);
            Eigen::VectorXcd v = testsup::random_state(4, rng) * 3.0;
            TangentVector p1 = tangent_project(base, v);
            TangentVector p2 = tangent_project(base, p1.direction);
            CHECK(std::abs(real_inner(base, p1.direction)) <= 1e-12);
            CHECK((p2.direction - p1.direction).norm() <= 1e-12);
        }
    }
}

TEST_CASE("hermitian to generator and validation") {
    std::mt19937_64 rng(18);
    Eigen::MatrixXcd h = random_hermitian(4, rng);
    Eigen::MatrixXcd a = hermitian_to_generator(h);
    CHECK((a - Complex(0, -1) * h).norm() == 0.0);
    CHECK((a + a.adjoint()).norm() <= 1e-14);

    SUBCASE("non-Hermitian input is rejected") {
        Eigen::MatrixXcd bad = h;
        bad(0, 1) += Complex(0.0, 1e-6);
        CHECK_THROWS_AS(hermitian_to_generator(bad), ValidationError);
        CHECK_THROWS_AS(QuantumSystem::from_hermitian(bad, h), ValidationError);
    }
    SUBCASE("from_skew rejects a Hermitian matrix") {
        CHECK_THROWS_AS(QuantumSystem::from_skew(h, Complex(0, -1) * h), ValidationError);
    }
    SUBCASE("from_hermitian stores -iH") {
        testsup::FourLevel f = fourlevel();
        CHECK(std::abs(f.sys.a0(0, 0) - Complex(0.0, 0.50)) <= 1e-15);
        CHECK(std::abs(f.sys.a1(0, 1) - Complex(0, -1) * Complex(0.75, -0.20)) <= 1e-15);
    }
    SUBCASE("shape mismatch is an argument error") {
        Eigen::MatrixXcd h3 = random_hermitian(3, rng);
        CHECK_THROWS_AS(QuantumSystem::from_hermitian(h, h3), ArgumentError);
    }
}

TEST_CASE("skew coordinates are a real-linear isometry-grade parameterization") {
    std::mt19937_64 rng(19);
    QuantumSystem sys = random_system(4, rng);
    Eigen::VectorXd c0 = skew_coords(sys.a0);
    Eigen::VectorXd c1 = skew_coords(sys.a1);
    CHECK(c0.size() == 16);
    SUBCASE("linearity") {
        Eigen::VectorXd sum = skew_coords(sys.a0 + 2.0 * sys.a1);
        CHECK((sum - (c0 + 2.0 * c1)).norm() <= 1e-14);
    }
    SUBCASE("injectivity on a nonzero matrix") {
        CHECK(c1.norm() > 0.1);
    }
}

TEST_CASE("random unit states are unit and deterministic in the seed") {
    std::mt19937_64 a(42), b(42);
    Eigen::VectorXcd va = random_unit_state(5, a);
    Eigen::VectorXcd vb = random_unit_state(5, b);
    CHECK((va - vb).norm() == 0.0);
    CHECK(std::abs(va.norm() - 1.0) <= 1e-14);
}
