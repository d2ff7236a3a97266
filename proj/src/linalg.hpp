// linalg.hpp — bilinear control system container and the real-linear algebra
// used everywhere else: commutators, bracket spaces, tangent decompositions.
//
// Convention: the state space C^N carries the REAL inner product
//   <v, w> = Re(v^dag w),
// under which C^N is R^{2N} and every skew-Hermitian generator acts as a
// real-antisymmetric operator. All rank/orthogonality computations below are
// over the reals in that sense.
#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace qcl {

using Complex = std::complex<double>;

// Single-input bilinear system dpsi/dt = (a0 + eps(t) a1) psi with both
// generators skew-Hermitian. Construct through the factories, which validate.
struct QuantumSystem {
    Eigen::Index dim = 0;
    Eigen::MatrixXcd a0;
    Eigen::MatrixXcd a1;

    // Hermitian inputs h0, h1; stores a0 = -i h0, a1 = -i h1.
    static QuantumSystem from_hermitian(const Eigen::MatrixXcd& h0, const Eigen::MatrixXcd& h1);
    // Raw skew-Hermitian inputs, stored as-is.
    static QuantumSystem from_skew(const Eigen::MatrixXcd& a0, const Eigen::MatrixXcd& a1);
};

// Tolerances for operator validation.
inline constexpr double kHermitianTol = 1e-12;

// <v, w> = Re(v^dag w).
double real_inner(const Eigen::VectorXcd& v, const Eigen::VectorXcd& w);

// C^N -> R^{2N}, [Re(v); Im(v)]. Isometric for real_inner.
Eigen::VectorXd real_stack(const Eigen::VectorXcd& v);

// Canonical real coordinates of a skew-Hermitian matrix:
// N imaginary diagonal entries, then (Re, Im) of each strict upper entry.
// Length N^2; a real-linear isomorphism of u(N).
Eigen::VectorXd skew_coords(const Eigen::MatrixXcd& m);

// [a, b] = ab - ba.
Eigen::MatrixXcd commutator(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

// Right-nested bracket over system generators: indices (i1, .., ik) with
// each i in {0, 1} selects H_{i1..ik} = [g_{i1}, [g_{i2}, [... g_{ik}]]],
// where g_0 = a0, g_1 = a1. A single index returns the generator itself.
Eigen::MatrixXcd nested_commutator(const QuantumSystem& sys, const std::vector<int>& indices);

// Real-linearly independent spanning set of the level-`level` bracket space:
// level 1 is span{a1}; level l is spanned by [g_i, B] over B from level l-1.
// Independence is decided by SVD rank with relative threshold, and the
// returned elements are actual bracket matrices chosen by column-pivoted QR.
std::vector<Eigen::MatrixXcd> bracket_space_basis(const QuantumSystem& sys, int level,
                                                  double threshold_rel = 1e-8);

// Levels 1..max_level at once (level l at index l-1); cheaper than repeated
// calls because each level reuses the reduced basis of the previous one.
std::vector<std::vector<Eigen::MatrixXcd>> bracket_space_chain(const QuantumSystem& sys,
                                                               int max_level,
                                                               double threshold_rel = 1e-8);

// Component of v orthogonal (real sense) to a unit base state.
struct TangentVector {
    Eigen::VectorXcd base;
    Eigen::VectorXcd direction;  // real_inner(base, direction) == 0
};
TangentVector tangent_project(const Eigen::VectorXcd& base, const Eigen::VectorXcd& v);

// -i h for Hermitian h (validated).
Eigen::MatrixXcd hermitian_to_generator(const Eigen::MatrixXcd& h);

// --- validation helpers -------------------------------------------------

void require_square(const Eigen::MatrixXcd& m, const char* name);
void require_finite(const Eigen::MatrixXcd& m, const char* name);
void require_hermitian(const Eigen::MatrixXcd& m, const char* name, double tol = kHermitianTol);
void require_skew_hermitian(const Eigen::MatrixXcd& m, const char* name, double tol = kHermitianTol);
void require_unit(const Eigen::VectorXcd& v, const char* name, double tol = 1e-10);

// Haar-ish random unit state: 2N independent normals, normalized.
Eigen::VectorXcd random_unit_state(Eigen::Index dim, std::mt19937_64& rng);

inline constexpr int kMaxBracketOrder = 6;

}  // namespace qcl
