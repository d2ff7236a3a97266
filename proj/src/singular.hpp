// singular.hpp — rank analysis of the end-point maps and construction of
// singular extremals by feedback integration.
//
// A control is singular for the state (propagator) map when the sampled
// response functions fail to span the full tangent space; corank counts the
// missing directions. Singular extremals of order k are built from seed
// pairs (psi0, phi0) with phi0 real-orthogonal to psi0 and to all bracket
// images B psi0 up through level k, integrating the closed-loop control
//
//   eps = - <phi, N psi> / <phi, D psi>,
//
// where N and D are the order-(k+1) brackets prefixed by a0 / a1 over the
// chosen level-k pattern (for k = 2: N = [a0,[a0,a1]], D = [a1,[a0,a1]]).
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dynamics.hpp"

namespace qcl {

inline constexpr double kRankThresholdRel = 1e-8;
inline constexpr double kConeFloorRel = 1e-6;
inline constexpr double kDenFloorRel = 1e-8;

// --- corank ---------------------------------------------------------------

struct CorankReport {
    FrechetMatrix::Map which_map = FrechetMatrix::Map::State;
    int ambient_dim = 0;  // 2N-1 for the state map, N^2 for the propagator map
    int rank = 0;
    int corank = 0;
    Eigen::VectorXd singular_values;  // descending
    double threshold = 0.0;           // absolute cut = threshold_rel * sigma_max
    double threshold_rel = 0.0;
    double spectral_gap = 0.0;        // sigma_rank / sigma_{rank+1}; inf when clean
};

// Rank of the sampled response functions t -> U^dag(t*) a1 U(t*) psi0
// (stacked real components, columns scaled by sqrt(dt)). The functions are
// always orthogonal to psi0 in the real sense, so rank is capped at 2N-1.
CorankReport corank_state(const QuantumSystem& sys, const ControlField& c,
                          const Eigen::VectorXcd& psi0, double threshold_rel = kRankThresholdRel);

// Same scheme on the skew-Hermitian coordinate functions of U^dag(t*) a1 U(t*);
// ambient dimension N^2.
CorankReport corank_propagator(const QuantumSystem& sys, const ControlField& c,
                               double threshold_rel = kRankThresholdRel);

// --- seeds and the singular subspace ---------------------------------------

// Real-orthonormal basis of { phi in T_psi : <phi, B psi> = 0 for every B in
// the bracket spaces of levels 1..k }. Each element is returned as a complex
// vector. `phase_orthogonal` adds the row i*psi as an extra constraint, which
// pins Im(phi^dag psi) = 0 as well (useful when the conjugate trajectory must
// stay fully complex-orthogonal to the state).
std::vector<Eigen::VectorXcd> singular_subspace_basis(const QuantumSystem& sys,
                                                      const Eigen::VectorXcd& psi, int order,
                                                      double threshold_rel = kRankThresholdRel,
                                                      bool phase_orthogonal = false);

struct SeedPair {
    Eigen::VectorXcd psi0;  // unit
    Eigen::VectorXcd phi0;  // nonzero, real-orthogonal to psi0
    int order = 2;
};

struct SeedOptions {
    bool phase_orthogonal = false;   // also require Im(phi0^dag psi0) = 0
    double cone_floor_rel = kConeFloorRel;
    int max_attempts = 1000;
};

// Rejection-sampled seed: random unit psi0, random phi0 in the singular
// subspace, accepted once some a1-prefixed order-(k+1) bracket denominator
// has magnitude >= cone_floor_rel * ||phi0||. Deterministic in rng_seed.
SeedPair sample_seed_pair(const QuantumSystem& sys, int order, std::uint64_t rng_seed,
                          const SeedOptions& opts = {});

// Checks the seed invariants (tangency, level-1..k orthogonality, cone floor);
// throws ArgumentError / ValidationError when violated.
void validate_seed(const QuantumSystem& sys, const SeedPair& seed);

// --- singular extremals -----------------------------------------------------

// Constraint residuals along an arc, evaluated at interval midpoints:
//   r1 = <phi, a1 psi>, r2 = <phi, [a0,a1] psi>,
//   r3 = <phi, N psi> + eps <phi, D psi>.
struct ResidualSeries {
    Eigen::VectorXd times;
    Eigen::VectorXd r1, r2, r3;
};

struct SingularExtremal {
    ControlField control;                        // samples at interval midpoints
    Eigen::VectorXd feedback_at_grid;            // feedback values at grid nodes (M+1), for convergence studies
    Trajectory trajectory;                       // grid states / propagators
    std::vector<Eigen::VectorXcd> conjugate;     // phi(t_j), grid
    std::vector<Eigen::VectorXcd> states_mid;    // psi(t*_j)
    std::vector<Eigen::VectorXcd> conjugate_mid; // phi(t*_j)
    int order = 2;
    std::vector<int> pattern;                    // level-k pattern driving the feedback
    ResidualSeries residuals;
    SeedPair seed;
    double den_min = 0.0;                        // min |feedback denominator| over midpoints
};

// Arcs whose feedback denominator stays above this fraction of ||phi0||
// keep the fixed-step integrator accurate; below it the feedback magnitude
// can spike and the conservation residuals degrade. Drivers that need
// well-resolved reference arcs should retry seeds until this margin holds.
inline constexpr double kDenHealthyRel = 1e-2;

struct GenerateOptions {
    double den_floor_rel = kDenFloorRel;  // floor = den_floor_rel * ||phi0||
    double threshold_rel = kRankThresholdRel;
};

// Integrates the closed loop from t = 0 with RK4 at half-interval substeps,
// re-unitarizing each step. Throws SingularArcTransitionError when the
// feedback denominator falls below its floor.
SingularExtremal generate_singular_extremal(const QuantumSystem& sys, const SeedPair& seed,
                                            double duration, Eigen::Index num_samples,
                                            const GenerateOptions& opts = {});

// Recomputes the residual series from the stored arc data.
ResidualSeries constraint_residuals(const QuantumSystem& sys, const SingularExtremal& arc);

// --- Wronskian-style certificate (exact rows for N = 2) ---------------------

struct WronskianSeries {
    Eigen::VectorXd times;   // interval midpoints where the determinant is formed
    Eigen::VectorXd values;  // |det| with rows normalized to unit length
    bool degenerate = false; // some row vanished identically
};

// Determinant certificate on the (2N-1)-dimensional coordinate functions of
// t -> a1(t) psi0 in a frame orthogonal to psi0. For N = 2 the derivative
// rows are exact bracket expressions; for N >= 3 they are centered finite
// differences of the sampled rows (requires M >= 64).
WronskianSeries wronskian_residual(const QuantumSystem& sys, const ControlField& c,
                                   const Eigen::VectorXcd& psi0);

// Quantile-based verdict: singular when |det| stays below tol on at least 90%
// of the evaluation points (the determinant of a regular family may still have
// isolated zeros).
bool wronskian_singular_verdict(const WronskianSeries& w, double tol = 1e-5);

// --- singular surface of a fidelity landscape -------------------------------

struct SurfaceResidual {
    double residual = 0.0;  // ||(I - P_subspace) P_tangent grad|| / ||grad||
    bool kinematic = false; // grad itself vanished (endpoint orthogonal to target or aligned)
};

SurfaceResidual singular_surface_residual(const QuantumSystem& sys, const Eigen::VectorXcd& psi,
                                          const Eigen::VectorXcd& psif, int order,
                                          double threshold_rel = kRankThresholdRel);

struct BackwardOptions {
    GenerateOptions generate;
    double surface_tol = 1e-8;
};

// Plants phi(T) = grad F(psi_T) = 2 (psif^dag psi_T) psif and integrates the
// closed loop backward to t = 0. Requires psi_T to lie on the order-k surface
// within surface_tol; throws NotOnSurfaceError otherwise.
SingularExtremal backward_singular_from_surface(const QuantumSystem& sys,
                                                const Eigen::VectorXcd& psi_T,
                                                const Eigen::VectorXcd& psif, int order,
                                                double duration, Eigen::Index num_samples,
                                                const BackwardOptions& opts = {});

// Level-k patterns whose innermost bracket is nonzero, lexicographic order.
std::vector<std::vector<int>> level_patterns(int level);

}  // namespace qcl
