// dynamics.hpp — piecewise-constant propagation of dpsi/dt = (a0 + eps a1) psi
// and the Frechet derivatives of the end-point maps eps -> psi(T), eps -> U(T).
//
// Each interval is advanced with the exact exponential of its frozen
// generator (unitary eigendecomposition), so the discretized end-point map is
// smooth in the sample vector and differentiable in closed form. The
// derivative with respect to sample j is
//
//   d psi(T) / d eps_j = dt * U(T) U(t*_j)^dag A1hat_j psi(t*_j),
//
// where t*_j is the interval midpoint and A1hat_j is a1 averaged over the
// interval in the interaction frame of the frozen generator (a sinc factor on
// the eigenbasis off-diagonals; the midpoint-sample value of a1 up to
// O(dt^2)). Using the averaged operator keeps the columns exact derivatives
// of the discretized map, so finite-difference checks are limited only by the
// difference step, not by dt.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "linalg.hpp"

namespace qcl {

// Piecewise-constant control on [0, duration]: samples[j] applies on
// [j dt, (j+1) dt), dt = duration / samples.size().
struct ControlField {
    double duration = 0.0;
    Eigen::VectorXd samples;

    double dt() const { return duration / static_cast<double>(samples.size()); }
    Eigen::Index size() const { return samples.size(); }
    // Midpoint time of interval j.
    double mid_time(Eigen::Index j) const { return (static_cast<double>(j) + 0.5) * dt(); }
};

void validate_control(const ControlField& c);

// Each interval split into `factor` equal copies; same function, finer grid.
ControlField refine(const ControlField& c, int factor);

// Grid-point data for one propagation: times[j] = j dt, states[j] = U(t_j) psi0.
struct Trajectory {
    Eigen::VectorXd times;                     // M + 1 entries
    std::vector<Eigen::VectorXcd> states;      // M + 1
    std::vector<Eigen::MatrixXcd> propagators; // M + 1, U(t_0) = I
};

// Trajectory plus the midpoint machinery needed by derivative and corank code.
struct Flow {
    Trajectory trajectory;
    std::vector<Eigen::MatrixXcd> mid_propagators;  // U(t*_j), M entries
    std::vector<Eigen::MatrixXcd> a1_avg;           // A1hat_j, M entries
};

Trajectory propagate(const QuantumSystem& sys, const ControlField& c, const Eigen::VectorXcd& psi0);
Flow propagate_flow(const QuantumSystem& sys, const ControlField& c, const Eigen::VectorXcd& psi0);

// exp(tau (a0 + eps a1)) via eigendecomposition of the Hermitian i(a0 + eps a1).
Eigen::MatrixXcd step_exponential(const QuantumSystem& sys, double eps, double tau);

// Frechet derivative of an end-point map, one column per control sample.
// State map: columns are stacked [Re; Im] of d psi(T) / d eps_j (2N rows).
// Propagator map: columns are canonical skew-Hermitian coordinates of
// U(T)^dag dU(T)/d eps_j (N^2 rows).
struct FrechetMatrix {
    enum class Map { State, Propagator };
    Map which = Map::State;
    Eigen::MatrixXd columns;
};

FrechetMatrix frechet_state(const QuantumSystem& sys, const ControlField& c,
                            const Eigen::VectorXcd& psi0);
FrechetMatrix frechet_propagator(const QuantumSystem& sys, const ControlField& c);

}  // namespace qcl
