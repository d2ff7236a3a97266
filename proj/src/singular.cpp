#include "singular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace qcl {

namespace {

CorankReport finish_report(FrechetMatrix::Map which, int ambient, const Eigen::MatrixXd& samples,
                           double threshold_rel, int rank_cap) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(samples);
    const Eigen::VectorXd sigma = svd.singularValues();

    CorankReport rep;
    rep.which_map = which;
    rep.ambient_dim = ambient;
    rep.singular_values = sigma;
    rep.threshold_rel = threshold_rel;
    const double smax = sigma.size() ? sigma[0] : 0.0;
    rep.threshold = threshold_rel * smax;

    int rank = 0;
    if (smax > 0.0) {
        for (Eigen::Index i = 0; i < sigma.size(); ++i) {
            if (sigma[i] > rep.threshold) ++rank;
        }
    }
    rank = std::min(rank, rank_cap);
    rep.rank = rank;
    rep.corank = ambient - rank;

    if (rank > 0 && rank < sigma.size() && sigma[rank] > 0.0) {
        rep.spectral_gap = sigma[rank - 1] / sigma[rank];
    } else {
        rep.spectral_gap = std::numeric_limits<double>::infinity();
    }
    return rep;
}

}  // namespace

CorankReport corank_state(const QuantumSystem& sys, const ControlField& c,
                          const Eigen::VectorXcd& psi0, double threshold_rel) {
    const int ambient = static_cast<int>(2 * sys.dim - 1);
    if (c.samples.size() < ambient) {
        std::ostringstream os;
        os << "corank_state: " << c.samples.size() << " samples cannot certify regularity in "
           << "ambient dimension " << ambient << " (need at least " << ambient << ")";
        throw UnderResolvedError(os.str());
    }
    const Flow flow = propagate_flow(sys, c, psi0);
    const double sq = std::sqrt(c.dt());
    Eigen::MatrixXd samples(2 * sys.dim, c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        const Eigen::MatrixXcd& umid = flow.mid_propagators[static_cast<size_t>(j)];
        const Eigen::VectorXcd f = umid.adjoint() * (sys.a1 * (umid * psi0));
        samples.col(j) = sq * real_stack(f);
    }
    return finish_report(FrechetMatrix::Map::State, ambient, samples, threshold_rel, ambient);
}

CorankReport corank_propagator(const QuantumSystem& sys, const ControlField& c,
                               double threshold_rel) {
    const int ambient = static_cast<int>(sys.dim * sys.dim);
    if (c.samples.size() < ambient) {
        std::ostringstream os;
        os << "corank_propagator: " << c.samples.size() << " samples cannot certify regularity in "
           << "ambient dimension " << ambient << " (need at least " << ambient << ")";
        throw UnderResolvedError(os.str());
    }
    Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(sys.dim);
    e0[0] = 1.0;
    const Flow flow = propagate_flow(sys, c, e0);
    const double sq = std::sqrt(c.dt());
    Eigen::MatrixXd samples(ambient, c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        const Eigen::MatrixXcd& umid = flow.mid_propagators[static_cast<size_t>(j)];
        samples.col(j) = sq * skew_coords(umid.adjoint() * sys.a1 * umid);
    }
    return finish_report(FrechetMatrix::Map::Propagator, ambient, samples, threshold_rel, ambient);
}

std::vector<Eigen::VectorXcd> singular_subspace_basis(const QuantumSystem& sys,
                                                      const Eigen::VectorXcd& psi, int order,
                                                      double threshold_rel, bool phase_orthogonal) {
    if (order < 2) throw ArgumentError("singular_subspace_basis: order must be >= 2");
    if (order > kMaxBracketOrder) {
        std::ostringstream os;
        os << "singular_subspace_basis: order " << order << " above cap " << kMaxBracketOrder;
        throw OrderCapError(os.str());
    }
    require_unit(psi, "singular_subspace_basis: psi");
    if (psi.size() != sys.dim) throw ArgumentError("singular_subspace_basis: psi dimension mismatch");

    const auto chain = bracket_space_chain(sys, order, threshold_rel);
    std::vector<Eigen::VectorXd> rows;
    rows.push_back(real_stack(psi));
    if (phase_orthogonal) rows.push_back(real_stack(Complex(0.0, 1.0) * psi));
    for (const auto& level : chain) {
        for (const auto& b : level) rows.push_back(real_stack(b * psi));
    }

    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), 2 * sys.dim);
    for (size_t i = 0; i < rows.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = rows[i];

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd sigma = svd.singularValues();
    const double smax = sigma.size() ? sigma[0] : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (smax > 0.0 && sigma[i] > threshold_rel * smax) ++rank;
    }

    std::vector<Eigen::VectorXcd> basis;
    const Eigen::MatrixXd& v = svd.matrixV();
    for (Eigen::Index col = rank; col < v.cols(); ++col) {
        Eigen::VectorXcd b(sys.dim);
        for (Eigen::Index i = 0; i < sys.dim; ++i) b[i] = Complex(v(i, col), v(sys.dim + i, col));
        basis.push_back(b);
    }
    return basis;
}

std::vector<std::vector<int>> level_patterns(int level) {
    if (level < 1) throw ArgumentError("level_patterns: level must be >= 1");
    std::vector<std::vector<int>> out;
    for (int v = 0; v < (1 << level); ++v) {
        std::vector<int> p(level);
        for (int i = 0; i < level; ++i) p[i] = (v >> (level - 1 - i)) & 1;
        if (level >= 2 && p[level - 2] == p[level - 1]) continue;  // innermost bracket vanishes
        out.push_back(p);
    }
    return out;
}

namespace {

std::vector<int> prefixed(int head, const std::vector<int>& pattern) {
    std::vector<int> idx;
    idx.reserve(pattern.size() + 1);
    idx.push_back(head);
    idx.insert(idx.end(), pattern.begin(), pattern.end());
    return idx;
}

}  // namespace

SeedPair sample_seed_pair(const QuantumSystem& sys, int order, std::uint64_t rng_seed,
                          const SeedOptions& opts) {
    if (order < 2) throw ArgumentError("sample_seed_pair: order must be >= 2");
    if (order > kMaxBracketOrder) {
        std::ostringstream os;
        os << "sample_seed_pair: order " << order << " above cap " << kMaxBracketOrder;
        throw OrderCapError(os.str());
    }

    // Denominator brackets: a1-prefixed order-(k+1) patterns.
    std::vector<Eigen::MatrixXcd> denominators;
    for (const auto& p : level_patterns(order)) {
        denominators.push_back(nested_commutator(sys, prefixed(1, p)));
    }

    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::set<Eigen::Index> dims_seen;

    for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
        const Eigen::VectorXcd psi0 = random_unit_state(sys.dim, rng);
        const auto basis = singular_subspace_basis(sys, psi0, order, kRankThresholdRel,
                                                   opts.phase_orthogonal);
        dims_seen.insert(static_cast<Eigen::Index>(basis.size()));
        if (basis.empty()) continue;

        Eigen::VectorXcd phi0 = Eigen::VectorXcd::Zero(sys.dim);
        for (const auto& b : basis) phi0 += normal(rng) * b;
        const double n = phi0.norm();
        if (n < 1e-12) continue;
        phi0 /= n;

        double best = 0.0;
        for (const auto& d : denominators) {
            best = std::max(best, std::abs(real_inner(phi0, d * psi0)));
        }
        if (best >= opts.cone_floor_rel) {
            SeedPair seed;
            seed.psi0 = psi0;
            seed.phi0 = phi0;
            seed.order = order;
            return seed;
        }
    }

    std::ostringstream os;
    os << "sample_seed_pair: no admissible seed after " << opts.max_attempts
       << " attempts (subspace dimensions seen:";
    for (auto d : dims_seen) os << " " << d;
    os << ")";
    throw NoSeedFoundError(os.str());
}

namespace {

// Geometry half of the seed contract: shapes, tangency, bracket orthogonality.
// The cone-interior floor is checked separately so the generator can report a
// degenerate denominator as the arc-transition condition it actually is.
void validate_seed_geometry(const QuantumSystem& sys, const SeedPair& seed) {
    if (seed.order < 2) throw ArgumentError("seed: order must be >= 2");
    if (seed.order > kMaxBracketOrder) throw OrderCapError("seed: order above cap");
    require_unit(seed.psi0, "seed: psi0");
    if (seed.psi0.size() != sys.dim || seed.phi0.size() != sys.dim) {
        throw ArgumentError("seed: dimension mismatch with system");
    }
    const double pn = seed.phi0.norm();
    if (!(pn > 0.0) || !seed.phi0.allFinite()) throw ArgumentError("seed: phi0 must be nonzero");

    const double tol = 1e-9 * pn;
    if (std::abs(real_inner(seed.phi0, seed.psi0)) > tol) {
        throw ValidationError("seed: phi0 is not tangent at psi0");
    }
    const auto chain = bracket_space_chain(sys, seed.order);
    for (size_t level = 0; level < chain.size(); ++level) {
        for (const auto& b : chain[level]) {
            const Eigen::VectorXcd bpsi = b * seed.psi0;
            if (std::abs(real_inner(seed.phi0, bpsi)) > tol * std::max(1.0, bpsi.norm())) {
                std::ostringstream os;
                os << "seed: phi0 not orthogonal to a level-" << (level + 1) << " bracket image";
                throw ValidationError(os.str());
            }
        }
    }
}

}  // namespace

void validate_seed(const QuantumSystem& sys, const SeedPair& seed) {
    validate_seed_geometry(sys, seed);
    const double pn = seed.phi0.norm();
    double best = 0.0;
    for (const auto& p : level_patterns(seed.order)) {
        const Eigen::MatrixXcd d = nested_commutator(sys, prefixed(1, p));
        best = std::max(best, std::abs(real_inner(seed.phi0, d * seed.psi0)));
    }
    if (best < kConeFloorRel * pn) {
        throw ValidationError("seed: all order-(k+1) feedback denominators below the cone floor");
    }
}

namespace {

Eigen::MatrixXcd polar_unitary(const Eigen::MatrixXcd& w) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

struct LoopData {
    std::vector<Eigen::MatrixXcd> nodes;  // 2m+1 entries, node i at t = i * dt/2
    Eigen::VectorXd eps_nodes;            // feedback value at each node
};

// RK4 on dW/dt = (a0 + eps(W) a1) W at half-interval substeps, re-unitarized
// every step. Forward: W(0) = I, walks up. Backward: W(T) = I, walks down;
// node indices are by time in both cases.
LoopData integrate_loop(const QuantumSystem& sys, const Eigen::MatrixXcd& nb,
                        const Eigen::MatrixXcd& db, const Eigen::VectorXcd& psi_ref,
                        const Eigen::VectorXcd& phi_ref, double duration, Eigen::Index m,
                        double den_floor, bool backward) {
    const Eigen::Index fine = 2 * m;
    const double h2 = duration / static_cast<double>(fine);

    auto eps_of = [&](const Eigen::MatrixXcd& w, double t) -> double {
        const Eigen::VectorXcd v = w * psi_ref;
        const Eigen::VectorXcd u = w * phi_ref;
        const double den = real_inner(u, db * v);
        if (std::abs(den) < den_floor) {
            std::ostringstream os;
            os << "feedback denominator " << den << " below floor " << den_floor << " at t = " << t;
            throw SingularArcTransitionError(os.str(), t);
        }
        return -real_inner(u, nb * v) / den;
    };
    auto rhs = [&](const Eigen::MatrixXcd& w, double eps) -> Eigen::MatrixXcd {
        return (sys.a0 + eps * sys.a1) * w;
    };

    LoopData out;
    out.nodes.assign(static_cast<size_t>(fine + 1), Eigen::MatrixXcd());
    out.eps_nodes.resize(fine + 1);

    const double s = backward ? -h2 : h2;
    Eigen::MatrixXcd w = Eigen::MatrixXcd::Identity(sys.dim, sys.dim);
    Eigen::Index node = backward ? fine : 0;
    double t = backward ? duration : 0.0;
    out.nodes[static_cast<size_t>(node)] = w;

    for (Eigen::Index i = 0; i < fine; ++i) {
        const double e1 = eps_of(w, t);
        out.eps_nodes[node] = e1;
        const Eigen::MatrixXcd k1 = rhs(w, e1);
        const Eigen::MatrixXcd w2 = w + (0.5 * s) * k1;
        const Eigen::MatrixXcd k2 = rhs(w2, eps_of(w2, t + 0.5 * s));
        const Eigen::MatrixXcd w3 = w + (0.5 * s) * k2;
        const Eigen::MatrixXcd k3 = rhs(w3, eps_of(w3, t + 0.5 * s));
        const Eigen::MatrixXcd w4 = w + s * k3;
        const Eigen::MatrixXcd k4 = rhs(w4, eps_of(w4, t + s));
        w = polar_unitary(w + (s / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        t += s;
        node += backward ? -1 : 1;
        out.nodes[static_cast<size_t>(node)] = w;
    }
    out.eps_nodes[node] = eps_of(w, t);
    return out;
}

SingularExtremal assemble_extremal(const QuantumSystem& sys, const Eigen::MatrixXcd& nb,
                                   const Eigen::MatrixXcd& db, const std::vector<int>& pattern,
                                   int order, const Eigen::VectorXcd& psi_ref,
                                   const Eigen::VectorXcd& phi_ref, double duration,
                                   Eigen::Index m, const LoopData& loop) {
    SingularExtremal arc;
    arc.order = order;
    arc.pattern = pattern;

    arc.control.duration = duration;
    arc.control.samples.resize(m);
    arc.feedback_at_grid.resize(m + 1);

    const double h = duration / static_cast<double>(m);
    arc.trajectory.times.resize(m + 1);
    arc.trajectory.states.reserve(m + 1);
    arc.trajectory.propagators.reserve(m + 1);
    arc.conjugate.reserve(m + 1);
    arc.states_mid.reserve(m);
    arc.conjugate_mid.reserve(m);

    const Eigen::MatrixXcd u0adj = loop.nodes[0].adjoint();
    for (Eigen::Index j = 0; j <= m; ++j) {
        const Eigen::MatrixXcd& w = loop.nodes[static_cast<size_t>(2 * j)];
        arc.trajectory.times[j] = static_cast<double>(j) * h;
        arc.trajectory.propagators.push_back(w * u0adj);
        arc.trajectory.states.push_back(w * psi_ref);
        arc.conjugate.push_back(w * phi_ref);
        arc.feedback_at_grid[j] = loop.eps_nodes[2 * j];
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::MatrixXcd& w = loop.nodes[static_cast<size_t>(2 * j + 1)];
        arc.states_mid.push_back(w * psi_ref);
        arc.conjugate_mid.push_back(w * phi_ref);
        arc.control.samples[j] = loop.eps_nodes[2 * j + 1];
    }

    arc.seed.psi0 = arc.trajectory.states.front();
    arc.seed.phi0 = arc.conjugate.front();
    arc.seed.order = order;

    const Eigen::MatrixXcd h01 = commutator(sys.a0, sys.a1);
    arc.residuals.times.resize(m);
    arc.residuals.r1.resize(m);
    arc.residuals.r2.resize(m);
    arc.residuals.r3.resize(m);
    arc.den_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::VectorXcd& ps = arc.states_mid[static_cast<size_t>(j)];
        const Eigen::VectorXcd& ph = arc.conjugate_mid[static_cast<size_t>(j)];
        arc.residuals.times[j] = (static_cast<double>(j) + 0.5) * h;
        arc.residuals.r1[j] = real_inner(ph, sys.a1 * ps);
        arc.residuals.r2[j] = real_inner(ph, h01 * ps);
        const double den = real_inner(ph, db * ps);
        arc.residuals.r3[j] = real_inner(ph, nb * ps) + arc.control.samples[j] * den;
        arc.den_min = std::min(arc.den_min, std::abs(den));
    }
    return arc;
}

// First pattern whose a1-prefixed denominator clears the floor at (psi, phi).
struct FeedbackChoice {
    std::vector<int> pattern;
    Eigen::MatrixXcd nb, db;
};

FeedbackChoice choose_pattern(const QuantumSystem& sys, int order, const Eigen::VectorXcd& psi,
                              const Eigen::VectorXcd& phi, double den_floor) {
    for (const auto& p : level_patterns(order)) {
        Eigen::MatrixXcd db = nested_commutator(sys, prefixed(1, p));
        if (std::abs(real_inner(phi, db * psi)) >= den_floor) {
            FeedbackChoice fc;
            fc.pattern = p;
            fc.db = std::move(db);
            fc.nb = nested_commutator(sys, prefixed(0, p));
            return fc;
        }
    }
    std::ostringstream os;
    os << "every order-" << (order + 1) << " feedback denominator is below the floor " << den_floor
       << " at t = 0";
    throw SingularArcTransitionError(os.str(), 0.0);
}

}  // namespace

SingularExtremal generate_singular_extremal(const QuantumSystem& sys, const SeedPair& seed,
                                            double duration, Eigen::Index num_samples,
                                            const GenerateOptions& opts) {
    validate_seed_geometry(sys, seed);
    if (!(duration > 0.0) || num_samples < 1) {
        throw ArgumentError("generate_singular_extremal: need duration > 0 and num_samples >= 1");
    }
    const double floor = opts.den_floor_rel * seed.phi0.norm();
    const FeedbackChoice fc = choose_pattern(sys, seed.order, seed.psi0, seed.phi0, floor);
    const LoopData loop = integrate_loop(sys, fc.nb, fc.db, seed.psi0, seed.phi0, duration,
                                         num_samples, floor, /*backward=*/false);
    return assemble_extremal(sys, fc.nb, fc.db, fc.pattern, seed.order, seed.psi0, seed.phi0,
                             duration, num_samples, loop);
}

ResidualSeries constraint_residuals(const QuantumSystem& sys, const SingularExtremal& arc) {
    const Eigen::Index m = arc.control.size();
    if (static_cast<Eigen::Index>(arc.states_mid.size()) != m ||
        static_cast<Eigen::Index>(arc.conjugate_mid.size()) != m) {
        throw ArgumentError("constraint_residuals: arc is missing midpoint trajectory data");
    }
    if (arc.pattern.empty()) throw ArgumentError("constraint_residuals: arc has no feedback pattern");

    const Eigen::MatrixXcd nb = nested_commutator(sys, prefixed(0, arc.pattern));
    const Eigen::MatrixXcd db = nested_commutator(sys, prefixed(1, arc.pattern));
    const Eigen::MatrixXcd h01 = commutator(sys.a0, sys.a1);

    ResidualSeries rs;
    rs.times.resize(m);
    rs.r1.resize(m);
    rs.r2.resize(m);
    rs.r3.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::VectorXcd& ps = arc.states_mid[static_cast<size_t>(j)];
        const Eigen::VectorXcd& ph = arc.conjugate_mid[static_cast<size_t>(j)];
        rs.times[j] = arc.control.mid_time(j);
        rs.r1[j] = real_inner(ph, sys.a1 * ps);
        rs.r2[j] = real_inner(ph, h01 * ps);
        rs.r3[j] = real_inner(ph, nb * ps) + arc.control.samples[j] * real_inner(ph, db * ps);
    }
    return rs;
}

WronskianSeries wronskian_residual(const QuantumSystem& sys, const ControlField& c,
                                   const Eigen::VectorXcd& psi0) {
    validate_control(c);
    require_unit(psi0, "wronskian_residual: psi0");
    if (psi0.size() != sys.dim) throw ArgumentError("wronskian_residual: psi0 dimension mismatch");

    const Eigen::Index n = sys.dim;
    const Eigen::Index rows = 2 * n - 1;
    const Eigen::Index m = c.size();

    // Frame: orthonormal complement of psi0 in R^{2N}; the sampled functions
    // live there exactly, so rows keep full information.
    Eigen::MatrixXd base(2 * n, 1);
    base.col(0) = real_stack(psi0);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(base);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(2 * n, 2 * n);
    const Eigen::MatrixXd frame = q.rightCols(rows);  // 2N x (2N-1)

    const Flow flow = propagate_flow(sys, c, psi0);

    WronskianSeries out;
    if (n == 2) {
        const Eigen::MatrixXcd h01 = commutator(sys.a0, sys.a1);
        const Eigen::MatrixXcd h001 = commutator(sys.a0, h01);
        const Eigen::MatrixXcd h101 = commutator(sys.a1, h01);
        const double s1 = std::max(1.0, sys.a1.norm());
        const double s2 = std::max(1.0, h01.norm());

        out.times.resize(m);
        out.values.resize(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            const Eigen::MatrixXcd& u = flow.mid_propagators[static_cast<size_t>(j)];
            const Eigen::VectorXcd v = u * psi0;
            const double eps = c.samples[j];
            const double s3 = std::max(1.0, h001.norm() + std::abs(eps) * h101.norm());

            Eigen::MatrixXd w(3, 3);
            w.row(0) = (frame.transpose() * real_stack(u.adjoint() * (sys.a1 * v))).transpose();
            w.row(1) = (frame.transpose() * real_stack(u.adjoint() * (-(h01 * v)))).transpose();
            w.row(2) = (frame.transpose() *
                        real_stack(u.adjoint() * ((h001 + eps * h101) * v))).transpose();

            const double scales[3] = {s1, s2, s3};
            bool dead = false;
            for (int r = 0; r < 3; ++r) {
                const double nn = w.row(r).norm();
                if (nn <= 1e-13 * scales[r]) {
                    dead = true;
                    break;
                }
                w.row(r) /= nn;
            }
            out.times[j] = c.mid_time(j);
            if (dead) {
                out.degenerate = true;
                out.values[j] = 0.0;
            } else {
                out.values[j] = std::abs(w.determinant());
            }
        }
        return out;
    }

    // Numeric mode: centered differences of the sampled coordinate functions.
    if (m < 64) {
        throw UnderResolvedError("wronskian_residual: numeric mode needs at least 64 samples");
    }
    const double dt = c.dt();
    std::vector<Eigen::MatrixXd> ders;  // ders[d] : rows x m, valid in [d, m-1-d]
    ders.emplace_back(rows, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::MatrixXcd& u = flow.mid_propagators[static_cast<size_t>(j)];
        ders[0].col(j) = frame.transpose() * real_stack(u.adjoint() * (sys.a1 * (u * psi0)));
    }
    const int dmax = static_cast<int>(rows) - 1;
    for (int d = 1; d <= dmax; ++d) {
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(rows, m);
        for (Eigen::Index j = d; j + d <= m - 1; ++j) {
            next.col(j) = (ders[static_cast<size_t>(d - 1)].col(j + 1) -
                           ders[static_cast<size_t>(d - 1)].col(j - 1)) /
                          (2.0 * dt);
        }
        ders.push_back(std::move(next));
    }

    const Eigen::Index lo = dmax;
    const Eigen::Index hi = m - 1 - dmax;
    if (hi < lo) throw UnderResolvedError("wronskian_residual: grid too coarse for derivative rows");

    out.times.resize(hi - lo + 1);
    out.values.resize(hi - lo + 1);
    for (Eigen::Index j = lo; j <= hi; ++j) {
        Eigen::MatrixXd w(rows, rows);
        bool dead = false;
        for (Eigen::Index r = 0; r < rows; ++r) {
            Eigen::VectorXd row = ders[static_cast<size_t>(r)].col(j);
            const double nn = row.norm();
            if (nn <= 1e-13 * std::max(1.0, sys.a1.norm() / std::pow(dt, static_cast<double>(r)))) {
                dead = true;
                break;
            }
            w.row(r) = row.transpose() / nn;
        }
        out.times[j - lo] = c.mid_time(j);
        if (dead) {
            out.degenerate = true;
            out.values[j - lo] = 0.0;
        } else {
            out.values[j - lo] = std::abs(w.determinant());
        }
    }
    return out;
}

bool wronskian_singular_verdict(const WronskianSeries& w, double tol) {
    if (w.values.size() == 0) return false;
    std::vector<double> v(w.values.data(), w.values.data() + w.values.size());
    std::sort(v.begin(), v.end());
    const size_t idx = static_cast<size_t>(0.9 * static_cast<double>(v.size() - 1));
    return v[idx] < tol;
}

SurfaceResidual singular_surface_residual(const QuantumSystem& sys, const Eigen::VectorXcd& psi,
                                          const Eigen::VectorXcd& psif, int order,
                                          double threshold_rel) {
    require_unit(psi, "singular_surface_residual: psi");
    require_unit(psif, "singular_surface_residual: psif");
    const Eigen::VectorXcd g = 2.0 * psif.dot(psi) * psif;

    SurfaceResidual sr;
    if (g.norm() <= 1e-14) {
        sr.residual = 0.0;
        sr.kinematic = true;
        return sr;
    }
    const Eigen::VectorXcd gt = tangent_project(psi, g).direction;
    const auto basis = singular_subspace_basis(sys, psi, order, threshold_rel);
    Eigen::VectorXcd proj = Eigen::VectorXcd::Zero(psi.size());
    for (const auto& b : basis) proj += real_inner(b, gt) * b;
    sr.residual = (gt - proj).norm() / g.norm();
    sr.kinematic = false;
    return sr;
}

SingularExtremal backward_singular_from_surface(const QuantumSystem& sys,
                                                const Eigen::VectorXcd& psi_T,
                                                const Eigen::VectorXcd& psif, int order,
                                                double duration, Eigen::Index num_samples,
                                                const BackwardOptions& opts) {
    if (!(duration > 0.0) || num_samples < 1) {
        throw ArgumentError("backward_singular_from_surface: need duration > 0 and num_samples >= 1");
    }
    const SurfaceResidual sr =
        singular_surface_residual(sys, psi_T, psif, order, opts.generate.threshold_rel);
    if (sr.kinematic) {
        throw NotOnSurfaceError("backward_singular_from_surface: gradient vanishes at psi_T");
    }
    if (sr.residual > opts.surface_tol) {
        std::ostringstream os;
        os << "backward_singular_from_surface: surface residual " << sr.residual
           << " exceeds tolerance " << opts.surface_tol;
        throw NotOnSurfaceError(os.str());
    }

    const Eigen::VectorXcd phi_T = 2.0 * psif.dot(psi_T) * psif;
    const double floor = opts.generate.den_floor_rel * phi_T.norm();
    const FeedbackChoice fc = choose_pattern(sys, order, psi_T, phi_T, floor);
    const LoopData loop = integrate_loop(sys, fc.nb, fc.db, psi_T, phi_T, duration, num_samples,
                                         floor, /*backward=*/true);
    return assemble_extremal(sys, fc.nb, fc.db, fc.pattern, order, psi_T, phi_T, duration,
                             num_samples, loop);
}

}  // namespace qcl
