#include "linalg.hpp"

#include <cmath>
#include <sstream>

namespace qcl {

void require_square(const Eigen::MatrixXcd& m, const char* name) {
    if (m.rows() == 0 || m.rows() != m.cols()) {
        std::ostringstream os;
        os << name << ": expected a nonempty square matrix, got " << m.rows() << "x" << m.cols();
        throw ArgumentError(os.str());
    }
}

void require_finite(const Eigen::MatrixXcd& m, const char* name) {
    if (!m.allFinite()) throw ArgumentError(std::string(name) + ": contains non-finite entries");
}

void require_hermitian(const Eigen::MatrixXcd& m, const char* name, double tol) {
    require_square(m, name);
    require_finite(m, name);
    const double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (dev > tol) {
        std::ostringstream os;
        os << name << ": not Hermitian (max |m - m^dag| = " << dev << ", tol " << tol << ")";
        throw ValidationError(os.str());
    }
}

void require_skew_hermitian(const Eigen::MatrixXcd& m, const char* name, double tol) {
    require_square(m, name);
    require_finite(m, name);
    const double dev = (m + m.adjoint()).cwiseAbs().maxCoeff();
    if (dev > tol) {
        std::ostringstream os;
        os << name << ": not skew-Hermitian (max |m + m^dag| = " << dev << ", tol " << tol << ")";
        throw ValidationError(os.str());
    }
}

void require_unit(const Eigen::VectorXcd& v, const char* name, double tol) {
    if (v.size() == 0 || !v.allFinite()) {
        throw ArgumentError(std::string(name) + ": expected a finite nonempty vector");
    }
    const double n = v.norm();
    if (std::abs(n - 1.0) > tol) {
        std::ostringstream os;
        os << name << ": expected a unit vector (norm = " << n << ", tol " << tol << ")";
        throw ArgumentError(os.str());
    }
}

QuantumSystem QuantumSystem::from_hermitian(const Eigen::MatrixXcd& h0, const Eigen::MatrixXcd& h1) {
    require_hermitian(h0, "h0");
    require_hermitian(h1, "h1");
    if (h0.rows() != h1.rows()) throw ArgumentError("h0 and h1 have different dimensions");
    QuantumSystem sys;
    sys.dim = h0.rows();
    sys.a0 = Complex(0.0, -1.0) * h0;
    sys.a1 = Complex(0.0, -1.0) * h1;
    return sys;
}

QuantumSystem QuantumSystem::from_skew(const Eigen::MatrixXcd& a0, const Eigen::MatrixXcd& a1) {
    require_skew_hermitian(a0, "a0");
    require_skew_hermitian(a1, "a1");
    if (a0.rows() != a1.rows()) throw ArgumentError("a0 and a1 have different dimensions");
    QuantumSystem sys;
    sys.dim = a0.rows();
    sys.a0 = a0;
    sys.a1 = a1;
    return sys;
}

double real_inner(const Eigen::VectorXcd& v, const Eigen::VectorXcd& w) {
    if (v.size() != w.size()) throw ArgumentError("real_inner: size mismatch");
    return v.dot(w).real();  // Eigen's dot conjugates the first argument
}

Eigen::VectorXd real_stack(const Eigen::VectorXcd& v) {
    Eigen::VectorXd out(2 * v.size());
    out.head(v.size()) = v.real();
    out.tail(v.size()) = v.imag();
    return out;
}

Eigen::VectorXd skew_coords(const Eigen::MatrixXcd& m) {
    const Eigen::Index n = m.rows();
    Eigen::VectorXd out(n * n);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) out[k++] = m(i, i).imag();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            out[k++] = m(i, j).real();
            out[k++] = m(i, j).imag();
        }
    }
    return out;
}

Eigen::MatrixXcd commutator(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
        throw ArgumentError("commutator: operands must be square and same size");
    }
    return a * b - b * a;
}

Eigen::MatrixXcd nested_commutator(const QuantumSystem& sys, const std::vector<int>& indices) {
    if (indices.empty()) throw ArgumentError("nested_commutator: empty index list");
    for (int i : indices) {
        if (i != 0 && i != 1) throw ArgumentError("nested_commutator: indices must be 0 or 1");
    }
    Eigen::MatrixXcd acc = indices.back() == 0 ? sys.a0 : sys.a1;
    for (auto it = indices.rbegin() + 1; it != indices.rend(); ++it) {
        acc = commutator(*it == 0 ? sys.a0 : sys.a1, acc);
    }
    return acc;
}

namespace {

// Vectorize a complex matrix into R^{2 n^2} so real-linear independence of
// matrices becomes column independence.
Eigen::VectorXd vec_real(const Eigen::MatrixXcd& m) {
    Eigen::VectorXd out(2 * m.size());
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            out[k++] = m(i, j).real();
            out[k++] = m(i, j).imag();
        }
    }
    return out;
}

// Reduce a candidate list to a real-linearly independent subset. Rank comes
// from the SVD (relative threshold); the representatives are the first
// `rank` pivot columns of a column-pivoted QR, so callers get actual
// candidates back rather than mixtures.
std::vector<Eigen::MatrixXcd> independent_subset(const std::vector<Eigen::MatrixXcd>& cands,
                                                 double threshold_rel) {
    if (cands.empty()) return {};
    Eigen::MatrixXd cols(vec_real(cands[0]).size(), static_cast<Eigen::Index>(cands.size()));
    for (size_t i = 0; i < cands.size(); ++i) cols.col(static_cast<Eigen::Index>(i)) = vec_real(cands[i]);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cols);
    const double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
    if (smax <= 0.0) return {};
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()[i] > threshold_rel * smax) ++rank;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(cols);
    std::vector<Eigen::MatrixXcd> out;
    out.reserve(static_cast<size_t>(rank));
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = 0; i < rank; ++i) out.push_back(cands[static_cast<size_t>(perm[i])]);
    return out;
}

}  // namespace

std::vector<std::vector<Eigen::MatrixXcd>> bracket_space_chain(const QuantumSystem& sys,
                                                               int max_level, double threshold_rel) {
    if (max_level < 1) throw ArgumentError("bracket_space_chain: level must be >= 1");
    if (max_level > kMaxBracketOrder + 1) {
        std::ostringstream os;
        os << "bracket_space_chain: level " << max_level << " above cap " << (kMaxBracketOrder + 1);
        throw OrderCapError(os.str());
    }
    std::vector<std::vector<Eigen::MatrixXcd>> chain;
    chain.push_back(independent_subset({sys.a1}, threshold_rel));
    for (int level = 2; level <= max_level; ++level) {
        std::vector<Eigen::MatrixXcd> cands;
        for (const auto& b : chain.back()) {
            cands.push_back(commutator(sys.a0, b));
            cands.push_back(commutator(sys.a1, b));
        }
        chain.push_back(independent_subset(cands, threshold_rel));
    }
    return chain;
}

std::vector<Eigen::MatrixXcd> bracket_space_basis(const QuantumSystem& sys, int level,
                                                  double threshold_rel) {
    return bracket_space_chain(sys, level, threshold_rel).back();
}

TangentVector tangent_project(const Eigen::VectorXcd& base, const Eigen::VectorXcd& v) {
    require_unit(base, "tangent_project: base");
    if (base.size() != v.size()) throw ArgumentError("tangent_project: size mismatch");
    TangentVector t;
    t.base = base;
    t.direction = v - real_inner(base, v) * base;
    return t;
}

Eigen::MatrixXcd hermitian_to_generator(const Eigen::MatrixXcd& h) {
    require_hermitian(h, "hermitian_to_generator: input");
    return Complex(0.0, -1.0) * h;
}

Eigen::VectorXcd random_unit_state(Eigen::Index dim, std::mt19937_64& rng) {
    if (dim < 1) throw ArgumentError("random_unit_state: dim must be >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXcd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        v[i] = Complex(re, im);
    }
    const double n = v.norm();
    if (n == 0.0) return random_unit_state(dim, rng);
    return v / n;
}

}  // namespace qcl
