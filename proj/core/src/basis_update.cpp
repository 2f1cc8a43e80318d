#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sparsepick/errors.hpp"
#include "sparsepick/sparse_coder.hpp"

namespace sparsepick {
namespace {

/// Dual of min ||X - B S||^2 s.t. ||B_j||^2 <= C over the multipliers lambda >= 0:
///   D(lambda) = -tr(Y M^-1 Y') - C sum(lambda),  M = S S' + diag(lambda),  Y = X S'.
/// Its gradient is ||B_j||^2 - C with B = Y M^-1, and its Hessian is
/// -2 (B'B) o M^-1 (elementwise product), so a projected Newton ascent applies.
class NormConstrainedDual {
public:
    NormConstrainedDual(const Matrix& gram, const Matrix& cross, double bound)
        : gram_(gram), cross_(cross), bound_(bound),
          floor_(1e-10 * std::max(1e-300, gram.trace() / static_cast<double>(gram.rows()))) {}

    struct Point {
        bool ok = false;
        double value = 0.0;
        Matrix basis;
        Matrix inverse;
        Vector gradient;
    };

    Point evaluate(const Vector& lambda) const {
        Point p;
        const Index k = gram_.rows();
        Matrix m = gram_;
        m.diagonal() += lambda;
        m.diagonal().array() += floor_;
        Eigen::LLT<Matrix> llt(m);
        if (llt.info() != Eigen::Success) return p;
        p.inverse = llt.solve(Matrix::Identity(k, k));
        p.basis = cross_ * p.inverse;
        p.value = -cross_.cwiseProduct(p.basis).sum() - bound_ * lambda.sum();
        p.gradient = p.basis.colwise().squaredNorm().transpose().array() - bound_;
        p.ok = p.basis.allFinite() && std::isfinite(p.value);
        return p;
    }

    Vector maximize() const {
        const Index k = gram_.rows();
        Vector lambda = Vector::Zero(k);
        Point current = evaluate(lambda);
        const double tol = 1e-10 * bound_;

        for (int iter = 0; iter < 100 && current.ok; ++iter) {
            const Vector& g = current.gradient;
            const Vector projected = (lambda + g).cwiseMax(0.0);
            double violation = 0.0;
            for (Index i = 0; i < k; ++i) {
                violation = std::max(violation, lambda(i) > 0.0 ? std::abs(g(i)) : std::max(0.0, g(i)));
            }
            if (violation <= tol) break;

            // Projected Newton: multipliers at (or within eps of) zero whose gradient
            // pushes them negative are moved along the gradient only.
            const double eps = std::min(1e-3 * bound_, (lambda - projected).norm());
            std::vector<Index> free;
            for (Index i = 0; i < k; ++i) {
                if (!(lambda(i) <= eps && g(i) < 0.0)) free.push_back(i);
            }
            Vector direction = g;
            if (!free.empty()) {
                const Matrix curvature =
                    2.0 * (current.basis.transpose() * current.basis).cwiseProduct(current.inverse);
                const auto nf = static_cast<Index>(free.size());
                Matrix h(nf, nf);
                Vector gf(nf);
                for (Index a = 0; a < nf; ++a) {
                    gf(a) = g(free[a]);
                    for (Index b = 0; b < nf; ++b) h(a, b) = curvature(free[a], free[b]);
                }
                h.diagonal().array() += 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
                Eigen::LDLT<Matrix> ldlt(h);
                const Vector step = ldlt.solve(gf);
                if (ldlt.info() == Eigen::Success && step.allFinite() && step.dot(gf) > 0.0) {
                    for (Index a = 0; a < nf; ++a) direction(free[a]) = step(a);
                }
            }

            bool accepted = false;
            double t = 1.0;
            for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
                const Vector trial = (lambda + t * direction).cwiseMax(0.0);
                Point next = evaluate(trial);
                if (!next.ok) continue;
                if (next.value >= current.value + 1e-4 * g.dot(trial - lambda)) {
                    accepted = next.value > current.value || (trial - lambda).norm() == 0.0;
                    lambda = trial;
                    current = std::move(next);
                    break;
                }
            }
            if (!accepted) break;
            // Heavy backtracking means M is close to singular (more used atoms than
            // spectra); the dual is 1/lambda-shaped there and the primal sweeps below finish faster.
            if (t < 1.0 / 64.0) break;
        }
        return lambda;
    }

    Matrix basis_for(const Vector& lambda) const { return evaluate(lambda).basis; }

private:
    const Matrix& gram_;
    const Matrix& cross_;
    double bound_;
    double floor_;
};

/// Exact block-coordinate sweeps on the primal: each column in turn gets its
/// constrained least-squares optimum with the others fixed. Never increases the residual.
void polish_columns(const Matrix& spectra, const Matrix& s_used, const Matrix& gram, double norm_bound,
                    Matrix& basis) {
    Matrix resid = spectra - basis * s_used;
    double previous = resid.squaredNorm();
    for (int sweep = 0; sweep < 5000; ++sweep) {
        for (Index a = 0; a < basis.cols(); ++a) {
            resid.noalias() += basis.col(a) * s_used.row(a);
            Vector b = resid * s_used.row(a).transpose() / gram(a, a);
            const double sq = b.squaredNorm();
            if (sq > norm_bound) b *= std::sqrt(norm_bound / sq);
            basis.col(a) = b;
            resid.noalias() -= basis.col(a) * s_used.row(a);
        }
        const double now = resid.squaredNorm();
        if (!(previous - now > 1e-13 * previous)) break;
        previous = now;
    }
}

Dictionary update_basis_impl(const Matrix& spectra, const CodeMatrix& codes, double norm_bound,
                             const Matrix* previous) {
    if (!(norm_bound > 0.0) || !std::isfinite(norm_bound)) throw InvalidParameter("norm bound C must be > 0");
    const Matrix& s = codes.codes();
    if (s.cols() != spectra.cols()) {
        throw DimensionMismatch("update_basis: S has " + std::to_string(s.cols()) + " columns, X has " +
                                std::to_string(spectra.cols()));
    }
    if (previous && (previous->rows() != spectra.rows() || previous->cols() != s.rows())) {
        throw DimensionMismatch("update_basis: previous dictionary shape does not match X and S");
    }

    std::vector<Index> used;
    for (Index j = 0; j < s.rows(); ++j) {
        if ((s.row(j).array() != 0.0).any()) used.push_back(j);
    }
    if (used.empty()) throw InvalidParameter("update_basis: code matrix has no nonzero entry");

    const auto k = static_cast<Index>(used.size());
    Matrix s_used(k, s.cols());
    for (Index a = 0; a < k; ++a) s_used.row(a) = s.row(used[a]);
    const Matrix gram = s_used * s_used.transpose();
    const Matrix cross = spectra * s_used.transpose();

    const NormConstrainedDual dual(gram, cross, norm_bound);
    Matrix solved = dual.basis_for(dual.maximize());

    Matrix atoms = previous ? *previous : Matrix::Zero(spectra.rows(), s.rows());
    for (Index j = 0; j < atoms.cols(); ++j) {
        const double sq = atoms.col(j).squaredNorm();
        if (sq > norm_bound) atoms.col(j) *= std::sqrt(norm_bound / sq);
    }
    for (Index a = 0; a < k; ++a) {
        const double sq = solved.col(a).squaredNorm();
        if (sq > norm_bound) solved.col(a) *= std::sqrt(norm_bound / sq);
    }
    polish_columns(spectra, s_used, gram, norm_bound, solved);
    for (Index a = 0; a < k; ++a) atoms.col(used[a]) = solved.col(a);
    return Dictionary(std::move(atoms), norm_bound);
}

}  // namespace

Dictionary update_basis(const Matrix& spectra, const CodeMatrix& codes, double norm_bound) {
    return update_basis_impl(spectra, codes, norm_bound, nullptr);
}

Dictionary update_basis(const Matrix& spectra, const CodeMatrix& codes, double norm_bound,
                        const Dictionary& previous) {
    return update_basis_impl(spectra, codes, norm_bound, &previous.atoms());
}

}  // namespace sparsepick
