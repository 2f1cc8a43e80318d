#include "sparsepick/sparse_coder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sparsepick/errors.hpp"
#include "sparsepick/parallel.hpp"

namespace sparsepick {

std::string to_string(InitStrategy init) {
    switch (init) {
        case InitStrategy::SampledSpectra: return "sampled";
        case InitStrategy::RandomCentered: return "random";
        case InitStrategy::RandomMixture: return "mixture";
        case InitStrategy::LeadingSingular: return "svd";
    }
    return "unknown";
}

InitStrategy init_strategy_from_string(const std::string& name) {
    if (name == "sampled") return InitStrategy::SampledSpectra;
    if (name == "random") return InitStrategy::RandomCentered;
    if (name == "mixture") return InitStrategy::RandomMixture;
    if (name == "svd") return InitStrategy::LeadingSingular;
    throw InvalidParameter("unknown initialization '" + name + "' (expected svd|sampled|random|mixture)");
}

void HyperParams::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidParameter("alpha must be >= 0");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidParameter("beta must be > 0");
    if (!(norm_bound > 0.0) || !std::isfinite(norm_bound)) throw InvalidParameter("norm bound C must be > 0");
    if (!(rel_tol > 0.0)) throw InvalidParameter("rel_tol must be > 0");
    if (max_iters < 1) throw InvalidParameter("max_iters must be >= 1");
    if (num_atoms < 0) throw InvalidParameter("num_atoms must be >= 0");
    if (dead_atom_patience < 0) throw InvalidParameter("dead_atom_patience must be >= 0");
}

Index HyperParams::resolve_num_atoms(Index length, Index count) const {
    const Index k = num_atoms > 0 ? num_atoms : std::min(length, 2 * count);
    if (k < 1 || k > length) {
        throw InvalidParameter("num_atoms must lie in [1, L=" + std::to_string(length) + "], got " +
                               std::to_string(k));
    }
    return k;
}

double residual(const Matrix& spectra, const Matrix& atoms, const Matrix& codes) {
    return (spectra - atoms * codes).squaredNorm();
}

double objective(const Matrix& spectra, const Dictionary& dictionary, const CodeMatrix& codes, double alpha,
                 double beta) {
    const Matrix& b = dictionary.atoms();
    const Matrix& s = codes.codes();
    if (b.rows() != spectra.rows() || b.cols() != s.rows() || s.cols() != spectra.cols()) {
        throw DimensionMismatch("objective: X is " + std::to_string(spectra.rows()) + "x" +
                                std::to_string(spectra.cols()) + ", B is " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ", S is " + std::to_string(s.rows()) + "x" +
                                std::to_string(s.cols()));
    }
    return 0.5 * residual(spectra, b, s) + alpha * s.cwiseAbs().sum() + beta * s.squaredNorm();
}

double objective(const SpectraMatrix& spectra, const Dictionary& dictionary, const CodeMatrix& codes,
                 double alpha, double beta) {
    return objective(spectra.data(), dictionary, codes, alpha, beta);
}

namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

/// Value of 1/2 s'Hs - c's + alpha|s|_1 restricted to the active coordinates.
double reduced_objective(const Matrix& h_aa, const Vector& c_a, const Vector& s_a, double alpha) {
    return 0.5 * s_a.dot(h_aa * s_a) - c_a.dot(s_a) + alpha * s_a.lpNorm<1>();
}

Vector solve_active_system(const Matrix& h_aa, const Vector& rhs, bool& damped) {
    Eigen::LDLT<Matrix> ldlt(h_aa);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        Vector z = ldlt.solve(rhs);
        const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
        if (z.allFinite() && (h_aa * z - rhs).cwiseAbs().maxCoeff() <= 1e-9 * scale) return z;
    }
    damped = true;
    const double ridge = 1e-10 * std::max(1.0, h_aa.diagonal().cwiseAbs().maxCoeff());
    Matrix damped_h = h_aa;
    damped_h.diagonal().array() += ridge;
    return Eigen::LDLT<Matrix>(damped_h).solve(rhs);
}

/// Cyclic coordinate descent used only if the active-set search stalls.
void polish_coordinate_descent(const Matrix& h, const Vector& c, double alpha, Vector& s, double tol) {
    Vector g = h * s - c;
    for (int sweep = 0; sweep < 100000; ++sweep) {
        double worst = 0.0;
        for (Index j = 0; j < s.size(); ++j) {
            const double hjj = h(j, j);
            const double rho = hjj * s(j) - g(j);
            double next = 0.0;
            if (rho > alpha) next = (rho - alpha) / hjj;
            if (rho < -alpha) next = (rho + alpha) / hjj;
            const double delta = next - s(j);
            if (delta != 0.0) {
                g += h.col(j) * delta;
                s(j) = next;
            }
            const double viol = s(j) != 0.0 ? std::abs(g(j) + alpha * sign_of(s(j)))
                                             : std::max(0.0, std::abs(g(j)) - alpha);
            worst = std::max(worst, viol);
        }
        if (worst <= tol) return;
    }
}

}  // namespace

Vector solve_elastic_net(const Matrix& hessian, const Vector& correlation, double alpha, bool* damped) {
    const Index k = correlation.size();
    const double tol = 1e-10 * std::max(1.0, correlation.cwiseAbs().maxCoeff());
    bool was_damped = false;

    Vector s = Vector::Zero(k);
    std::vector<int> theta(static_cast<std::size_t>(k), 0);
    std::vector<Index> active;
    Vector g = -correlation;  // gradient of the smooth part, H s - c

    auto refresh_gradient = [&] {
        g = -correlation;
        for (Index j : active) g += hessian.col(j) * s(j);
    };
    auto nonzero_optimal = [&] {
        for (Index j : active) {
            if (std::abs(g(j) + alpha * theta[j]) > tol) return false;
        }
        return true;
    };

    const int max_outer = static_cast<int>(4 * k + 50);
    const int max_inner = static_cast<int>(4 * k + 50);
    bool stalled = false;

    for (int outer = 0; outer < max_outer && !stalled; ++outer) {
        // Most violating zero coordinate; ties resolve to the lowest index.
        Index pick = -1;
        double best = alpha + tol;
        for (Index j = 0; j < k; ++j) {
            if (s(j) == 0.0 && theta[j] == 0 && std::abs(g(j)) > best) {
                best = std::abs(g(j));
                pick = j;
            }
        }
        if (pick < 0) {
            if (nonzero_optimal()) break;
        } else {
            active.push_back(pick);
            std::sort(active.begin(), active.end());
            theta[pick] = g(pick) > 0.0 ? -1 : 1;
        }

        for (int inner = 0; inner < max_inner; ++inner) {
            const auto n = static_cast<Index>(active.size());
            Matrix h_aa(n, n);
            Vector c_a(n), s_a(n), signs(n);
            for (Index a = 0; a < n; ++a) {
                c_a(a) = correlation(active[a]);
                s_a(a) = s(active[a]);
                signs(a) = theta[active[a]];
                for (Index b = 0; b < n; ++b) h_aa(a, b) = hessian(active[a], active[b]);
            }
            const Vector target = solve_active_system(h_aa, c_a - alpha * signs, was_damped);

            // Discrete line search over the target and every zero crossing on the way.
            double best_obj = reduced_objective(h_aa, c_a, target, alpha);
            Vector best_point = target;
            const double current_obj = reduced_objective(h_aa, c_a, s_a, alpha);
            for (Index a = 0; a < n; ++a) {
                if (s_a(a) != 0.0 && sign_of(target(a)) != sign_of(s_a(a))) {
                    const double t = s_a(a) / (s_a(a) - target(a));
                    Vector point = s_a + t * (target - s_a);
                    point(a) = 0.0;
                    const double obj = reduced_objective(h_aa, c_a, point, alpha);
                    if (obj < best_obj) {
                        best_obj = obj;
                        best_point = std::move(point);
                    }
                }
            }
            if (best_obj > current_obj + 1e-14 * std::max(1.0, std::abs(current_obj))) {
                stalled = true;
                break;
            }

            std::vector<Index> kept;
            for (Index a = 0; a < n; ++a) {
                const Index j = active[a];
                s(j) = best_point(a);
                theta[j] = sign_of(s(j));
                if (s(j) != 0.0) kept.push_back(j);
            }
            active = std::move(kept);
            refresh_gradient();
            if (nonzero_optimal()) break;
            if (inner + 1 == max_inner) stalled = true;
        }
    }

    refresh_gradient();
    double worst = 0.0;
    for (Index j = 0; j < k; ++j) {
        worst = std::max(worst, s(j) != 0.0 ? std::abs(g(j) + alpha * sign_of(s(j)))
                                            : std::max(0.0, std::abs(g(j)) - alpha));
    }
    if (stalled || worst > tol) polish_coordinate_descent(hessian, correlation, alpha, s, tol);

    if (damped) *damped = was_damped;
    return s;
}

CodeMatrix solve_codes(const Matrix& spectra, const Dictionary& dictionary, double alpha, double beta, int jobs,
                       SolveDiagnostics* diagnostics) {
    if (!(beta > 0.0)) throw InvalidParameter("beta must be > 0 for a strictly convex code problem");
    if (!(alpha >= 0.0)) throw InvalidParameter("alpha must be >= 0");
    const Matrix& b = dictionary.atoms();
    if (b.rows() != spectra.rows()) {
        throw DimensionMismatch("solve_codes: dictionary has " + std::to_string(b.rows()) + " rows, spectra have " +
                                std::to_string(spectra.rows()));
    }
    Matrix hessian = b.transpose() * b;
    hessian.diagonal().array() += 2.0 * beta;
    const Matrix correlations = b.transpose() * spectra;

    Matrix codes(b.cols(), spectra.cols());
    std::vector<char> damped(static_cast<std::size_t>(spectra.cols()), 0);
    parallel_for(static_cast<std::size_t>(spectra.cols()), jobs, [&](std::size_t r) {
        bool d = false;
        codes.col(static_cast<Index>(r)) = solve_elastic_net(hessian, correlations.col(static_cast<Index>(r)), alpha, &d);
        damped[r] = d;
    });
    if (diagnostics) {
        diagnostics->damped_columns.clear();
        for (std::size_t r = 0; r < damped.size(); ++r)
            if (damped[r]) diagnostics->damped_columns.push_back(static_cast<Index>(r));
    }
    return CodeMatrix(std::move(codes));
}

double kkt_violation(const Vector& x, const Matrix& atoms, const Vector& s, double alpha, double beta) {
    const Vector g = atoms.transpose() * (x - atoms * s) - 2.0 * beta * s;
    double worst = 0.0;
    for (Index j = 0; j < s.size(); ++j) {
        const double v = s(j) != 0.0 ? std::abs(g(j) - alpha * sign_of(s(j))) : std::max(0.0, std::abs(g(j)) - alpha);
        worst = std::max(worst, v);
    }
    return worst;
}

std::vector<Index> active_atoms(const CodeMatrix& codes) { return codes.active_rows(kActivityEps); }

namespace {

void project_to_ball(Eigen::Ref<Vector> v, double bound) {
    const double sq = v.squaredNorm();
    if (sq > bound) v *= std::sqrt(bound / sq);
}

Vector random_direction(std::mt19937_64& rng, Index length, double norm) {
    std::uniform_real_distribution<double> uniform(-0.5, 0.5);
    Vector v(length);
    for (Index i = 0; i < length; ++i) v(i) = uniform(rng);
    v.array() -= v.mean();
    const double n = v.norm();
    if (n > 0.0) v *= norm / n;
    return v;
}

}  // namespace

Dictionary initial_dictionary(const Matrix& spectra, const HyperParams& hp) {
    hp.validate();
    const Index length = spectra.rows();
    const Index count = spectra.cols();
    const Index k = hp.resolve_num_atoms(length, count);
    const double radius = std::sqrt(hp.norm_bound);
    std::mt19937_64 rng(hp.seed);
    Matrix atoms(length, k);

    if (hp.init == InitStrategy::RandomCentered) {
        for (Index j = 0; j < k; ++j) atoms.col(j) = random_direction(rng, length, radius);
        return Dictionary(std::move(atoms), hp.norm_bound);
    }

    if (hp.init == InitStrategy::LeadingSingular) {
        // Directions shared by many spectra come first; sparsity then rotates them towards
        // class-like atoms instead of the per-spectrum atoms a column seed tends to keep.
        const Eigen::BDCSVD<Matrix> svd(spectra, Eigen::ComputeThinU);
        const Vector& sv = svd.singularValues();
        Index j = 0;
        for (; j < k && j < sv.size() && sv(j) > 1e-12 * std::max(sv(0), 1e-300); ++j) {
            Vector u = svd.matrixU().col(j);
            if (u.sum() < 0.0) u = -u;
            atoms.col(j) = radius * u;
        }
        for (; j < k; ++j) atoms.col(j) = random_direction(rng, length, radius);
        return Dictionary(std::move(atoms), hp.norm_bound);
    }

    if (hp.init == InitStrategy::RandomMixture) {
        // Flat Dirichlet weights: each atom is a noisy average that still leans towards some spectra.
        std::exponential_distribution<double> weight(1.0);
        for (Index j = 0; j < k; ++j) {
            Vector w(count);
            for (Index r = 0; r < count; ++r) w(r) = weight(rng);
            atoms.col(j) = spectra * (w / w.sum());
            const double norm = atoms.col(j).norm();
            if (norm > 0.0) {
                atoms.col(j) *= radius / norm;
            } else {
                atoms.col(j) = random_direction(rng, length, radius);
            }
        }
        return Dictionary(std::move(atoms), hp.norm_bound);
    }

    // Whole shuffled passes over the columns, so every spectrum is used once before any repeats.
    std::vector<Index> order;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index j = 0; j < k; ++j) {
        if (order.empty()) {
            order.resize(static_cast<std::size_t>(count));
            std::iota(order.begin(), order.end(), Index{0});
            std::shuffle(order.begin(), order.end(), rng);
            std::reverse(order.begin(), order.end());
        }
        const Index source = order.back();
        order.pop_back();
        const double norm = spectra.col(source).norm();
        if (norm > 0.0) {
            atoms.col(j) = spectra.col(source);
            const double jitter = 1e-3 * norm;
            for (Index i = 0; i < length; ++i) atoms(i, j) += jitter * normal(rng);
            // Rescaled onto the sphere: a spectrum far inside the ball would otherwise
            // start with correlations below alpha and every code would vanish.
            atoms.col(j) *= radius / atoms.col(j).norm();
        } else {
            atoms.col(j) = random_direction(rng, length, radius);
        }
        project_to_ball(atoms.col(j), hp.norm_bound);
    }
    return Dictionary(std::move(atoms), hp.norm_bound);
}

FitResult fit(const SpectraMatrix& spectra, const HyperParams& hp, int jobs) {
    hp.validate();
    const Matrix& x = spectra.data();
    const Index k = hp.resolve_num_atoms(spectra.length(), spectra.count());

    Dictionary dictionary = initial_dictionary(x, hp);
    CodeMatrix codes(Matrix::Zero(k, x.cols()));
    FitResult result{dictionary, codes, {}, {}, 0, false, 0, {}};
    std::vector<int> idle(static_cast<std::size_t>(k), 0);

    for (int iter = 1; iter <= hp.max_iters; ++iter) {
        result.iterations_run = iter;
        SolveDiagnostics diag;
        codes = solve_codes(x, dictionary, hp.alpha, hp.beta, jobs, &diag);
        result.damped_columns = std::move(diag.damped_columns);

        const Matrix& s = codes.codes();
        if ((s.array() == 0.0).all()) {
            // Zero codes are a fixed point: the basis step has nothing to fit.
            const double f = 0.5 * x.squaredNorm();
            result.objective_history.push_back(f);
            result.converged = true;
            break;
        }

        Dictionary updated = update_basis(x, codes, hp.norm_bound, dictionary);
        if (residual(x, updated.atoms(), s) <= residual(x, dictionary.atoms(), s)) {
            dictionary = std::move(updated);
        }

        const double f = objective(x, dictionary, codes, hp.alpha, hp.beta);
        if (!std::isfinite(f)) throw NumericalError(iter, "objective is not finite");
        result.objective_history.push_back(f);

        if (hp.dead_atom_patience > 0) {
            std::vector<Index> dead;
            for (Index j = 0; j < k; ++j) {
                const bool used = (s.row(j).array() != 0.0).any();
                idle[static_cast<std::size_t>(j)] = used ? 0 : idle[static_cast<std::size_t>(j)] + 1;
                if (idle[static_cast<std::size_t>(j)] >= hp.dead_atom_patience) dead.push_back(j);
            }
            if (!dead.empty()) {
                // Dead atoms carry zero codes, so replacing them leaves the objective unchanged.
                const Vector column_error = (x - dictionary.atoms() * s).colwise().squaredNorm().transpose();
                std::vector<Index> worst(static_cast<std::size_t>(x.cols()));
                std::iota(worst.begin(), worst.end(), Index{0});
                std::stable_sort(worst.begin(), worst.end(),
                                 [&](Index a, Index b) { return column_error(a) > column_error(b); });
                Matrix atoms = dictionary.atoms();
                for (std::size_t d = 0; d < dead.size(); ++d) {
                    const Index j = dead[d];
                    atoms.col(j) = x.col(worst[d % worst.size()]);
                    project_to_ball(atoms.col(j), hp.norm_bound);
                    idle[static_cast<std::size_t>(j)] = 0;
                }
                result.reseeded_atoms += static_cast<int>(dead.size());
                dictionary = Dictionary(std::move(atoms), hp.norm_bound);
            }
        }

        const auto& h = result.objective_history;
        if (h.size() >= 2 && h[h.size() - 2] - f <= hp.rel_tol * std::abs(h[h.size() - 2])) {
            result.converged = true;
            break;
        }
    }

    result.dictionary = std::move(dictionary);
    result.active_set = active_atoms(codes);
    result.codes = std::move(codes);
    return result;
}

}  // namespace sparsepick
