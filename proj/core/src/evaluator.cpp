#include "sparsepick/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <optional>
#include <tuple>

#include "sparsepick/errors.hpp"
#include "sparsepick/parallel.hpp"

namespace sparsepick {

Score score(const std::vector<Index>& found, const std::vector<Index>& truth, int match_tol) {
    if (match_tol < 0) throw InvalidParameter("match_tol must be >= 0");
    // (distance, truth position, found position, found slot, truth slot)
    std::vector<std::tuple<Index, Index, Index, std::size_t, std::size_t>> pairs;
    for (std::size_t f = 0; f < found.size(); ++f) {
        for (std::size_t t = 0; t < truth.size(); ++t) {
            const Index d = std::abs(found[f] - truth[t]);
            if (d <= match_tol) pairs.emplace_back(d, truth[t], found[f], f, t);
        }
    }
    std::sort(pairs.begin(), pairs.end());

    Score s;
    s.match_tol = match_tol;
    std::vector<char> found_used(found.size(), 0), truth_used(truth.size(), 0);
    for (const auto& [d, tpos, fpos, f, t] : pairs) {
        if (found_used[f] || truth_used[t]) continue;
        found_used[f] = truth_used[t] = 1;
        s.matched.emplace_back(fpos, tpos);
    }
    std::sort(s.matched.begin(), s.matched.end());
    const auto m = static_cast<double>(s.matched.size());
    s.accuracy = truth.empty() ? (found.empty() ? 1.0 : 0.0) : m / static_cast<double>(truth.size());
    s.false_positives = static_cast<Index>(found.size() - s.matched.size());
    return s;
}

Score score(const LineSpectrum& found, const SimGroundTruth& truth, int match_tol) {
    return score(found.positions(), truth.union_positions, match_tol);
}

LineSpectrum mean_spectrum_baseline(const SpectraMatrix& spectra, const PickerParams& p) {
    const Vector mean = spectra.data().rowwise().mean();
    if (mean.cwiseAbs().maxCoeff() == 0.0) return LineSpectrum({}, mean.size());
    return pick_vector(mean, p);
}

PipelineResult run_pipeline(const SpectraMatrix& spectra, const HyperParams& hp, const PickerParams& p, int jobs) {
    p.validate();
    FitResult fitted = fit(spectra, hp, jobs);
    DictionaryPeaks picks = pick_from_dictionary(fitted, p);
    LineSpectrum merged = picks.merged;
    return PipelineResult{std::move(merged), std::move(fitted), std::move(picks)};
}

const GridCell& GridResult::cell(std::size_t alpha_i, std::size_t c_i, std::size_t beta_i) const {
    return cells.at((beta_i * alphas.size() + alpha_i) * norm_bounds.size() + c_i);
}

std::uint64_t matrix_checksum(const Matrix& m) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
    const std::size_t n = static_cast<std::size_t>(m.size()) * sizeof(double);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::uint64_t combine_checksums(const std::vector<std::uint64_t>& parts) {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (std::uint64_t p : parts) {
        h ^= p + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

}  // namespace

GridResult grid_search(const SimConfig& cfg, const GridSpec& grid, const HyperParams& hp_template,
                       const PickerParams& p, int jobs, const std::function<void(const GridCell&)>& on_cell) {
    if (grid.alphas.empty() || grid.norm_bounds.empty() || grid.betas.empty()) {
        throw InvalidParameter("grid axes must be nonempty");
    }
    if (grid.replicates < 1) throw InvalidParameter("grid search needs at least one replicate");
    cfg.validate();
    p.validate();

    GridResult result;
    result.alphas = grid.alphas;
    result.norm_bounds = grid.norm_bounds;
    result.betas = grid.betas;
    result.replicate_count = grid.replicates;
    result.replicate_seeds = replicate_seeds(grid.base_seed, grid.replicates);
    result.spectra_per_replicate = cfg.num_spectra;

    const std::size_t n = grid.replicates;
    std::vector<SimDataset> data;
    data.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SimConfig c = cfg;
        c.seed = result.replicate_seeds[i];
        data.push_back(generate(c));
        result.replicate_checksums.push_back(matrix_checksum(data.back().spectra.data()));
    }
    result.expected_checksum = combine_checksums(result.replicate_checksums);

    result.baseline.resize(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        const Score s = score(mean_spectrum_baseline(data[i].spectra, p), data[i].truth, grid.match_tol);
        result.baseline[i] = {result.replicate_seeds[i], s.accuracy, s.false_positives};
    });
    for (const auto& b : result.baseline) {
        result.baseline_accuracy += b.accuracy;
        result.baseline_fp += static_cast<double>(b.false_positives);
    }
    result.baseline_accuracy /= static_cast<double>(n);
    result.baseline_fp /= static_cast<double>(n);

    struct Outcome {
        double accuracy = 0.0;
        double fp = 0.0;
        double atoms = 0.0;
        bool failed = false;
        std::uint64_t checksum = 0;
    };

    for (double beta : grid.betas) {
        for (double alpha : grid.alphas) {
            for (double bound : grid.norm_bounds) {
                std::vector<Outcome> outcomes(n);
                parallel_for(n, jobs, [&](std::size_t i) {
                    HyperParams hp = hp_template;
                    hp.alpha = alpha;
                    hp.beta = beta;
                    hp.norm_bound = bound;
                    hp.seed = result.replicate_seeds[i];
                    Outcome& o = outcomes[i];
                    o.checksum = matrix_checksum(data[i].spectra.data());
                    try {
                        const PipelineResult run = run_pipeline(data[i].spectra, hp, p, 1);
                        const Score s = score(run.peaks, data[i].truth, grid.match_tol);
                        o.accuracy = s.accuracy;
                        o.fp = static_cast<double>(s.false_positives);
                        o.atoms = static_cast<double>(run.fit.active_set.size());
                    } catch (const Error&) {
                        // Sentinel: a failed replicate scores zero and is counted, the sweep continues.
                        o.failed = true;
                    }
                });

                GridCell cell;
                cell.alpha = alpha;
                cell.beta = beta;
                cell.norm_bound = bound;
                std::vector<std::uint64_t> seen;
                for (const Outcome& o : outcomes) {
                    cell.mean_accuracy += o.accuracy;
                    cell.mean_fp += o.fp;
                    cell.mean_active_atoms += o.atoms;
                    cell.n_failed += o.failed ? 1 : 0;
                    seen.push_back(o.checksum);
                }
                cell.mean_accuracy /= static_cast<double>(n);
                cell.mean_fp /= static_cast<double>(n);
                cell.mean_active_atoms /= static_cast<double>(n);
                cell.data_checksum = combine_checksums(seen);
                result.cells.push_back(cell);
                if (on_cell) on_cell(cell);
            }
        }
    }
    return result;
}

AlphaSelection select_alpha(const SpectraMatrix& spectra, int min_atoms, const std::vector<double>& candidates,
                            const HyperParams& hp_template, int jobs) {
    if (candidates.empty()) throw InvalidParameter("select_alpha needs at least one candidate");
    if (min_atoms < 1) throw InvalidParameter("the assumed number of classes must be >= 1");
    if (!std::is_sorted(candidates.begin(), candidates.end())) {
        throw InvalidParameter("alpha candidates must be ascending");
    }
    AlphaSelection sel;
    std::optional<double> chosen;
    for (double alpha : candidates) {
        HyperParams hp = hp_template;
        hp.alpha = alpha;
        const FitResult r = fit(spectra, hp, jobs);
        sel.atom_counts.push_back(r.active_set.size());
        if (static_cast<int>(r.active_set.size()) >= min_atoms) chosen = alpha;
    }
    sel.warning = !chosen.has_value();
    sel.alpha = chosen.value_or(candidates.front());
    return sel;
}

double pearson(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionMismatch("pearson: vectors differ in length");
    const Vector da = a.array() - a.mean();
    const Vector db = b.array() - b.mean();
    const double denom = da.norm() * db.norm();
    if (denom == 0.0) return 0.0;
    return da.dot(db) / denom;
}

std::vector<double> template_correspondence(const FitResult& fit, const Matrix& templates) {
    const Matrix& atoms = fit.dictionary.atoms();
    if (templates.rows() != atoms.rows()) throw DimensionMismatch("templates and atoms differ in length");
    std::vector<double> best(static_cast<std::size_t>(templates.cols()), 0.0);
    for (Index c = 0; c < templates.cols(); ++c) {
        for (Index j : fit.active_set) {
            best[static_cast<std::size_t>(c)] =
                std::max(best[static_cast<std::size_t>(c)], std::abs(pearson(templates.col(c), atoms.col(j))));
        }
    }
    return best;
}

}  // namespace sparsepick
