#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "sparsepick/peak_picker.hpp"
#include "sparsepick/simulator.hpp"
#include "sparsepick/sparse_coder.hpp"

namespace sparsepick {

struct Score {
    double accuracy = 0.0;
    Index false_positives = 0;
    /// (found position, truth position) pairs.
    std::vector<std::pair<Index, Index>> matched;
    int match_tol = 1;
};

/// Greedy nearest-first one-to-one matching of found peaks to truth within match_tol bins.
Score score(const std::vector<Index>& found, const std::vector<Index>& truth, int match_tol = 1);
Score score(const LineSpectrum& found, const SimGroundTruth& truth, int match_tol = 1);

/// Peak picking on the arithmetic mean of all spectra.
LineSpectrum mean_spectrum_baseline(const SpectraMatrix& spectra, const PickerParams& p);

struct PipelineResult {
    LineSpectrum peaks;
    FitResult fit;
    DictionaryPeaks picks;
};

/// fit -> pick_from_dictionary. Throws NoActiveAtoms when the fit keeps no atom.
PipelineResult run_pipeline(const SpectraMatrix& spectra, const HyperParams& hp, const PickerParams& p,
                            int jobs = 1);

struct GridSpec {
    std::vector<double> alphas;
    std::vector<double> norm_bounds;
    std::vector<double> betas;
    std::size_t replicates = 1;
    std::uint64_t base_seed = 0;
    int match_tol = 1;
};

struct GridCell {
    double alpha = 0.0;
    double beta = 0.0;
    double norm_bound = 0.0;
    double mean_accuracy = 0.0;
    double mean_fp = 0.0;
    double mean_active_atoms = 0.0;
    int n_failed = 0;
    /// Combined checksum of the replicate data this cell consumed.
    std::uint64_t data_checksum = 0;
};

struct ReplicateBaseline {
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    Index false_positives = 0;
};

struct GridResult {
    std::vector<double> alphas;
    std::vector<double> norm_bounds;
    std::vector<double> betas;
    /// Ordered by beta, then alpha, then C (C varies fastest).
    std::vector<GridCell> cells;
    std::size_t replicate_count = 0;
    std::vector<std::uint64_t> replicate_seeds;
    std::vector<std::uint64_t> replicate_checksums;
    std::uint64_t expected_checksum = 0;
    std::vector<ReplicateBaseline> baseline;
    double baseline_accuracy = 0.0;
    double baseline_fp = 0.0;
    Index spectra_per_replicate = 0;

    const GridCell& cell(std::size_t alpha_i, std::size_t c_i, std::size_t beta_i) const;
};

/// Checksum of a matrix' raw bytes (FNV-1a).
std::uint64_t matrix_checksum(const Matrix& m);

/// Mean sparse-coding score per (alpha, C, beta) cell over shared replicates,
/// plus the mean-spectrum baseline on the same replicates. on_cell fires in
/// grid order as each cell completes.
GridResult grid_search(const SimConfig& cfg, const GridSpec& grid, const HyperParams& hp_template,
                       const PickerParams& p, int jobs = 1,
                       const std::function<void(const GridCell&)>& on_cell = {});

struct AlphaSelection {
    double alpha = 0.0;
    /// True when no candidate kept min_atoms atoms; alpha is then the smallest candidate.
    bool warning = false;
    std::vector<std::size_t> atom_counts;
};

/// Largest candidate alpha whose fit keeps at least min_atoms active atoms.
AlphaSelection select_alpha(const SpectraMatrix& spectra, int min_atoms, const std::vector<double>& candidates,
                            const HyperParams& hp_template, int jobs = 1);

/// Pearson correlation of two equally long vectors (0 when either is constant).
double pearson(const Vector& a, const Vector& b);

/// For each template column, the largest |Pearson r| against any active atom.
std::vector<double> template_correspondence(const FitResult& fit, const Matrix& templates);

}  // namespace sparsepick
