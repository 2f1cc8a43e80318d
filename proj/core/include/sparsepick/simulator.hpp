#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsepick/spectra_model.hpp"

namespace sparsepick {

enum class SpuriousPlacement {
    /// One set of positions per dataset, shared by every spectrum in it.
    PerDataset,
    /// Independent positions for every spectrum.
    PerSpectrum,
};

std::string to_string(SpuriousPlacement placement);
SpuriousPlacement spurious_placement_from_string(const std::string& name);

/// Additive spectrum model: class-defining Gaussian peaks with jittered
/// heights, spurious smaller Gaussian peaks at random positions, white noise.
struct SimConfig {
    Index length = 110;
    Index num_spectra = 50;
    int num_classes = 2;
    int peaks_per_class = 3;
    /// Bin positions per class. Empty means evenly spread positions derived
    /// from num_classes and peaks_per_class.
    std::vector<std::vector<Index>> class_peak_positions = {{15, 45, 75}, {30, 60, 90}};
    double peak_height = 1.0;
    /// Relative standard deviation of true peak heights.
    double peak_height_jitter = 0.1;
    double peak_sigma = 1.5;
    int spurious_count = 3;
    /// Spurious peak height as a fraction of peak_height, in (0, 1).
    double spurious_height_fraction = 0.4;
    SpuriousPlacement spurious_placement = SpuriousPlacement::PerDataset;
    double noise_sigma = 0.1;
    /// Spurious peaks keep more than 2 * guard_min_width bins away from true peaks.
    int guard_min_width = 3;
    std::uint64_t seed = 0;

    /// Positions actually used (explicit or derived), one sorted list per class.
    std::vector<std::vector<Index>> resolved_positions() const;
    /// Throws InvalidParameter on an inconsistent configuration.
    void validate() const;
};

/// Built-in calibrated presets: "moderate" and "high".
SimConfig sim_preset(const std::string& name);
std::vector<std::string> sim_preset_names();

struct SimGroundTruth {
    std::vector<int> class_of_spectrum;
    std::vector<std::vector<Index>> true_positions;
    std::vector<Index> union_positions;
};

struct SimDataset {
    SpectraMatrix spectra;
    SimGroundTruth truth;
    /// Noiseless expected spectrum of each class, L x D: nominal true peaks plus the
    /// dataset's shared spurious peaks (none under per-spectrum placement).
    Matrix templates;
};

/// Deterministic given cfg.seed. Spectra are assigned to classes round-robin.
SimDataset generate(const SimConfig& cfg);

/// Noise-free class templates for a configuration, L x D.
Matrix class_templates(const SimConfig& cfg);

/// Ground truth implied by a configuration (identical for every replicate).
SimGroundTruth ground_truth(const SimConfig& cfg);

/// n distinct child seeds derived deterministically from base_seed.
std::vector<std::uint64_t> replicate_seeds(std::uint64_t base_seed, std::size_t n);

}  // namespace sparsepick
