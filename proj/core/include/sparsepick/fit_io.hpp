#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sparsepick/sparse_coder.hpp"

namespace sparsepick {

/// Provenance stored next to a fit so later steps can pick sensible defaults.
struct FitProvenance {
    std::string input;
    bool simulated = false;
    std::optional<std::vector<double>> mz_axis;
};

struct StoredFit {
    FitResult result;
    HyperParams params;
    FitProvenance provenance;
};

/// Writes dictionary.csv (L x K), codes.csv (K x R), history.csv and meta.json into `dir`.
void save_fit(const FitResult& fit, const HyperParams& hp, const FitProvenance& provenance,
              const std::filesystem::path& dir);

/// Reads a directory produced by save_fit.
StoredFit load_fit(const std::filesystem::path& dir);

}  // namespace sparsepick
