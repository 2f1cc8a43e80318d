#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <sparsepick/csv_io.hpp>
#include <sparsepick/evaluator.hpp>

namespace sparsepick::cli {

/// Everything a subcommand needs, after merging defaults, preset, config file and flags
/// (later sources win).
struct RunConfig {
    std::optional<std::string> preset;
    SimConfig sim;
    HyperParams hp;
    PickerParams picker;
    /// Set when min_width came from the config file or a flag rather than the default.
    bool min_width_given = false;
    GridSpec grid;
    int classes = 2;
    std::vector<double> alpha_candidates;

    std::string input;
    Orientation orientation = Orientation::SpectraAsColumns;
    bool mz_axis = false;
    std::filesystem::path out_dir = ".";
    int jobs = 0;

    RunConfig();
};

/// "start:step:stop" (inclusive, like 1:1:10), a comma list, or a single number.
std::vector<double> parse_range(const std::string& text);

/// Applies the keys of a JSON config file on top of `cfg`. Unknown keys are errors.
/// A "preset" key is applied before the "simulation" block of the same file; a
/// preset_override (from the command line) replaces both.
void apply_config_file(const std::filesystem::path& path, RunConfig& cfg,
                       const std::optional<std::string>& preset_override);

/// Fully resolved configuration as pretty JSON (stable key order).
std::string to_json_text(const RunConfig& cfg);

/// SimConfig as the "simulation" JSON block used by config files and truth.json.
std::string sim_config_json(const SimConfig& sim);

std::string to_string(Orientation orientation);
Orientation orientation_from_string(const std::string& name);
std::string to_string(CentralStatistic statistic);
CentralStatistic statistic_from_string(const std::string& name);

}  // namespace sparsepick::cli
