#include "sparsepick/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include <sparsepick/errors.hpp>

namespace sparsepick::cli {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

RunConfig::RunConfig() {
    grid.alphas = parse_range("1:1:10");
    grid.norm_bounds = parse_range("50:10:300");
    grid.betas = {1.0, 1e-1, 1e-5, 1e-10};
    grid.replicates = 100;
    alpha_candidates = parse_range("1:1:10");
}

namespace {

double to_double(const std::string& token, const std::string& whole) {
    double v = 0.0;
    const char* first = token.data();
    const char* last = first + token.size();
    const auto res = std::from_chars(first, last, v);
    if (token.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
        throw InvalidParameter("bad number '" + token + "' in '" + whole + "'");
    }
    return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        std::string part = text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        const auto b = part.find_first_not_of(" \t");
        const auto e = part.find_last_not_of(" \t");
        parts.push_back(b == std::string::npos ? std::string() : part.substr(b, e - b + 1));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return parts;
}

void check_keys(const json& block, const std::string& where, const std::set<std::string>& allowed) {
    if (!block.is_object()) throw InvalidParameter("config: '" + where + "' must be an object");
    for (const auto& [key, value] : block.items()) {
        (void)value;
        if (!allowed.count(key)) throw InvalidParameter("config: unknown key '" + key + "' in '" + where + "'");
    }
}

template <class T>
void read(const json& block, const char* key, T& out) {
    if (block.contains(key)) out = block.at(key).get<T>();
}

std::vector<double> read_axis(const json& value) {
    if (value.is_string()) return parse_range(value.get<std::string>());
    if (value.is_number()) return {value.get<double>()};
    return value.get<std::vector<double>>();
}

void apply_simulation(const json& s, SimConfig& sim) {
    check_keys(s, "simulation",
               {"length", "num_spectra", "num_classes", "peaks_per_class", "class_peak_positions", "peak_height",
                "peak_height_jitter", "peak_sigma", "spurious_count", "spurious_height_fraction",
                "spurious_placement", "noise_sigma", "guard_min_width", "seed"});
    read(s, "length", sim.length);
    read(s, "num_spectra", sim.num_spectra);
    read(s, "num_classes", sim.num_classes);
    read(s, "peaks_per_class", sim.peaks_per_class);
    read(s, "class_peak_positions", sim.class_peak_positions);
    read(s, "peak_height", sim.peak_height);
    read(s, "peak_height_jitter", sim.peak_height_jitter);
    read(s, "peak_sigma", sim.peak_sigma);
    read(s, "spurious_count", sim.spurious_count);
    read(s, "spurious_height_fraction", sim.spurious_height_fraction);
    if (s.contains("spurious_placement")) {
        sim.spurious_placement = spurious_placement_from_string(s.at("spurious_placement").get<std::string>());
    }
    read(s, "noise_sigma", sim.noise_sigma);
    read(s, "guard_min_width", sim.guard_min_width);
    read(s, "seed", sim.seed);
}

ordered_json sim_to_json(const SimConfig& sim) {
    ordered_json j;
    j["length"] = sim.length;
    j["num_spectra"] = sim.num_spectra;
    j["num_classes"] = sim.num_classes;
    j["peaks_per_class"] = sim.peaks_per_class;
    j["class_peak_positions"] = sim.class_peak_positions;
    j["peak_height"] = sim.peak_height;
    j["peak_height_jitter"] = sim.peak_height_jitter;
    j["peak_sigma"] = sim.peak_sigma;
    j["spurious_count"] = sim.spurious_count;
    j["spurious_height_fraction"] = sim.spurious_height_fraction;
    j["spurious_placement"] = to_string(sim.spurious_placement);
    j["noise_sigma"] = sim.noise_sigma;
    j["guard_min_width"] = sim.guard_min_width;
    j["seed"] = sim.seed;
    return j;
}

}  // namespace

std::vector<double> parse_range(const std::string& text) {
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) throw InvalidParameter("range '" + text + "' must be start:step:stop");
        const double start = to_double(parts[0], text);
        const double step = to_double(parts[1], text);
        const double stop = to_double(parts[2], text);
        if (!(step > 0.0) || stop < start) throw InvalidParameter("range '" + text + "' needs step > 0 and stop >= start");
        const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
        if (n > 1000000) throw InvalidParameter("range '" + text + "' is too long");
        std::vector<double> out;
        for (long i = 0; i < n; ++i) out.push_back(start + static_cast<double>(i) * step);
        return out;
    }
    std::vector<double> out;
    for (const auto& part : split(text, ',')) out.push_back(to_double(part, text));
    return out;
}

std::string to_string(Orientation orientation) {
    return orientation == Orientation::SpectraAsColumns ? "columns" : "rows";
}

Orientation orientation_from_string(const std::string& name) {
    if (name == "columns") return Orientation::SpectraAsColumns;
    if (name == "rows") return Orientation::SpectraAsRows;
    throw InvalidParameter("unknown orientation '" + name + "' (expected columns|rows)");
}

std::string to_string(CentralStatistic statistic) {
    return statistic == CentralStatistic::Mean ? "mean" : "median";
}

CentralStatistic statistic_from_string(const std::string& name) {
    if (name == "mean") return CentralStatistic::Mean;
    if (name == "median") return CentralStatistic::Median;
    throw InvalidParameter("unknown statistic '" + name + "' (expected mean|median)");
}

void apply_config_file(const std::filesystem::path& path, RunConfig& cfg,
                       const std::optional<std::string>& preset_override) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw FormatError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }

    try {
        check_keys(root, "<root>", {"preset", "simulation", "sparse_coding", "peak_picking", "grid", "select_alpha",
                                    "io", "jobs"});
        const std::optional<std::string> preset =
            preset_override ? preset_override
                            : (root.contains("preset") ? std::optional<std::string>(root.at("preset").get<std::string>())
                                                       : std::nullopt);
        if (preset) {
            cfg.sim = sim_preset(*preset);
            cfg.preset = preset;
        }
        // A preset given on the command line replaces the file's whole simulation block.
        if (root.contains("simulation") && !preset_override) apply_simulation(root.at("simulation"), cfg.sim);

        if (root.contains("sparse_coding")) {
            const json& s = root.at("sparse_coding");
            check_keys(s, "sparse_coding", {"alpha", "beta", "norm_bound", "num_atoms", "max_iters", "rel_tol", "seed",
                                            "dead_atom_patience", "init"});
            read(s, "alpha", cfg.hp.alpha);
            read(s, "beta", cfg.hp.beta);
            read(s, "norm_bound", cfg.hp.norm_bound);
            read(s, "num_atoms", cfg.hp.num_atoms);
            read(s, "max_iters", cfg.hp.max_iters);
            read(s, "rel_tol", cfg.hp.rel_tol);
            read(s, "seed", cfg.hp.seed);
            read(s, "dead_atom_patience", cfg.hp.dead_atom_patience);
            if (s.contains("init")) cfg.hp.init = init_strategy_from_string(s.at("init").get<std::string>());
        }
        if (root.contains("peak_picking")) {
            const json& p = root.at("peak_picking");
            check_keys(p, "peak_picking", {"multiplier", "statistic", "min_width", "area_factor", "merge_tol"});
            read(p, "multiplier", cfg.picker.multiplier);
            if (p.contains("statistic")) cfg.picker.statistic = statistic_from_string(p.at("statistic").get<std::string>());
            if (p.contains("min_width")) {
                cfg.picker.min_width = p.at("min_width").get<int>();
                cfg.min_width_given = true;
            }
            read(p, "area_factor", cfg.picker.area_factor);
            read(p, "merge_tol", cfg.picker.merge_tol);
        }
        if (root.contains("grid")) {
            const json& g = root.at("grid");
            check_keys(g, "grid", {"alphas", "norm_bounds", "betas", "replicates", "base_seed", "match_tol"});
            if (g.contains("alphas")) cfg.grid.alphas = read_axis(g.at("alphas"));
            if (g.contains("norm_bounds")) cfg.grid.norm_bounds = read_axis(g.at("norm_bounds"));
            if (g.contains("betas")) cfg.grid.betas = read_axis(g.at("betas"));
            read(g, "replicates", cfg.grid.replicates);
            read(g, "base_seed", cfg.grid.base_seed);
            read(g, "match_tol", cfg.grid.match_tol);
        }
        if (root.contains("select_alpha")) {
            const json& s = root.at("select_alpha");
            check_keys(s, "select_alpha", {"classes", "candidates"});
            read(s, "classes", cfg.classes);
            if (s.contains("candidates")) cfg.alpha_candidates = read_axis(s.at("candidates"));
        }
        if (root.contains("io")) {
            const json& io = root.at("io");
            check_keys(io, "io", {"input", "orientation", "mz_axis", "out_dir"});
            read(io, "input", cfg.input);
            if (io.contains("orientation")) cfg.orientation = orientation_from_string(io.at("orientation").get<std::string>());
            read(io, "mz_axis", cfg.mz_axis);
            if (io.contains("out_dir")) cfg.out_dir = io.at("out_dir").get<std::string>();
        }
        read(root, "jobs", cfg.jobs);
    } catch (const json::exception& e) {
        throw InvalidParameter("config file '" + path.string() + "': " + e.what());
    }
}

std::string sim_config_json(const SimConfig& sim) { return sim_to_json(sim).dump(2); }

std::string to_json_text(const RunConfig& cfg) {
    ordered_json j;
    if (cfg.preset) j["preset"] = *cfg.preset;
    j["simulation"] = sim_to_json(cfg.sim);
    j["sparse_coding"] = {
        {"alpha", cfg.hp.alpha},
        {"beta", cfg.hp.beta},
        {"norm_bound", cfg.hp.norm_bound},
        {"num_atoms", cfg.hp.num_atoms},
        {"max_iters", cfg.hp.max_iters},
        {"rel_tol", cfg.hp.rel_tol},
        {"seed", cfg.hp.seed},
        {"dead_atom_patience", cfg.hp.dead_atom_patience},
        {"init", to_string(cfg.hp.init)},
    };
    j["peak_picking"] = {
        {"multiplier", cfg.picker.multiplier},
        {"statistic", to_string(cfg.picker.statistic)},
        {"min_width", cfg.picker.min_width},
        {"area_factor", cfg.picker.area_factor},
        {"merge_tol", cfg.picker.merge_tol},
    };
    j["grid"] = {
        {"alphas", cfg.grid.alphas},
        {"norm_bounds", cfg.grid.norm_bounds},
        {"betas", cfg.grid.betas},
        {"replicates", cfg.grid.replicates},
        {"base_seed", cfg.grid.base_seed},
        {"match_tol", cfg.grid.match_tol},
    };
    j["select_alpha"] = {{"classes", cfg.classes}, {"candidates", cfg.alpha_candidates}};
    j["io"] = {
        {"input", cfg.input},
        {"orientation", to_string(cfg.orientation)},
        {"mz_axis", cfg.mz_axis},
        {"out_dir", cfg.out_dir.string()},
    };
    j["jobs"] = cfg.jobs;
    return j.dump(2);
}

}  // namespace sparsepick::cli
