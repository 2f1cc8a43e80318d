#include "sparsepick/commands.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <sparsepick/csv_io.hpp>
#include <sparsepick/errors.hpp>
#include <sparsepick/evaluator.hpp>
#include <sparsepick/fit_io.hpp>

#include "sparsepick/run_config.hpp"

namespace sparsepick::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

/// Raw command-line values; unset optionals leave the config-file value alone.
struct Flags {
    std::optional<std::string> config, preset, input, out_dir, orientation;
    bool mz_axis = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;

    std::optional<Index> length, num_spectra;
    std::optional<int> num_classes, peaks_per_class, spurious_count, guard_min_width;
    std::optional<double> peak_height, peak_height_jitter, peak_sigma, spurious_height_fraction, noise_sigma;
    std::optional<std::string> spurious_placement;

    std::optional<double> alpha, beta, norm_bound, rel_tol;
    std::optional<Index> num_atoms;
    std::optional<int> max_iters, dead_atom_patience;
    std::optional<std::string> init;

    std::optional<double> multiplier, area_factor;
    std::optional<int> min_width, merge_tol;
    std::optional<std::string> statistic;

    std::optional<std::string> alphas, norm_bounds, betas, candidates;
    std::optional<std::size_t> replicates;
    std::optional<int> match_tol, classes;
};

template <class T>
void set_if(const std::optional<T>& flag, T& target) {
    if (flag) target = *flag;
}

void add_common(CLI::App& cmd, Flags& f) {
    cmd.add_option("--config", f.config, "JSON config file (flags override its values)");
    cmd.add_option("--seed", f.seed, "RNG seed");
    cmd.add_option("--jobs", f.jobs, "worker threads (0 = all cores, 1 = serial)");
    cmd.add_option("-o,--out-dir", f.out_dir, "output directory");
}

void add_input(CLI::App& cmd, Flags& f) {
    cmd.add_option("input,--input", f.input, "spectra CSV");
    cmd.add_option("--orientation", f.orientation, "columns (one spectrum per column) or rows");
    cmd.add_flag("--mz-axis", f.mz_axis, "first row/column of the CSV holds mz values");
}

void add_sim(CLI::App& cmd, Flags& f) {
    cmd.add_option("--preset", f.preset, "simulation preset: " + [] {
        std::string names;
        for (const auto& n : sim_preset_names()) names += (names.empty() ? "" : ", ") + n;
        return names;
    }());
    cmd.add_option("--length", f.length, "bins per spectrum");
    cmd.add_option("--num-spectra", f.num_spectra, "spectra per dataset");
    cmd.add_option("--num-classes", f.num_classes);
    cmd.add_option("--peaks-per-class", f.peaks_per_class);
    cmd.add_option("--peak-height", f.peak_height);
    cmd.add_option("--peak-height-jitter", f.peak_height_jitter);
    cmd.add_option("--peak-sigma", f.peak_sigma);
    cmd.add_option("--spurious-count", f.spurious_count);
    cmd.add_option("--spurious-height-fraction", f.spurious_height_fraction);
    cmd.add_option("--spurious-placement", f.spurious_placement, "per_dataset or per_spectrum");
    cmd.add_option("--noise-sigma", f.noise_sigma);
    cmd.add_option("--guard-min-width", f.guard_min_width);
}

void add_hp(CLI::App& cmd, Flags& f, bool with_alpha) {
    if (with_alpha) cmd.add_option("--alpha", f.alpha, "l1 weight");
    cmd.add_option("--beta", f.beta, "squared-l2 weight (> 0)");
    cmd.add_option("-C,--norm-bound", f.norm_bound, "squared-norm bound on atoms");
    cmd.add_option("--num-atoms", f.num_atoms, "dictionary size K (0 = min(L, 2R))");
    cmd.add_option("--max-iters", f.max_iters);
    cmd.add_option("--rel-tol", f.rel_tol);
    cmd.add_option("--dead-atom-patience", f.dead_atom_patience, "0 disables re-seeding");
    cmd.add_option("--init", f.init, "svd, sampled, random or mixture");
}

void add_picker(CLI::App& cmd, Flags& f) {
    cmd.add_option("--multiplier", f.multiplier, "threshold factor over the central statistic");
    cmd.add_option("--statistic", f.statistic, "mean or median");
    cmd.add_option("--min-width", f.min_width, "minimal peak width in bins");
    cmd.add_option("--area-factor", f.area_factor);
    cmd.add_option("--merge-tol", f.merge_tol, "bins within which peaks of different atoms merge");
}

void add_grid(CLI::App& cmd, Flags& f) {
    cmd.add_option("--alphas", f.alphas, "alpha axis, start:step:stop or a comma list");
    cmd.add_option("--norm-bounds", f.norm_bounds, "C axis");
    cmd.add_option("--betas", f.betas, "beta axis");
    cmd.add_option("--replicates", f.replicates);
    cmd.add_option("--match-tol", f.match_tol, "scoring tolerance in bins");
}

RunConfig resolve(const Flags& f, const std::string& command) {
    RunConfig cfg;
    if (f.config) {
        apply_config_file(*f.config, cfg, f.preset);
    } else if (f.preset) {
        cfg.sim = sim_preset(*f.preset);
        cfg.preset = f.preset;
    }

    set_if(f.length, cfg.sim.length);
    set_if(f.num_spectra, cfg.sim.num_spectra);
    set_if(f.num_classes, cfg.sim.num_classes);
    set_if(f.peaks_per_class, cfg.sim.peaks_per_class);
    set_if(f.peak_height, cfg.sim.peak_height);
    set_if(f.peak_height_jitter, cfg.sim.peak_height_jitter);
    set_if(f.peak_sigma, cfg.sim.peak_sigma);
    set_if(f.spurious_count, cfg.sim.spurious_count);
    set_if(f.spurious_height_fraction, cfg.sim.spurious_height_fraction);
    if (f.spurious_placement) cfg.sim.spurious_placement = spurious_placement_from_string(*f.spurious_placement);
    set_if(f.noise_sigma, cfg.sim.noise_sigma);
    set_if(f.guard_min_width, cfg.sim.guard_min_width);
    // Explicit positions that no longer fit the requested shape fall back to evenly spread ones.
    if (f.length || f.num_classes || f.peaks_per_class) {
        auto& pos = cfg.sim.class_peak_positions;
        bool fits = pos.size() == static_cast<std::size_t>(cfg.sim.num_classes);
        for (const auto& cls : pos) {
            fits = fits && cls.size() == static_cast<std::size_t>(cfg.sim.peaks_per_class);
            for (Index i : cls) fits = fits && i >= 0 && i < cfg.sim.length;
        }
        if (!fits) pos.clear();
    }

    set_if(f.alpha, cfg.hp.alpha);
    set_if(f.beta, cfg.hp.beta);
    set_if(f.norm_bound, cfg.hp.norm_bound);
    set_if(f.num_atoms, cfg.hp.num_atoms);
    set_if(f.max_iters, cfg.hp.max_iters);
    set_if(f.rel_tol, cfg.hp.rel_tol);
    set_if(f.dead_atom_patience, cfg.hp.dead_atom_patience);
    if (f.init) cfg.hp.init = init_strategy_from_string(*f.init);

    set_if(f.multiplier, cfg.picker.multiplier);
    if (f.statistic) cfg.picker.statistic = statistic_from_string(*f.statistic);
    if (f.min_width) {
        cfg.picker.min_width = *f.min_width;
        cfg.min_width_given = true;
    }
    set_if(f.area_factor, cfg.picker.area_factor);
    set_if(f.merge_tol, cfg.picker.merge_tol);

    if (f.alphas) cfg.grid.alphas = parse_range(*f.alphas);
    if (f.norm_bounds) cfg.grid.norm_bounds = parse_range(*f.norm_bounds);
    if (f.betas) cfg.grid.betas = parse_range(*f.betas);
    set_if(f.replicates, cfg.grid.replicates);
    set_if(f.match_tol, cfg.grid.match_tol);
    set_if(f.classes, cfg.classes);
    if (f.candidates) cfg.alpha_candidates = parse_range(*f.candidates);

    set_if(f.input, cfg.input);
    if (f.orientation) cfg.orientation = orientation_from_string(*f.orientation);
    if (f.mz_axis) cfg.mz_axis = true;
    if (f.out_dir) cfg.out_dir = *f.out_dir;
    set_if(f.jobs, cfg.jobs);

    if (f.seed) {
        if (command == "simulate") cfg.sim.seed = *f.seed;
        else if (command == "evaluate") cfg.grid.base_seed = *f.seed;
        else cfg.hp.seed = *f.seed;
    }
    return cfg;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text << '\n';
    if (!out) throw IoError("write failure on '" + path.string() + "'");
}

void write_resolved(const RunConfig& cfg) {
    ensure_dir(cfg.out_dir);
    write_text(cfg.out_dir / "resolved_config.json", to_json_text(cfg));
}

std::string hex(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

SpectraMatrix load_input(const RunConfig& cfg) {
    if (cfg.input.empty()) throw InvalidParameter("no input CSV given (positional argument or --input)");
    if (!fs::exists(cfg.input)) throw IoError("input file '" + cfg.input + "' does not exist");
    return load_spectra(cfg.input, cfg.orientation, cfg.mz_axis);
}

/// truth.json written by `simulate` next to the spectra, if any.
std::optional<nlohmann::json> truth_beside(const fs::path& input) {
    const fs::path truth = input.parent_path() / "truth.json";
    if (input.empty() || !fs::exists(truth)) return std::nullopt;
    std::ifstream in(truth);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed '" + truth.string() + "': " + e.what());
    }
    return j;
}

void report_score(const LineSpectrum& found, const nlohmann::json& truth, int match_tol, std::ostream& out) {
    const auto positions = truth.at("union_positions").get<std::vector<Index>>();
    const Score s = score(found.positions(), positions, match_tol);
    out << "accuracy " << format_double(s.accuracy) << " false_positives " << s.false_positives << '\n';
}

void require_min_width(const RunConfig& cfg, bool simulated) {
    if (!simulated && !cfg.min_width_given) {
        throw InvalidParameter(
            "--min-width is required for non-simulated data: estimate it from the width of a few large peaks");
    }
}

int cmd_simulate(const RunConfig& cfg, std::ostream& err) {
    const SimDataset data = generate(cfg.sim);
    write_resolved(cfg);
    save_spectra(data.spectra, cfg.out_dir / "spectra.csv", Orientation::SpectraAsColumns);

    ordered_json truth;
    if (cfg.preset) truth["preset"] = *cfg.preset;
    truth["simulation"] = ordered_json::parse(sim_config_json(cfg.sim));
    truth["class_of_spectrum"] = data.truth.class_of_spectrum;
    truth["true_positions"] = data.truth.true_positions;
    truth["union_positions"] = data.truth.union_positions;
    std::vector<std::vector<double>> templates;
    for (Index c = 0; c < data.templates.cols(); ++c) {
        const Vector col = data.templates.col(c);
        templates.emplace_back(col.data(), col.data() + col.size());
    }
    truth["templates"] = templates;
    write_text(cfg.out_dir / "truth.json", truth.dump(2));
    err << "simulate: wrote " << data.spectra.length() << "x" << data.spectra.count() << " spectra to "
        << (cfg.out_dir / "spectra.csv").string() << '\n';
    return kOk;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const SpectraMatrix spectra = load_input(cfg);
    cfg.hp.validate();
    const FitResult result = fit(spectra, cfg.hp, cfg.jobs);
    FitProvenance provenance;
    provenance.input = cfg.input;
    provenance.simulated = truth_beside(cfg.input).has_value();
    provenance.mz_axis = spectra.mz_axis();
    write_resolved(cfg);
    save_fit(result, cfg.hp, provenance, cfg.out_dir);
    out << "converged " << (result.converged ? "true" : "false") << " iterations " << result.iterations_run
        << " active_atoms " << result.active_set.size() << " objective "
        << format_double(result.objective_history.empty() ? 0.0 : result.objective_history.back()) << '\n';
    if (!result.damped_columns.empty()) {
        err << "fit: " << result.damped_columns.size() << " column(s) needed a ridge-damped solve\n";
    }
    return kOk;
}

int cmd_pick(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.input.empty()) throw InvalidParameter("no fit directory given (positional argument or --input)");
    if (!fs::is_directory(cfg.input)) throw IoError("fit directory '" + cfg.input + "' does not exist");
    const StoredFit stored = load_fit(cfg.input);
    require_min_width(cfg, stored.provenance.simulated);
    cfg.picker.validate();

    DictionaryPeaks picks;
    try {
        picks = pick_from_dictionary(stored.result, cfg.picker);
    } catch (const NoActiveAtoms& e) {
        err << "pick: " << e.what() << '\n';
        return kEmptyResult;
    }

    write_resolved(cfg);
    const auto& mz = stored.provenance.mz_axis;
    auto emit = [&](const LineSpectrum& ls, const fs::path& path) {
        save_line_spectrum(mz ? ls.with_mz_axis(*mz) : ls, path);
    };
    emit(picks.merged, cfg.out_dir / "peaks.csv");
    for (std::size_t a = 0; a < picks.atoms.size(); ++a) {
        emit(picks.per_atom[a], cfg.out_dir / ("atom_" + std::to_string(picks.atoms[a]) + ".csv"));
    }
    err << "pick: " << picks.merged.size() << " peaks from " << picks.atoms.size() << " active atoms\n";
    if (stored.provenance.simulated) {
        if (auto truth = truth_beside(stored.provenance.input)) report_score(picks.merged, *truth, cfg.grid.match_tol, out);
    }
    return kOk;
}

int cmd_baseline(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const SpectraMatrix spectra = load_input(cfg);
    const auto truth = truth_beside(cfg.input);
    require_min_width(cfg, truth.has_value());
    cfg.picker.validate();
    const LineSpectrum peaks = mean_spectrum_baseline(spectra, cfg.picker);
    write_resolved(cfg);
    save_line_spectrum(spectra.mz_axis() ? peaks.with_mz_axis(*spectra.mz_axis()) : peaks, cfg.out_dir / "peaks.csv");
    err << "baseline: " << peaks.size() << " peaks on the mean spectrum\n";
    if (truth) report_score(peaks, *truth, cfg.grid.match_tol, out);
    return kOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    cfg.sim.validate();
    cfg.picker.validate();
    write_resolved(cfg);

    const fs::path grid_path = cfg.out_dir / "grid.csv";
    std::ofstream grid_csv(grid_path, std::ios::trunc);
    if (!grid_csv) throw IoError("cannot write '" + grid_path.string() + "'");
    grid_csv << "alpha,beta,C,mean_accuracy,mean_fp,n_failed,mean_active_atoms\n" << std::flush;

    const std::size_t total = cfg.grid.alphas.size() * cfg.grid.norm_bounds.size() * cfg.grid.betas.size();
    std::size_t done = 0;
    // Rows are appended as cells complete, so an interrupted run leaves only finished cells.
    const GridResult result = grid_search(cfg.sim, cfg.grid, cfg.hp, cfg.picker, cfg.jobs, [&](const GridCell& c) {
        grid_csv << format_double(c.alpha) << ',' << format_double(c.beta) << ',' << format_double(c.norm_bound) << ','
                 << format_double(c.mean_accuracy) << ',' << format_double(c.mean_fp) << ',' << c.n_failed << ','
                 << format_double(c.mean_active_atoms) << '\n'
                 << std::flush;
        ++done;
        if (done % 10 == 0 || done == total) err << "evaluate: " << done << "/" << total << " cells\n";
    });
    if (!grid_csv) throw IoError("write failure on '" + grid_path.string() + "'");

    for (const GridCell& c : result.cells) {
        if (c.data_checksum != result.expected_checksum) {
            throw std::logic_error("grid cell consumed different replicate data than the baseline");
        }
    }

    std::ofstream baseline_csv(cfg.out_dir / "baseline.csv", std::ios::trunc);
    if (!baseline_csv) throw IoError("cannot write '" + (cfg.out_dir / "baseline.csv").string() + "'");
    baseline_csv << "replicate,seed,checksum,accuracy,false_positives,fp_per_spectrum\n";
    const double per = 1.0 / static_cast<double>(result.spectra_per_replicate);
    for (std::size_t i = 0; i < result.baseline.size(); ++i) {
        const auto& b = result.baseline[i];
        baseline_csv << i << ',' << b.seed << ',' << hex(result.replicate_checksums[i]) << ','
                     << format_double(b.accuracy) << ',' << b.false_positives << ','
                     << format_double(static_cast<double>(b.false_positives) * per) << '\n';
    }

    ordered_json summary;
    summary["replicates"] = result.replicate_count;
    summary["data_checksum"] = hex(result.expected_checksum);
    summary["baseline_accuracy"] = result.baseline_accuracy;
    summary["baseline_fp_per_dataset"] = result.baseline_fp;
    summary["baseline_fp_per_spectrum"] = result.baseline_fp * per;
    const GridCell* best = nullptr;
    for (const GridCell& c : result.cells) {
        if (!best || c.mean_accuracy > best->mean_accuracy ||
            (c.mean_accuracy == best->mean_accuracy && c.mean_fp < best->mean_fp)) {
            best = &c;
        }
    }
    summary["best_cell"] = {{"alpha", best->alpha},
                            {"beta", best->beta},
                            {"C", best->norm_bound},
                            {"mean_accuracy", best->mean_accuracy},
                            {"mean_fp", best->mean_fp}};
    write_text(cfg.out_dir / "summary.json", summary.dump(2));

    out << "baseline accuracy " << format_double(result.baseline_accuracy) << " fp "
        << format_double(result.baseline_fp) << "; best cell alpha " << format_double(best->alpha) << " C "
        << format_double(best->norm_bound) << " beta " << format_double(best->beta) << " accuracy "
        << format_double(best->mean_accuracy) << " fp " << format_double(best->mean_fp) << '\n';
    return kOk;
}

int cmd_select_alpha(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const SpectraMatrix spectra = load_input(cfg);
    const AlphaSelection sel = select_alpha(spectra, cfg.classes, cfg.alpha_candidates, cfg.hp, cfg.jobs);
    write_resolved(cfg);
    ordered_json j;
    j["classes"] = cfg.classes;
    j["candidates"] = cfg.alpha_candidates;
    j["active_atoms"] = sel.atom_counts;
    j["alpha"] = sel.alpha;
    j["warning"] = sel.warning;
    write_text(cfg.out_dir / "select_alpha.json", j.dump(2));
    if (sel.warning) {
        err << "select-alpha: no candidate keeps " << cfg.classes
            << " active atoms; returning the smallest candidate. Try smaller alphas.\n";
    }
    out << format_double(sel.alpha) << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Peak picking for mass spectra through elastic-net sparse coding"};
    app.require_subcommand(1);
    Flags f;

    auto* simulate = app.add_subcommand("simulate", "generate a synthetic multi-class dataset with ground truth");
    add_common(*simulate, f);
    add_sim(*simulate, f);

    auto* fit_cmd = app.add_subcommand("fit", "learn a dictionary and sparse codes for a spectra CSV");
    add_common(*fit_cmd, f);
    add_input(*fit_cmd, f);
    add_hp(*fit_cmd, f, true);

    auto* pick = app.add_subcommand("pick", "pick peaks on the active atoms of a fit directory");
    add_common(*pick, f);
    pick->add_option("fit_dir,--input", f.input, "directory written by `fit`");
    pick->add_option("--match-tol", f.match_tol, "scoring tolerance in bins (simulated data only)");
    add_picker(*pick, f);

    auto* baseline = app.add_subcommand("baseline", "pick peaks on the mean spectrum");
    add_common(*baseline, f);
    add_input(*baseline, f);
    add_picker(*baseline, f);
    baseline->add_option("--match-tol", f.match_tol, "scoring tolerance in bins (simulated data only)");

    auto* evaluate = app.add_subcommand("evaluate", "grid search over (alpha, C, beta) on simulated replicates");
    add_common(*evaluate, f);
    add_sim(*evaluate, f);
    add_hp(*evaluate, f, false);
    add_picker(*evaluate, f);
    add_grid(*evaluate, f);

    auto* select = app.add_subcommand("select-alpha", "largest alpha that still keeps D active atoms");
    add_common(*select, f);
    add_input(*select, f);
    add_hp(*select, f, false);
    select->add_option("--classes", f.classes, "assumed number of classes D");
    select->add_option("--candidates", f.candidates, "ascending alpha candidates, start:step:stop or a list");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    const std::map<CLI::App*, std::string> names = {{simulate, "simulate"}, {fit_cmd, "fit"},
                                                    {pick, "pick"},         {baseline, "baseline"},
                                                    {evaluate, "evaluate"}, {select, "select-alpha"}};
    CLI::App* chosen = app.get_subcommands().front();
    const std::string& name = names.at(chosen);

    try {
        const RunConfig cfg = resolve(f, name);
        if (name == "simulate") return cmd_simulate(cfg, err);
        if (name == "fit") return cmd_fit(cfg, out, err);
        if (name == "pick") return cmd_pick(cfg, out, err);
        if (name == "baseline") return cmd_baseline(cfg, out, err);
        if (name == "evaluate") return cmd_evaluate(cfg, out, err);
        return cmd_select_alpha(cfg, out, err);
    } catch (const NoActiveAtoms& e) {
        err << name << ": " << e.what() << '\n';
        return kEmptyResult;
    } catch (const NumericalError& e) {
        err << name << ": numerical failure: " << e.what() << '\n';
        return kInternalError;
    } catch (const InvalidParameter& e) {
        err << name << ": invalid configuration: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        err << name << ": " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << name << ": internal error: " << e.what() << '\n';
        return kInternalError;
    }
}

}  // namespace sparsepick::cli
