#include "sparsepick/fit_io.hpp"

#include <charconv>
#include <fstream>

#include <json.hpp>

#include "sparsepick/csv_io.hpp"
#include "sparsepick/errors.hpp"

namespace sparsepick {

using nlohmann::json;

void save_fit(const FitResult& fit, const HyperParams& hp, const FitProvenance& provenance,
              const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

    write_matrix_csv(fit.dictionary.atoms(), dir / "dictionary.csv");
    write_matrix_csv(fit.codes.codes(), dir / "codes.csv");

    {
        std::ofstream out(dir / "history.csv", std::ios::trunc);
        if (!out) throw IoError("cannot write '" + (dir / "history.csv").string() + "'");
        out << "iteration,objective\n";
        for (std::size_t i = 0; i < fit.objective_history.size(); ++i) {
            out << (i + 1) << ',' << format_double(fit.objective_history[i]) << '\n';
        }
    }

    json meta;
    meta["hyperparameters"] = {
        {"alpha", hp.alpha},
        {"beta", hp.beta},
        {"norm_bound", hp.norm_bound},
        {"num_atoms", fit.dictionary.size()},
        {"max_iters", hp.max_iters},
        {"rel_tol", hp.rel_tol},
        {"dead_atom_patience", hp.dead_atom_patience},
        {"init", to_string(hp.init)},
    };
    meta["seed"] = hp.seed;
    meta["active_set"] = fit.active_set;
    meta["converged"] = fit.converged;
    meta["iterations_run"] = fit.iterations_run;
    meta["reseeded_atoms"] = fit.reseeded_atoms;
    meta["damped_columns"] = fit.damped_columns;
    meta["final_objective"] = fit.objective_history.empty() ? 0.0 : fit.objective_history.back();
    meta["input"] = provenance.input;
    meta["simulated"] = provenance.simulated;
    if (provenance.mz_axis) meta["mz_axis"] = *provenance.mz_axis;

    std::ofstream out(dir / "meta.json", std::ios::trunc);
    if (!out) throw IoError("cannot write '" + (dir / "meta.json").string() + "'");
    out << meta.dump(2) << '\n';
    if (!out) throw IoError("write failure on '" + (dir / "meta.json").string() + "'");
}

StoredFit load_fit(const std::filesystem::path& dir) {
    std::ifstream in(dir / "meta.json");
    if (!in) throw IoError("cannot open '" + (dir / "meta.json").string() + "'");
    json meta;
    try {
        in >> meta;
    } catch (const json::exception& e) {
        throw FormatError("malformed meta.json in '" + dir.string() + "': " + e.what());
    }

    try {
        HyperParams hp;
        const json& h = meta.at("hyperparameters");
        hp.alpha = h.at("alpha").get<double>();
        hp.beta = h.at("beta").get<double>();
        hp.norm_bound = h.at("norm_bound").get<double>();
        hp.num_atoms = h.at("num_atoms").get<Index>();
        hp.max_iters = h.at("max_iters").get<int>();
        hp.rel_tol = h.at("rel_tol").get<double>();
        hp.dead_atom_patience = h.value("dead_atom_patience", hp.dead_atom_patience);
        hp.init = init_strategy_from_string(h.value("init", std::string("sampled")));
        hp.seed = meta.at("seed").get<std::uint64_t>();

        Matrix atoms = read_matrix_csv(dir / "dictionary.csv");
        Matrix codes = read_matrix_csv(dir / "codes.csv");
        if (atoms.cols() != codes.rows()) {
            throw FormatError("dictionary.csv has " + std::to_string(atoms.cols()) + " atoms but codes.csv has " +
                              std::to_string(codes.rows()) + " rows");
        }

        FitResult fit{Dictionary(std::move(atoms), hp.norm_bound), CodeMatrix(std::move(codes)), {}, {}, 0, false, 0, {}};
        fit.active_set = meta.at("active_set").get<std::vector<Index>>();
        fit.converged = meta.at("converged").get<bool>();
        fit.iterations_run = meta.value("iterations_run", 0);
        fit.reseeded_atoms = meta.value("reseeded_atoms", 0);
        for (Index j : fit.active_set) {
            if (j < 0 || j >= fit.dictionary.size()) throw FormatError("active set index out of range");
        }

        std::ifstream hist(dir / "history.csv");
        if (!hist) throw IoError("cannot open '" + (dir / "history.csv").string() + "'");
        std::string line;
        std::getline(hist, line);
        std::size_t row = 1;
        while (std::getline(hist, line)) {
            ++row;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto comma = line.find(',');
            double value = 0.0;
            const char* first = comma == std::string::npos ? nullptr : line.data() + comma + 1;
            const char* last = line.data() + line.size();
            if (!first || std::from_chars(first, last, value).ptr != last) {
                throw ParseError(row, 2, "bad objective value in history.csv");
            }
            fit.objective_history.push_back(value);
        }

        FitProvenance provenance;
        provenance.input = meta.value("input", std::string());
        provenance.simulated = meta.value("simulated", false);
        if (meta.contains("mz_axis")) provenance.mz_axis = meta.at("mz_axis").get<std::vector<double>>();
        return StoredFit{std::move(fit), hp, std::move(provenance)};
    } catch (const json::exception& e) {
        throw FormatError("incomplete meta.json in '" + dir.string() + "': " + e.what());
    }
}

}  // namespace sparsepick
