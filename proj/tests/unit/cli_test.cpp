#include <chrono>
#include <csignal>
#include <fstream>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include <sparsepick/csv_io.hpp>
#include <sparsepick/errors.hpp>

#include "sparsepick/commands.hpp"
#include "sparsepick/run_config.hpp"
#include "temp_dir.hpp"

using namespace sparsepick;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "sparsepick");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> v;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

/// Simulated moderate dataset in dir/sim.
fs::path simulate(const TempDir& dir, const std::string& seed = "1") {
    const auto r = run({"simulate", "--preset", "moderate", "--seed", seed, "-o", (dir / "sim").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    return dir / "sim" / "spectra.csv";
}

}  // namespace

TEST(CliSimulate, ModeratePresetShape) {
    TempDir dir;
    const fs::path csv = simulate(dir);
    const auto rows = lines(read_file(csv));
    ASSERT_EQ(rows.size(), 110u);
    EXPECT_EQ(std::count(rows[0].begin(), rows[0].end(), ','), 49);
    const auto truth = read_json(dir / "sim" / "truth.json");
    EXPECT_EQ(truth.at("union_positions").get<std::vector<int>>(), (std::vector<int>{15, 30, 45, 60, 75, 90}));
    EXPECT_EQ(truth.at("class_of_spectrum").size(), 50u);
    EXPECT_EQ(truth.at("templates").size(), 2u);
    EXPECT_TRUE(fs::exists(dir / "sim" / "resolved_config.json"));
    EXPECT_EQ(read_json(dir / "sim" / "resolved_config.json").at("simulation").at("seed"), 1);
}

TEST(CliSimulate, SeedsChangeSpectraNotTruth) {
    TempDir dir;
    ASSERT_EQ(run({"simulate", "--preset", "high", "--seed", "1", "-o", (dir / "a").string()}).code, 0);
    ASSERT_EQ(run({"simulate", "--preset", "high", "--seed", "2", "-o", (dir / "b").string()}).code, 0);
    EXPECT_NE(read_file(dir / "a" / "spectra.csv"), read_file(dir / "b" / "spectra.csv"));
    EXPECT_EQ(read_json(dir / "a" / "truth.json").at("true_positions"),
              read_json(dir / "b" / "truth.json").at("true_positions"));
}

TEST(CliSimulate, UnknownPreset) {
    TempDir dir;
    const auto r = run({"simulate", "--preset", "extreme", "-o", dir.path().string()});
    EXPECT_EQ(r.code, cli::kConfigError);
    EXPECT_NE(r.err.find("moderate"), std::string::npos);
    EXPECT_NE(r.err.find("high"), std::string::npos);
}

TEST(CliSimulate, OverrideFlags) {
    TempDir dir;
    const auto r = run({"simulate", "--preset", "moderate", "--num-spectra", "12", "--length", "60", "--num-classes",
                        "3", "--peaks-per-class", "2", "--guard-min-width", "1", "-o", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const SpectraMatrix x = load_spectra(dir / "spectra.csv", Orientation::SpectraAsColumns);
    EXPECT_EQ(x.length(), 60);
    EXPECT_EQ(x.count(), 12);
    EXPECT_EQ(read_json(dir / "truth.json").at("union_positions").size(), 6u);
}

TEST(CliFit, ModerateConvergesWithinMaxIters) {
    TempDir dir;
    const fs::path csv = simulate(dir);
    const auto r = run({"fit", csv.string(), "--alpha", "5", "-o", (dir / "fit").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto meta = read_json(dir / "fit" / "meta.json");
    EXPECT_TRUE(meta.at("converged").get<bool>());
    EXPECT_LE(meta.at("iterations_run").get<int>(), 200);
    EXPECT_TRUE(meta.at("simulated").get<bool>());
    EXPECT_NE(r.out.find("converged true"), std::string::npos);
    for (const char* f : {"dictionary.csv", "codes.csv", "history.csv", "meta.json", "resolved_config.json"}) {
        EXPECT_TRUE(fs::exists(dir / "fit" / f)) << f;
    }
}

TEST(CliFit, ZeroBetaRejected) {
    TempDir dir;
    const fs::path csv = simulate(dir);
    const auto r = run({"fit", csv.string(), "--alpha", "0", "--beta", "0", "-o", (dir / "fit").string()});
    EXPECT_EQ(r.code, cli::kConfigError);
    EXPECT_NE(r.err.find("beta"), std::string::npos);
}

TEST(CliFit, MissingInput) {
    TempDir dir;
    EXPECT_EQ(run({"fit", (dir / "none.csv").string(), "-o", dir.path().string()}).code, cli::kConfigError);
    EXPECT_EQ(run({"fit", "-o", dir.path().string()}).code, cli::kConfigError);
}

TEST(CliFit, BitReproducible) {
    TempDir dir;
    const fs::path csv = simulate(dir);
    ASSERT_EQ(run({"fit", csv.string(), "--alpha", "3", "-C", "150", "--seed", "4", "-o", (dir / "a").string()}).code, 0);
    ASSERT_EQ(run({"fit", csv.string(), "--alpha", "3", "-C", "150", "--seed", "4", "--jobs", "2", "-o",
                   (dir / "b").string()})
                  .code,
              0);
    for (const char* f : {"dictionary.csv", "codes.csv", "history.csv"}) {
        EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
    }
}

TEST(CliPick, WritesMergedAndPerAtomPeaks) {
    TempDir dir;
    const fs::path csv = simulate(dir);
    ASSERT_EQ(run({"fit", csv.string(), "--alpha", "3", "-C", "150", "-o", (dir / "fit").string()}).code, 0);
    const auto r = run({"pick", (dir / "fit").string(), "-o", (dir / "pick").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto peaks = lines(read_file(dir / "pick" / "peaks.csv"));
    ASSERT_GE(peaks.size(), 2u);
    EXPECT_EQ(peaks[0], "position,intensity");
    const auto meta = read_json(dir / "fit" / "meta.json");
    for (int j : meta.at("active_set").get<std::vector<int>>()) {
        EXPECT_TRUE(fs::exists(dir / "pick" / ("atom_" + std::to_string(j) + ".csv"))) << j;
    }
    EXPECT_NE(r.out.find("accuracy"), std::string::npos);
}

TEST(CliPick, EmptyActiveSetExitsThree) {
    TempDir dir;
    const fs::path csv = simulate(dir);
    ASSERT_EQ(run({"fit", csv.string(), "--alpha", "1000", "-o", (dir / "fit").string()}).code, 0);
    const auto r = run({"pick", (dir / "fit").string(), "-o", (dir / "pick").string()});
    EXPECT_EQ(r.code, cli::kEmptyResult);
    EXPECT_NE(r.err.find("lower alpha"), std::string::npos);
}

TEST(CliPick, RealDataNeedsMinWidth) {
    TempDir dir;
    simulate(dir);
    fs::create_directories(dir / "real");
    fs::copy_file(dir / "sim" / "spectra.csv", dir / "real" / "spectra.csv");
    const fs::path csv = dir / "real" / "spectra.csv";
    ASSERT_EQ(run({"fit", csv.string(), "--alpha", "3", "-C", "150", "-o", (dir / "fit").string()}).code, 0);
    const auto missing = run({"pick", (dir / "fit").string(), "-o", (dir / "pick").string()});
    EXPECT_EQ(missing.code, cli::kConfigError);
    EXPECT_NE(missing.err.find("--min-width"), std::string::npos);
    const auto given = run({"pick", (dir / "fit").string(), "--min-width", "3", "-o", (dir / "pick").string()});
    EXPECT_EQ(given.code, 0) << given.err;
    EXPECT_EQ(given.out.find("accuracy"), std::string::npos);
}

TEST(CliPick, MzAxisLabelsPeaks) {
    TempDir dir;
    std::ostringstream csv;
    for (int i = 0; i < 40; ++i) {
        const double g = std::exp(-0.5 * (i - 20) * (i - 20) / 2.25);
        csv << (500.0 + 0.5 * i);
        for (int r = 0; r < 4; ++r) csv << ',' << g * (1.0 + 0.1 * r);
        csv << '\n';
    }
    const auto in = dir.write("mz.csv", csv.str());
    ASSERT_EQ(run({"fit", in.string(), "--mz-axis", "--alpha", "0.1", "-C", "4", "-o", (dir / "fit").string()}).code, 0);
    const auto r = run({"pick", (dir / "fit").string(), "--min-width", "3", "-o", (dir / "pick").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_file(dir / "pick" / "peaks.csv"), "mz,intensity\n510,1\n");
}

TEST(CliBaseline, ScoresSimulatedInput) {
    TempDir dir;
    const fs::path csv = simulate(dir);
    const auto r = run({"baseline", csv.string(), "--merge-tol", "0", "-o", (dir / "base").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(lines(read_file(dir / "base" / "peaks.csv"))[0], "position,intensity");
    EXPECT_NE(r.out.find("accuracy"), std::string::npos);
}

TEST(CliBaseline, MalformedCsv) {
    TempDir dir;
    const auto in = dir.write("bad.csv", "1,2\n3\n");
    const auto r = run({"baseline", in.string(), "--min-width", "3", "-o", dir.path().string()});
    EXPECT_EQ(r.code, cli::kConfigError);
    EXPECT_NE(r.err.find("row 2"), std::string::npos);
}

TEST(CliEvaluate, WritesGridBaselineSummary) {
    TempDir dir;
    const auto r = run({"evaluate", "--preset", "moderate", "--alphas", "3,4", "--norm-bounds", "150:50:250", "--betas",
                        "1e-10", "--replicates", "2", "-o", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto grid = lines(read_file(dir / "grid.csv"));
    ASSERT_EQ(grid.size(), 7u);
    EXPECT_EQ(grid[0].rfind("alpha,beta,C,mean_accuracy,mean_fp,n_failed", 0), 0u);
    EXPECT_EQ(grid[1].rfind("3,1e-10,150,", 0), 0u);
    EXPECT_EQ(lines(read_file(dir / "baseline.csv")).size(), 3u);
    const auto summary = read_json(dir / "summary.json");
    EXPECT_EQ(summary.at("replicates"), 2);
    EXPECT_DOUBLE_EQ(summary.at("baseline_fp_per_spectrum").get<double>(),
                     summary.at("baseline_fp_per_dataset").get<double>() / 50.0);
}

TEST(CliEvaluate, ByteIdenticalReruns) {
    TempDir dir;
    const std::vector<std::string> common = {"evaluate", "--preset", "moderate", "--alphas", "2:1:4", "--norm-bounds",
                                             "100,200",  "--betas",  "1e-10",    "--replicates", "3", "--seed", "9"};
    auto a = common;
    a.insert(a.end(), {"--jobs", "1", "-o", (dir / "a").string()});
    auto b = common;
    b.insert(b.end(), {"--jobs", "3", "-o", (dir / "b").string()});
    ASSERT_EQ(run(a).code, 0);
    ASSERT_EQ(run(b).code, 0);
    EXPECT_EQ(read_file(dir / "a" / "grid.csv"), read_file(dir / "b" / "grid.csv"));
    EXPECT_EQ(read_file(dir / "a" / "baseline.csv"), read_file(dir / "b" / "baseline.csv"));
}

TEST(CliEvaluate, FullGridSmokeRun) {
    TempDir dir;
    const auto start = std::chrono::steady_clock::now();
    const auto r = run({"evaluate", "--config", SPARSEPICK_CONFIG_DIR "/moderate.json", "--replicates", "1", "-o",
                        dir.path().string()});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(lines(read_file(dir / "grid.csv")).size(), 1041u);
    EXPECT_LT(seconds, 60.0);
}

TEST(CliEvaluate, InterruptedRunKeepsCompletedRows) {
    TempDir dir;
    const pid_t pid = ::fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
        const std::string out = dir.path().string();
        const int devnull = ::open("/dev/null", O_WRONLY);
        ::dup2(devnull, 2);
        ::execl(SPARSEPICK_EXE, SPARSEPICK_EXE, "evaluate", "--preset", "moderate", "--replicates", "3", "-o",
                out.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    // Kill the run once a few cells are on disk.
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
    while (std::chrono::steady_clock::now() < deadline && lines(read_file(dir / "grid.csv")).size() < 4) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ::kill(pid, SIGKILL);
    int status = 0;
    ::waitpid(pid, &status, 0);
    ASSERT_TRUE(WIFSIGNALED(status));

    const std::string text = read_file(dir / "grid.csv");
    ASSERT_FALSE(text.empty());
    EXPECT_EQ(text.back(), '\n');
    const auto rows = lines(text);
    EXPECT_GE(rows.size(), 4u);
    EXPECT_LT(rows.size(), 1041u);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(std::count(rows[i].begin(), rows[i].end(), ','), 6) << rows[i];
}

TEST(CliSelectAlpha, PrintsChosenAlpha) {
    TempDir dir;
    const fs::path csv = simulate(dir);
    const auto r = run({"select-alpha", csv.string(), "-C", "150", "--candidates", "1:1:10", "-o",
                        (dir / "sel").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto sel = read_json(dir / "sel" / "select_alpha.json");
    EXPECT_EQ(r.out, format_double(sel.at("alpha").get<double>()) + "\n");
    EXPECT_FALSE(sel.at("warning").get<bool>());
}

TEST(CliSelectAlpha, WarnsWhenNothingQualifies) {
    TempDir dir;
    const fs::path csv = simulate(dir);
    const auto r = run({"select-alpha", csv.string(), "--candidates", "1000,2000", "-o", (dir / "sel").string()});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "1000\n");
    EXPECT_NE(r.err.find("no candidate"), std::string::npos);
}

TEST(CliConfig, FlagsOverrideFile) {
    TempDir dir;
    const auto cfg = dir.write("c.json", R"({"simulation": {"num_spectra": 10, "seed": 3}, "jobs": 1})");
    ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--num-spectra", "6", "-o", (dir / "o").string()}).code, 0);
    const auto resolved = read_json(dir / "o" / "resolved_config.json");
    EXPECT_EQ(resolved.at("simulation").at("num_spectra"), 6);
    EXPECT_EQ(resolved.at("simulation").at("seed"), 3);
    EXPECT_EQ(resolved.at("jobs"), 1);
}

TEST(CliConfig, ResolvedConfigReloads) {
    TempDir dir;
    ASSERT_EQ(run({"simulate", "--preset", "high", "--seed", "5", "-o", (dir / "a").string()}).code, 0);
    ASSERT_EQ(run({"simulate", "--config", (dir / "a" / "resolved_config.json").string(), "-o", (dir / "b").string()})
                  .code,
              0);
    EXPECT_EQ(read_file(dir / "a" / "spectra.csv"), read_file(dir / "b" / "spectra.csv"));
}

TEST(CliConfig, UnknownKeyAndBadJson) {
    TempDir dir;
    const auto bad_key = dir.write("a.json", R"({"simulation": {"noise": 1}})");
    auto r = run({"simulate", "--config", bad_key.string(), "-o", dir.path().string()});
    EXPECT_EQ(r.code, cli::kConfigError);
    EXPECT_NE(r.err.find("noise"), std::string::npos);
    const auto bad_json = dir.write("b.json", "{");
    EXPECT_EQ(run({"simulate", "--config", bad_json.string(), "-o", dir.path().string()}).code, cli::kConfigError);
    EXPECT_EQ(run({"simulate", "--config", (dir / "none.json").string()}).code, cli::kConfigError);
}

TEST(CliConfig, PresetFilesLoad) {
    for (const char* name : {"moderate.json", "high.json"}) {
        cli::RunConfig cfg;
        cli::apply_config_file(fs::path(SPARSEPICK_CONFIG_DIR) / name, cfg, std::nullopt);
        EXPECT_EQ(cfg.grid.alphas.size(), 10u);
        EXPECT_EQ(cfg.grid.norm_bounds.size(), 26u);
        EXPECT_EQ(cfg.grid.betas.size(), 4u);
        EXPECT_EQ(cfg.grid.replicates, 100u);
        EXPECT_NO_THROW(cfg.hp.validate());
    }
}

TEST(CliUsage, HelpAndErrors) {
    EXPECT_EQ(run({"--help"}).code, 0);
    EXPECT_EQ(run({"evaluate", "--help"}).code, 0);
    EXPECT_EQ(run({}).code, cli::kConfigError);
    EXPECT_EQ(run({"frobnicate"}).code, cli::kConfigError);
    EXPECT_EQ(run({"fit", "--alpha", "abc"}).code, cli::kConfigError);
}

TEST(ParseRange, Forms) {
    EXPECT_EQ(cli::parse_range("1:1:10").size(), 10u);
    EXPECT_EQ(cli::parse_range("50:10:300").size(), 26u);
    EXPECT_EQ(cli::parse_range("50:10:300").back(), 300.0);
    EXPECT_EQ(cli::parse_range("1, 0.1,1e-5"), (std::vector<double>{1, 0.1, 1e-5}));
    EXPECT_EQ(cli::parse_range("7"), (std::vector<double>{7}));
    EXPECT_THROW(cli::parse_range("1:0:3"), InvalidParameter);
    EXPECT_THROW(cli::parse_range("3:1:1"), InvalidParameter);
    EXPECT_THROW(cli::parse_range("1:2"), InvalidParameter);
    EXPECT_THROW(cli::parse_range("a,b"), InvalidParameter);
    EXPECT_THROW(cli::parse_range(""), InvalidParameter);
}
