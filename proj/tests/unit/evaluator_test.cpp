#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include <sparsepick/errors.hpp>
#include <sparsepick/evaluator.hpp>

using namespace sparsepick;

namespace {

const std::vector<Index> kTruth = {15, 30, 45, 60, 75, 90};

SimConfig noiseless_preset() {
    SimConfig cfg = sim_preset("moderate");
    cfg.noise_sigma = 0.0;
    cfg.spurious_count = 0;
    return cfg;
}

GridSpec small_grid() {
    GridSpec g;
    g.alphas = {3.0, 4.0};
    g.norm_bounds = {150.0, 200.0, 250.0};
    g.betas = {1e-10};
    g.replicates = 3;
    g.base_seed = 5;
    return g;
}

}  // namespace

TEST(Score, ExactMatch) {
    const Score s = score(kTruth, kTruth);
    EXPECT_EQ(s.accuracy, 1.0);
    EXPECT_EQ(s.false_positives, 0);
    EXPECT_EQ(s.matched.size(), 6u);
}

TEST(Score, OneExtraFarBin) {
    std::vector<Index> found = kTruth;
    found.push_back(105);
    const Score s = score(found, kTruth);
    EXPECT_EQ(s.accuracy, 1.0);
    EXPECT_EQ(s.false_positives, 1);
}

TEST(Score, HalfFoundTwoExtras) {
    const Score s = score({16, 45, 59, 3, 100}, kTruth, 1);
    EXPECT_DOUBLE_EQ(s.accuracy, 0.5);
    EXPECT_EQ(s.false_positives, 2);
    EXPECT_EQ(s.match_tol, 1);
}

TEST(Score, ToleranceZeroIsExact) {
    const Score s = score({16, 45}, kTruth, 0);
    EXPECT_DOUBLE_EQ(s.accuracy, 1.0 / 6.0);
    EXPECT_EQ(s.false_positives, 1);
}

TEST(Score, OneToOneMatching) {
    // Two found peaks next to one truth peak: only one of them can match.
    const Score s = score({29, 31}, {30}, 1);
    EXPECT_EQ(s.accuracy, 1.0);
    EXPECT_EQ(s.false_positives, 1);
    // Nearest pairs go first: 30 takes 30, leaving 31 for 32.
    const Score t = score({30, 31}, {30, 32}, 1);
    EXPECT_EQ(t.accuracy, 1.0);
    EXPECT_EQ(t.false_positives, 0);
}

TEST(Score, InvariantUnderPermutation) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Index> found;
        for (int i = 0; i < 8; ++i) found.push_back(static_cast<Index>(rng() % 110));
        std::sort(found.begin(), found.end());
        found.erase(std::unique(found.begin(), found.end()), found.end());
        const Score ref = score(found, kTruth, 1);
        EXPECT_GE(ref.accuracy, 0.0);
        EXPECT_LE(ref.accuracy, 1.0);
        EXPECT_GE(ref.false_positives, 0);
        for (int k = 0; k < 5; ++k) {
            std::shuffle(found.begin(), found.end(), rng);
            const Score s = score(found, kTruth, 1);
            EXPECT_EQ(s.accuracy, ref.accuracy);
            EXPECT_EQ(s.false_positives, ref.false_positives);
        }
    }
}

TEST(Score, PerfectIffSetsAgreeWithinTolerance) {
    EXPECT_EQ(score({16, 29, 45, 61, 75, 89}, kTruth, 1).false_positives, 0);
    EXPECT_EQ(score({16, 29, 45, 61, 75, 89}, kTruth, 1).accuracy, 1.0);
    EXPECT_LT(score({17, 29, 45, 61, 75, 89}, kTruth, 1).accuracy, 1.0);
}

TEST(Score, LineSpectrumOverload) {
    SimGroundTruth truth;
    truth.union_positions = kTruth;
    const LineSpectrum ls({{15, 1.0}, {50, 0.5}}, 110);
    const Score s = score(ls, truth, 1);
    EXPECT_DOUBLE_EQ(s.accuracy, 1.0 / 6.0);
    EXPECT_EQ(s.false_positives, 1);
}

TEST(Baseline, IdenticalSpectraEqualSinglePick) {
    SimConfig cfg = sim_preset("moderate");
    cfg.seed = 3;
    const Vector one = generate(cfg).spectra.data().col(0);
    const SpectraMatrix many(one.replicate(1, 7));
    const PickerParams p;
    // The mean of 7 copies can differ from the copy in the last ulp.
    const LineSpectrum a = mean_spectrum_baseline(many, p);
    const LineSpectrum b = pick_vector(one, p);
    ASSERT_EQ(a.positions(), b.positions());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.peaks()[i].intensity, b.peaks()[i].intensity, 1e-12);
}

TEST(Baseline, NoiselessFindsAllPeaks) {
    const SimDataset d = generate(noiseless_preset());
    const Score s = score(mean_spectrum_baseline(d.spectra, PickerParams{}), d.truth);
    EXPECT_EQ(s.accuracy, 1.0);
    EXPECT_EQ(s.false_positives, 0);
}

TEST(Pipeline, NoiselessAccuracyOne) {
    const SimDataset d = generate(noiseless_preset());
    HyperParams hp;
    hp.alpha = 3.0;
    hp.norm_bound = 150.0;
    const PipelineResult r = run_pipeline(d.spectra, hp, PickerParams{});
    EXPECT_EQ(score(r.peaks, d.truth).accuracy, 1.0);
    EXPECT_EQ(r.peaks.peaks(), r.picks.merged.peaks());
}

TEST(Pipeline, EmptyActiveSetPropagates) {
    const SimDataset d = generate(noiseless_preset());
    HyperParams hp;
    hp.alpha = 1e6;
    EXPECT_THROW(run_pipeline(d.spectra, hp, PickerParams{}), NoActiveAtoms);
}

TEST(Pipeline, ModerateReplicateTemplatesCaught) {
    SimConfig cfg = sim_preset("moderate");
    cfg.seed = replicate_seeds(0, 1)[0];
    const SimDataset d = generate(cfg);
    HyperParams hp;
    hp.alpha = 3.0;
    hp.norm_bound = 150.0;
    const FitResult r = fit(d.spectra, hp);
    for (double corr : template_correspondence(r, d.templates)) EXPECT_GE(corr, 0.9);

    // Per-class means from the labels give the same picture.
    Matrix means = Matrix::Zero(cfg.length, 2);
    for (Index c = 0; c < d.spectra.count(); ++c) means.col(d.truth.class_of_spectrum[c]) += d.spectra.data().col(c);
    means /= static_cast<double>(d.spectra.count() / 2);
    for (double corr : template_correspondence(r, means)) EXPECT_GE(corr, 0.9);
}

TEST(Pearson, KnownValues) {
    Vector a(4), b(4);
    a << 1, 2, 3, 4;
    b << 2, 4, 6, 8;
    EXPECT_NEAR(pearson(a, b), 1.0, 1e-15);
    EXPECT_NEAR(pearson(a, -b), -1.0, 1e-15);
    b << 1, -1, -1, 1;
    EXPECT_NEAR(pearson(a, b), 0.0, 1e-15);
    EXPECT_EQ(pearson(a, Vector::Constant(4, 3.0)), 0.0);
    EXPECT_THROW(pearson(a, Vector::Zero(3)), DimensionMismatch);
}

TEST(MatrixChecksum, SensitiveToContent) {
    Matrix a = Matrix::Ones(3, 2);
    Matrix b = a;
    EXPECT_EQ(matrix_checksum(a), matrix_checksum(b));
    b(2, 1) = std::nextafter(1.0, 2.0);
    EXPECT_NE(matrix_checksum(a), matrix_checksum(b));
}

TEST(GridSearch, DegenerateGridEqualsSingleRun) {
    const SimConfig cfg = sim_preset("moderate");
    GridSpec g;
    g.alphas = {3.0};
    g.norm_bounds = {150.0};
    g.betas = {1e-10};
    g.replicates = 1;
    g.base_seed = 11;
    HyperParams hp;
    const PickerParams p;
    const GridResult r = grid_search(cfg, g, hp, p);
    ASSERT_EQ(r.cells.size(), 1u);

    SimConfig rep = cfg;
    rep.seed = replicate_seeds(11, 1)[0];
    const SimDataset d = generate(rep);
    hp.alpha = 3.0;
    hp.norm_bound = 150.0;
    hp.beta = 1e-10;
    hp.seed = rep.seed;
    const Score s = score(run_pipeline(d.spectra, hp, p).peaks, d.truth);
    EXPECT_EQ(r.cells[0].mean_accuracy, s.accuracy);
    EXPECT_EQ(r.cells[0].mean_fp, static_cast<double>(s.false_positives));
    const Score b = score(mean_spectrum_baseline(d.spectra, p), d.truth);
    EXPECT_EQ(r.baseline_accuracy, b.accuracy);
    EXPECT_EQ(r.baseline_fp, static_cast<double>(b.false_positives));
    EXPECT_EQ(r.replicate_checksums[0], matrix_checksum(d.spectra.data()));
}

TEST(GridSearch, DeterministicAndComparable) {
    const SimConfig cfg = sim_preset("moderate");
    const GridSpec g = small_grid();
    const GridResult a = grid_search(cfg, g, HyperParams{}, PickerParams{}, 1);
    const GridResult b = grid_search(cfg, g, HyperParams{}, PickerParams{}, 3);
    ASSERT_EQ(a.cells.size(), 6u);
    EXPECT_EQ(a.replicate_count, 3u);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        EXPECT_EQ(a.cells[i].mean_accuracy, b.cells[i].mean_accuracy);
        EXPECT_EQ(a.cells[i].mean_fp, b.cells[i].mean_fp);
        EXPECT_EQ(a.cells[i].data_checksum, a.expected_checksum);
    }
    EXPECT_EQ(a.baseline_accuracy, b.baseline_accuracy);
}

TEST(GridSearch, CellOrderAndLookup) {
    GridSpec g = small_grid();
    g.betas = {1.0, 1e-10};
    g.replicates = 1;
    std::vector<GridCell> streamed;
    const GridResult r = grid_search(sim_preset("moderate"), g, HyperParams{}, PickerParams{}, 2,
                                     [&](const GridCell& c) { streamed.push_back(c); });
    ASSERT_EQ(streamed.size(), r.cells.size());
    for (std::size_t i = 0; i < r.cells.size(); ++i) EXPECT_EQ(streamed[i].alpha, r.cells[i].alpha);
    for (std::size_t bi = 0; bi < 2; ++bi)
        for (std::size_t ai = 0; ai < 2; ++ai)
            for (std::size_t ci = 0; ci < 3; ++ci) {
                const GridCell& c = r.cell(ai, ci, bi);
                EXPECT_EQ(c.alpha, g.alphas[ai]);
                EXPECT_EQ(c.norm_bound, g.norm_bounds[ci]);
                EXPECT_EQ(c.beta, g.betas[bi]);
            }
    EXPECT_EQ(r.cells.front().beta, 1.0);
    EXPECT_EQ(r.cells[1].norm_bound, 200.0);
}

TEST(GridSearch, FailedCellsAreFlagged) {
    GridSpec g = small_grid();
    g.alphas = {1e6};
    g.norm_bounds = {100.0};
    const GridResult r = grid_search(sim_preset("moderate"), g, HyperParams{}, PickerParams{});
    ASSERT_EQ(r.cells.size(), 1u);
    EXPECT_EQ(r.cells[0].n_failed, 3);
    EXPECT_EQ(r.cells[0].mean_accuracy, 0.0);
    EXPECT_EQ(r.cells[0].mean_fp, 0.0);
}

TEST(GridSearch, RejectsEmptyAxes) {
    GridSpec g = small_grid();
    g.alphas.clear();
    EXPECT_THROW(grid_search(sim_preset("moderate"), g, HyperParams{}, PickerParams{}), InvalidParameter);
    g = small_grid();
    g.replicates = 0;
    EXPECT_THROW(grid_search(sim_preset("moderate"), g, HyperParams{}, PickerParams{}), InvalidParameter);
}

TEST(SelectAlpha, AllQualifyGivesLargest) {
    SimConfig cfg = sim_preset("moderate");
    cfg.seed = 2;
    const SpectraMatrix x = generate(cfg).spectra;
    HyperParams hp;
    hp.norm_bound = 150.0;
    const AlphaSelection s = select_alpha(x, 1, {0.5, 1.0, 1.5}, hp);
    EXPECT_EQ(s.alpha, 1.5);
    EXPECT_FALSE(s.warning);
}

TEST(SelectAlpha, NoneQualifyFallsBack) {
    SimConfig cfg = sim_preset("moderate");
    const SpectraMatrix x = generate(cfg).spectra;
    const AlphaSelection s = select_alpha(x, 2, {1e5, 1e6}, HyperParams{});
    EXPECT_EQ(s.alpha, 1e5);
    EXPECT_TRUE(s.warning);
}

TEST(SelectAlpha, ChoosesLastCandidateBeforeDrop) {
    SimConfig cfg = sim_preset("moderate");
    cfg.seed = 7;
    const SpectraMatrix x = generate(cfg).spectra;
    HyperParams hp;
    hp.norm_bound = 150.0;
    std::vector<double> candidates;
    for (int a = 1; a <= 10; ++a) candidates.push_back(a);
    const AlphaSelection s = select_alpha(x, 2, candidates, hp);
    ASSERT_FALSE(s.warning);
    ASSERT_EQ(s.atom_counts.size(), candidates.size());
    // Recompute the counts independently and take the maximum qualifying candidate.
    double expected = 0.0;
    bool dropped = false;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        HyperParams h = hp;
        h.alpha = candidates[i];
        const std::size_t n = fit(x, h).active_set.size();
        EXPECT_EQ(s.atom_counts[i], n);
        if (n >= 2) expected = candidates[i];
        dropped = dropped || n < 2;
    }
    EXPECT_TRUE(dropped);
    EXPECT_EQ(s.alpha, expected);
    EXPECT_LT(s.alpha, 10.0);
}

TEST(SelectAlpha, RejectsBadCandidates) {
    const SpectraMatrix x = generate(sim_preset("moderate")).spectra;
    EXPECT_THROW(select_alpha(x, 2, {}, HyperParams{}), InvalidParameter);
    EXPECT_THROW(select_alpha(x, 2, {3.0, 2.0}, HyperParams{}), InvalidParameter);
    EXPECT_THROW(select_alpha(x, 0, {1.0}, HyperParams{}), InvalidParameter);
}
