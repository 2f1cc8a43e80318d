#include "sparsepick/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "sparsepick/errors.hpp"

namespace sparsepick {

std::string to_string(SpuriousPlacement placement) {
    return placement == SpuriousPlacement::PerDataset ? "per_dataset" : "per_spectrum";
}

SpuriousPlacement spurious_placement_from_string(const std::string& name) {
    if (name == "per_dataset") return SpuriousPlacement::PerDataset;
    if (name == "per_spectrum") return SpuriousPlacement::PerSpectrum;
    throw InvalidParameter("unknown spurious placement '" + name + "' (expected per_dataset|per_spectrum)");
}

std::vector<std::vector<Index>> SimConfig::resolved_positions() const {
    if (!class_peak_positions.empty()) {
        auto out = class_peak_positions;
        for (auto& p : out) std::sort(p.begin(), p.end());
        return out;
    }
    const int total = num_classes * peaks_per_class;
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(std::max(num_classes, 0)));
    const double spacing = static_cast<double>(length) / (total + 1);
    for (int k = 0; k < total; ++k) {
        out[static_cast<std::size_t>(k % num_classes)].push_back(static_cast<Index>(std::lround((k + 1) * spacing)));
    }
    return out;
}

void SimConfig::validate() const {
    if (length < 3) throw InvalidParameter("simulated spectra need at least 3 bins");
    if (num_spectra < 1) throw InvalidParameter("num_spectra must be >= 1");
    if (num_classes < 1) throw InvalidParameter("num_classes must be >= 1");
    if (peaks_per_class < 1) throw InvalidParameter("peaks_per_class must be >= 1");
    if (!class_peak_positions.empty() && static_cast<int>(class_peak_positions.size()) != num_classes) {
        throw InvalidParameter("class_peak_positions lists " + std::to_string(class_peak_positions.size()) +
                               " classes, num_classes is " + std::to_string(num_classes));
    }
    if (!(peak_height > 0.0)) throw InvalidParameter("peak_height must be > 0");
    if (!(peak_height_jitter >= 0.0)) throw InvalidParameter("peak_height_jitter must be >= 0");
    if (!(peak_sigma > 0.0)) throw InvalidParameter("peak_sigma must be > 0");
    if (spurious_count < 0) throw InvalidParameter("spurious_count must be >= 0");
    if (!(spurious_height_fraction > 0.0 && spurious_height_fraction < 1.0)) {
        throw InvalidParameter("spurious_height_fraction must lie in (0, 1)");
    }
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw InvalidParameter("noise_sigma must be >= 0");
    if (guard_min_width < 0) throw InvalidParameter("guard_min_width must be >= 0");

    std::set<Index> seen;
    for (const auto& cls : resolved_positions()) {
        if (cls.empty()) throw InvalidParameter("every class needs at least one peak position");
        for (Index p : cls) {
            if (p < 0 || p >= length) throw InvalidParameter("peak position " + std::to_string(p) + " outside [0, L)");
            if (!seen.insert(p).second) {
                throw InvalidParameter("peak position " + std::to_string(p) + " is shared between classes");
            }
        }
    }
}

SimConfig sim_preset(const std::string& name) {
    // Calibrated against the mean-spectrum baseline; config/<name>.json holds the same values.
    SimConfig cfg;
    cfg.peak_height = 0.15;
    cfg.spurious_count = 6;
    cfg.spurious_height_fraction = 0.4;
    cfg.spurious_placement = SpuriousPlacement::PerDataset;
    if (name == "moderate") {
        cfg.noise_sigma = 0.027;  // 0.18 h
        return cfg;
    }
    if (name == "high") {
        cfg.noise_sigma = 0.045;  // 0.30 h
        return cfg;
    }
    throw InvalidParameter("unknown preset '" + name + "' (valid presets: moderate, high)");
}

std::vector<std::string> sim_preset_names() { return {"moderate", "high"}; }

namespace {

void add_gaussian(Eigen::Ref<Vector> spectrum, double center, double height, double sigma) {
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (Index i = 0; i < spectrum.size(); ++i) {
        const double d = static_cast<double>(i) - center;
        spectrum(i) += height * std::exp(-d * d * inv);
    }
}

std::vector<Index> legal_spurious_positions(const SimConfig& cfg, const std::vector<Index>& truth) {
    const Index guard = 2 * static_cast<Index>(cfg.guard_min_width);
    std::vector<Index> legal;
    for (Index i = 0; i < cfg.length; ++i) {
        const bool clear = std::all_of(truth.begin(), truth.end(), [&](Index p) { return std::abs(i - p) > guard; });
        if (clear) legal.push_back(i);
    }
    return legal;
}

}  // namespace

SimGroundTruth ground_truth(const SimConfig& cfg) {
    cfg.validate();
    SimGroundTruth truth;
    truth.true_positions = cfg.resolved_positions();
    for (const auto& cls : truth.true_positions) {
        truth.union_positions.insert(truth.union_positions.end(), cls.begin(), cls.end());
    }
    std::sort(truth.union_positions.begin(), truth.union_positions.end());
    truth.class_of_spectrum.resize(static_cast<std::size_t>(cfg.num_spectra));
    for (Index r = 0; r < cfg.num_spectra; ++r) {
        truth.class_of_spectrum[static_cast<std::size_t>(r)] = static_cast<int>(r % cfg.num_classes);
    }
    return truth;
}

Matrix class_templates(const SimConfig& cfg) {
    const auto positions = cfg.resolved_positions();
    Matrix templates = Matrix::Zero(cfg.length, static_cast<Index>(positions.size()));
    for (std::size_t c = 0; c < positions.size(); ++c) {
        for (Index p : positions[c]) {
            add_gaussian(templates.col(static_cast<Index>(c)), static_cast<double>(p), cfg.peak_height, cfg.peak_sigma);
        }
    }
    return templates;
}

SimDataset generate(const SimConfig& cfg) {
    SimGroundTruth truth = ground_truth(cfg);
    const std::vector<Index> legal = legal_spurious_positions(cfg, truth.union_positions);
    if (cfg.spurious_count > 0 && legal.empty()) {
        throw InvalidParameter("the guard band around true peaks leaves no position for spurious peaks");
    }

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_legal(0, legal.empty() ? 0 : legal.size() - 1);

    Matrix data = Matrix::Zero(cfg.length, cfg.num_spectra);
    const double spurious_height = cfg.spurious_height_fraction * cfg.peak_height;
    std::vector<Index> shared_spurious;
    if (cfg.spurious_placement == SpuriousPlacement::PerDataset) {
        for (int k = 0; k < cfg.spurious_count; ++k) shared_spurious.push_back(legal[pick_legal(rng)]);
    }
    for (Index r = 0; r < cfg.num_spectra; ++r) {
        auto spectrum = data.col(r);
        const auto cls = static_cast<std::size_t>(truth.class_of_spectrum[static_cast<std::size_t>(r)]);
        for (Index p : truth.true_positions[cls]) {
            const double h = std::max(cfg.peak_height * (1.0 + cfg.peak_height_jitter * normal(rng)),
                                      0.5 * cfg.peak_height);
            add_gaussian(spectrum, static_cast<double>(p), h, cfg.peak_sigma);
        }
        for (int k = 0; k < cfg.spurious_count; ++k) {
            const Index at = cfg.spurious_placement == SpuriousPlacement::PerDataset
                                 ? shared_spurious[static_cast<std::size_t>(k)]
                                 : legal[pick_legal(rng)];
            add_gaussian(spectrum, static_cast<double>(at), spurious_height, cfg.peak_sigma);
        }
        if (cfg.noise_sigma > 0.0) {
            for (Index i = 0; i < cfg.length; ++i) spectrum(i) += cfg.noise_sigma * normal(rng);
        }
    }

    Matrix templates = class_templates(cfg);
    for (Index at : shared_spurious) {
        for (Index c = 0; c < templates.cols(); ++c) {
            add_gaussian(templates.col(c), static_cast<double>(at), spurious_height, cfg.peak_sigma);
        }
    }
    SpectraMatrix spectra(std::move(data), std::nullopt, truth.class_of_spectrum);
    return SimDataset{std::move(spectra), std::move(truth), std::move(templates)};
}

std::vector<std::uint64_t> replicate_seeds(std::uint64_t base_seed, std::size_t n) {
    // splitmix64 stream; its output function is a bijection, so distinct states give distinct seeds.
    std::vector<std::uint64_t> seeds;
    seeds.reserve(n);
    std::uint64_t state = base_seed;
    for (std::size_t i = 0; i < n; ++i) {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        seeds.push_back(z ^ (z >> 31));
    }
    return seeds;
}

}  // namespace sparsepick
