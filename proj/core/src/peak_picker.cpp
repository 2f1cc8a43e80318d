#include "sparsepick/peak_picker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sparsepick/errors.hpp"

namespace sparsepick {

void PickerParams::validate() const {
    if (!(multiplier > 0.0)) throw InvalidParameter("multiplier must be > 0");
    if (min_width < 1) throw InvalidParameter("min_width must be >= 1");
    if (!(area_factor > 0.0)) throw InvalidParameter("area_factor must be > 0");
    if (merge_tol < 0) throw InvalidParameter("merge_tol must be >= 0");
}

Vector normalize(const Vector& v) {
    if (v.size() == 0) throw DegenerateInput("cannot normalize an empty vector");
    Index arg_max = 0;
    Index arg_min = 0;
    const double hi = v.maxCoeff(&arg_max);
    const double lo = v.minCoeff(&arg_min);
    if (hi == 0.0 && lo == 0.0) throw DegenerateInput("cannot normalize a zero vector");
    if (!std::isfinite(hi) || !std::isfinite(lo)) throw DegenerateInput("cannot normalize a non-finite vector");
    // An atom is defined up to sign; peaks are positive structures.
    if (-lo > hi) return v / lo;
    return v / hi;
}

namespace {

double central_value(const Vector& v, CentralStatistic statistic) {
    if (statistic == CentralStatistic::Mean) return v.mean();
    std::vector<double> values(v.data(), v.data() + v.size());
    const auto mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    double m = values[mid];
    if (values.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

}  // namespace

LineSpectrum detect_peaks(const Vector& v, double multiplier, CentralStatistic statistic) {
    const Index n = v.size();
    if (n < 3) throw InvalidParameter("peak detection needs at least 3 samples");
    const double threshold = multiplier * central_value(v, statistic);

    std::vector<Peak> peaks;
    Index i = 1;
    while (i < n - 1) {
        if (!(v(i - 1) < v(i))) {
            ++i;
            continue;
        }
        // Rising edge at i; walk across a plateau to find where the level changes.
        Index j = i;
        while (j + 1 < n && v(j + 1) == v(i)) ++j;
        const bool falls = j + 1 < n && v(j + 1) < v(i);
        if (falls && v(i) > threshold) peaks.push_back({i, v(i)});
        i = j + 1;
    }
    return LineSpectrum(std::move(peaks), n);
}

double peak_area(const Vector& v, Index center, int min_width) {
    const Index half = min_width / 2;
    const Index lo = std::max<Index>(0, center - half);
    const Index hi = std::min<Index>(v.size() - 1, center + half);
    double area = 0.0;
    for (Index k = lo; k < hi; ++k) area += 0.5 * (std::max(v(k), 0.0) + std::max(v(k + 1), 0.0));
    return area;
}

LineSpectrum filter_by_area(const Vector& v, const LineSpectrum& candidates, const PickerParams& p) {
    p.validate();
    std::vector<Peak> kept;
    for (const Peak& peak : candidates.peaks()) {
        if (peak.index < 0 || peak.index >= v.size()) {
            throw DimensionMismatch("candidate peak index outside the vector");
        }
        // Checked at every width up to min_width so a larger width never keeps more peaks.
        // Width 1 is no constraint at all.
        const double height = v(peak.index);
        bool wide_enough = true;
        for (int w = 2; w <= p.min_width && wide_enough; ++w) {
            const double reference = p.area_factor * height * static_cast<double>(w) / 2.0;
            wide_enough = peak_area(v, peak.index, w) >= reference;
        }
        if (wide_enough) kept.push_back(peak);
    }
    return LineSpectrum(std::move(kept), v.size());
}

LineSpectrum pick_vector(const Vector& v, const PickerParams& p) {
    p.validate();
    const Vector unit = normalize(v);
    return filter_by_area(unit, detect_peaks(unit, p.multiplier, p.statistic), p);
}

LineSpectrum merge_peaks(const std::vector<LineSpectrum>& lists, int merge_tol, Index length) {
    std::vector<Peak> all;
    for (const auto& ls : lists) all.insert(all.end(), ls.peaks().begin(), ls.peaks().end());
    std::stable_sort(all.begin(), all.end(), [](const Peak& a, const Peak& b) {
        if (a.intensity != b.intensity) return a.intensity > b.intensity;
        return a.index < b.index;
    });
    std::vector<Peak> kept;
    for (const Peak& candidate : all) {
        const bool covered = std::any_of(kept.begin(), kept.end(), [&](const Peak& k) {
            return std::abs(k.index - candidate.index) <= merge_tol;
        });
        if (!covered) kept.push_back(candidate);
    }
    std::sort(kept.begin(), kept.end(), [](const Peak& a, const Peak& b) { return a.index < b.index; });
    return LineSpectrum(std::move(kept), length);
}

DictionaryPeaks pick_from_dictionary(const FitResult& fit, const PickerParams& p) {
    p.validate();
    if (fit.active_set.empty()) {
        throw NoActiveAtoms("the fit has no active atoms; lower alpha to keep at least one basis vector");
    }
    const Matrix& atoms = fit.dictionary.atoms();
    DictionaryPeaks out;
    for (Index j : fit.active_set) {
        const Vector atom = atoms.col(j);
        LineSpectrum picked(std::vector<Peak>{}, atoms.rows());
        if (atom.cwiseAbs().maxCoeff() > 0.0) picked = pick_vector(atom, p);
        out.per_atom.push_back(std::move(picked));
        out.atoms.push_back(j);
    }
    out.merged = merge_peaks(out.per_atom, p.merge_tol, atoms.rows());
    return out;
}

}  // namespace sparsepick
