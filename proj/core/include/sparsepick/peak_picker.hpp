#pragma once

#include <vector>

#include "sparsepick/sparse_coder.hpp"
#include "sparsepick/spectra_model.hpp"

namespace sparsepick {

enum class CentralStatistic { Mean, Median };

struct PickerParams {
    /// A local maximum is a peak when it exceeds multiplier * (mean or median) of the vector.
    double multiplier = 2.5;
    CentralStatistic statistic = CentralStatistic::Mean;
    /// Minimal peak width in bins used by the area check.
    int min_width = 3;
    /// Kept peaks have area >= area_factor * (triangle of the peak's height and min_width base).
    double area_factor = 0.5;
    /// Peaks from different atoms at most this many bins apart are merged.
    int merge_tol = 1;

    void validate() const;
};

/// Sign-aligns v so its largest-magnitude entry is positive, then scales that entry to 1.
Vector normalize(const Vector& v);

/// Local maxima (first index of a plateau) whose height exceeds multiplier * mean(v).
LineSpectrum detect_peaks(const Vector& v, double multiplier,
                          CentralStatistic statistic = CentralStatistic::Mean);

/// Trapezoidal area of max(v, 0) over [i - min_width/2, i + min_width/2] clipped to the signal.
double peak_area(const Vector& v, Index center, int min_width);

/// Drops candidates whose area at some width w in 2..min_width is below area_factor * v[i] * w / 2.
LineSpectrum filter_by_area(const Vector& v, const LineSpectrum& candidates, const PickerParams& p);

/// normalize -> detect_peaks -> filter_by_area on one vector.
LineSpectrum pick_vector(const Vector& v, const PickerParams& p);

/// Union of peak lists where peaks within merge_tol bins collapse onto the
/// one with the highest intensity (ties keep the lower index).
LineSpectrum merge_peaks(const std::vector<LineSpectrum>& lists, int merge_tol, Index length);

struct DictionaryPeaks {
    LineSpectrum merged;
    /// One list per entry of `atoms`, in the same order.
    std::vector<LineSpectrum> per_atom;
    std::vector<Index> atoms;
};

/// Picks peaks on every active atom of a fit; throws NoActiveAtoms when none is active.
DictionaryPeaks pick_from_dictionary(const FitResult& fit, const PickerParams& p);

}  // namespace sparsepick
