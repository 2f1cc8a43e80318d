#include "sparsepick/spectra_model.hpp"

#include <cmath>
#include <string>

#include "sparsepick/errors.hpp"

namespace sparsepick {

SpectraMatrix::SpectraMatrix(Matrix data, std::optional<std::vector<double>> mz_axis,
                             std::optional<std::vector<int>> class_labels)
    : data_(std::move(data)), mz_axis_(std::move(mz_axis)), class_labels_(std::move(class_labels)) {
    if (data_.rows() < 2) {
        throw FormatError("spectra need at least 2 bins, got " + std::to_string(data_.rows()));
    }
    if (data_.cols() < 1) {
        throw FormatError("spectra matrix has no columns");
    }
    if (!data_.allFinite()) {
        throw FormatError("spectra matrix contains non-finite values");
    }
    if (mz_axis_) {
        if (static_cast<Index>(mz_axis_->size()) != data_.rows()) {
            throw FormatError("mz axis has " + std::to_string(mz_axis_->size()) + " values for " +
                              std::to_string(data_.rows()) + " bins");
        }
        for (std::size_t i = 1; i < mz_axis_->size(); ++i) {
            if (!((*mz_axis_)[i] > (*mz_axis_)[i - 1])) {
                throw FormatError("mz axis is not strictly increasing at bin " + std::to_string(i));
            }
        }
    }
    if (class_labels_ && static_cast<Index>(class_labels_->size()) != data_.cols()) {
        throw FormatError("class labels do not match the number of spectra");
    }
}

Dictionary::Dictionary(Matrix atoms, double norm_bound) : atoms_(std::move(atoms)), norm_bound_(norm_bound) {
    if (!(norm_bound_ > 0.0) || !std::isfinite(norm_bound_)) {
        throw InvalidParameter("norm bound C must be positive and finite");
    }
    if (!atoms_.allFinite()) {
        throw InvalidParameter("dictionary contains non-finite values");
    }
    const double limit = norm_bound_ * (1.0 + kNormBoundTolerance);
    for (Index j = 0; j < atoms_.cols(); ++j) {
        if (atoms_.col(j).squaredNorm() > limit) {
            throw InvalidParameter("dictionary atom " + std::to_string(j) + " violates the norm bound");
        }
    }
}

double Dictionary::max_squared_norm() const {
    if (atoms_.cols() == 0) return 0.0;
    return atoms_.colwise().squaredNorm().maxCoeff();
}

CodeMatrix::CodeMatrix(Matrix codes) : codes_(std::move(codes)) {
    if (!codes_.allFinite()) {
        throw InvalidParameter("code matrix contains non-finite values");
    }
}

std::vector<Index> CodeMatrix::active_rows(double eps) const {
    std::vector<Index> rows;
    for (Index k = 0; k < codes_.rows(); ++k) {
        if (codes_.cols() > 0 && codes_.row(k).cwiseAbs().maxCoeff() > eps) rows.push_back(k);
    }
    return rows;
}

LineSpectrum::LineSpectrum(std::vector<Peak> peaks, Index length) : peaks_(std::move(peaks)), length_(length) {
    for (std::size_t i = 0; i < peaks_.size(); ++i) {
        const Peak& p = peaks_[i];
        if (p.index < 0 || p.index >= length_) {
            throw InvalidParameter("peak index " + std::to_string(p.index) + " outside [0, " +
                                   std::to_string(length_) + ")");
        }
        if (!std::isfinite(p.intensity)) {
            throw InvalidParameter("peak intensity at index " + std::to_string(p.index) + " is not finite");
        }
        if (i > 0 && !(p.index > peaks_[i - 1].index)) {
            throw InvalidParameter("peak indices must be strictly increasing (index " + std::to_string(p.index) +
                                   ")");
        }
    }
}

std::vector<Index> LineSpectrum::positions() const {
    std::vector<Index> out;
    out.reserve(peaks_.size());
    for (const Peak& p : peaks_) out.push_back(p.index);
    return out;
}

LineSpectrum LineSpectrum::with_mz_axis(const std::vector<double>& axis) const {
    if (static_cast<Index>(axis.size()) != length_) {
        throw DimensionMismatch("mz axis length does not match the signal length");
    }
    LineSpectrum out = *this;
    std::vector<double> mz;
    mz.reserve(peaks_.size());
    for (const Peak& p : peaks_) mz.push_back(axis[static_cast<std::size_t>(p.index)]);
    out.mz_positions_ = std::move(mz);
    return out;
}

}  // namespace sparsepick
