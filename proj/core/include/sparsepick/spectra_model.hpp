#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace sparsepick {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Rows of a code matrix whose largest magnitude exceeds this are active.
inline constexpr double kActivityEps = 1e-8;

/// Relative slack allowed on the squared column-norm bound of a dictionary.
inline constexpr double kNormBoundTolerance = 1e-9;

/// L x R matrix holding one spectrum per column.
class SpectraMatrix {
public:
    explicit SpectraMatrix(Matrix data,
                           std::optional<std::vector<double>> mz_axis = std::nullopt,
                           std::optional<std::vector<int>> class_labels = std::nullopt);

    const Matrix& data() const noexcept { return data_; }
    Index length() const noexcept { return data_.rows(); }
    Index count() const noexcept { return data_.cols(); }

    const std::optional<std::vector<double>>& mz_axis() const noexcept { return mz_axis_; }
    const std::optional<std::vector<int>>& class_labels() const noexcept { return class_labels_; }

private:
    Matrix data_;
    std::optional<std::vector<double>> mz_axis_;
    std::optional<std::vector<int>> class_labels_;
};

/// L x K matrix of basis vectors with squared column norms bounded by C.
class Dictionary {
public:
    Dictionary(Matrix atoms, double norm_bound);

    const Matrix& atoms() const noexcept { return atoms_; }
    double norm_bound() const noexcept { return norm_bound_; }
    Index length() const noexcept { return atoms_.rows(); }
    Index size() const noexcept { return atoms_.cols(); }

    /// Largest squared column norm.
    double max_squared_norm() const;

private:
    Matrix atoms_;
    double norm_bound_;
};

/// K x R matrix of sparse coefficients.
class CodeMatrix {
public:
    explicit CodeMatrix(Matrix codes);

    const Matrix& codes() const noexcept { return codes_; }
    Index atoms() const noexcept { return codes_.rows(); }
    Index count() const noexcept { return codes_.cols(); }

    /// Indices of rows holding an entry with magnitude above `eps`, ascending.
    std::vector<Index> active_rows(double eps = kActivityEps) const;

private:
    Matrix codes_;
};

struct Peak {
    Index index = 0;
    double intensity = 0.0;

    friend bool operator==(const Peak&, const Peak&) = default;
};

/// Detected peaks of a length-L signal, strictly increasing in index.
class LineSpectrum {
public:
    LineSpectrum() = default;
    LineSpectrum(std::vector<Peak> peaks, Index length);

    const std::vector<Peak>& peaks() const noexcept { return peaks_; }
    Index length() const noexcept { return length_; }
    std::size_t size() const noexcept { return peaks_.size(); }
    bool empty() const noexcept { return peaks_.empty(); }

    std::vector<Index> positions() const;

    /// Attaches an mz axis of length L; reported positions become mz values.
    LineSpectrum with_mz_axis(const std::vector<double>& axis) const;
    const std::optional<std::vector<double>>& mz_positions() const noexcept { return mz_positions_; }

private:
    std::vector<Peak> peaks_;
    Index length_ = 0;
    std::optional<std::vector<double>> mz_positions_;
};

}  // namespace sparsepick
