#pragma once

#include <filesystem>

#include "sparsepick/spectra_model.hpp"

namespace sparsepick {

enum class Orientation {
    SpectraAsColumns,  ///< one row per mz bin, one column per spectrum
    SpectraAsRows,     ///< one row per spectrum
};

/// Loads a rectangular numeric CSV as a column-oriented SpectraMatrix.
///
/// With `with_mz_axis`, the mz values are read from the first row (rows
/// orientation) or the first column (columns orientation).
SpectraMatrix load_spectra(const std::filesystem::path& path, Orientation orientation,
                           bool with_mz_axis = false);

/// Writes spectra with 17 significant digits so a reload is bit-exact.
void save_spectra(const SpectraMatrix& spectra, const std::filesystem::path& path,
                  Orientation orientation = Orientation::SpectraAsColumns);

/// Headerless dense matrix CSV, 17 significant digits.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);

/// `position,intensity` CSV, or `mz,intensity` when an mz axis is attached.
void save_line_spectrum(const LineSpectrum& ls, const std::filesystem::path& path);

/// Shortest text that round-trips to the same double (at most 17 digits).
std::string format_double(double value);

}  // namespace sparsepick
