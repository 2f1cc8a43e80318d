#include "sparsepick/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sparsepick/errors.hpp"

namespace sparsepick {
namespace {

using Table = std::vector<std::vector<double>>;

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t column) {
    cell = trim(cell);
    if (cell.empty()) throw ParseError(row, column, "empty cell");
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || end != cell.data() + cell.size()) {
        throw ParseError(row, column, "not a number: '" + std::string(cell) + "'");
    }
    if (!std::isfinite(value)) throw ParseError(row, column, "non-finite value");
    return value;
}

/// Rows are numbered from 1 as they appear in the file; blank lines are skipped.
Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");

    Table table;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<double> row;
        std::string_view rest(line);
        std::size_t column = 1;
        while (true) {
            const auto comma = rest.find(',');
            row.push_back(parse_cell(rest.substr(0, comma), line_no, column));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
            ++column;
        }
        if (table.empty()) {
            width = row.size();
        } else if (row.size() != width) {
            throw FormatError("ragged CSV '" + path.string() + "': row " + std::to_string(line_no) + " has " +
                              std::to_string(row.size()) + " fields, expected " + std::to_string(width));
        }
        table.push_back(std::move(row));
    }
    if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
    if (table.empty()) throw EmptyInputError("'" + path.string() + "' contains no data");
    return table;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw Error("cannot format value");
    return std::string(buf, end);
}

SpectraMatrix load_spectra(const std::filesystem::path& path, Orientation orientation, bool with_mz_axis) {
    Table table = read_table(path);
    std::optional<std::vector<double>> mz;

    if (with_mz_axis) {
        if (orientation == Orientation::SpectraAsRows) {
            mz = std::move(table.front());
            table.erase(table.begin());
            if (table.empty()) throw EmptyInputError("'" + path.string() + "' has an mz header but no spectra");
        } else {
            if (table.front().size() < 2) throw FormatError("'" + path.string() + "' has an mz column but no spectra");
            mz.emplace();
            for (auto& row : table) {
                mz->push_back(row.front());
                row.erase(row.begin());
            }
        }
    }

    const auto n_rows = static_cast<Index>(table.size());
    const auto n_cols = static_cast<Index>(table.front().size());
    Matrix data;
    if (orientation == Orientation::SpectraAsColumns) {
        data.resize(n_rows, n_cols);
        for (Index i = 0; i < n_rows; ++i)
            for (Index j = 0; j < n_cols; ++j) data(i, j) = table[i][j];
    } else {
        data.resize(n_cols, n_rows);
        for (Index i = 0; i < n_rows; ++i)
            for (Index j = 0; j < n_cols; ++j) data(j, i) = table[i][j];
    }
    return SpectraMatrix(std::move(data), std::move(mz));
}

void save_spectra(const SpectraMatrix& spectra, const std::filesystem::path& path, Orientation orientation) {
    auto out = open_for_write(path);
    const Matrix& x = spectra.data();
    const auto& mz = spectra.mz_axis();

    if (orientation == Orientation::SpectraAsColumns) {
        for (Index i = 0; i < x.rows(); ++i) {
            if (mz) out << format_double((*mz)[static_cast<std::size_t>(i)]) << ',';
            for (Index j = 0; j < x.cols(); ++j) {
                if (j) out << ',';
                out << format_double(x(i, j));
            }
            out << '\n';
        }
    } else {
        if (mz) {
            for (std::size_t i = 0; i < mz->size(); ++i) {
                if (i) out << ',';
                out << format_double((*mz)[i]);
            }
            out << '\n';
        }
        for (Index j = 0; j < x.cols(); ++j) {
            for (Index i = 0; i < x.rows(); ++i) {
                if (i) out << ',';
                out << format_double(x(i, j));
            }
            out << '\n';
        }
    }
    finish(out, path);
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    finish(out, path);
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    const Table table = read_table(path);
    Matrix m(static_cast<Index>(table.size()), static_cast<Index>(table.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = table[i][j];
    return m;
}

void save_line_spectrum(const LineSpectrum& ls, const std::filesystem::path& path) {
    // LineSpectrum enforces strictly increasing indices; recheck in case of a moved-from object.
    const auto& peaks = ls.peaks();
    for (std::size_t i = 1; i < peaks.size(); ++i) {
        if (!(peaks[i].index > peaks[i - 1].index)) {
            throw InvalidParameter("line spectrum has duplicate or unsorted positions");
        }
    }
    auto out = open_for_write(path);
    const auto& mz = ls.mz_positions();
    out << (mz ? "mz,intensity\n" : "position,intensity\n");
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        if (mz) {
            out << format_double((*mz)[i]);
        } else {
            out << peaks[i].index;
        }
        out << ',' << format_double(peaks[i].intensity) << '\n';
    }
    finish(out, path);
}

}  // namespace sparsepick
