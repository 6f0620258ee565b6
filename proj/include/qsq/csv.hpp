#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qsq/model.hpp"

namespace qsq::csv {

struct Table {
    std::vector<std::string> header;
    /// Column-major data, one vector per header entry.
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    /// Throws InputError if the column is missing.
    const std::vector<double>& column(const std::string& name) const;
};

/// 17 significant digits in scientific notation, comma separated, LF endings.
std::string format_number(double v);
std::string to_string(const Table& t);
void write(const std::filesystem::path& path, const Table& t);

/// Throws InputError on unreadable files, ragged rows or unparsable numbers.
Table read(const std::filesystem::path& path);
Table parse(const std::string& text);

/// Columns t, omega, delta, laser_phase.
Table controls_table(const ControlWaveforms& c);
/// Sampled controls from a table with at least t, omega, delta (validated).
ControlWaveforms controls_from_table(const Table& t, std::string label = "csv");

}  // namespace qsq::csv
