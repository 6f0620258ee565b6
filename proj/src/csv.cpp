#include "qsq/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qsq/error.hpp"

namespace qsq::csv {

const std::vector<double>& Table::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("csv: missing column '" + name + "'");
    return columns[static_cast<std::size_t>(it - header.begin())];
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

std::string to_string(const Table& t) {
    if (t.columns.size() != t.header.size()) throw InputError("csv: header/column count mismatch");
    const std::size_t n = t.rows();
    for (const auto& c : t.columns)
        if (c.size() != n) throw InputError("csv: ragged columns");
    std::string out;
    for (std::size_t j = 0; j < t.header.size(); ++j) {
        if (j) out += ',';
        out += t.header[j];
    }
    out += '\n';
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < t.columns.size(); ++j) {
            if (j) out += ',';
            out += format_number(t.columns[j][i]);
        }
        out += '\n';
    }
    return out;
}

void write(const std::filesystem::path& path, const Table& t) {
    const std::string text = to_string(t);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("csv: cannot write " + path.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw InputError("csv: write failed for " + path.string());
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

Table parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    Table t;
    if (!std::getline(in, line)) throw InputError("csv: empty input");
    for (auto& h : split(line)) t.header.push_back(trim(h));
    if (t.header.empty()) throw InputError("csv: empty header");
    t.columns.assign(t.header.size(), {});
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size())
            throw InputError("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                             " fields, expected " + std::to_string(t.header.size()));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const std::string c = trim(cells[j]);
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(c.c_str(), &end);
            if (c.empty() || end != c.c_str() + c.size() || errno == ERANGE)
                throw InputError("csv: cannot parse '" + c + "' at row " + std::to_string(row));
            t.columns[j].push_back(v);
        }
    }
    return t;
}

Table read(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("csv: cannot read " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

Table controls_table(const ControlWaveforms& c) {
    return {{"t", "omega", "delta", "laser_phase"}, {c.time_grid, c.rabi, c.detuning, c.laser_phase()}};
}

ControlWaveforms controls_from_table(const Table& t, std::string label) {
    ControlWaveforms c;
    c.time_grid = t.column("t");
    c.rabi = t.column("omega");
    c.detuning = t.column("delta");
    c.label = std::move(label);
    c.validate();
    return c;
}

}  // namespace qsq::csv
