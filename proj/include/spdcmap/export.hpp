#pragma once

// CSV / JSON output of sweep grids and their readback.
//
// CSV layout: '#' comment lines (tool version, map kind, compact config
// JSON, column legend), then one line per cell "coord1,coord2,value1[,value2]"
// with %.17g numbers (exact round trip) and NA for invalid cells. Rows of
// constant coord2 are separated by a blank line (gnuplot pm3d friendly).
// Files are in display units: angles and phases in degrees, delays in fs.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "spdcmap/error.hpp"
#include "spdcmap/maps.hpp"
#include "spdcmap/units.hpp"

namespace spdcmap {

inline constexpr const char* kToolVersion = "spdcmap 0.1.0";

inline std::string format_number(double v) {
    if (std::isnan(v)) return "NA";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline const char* map_kind_name(MapKind k) { return k == MapKind::phase ? "phase" : "delay"; }

inline std::vector<std::string> column_names(const MapGrid& m) {
    const bool xy = m.grid.mode == GridMode::detection_plane_xy;
    std::vector<std::string> cols{xy ? "x_mm" : "theta_deg", xy ? "y_mm" : "phi_deg"};
    if (m.kind == MapKind::phase) {
        cols.push_back("phase_deg");
    } else {
        cols.push_back("dt_s_fs");
        cols.push_back("dt_i_fs");
    }
    return cols;
}

/// Cell coordinates and values as written to file.
struct ExportCell {
    double c1, c2, v1, v2;
};

inline ExportCell export_cell(const MapGrid& m, int i, int j) {
    const bool xy = m.grid.mode == GridMode::detection_plane_xy;
    const std::size_t idx = m.index(i, j);
    ExportCell c;
    c.c1 = xy ? m.grid.coord1(i) : units::deg(m.grid.coord1(i));
    c.c2 = xy ? m.grid.coord2(j) : units::deg(m.grid.coord2(j));
    c.v1 = m.kind == MapKind::phase ? units::deg(m.value1[idx]) : m.value1[idx];
    c.v2 = m.kind == MapKind::delay ? m.value2[idx] : std::numeric_limits<double>::quiet_NaN();
    return c;
}

/// Writes the map as CSV. `config` is echoed into the header as one line.
inline void write_csv(std::ostream& os, const MapGrid& m, const nlohmann::json& config) {
    const auto cols = column_names(m);
    os << "# " << kToolVersion << '\n';
    os << "# kind: " << map_kind_name(m.kind) << '\n';
    os << "# config: " << config.dump() << '\n';
    os << "# columns:";
    for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : " ") << cols[k];
    os << '\n';
    const GridSpec& g = m.grid;
    for (int j = 0; j < g.n2; ++j) {
        if (j) os << '\n';
        for (int i = 0; i < g.n1; ++i) {
            const ExportCell c = export_cell(m, i, j);
            os << format_number(c.c1) << ',' << format_number(c.c2) << ',' << format_number(c.v1);
            if (m.kind == MapKind::delay) os << ',' << format_number(c.v2);
            os << '\n';
        }
    }
}

inline void write_csv_file(const std::string& path, const MapGrid& m, const nlohmann::json& config) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_csv(out, m, config);
    if (!out) throw IoError("write to '" + path + "' failed");
}

/// Metadata sidecar. The timestamp lives here only so the CSV stays
/// byte-identical across repeated runs.
inline nlohmann::json map_metadata(const MapGrid& m, const nlohmann::json& config) {
    nlohmann::json j;
    j["tool"] = kToolVersion;
    j["kind"] = map_kind_name(m.kind);
    j["timestamp"] = m.timestamp;
    j["config"] = config;
    j["columns"] = column_names(m);
    j["grid"] = {{"mode", m.grid.mode == GridMode::detection_plane_xy ? "xy" : "angular"},
                 {"c1_min", m.grid.c1_min},
                 {"c1_max", m.grid.c1_max},
                 {"n1", m.grid.n1},
                 {"c2_min", m.grid.c2_min},
                 {"c2_max", m.grid.c2_max},
                 {"n2", m.grid.n2},
                 {"relative_to_pump", m.grid.relative_to_pump}};
    j["signal_wavelength_nm"] = units::wavelength_from_omega(m.omega_s);
    if (m.filter_nm) j["filter_nm"] = *m.filter_nm;
    j["invalid_cells"] = m.invalid_count();
    return j;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write to '" + path + "' failed");
}

struct MapTable {
    std::vector<std::string> header;  // comment lines without the leading "# "
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // NaN for NA
    std::string kind;
    nlohmann::json config;
};

inline double parse_cell(const std::string& s, std::size_t line_no) {
    if (s == "NA") return std::numeric_limits<double>::quiet_NaN();
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size() || s.empty()) throw IoError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
    return v;
}

inline MapTable read_csv(std::istream& is) {
    MapTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.size() > 2 ? line.substr(2) : "";
            t.header.push_back(body);
            if (body.rfind("kind: ", 0) == 0) t.kind = body.substr(6);
            if (body.rfind("config: ", 0) == 0) {
                t.config = nlohmann::json::parse(body.substr(8), nullptr, false);
                if (t.config.is_discarded()) throw IoError("line " + std::to_string(line_no) + ": bad config JSON");
            }
            if (body.rfind("columns: ", 0) == 0) {
                std::stringstream ss(body.substr(9));
                std::string c;
                while (std::getline(ss, c, ',')) t.columns.push_back(c);
            }
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(parse_cell(cell, line_no));
        if (!t.columns.empty() && row.size() != t.columns.size())
            throw IoError("line " + std::to_string(line_no) + ": expected " + std::to_string(t.columns.size()) +
                          " columns");
        t.rows.push_back(std::move(row));
    }
    if (t.columns.size() < 3) throw IoError("CSV lacks a column legend");
    return t;
}

inline MapTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_csv(in);
}

/// Rebuilds a map (internal units) from a table and the source it was
/// computed for. Cells must appear in the writer's order (coord1 fastest).
inline MapGrid map_from_table(const MapTable& t, const SourceConfig& src) {
    MapGrid m;
    m.source = src;
    m.kind = t.kind == "delay" ? MapKind::delay : MapKind::phase;
    m.grid.mode = t.columns[0] == "x_mm" ? GridMode::detection_plane_xy : GridMode::angular_theta_phi;
    if (t.rows.empty()) throw IoError("CSV has no data rows");
    int n1 = 0;
    while (n1 < static_cast<int>(t.rows.size()) && t.rows[static_cast<std::size_t>(n1)][1] == t.rows[0][1]) ++n1;
    if (t.rows.size() % static_cast<std::size_t>(n1)) throw IoError("CSV rows do not form a rectangular grid");
    const int n2 = static_cast<int>(t.rows.size() / static_cast<std::size_t>(n1));
    m.grid.n1 = n1;
    m.grid.n2 = n2;
    const double cs = m.grid.mode == GridMode::detection_plane_xy ? 1.0 : units::pi / 180.0;
    m.grid.c1_min = cs * t.rows.front()[0];
    m.grid.c1_max = cs * t.rows[static_cast<std::size_t>(n1 - 1)][0];
    m.grid.c2_min = cs * t.rows.front()[1];
    m.grid.c2_max = cs * t.rows.back()[1];
    if (m.grid.mode == GridMode::angular_theta_phi && t.config.is_object()) {
        const auto* rel = t.config.contains("grid") ? &t.config["grid"] : nullptr;
        m.grid.relative_to_pump = !(rel && rel->contains("relative_to_pump") && !(*rel)["relative_to_pump"].get<bool>());
    }
    for (const auto& r : t.rows) {
        m.value1.push_back(m.kind == MapKind::phase ? units::rad(r[2]) : r[2]);
        if (m.kind == MapKind::delay && r.size() > 3) m.value2.push_back(r[3]);
    }
    return m;
}

}  // namespace spdcmap
