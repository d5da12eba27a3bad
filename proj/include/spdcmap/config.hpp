#pragma once

// Run configuration for the command-line tool. A JSON document addressed by
// flat dotted key paths ("pump.lambda_nm"); `--set key=value` overrides use
// the same paths. Units at this boundary: mm, nm, and angles in degrees
// (a bare number) or with an explicit suffix ("1.2 rad", "90deg").
//
// Keys (defaults in brackets):
//   materials_file                  extra material definitions (material_io.hpp)
//   crystal1.material               [BBO]      crystal2.* likewise
//   crystal1.length_mm              [0.6]
//   crystal1.axis_theta             [29.3]     optic-axis polar angle
//   crystal1.axis_phi               [0]        (crystal2: [90])
//   pump.lambda_nm                  [405]
//   pump.theta, pump.phi            [0, 0]     external incidence
//   pump.phi0                       [0]        initial pump phase
//   source.detection_distance_mm    [1200]
//   source.include_part_c           [false]
//   source.mu                       [0.5]
//   source.axes_follow_pump         [true]
//   source.allow_nonorthogonal_axes [false]
//   grid.mode                       [xy]       xy | angular
//   grid.x_min_mm .. grid.y_max_mm  [0, 126, -126, 126]   (xy)
//   grid.theta_min .. grid.phi_max  [0, 6, -90, 90]       (angular)
//   grid.nx, grid.ny                [65, 129]
//   grid.relative_to_pump           [true]
//   phase.signal_nm                 [2 * pump.lambda_nm]
//   delay.filter_nm                 [2 * pump.lambda_nm]
//   tilt.phi                        [90]
//   tilt.theta_min, tilt.theta_max  [0, 60]
//   tilt.samples                    [61]
//   tilt.target_theta               [degenerate phase-matching angle]
//   tilt.target_phi                 [0]
//   tilt.target_nm                  [2 * pump.lambda_nm]
//   fit.line                        [y=0]      y=0 | x=0 | phi=<deg>
//   workers                         [0]        0: all hardware threads

#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "spdcmap/error.hpp"
#include "spdcmap/maps.hpp"
#include "spdcmap/material_io.hpp"
#include "spdcmap/source.hpp"
#include "spdcmap/units.hpp"

namespace spdcmap {

struct TiltOptions {
    double phi_p = units::rad(90.0);
    double theta_min = 0.0;
    double theta_max = units::rad(60.0);
    int samples = 61;
    std::optional<double> target_theta;
    double target_phi = 0.0;
    std::optional<double> target_nm;
};

struct RunConfig {
    SourceConfig source;
    GridSpec grid;              // as configured, before centring on the pump
    bool grid_relative = true;  // centre xy windows on the pump spot
    std::optional<double> signal_nm;
    std::optional<double> filter_nm;
    TiltOptions tilt;
    LineSpec fit_line;
    unsigned workers = 0;
    nlohmann::json document;  // effective configuration, echoed into outputs

    GridSpec effective_grid() const {
        GridSpec g = grid;
        if (g.mode == GridMode::detection_plane_xy && grid_relative) g = centered_on_pump(g, source);
        if (g.mode == GridMode::angular_theta_phi) g.relative_to_pump = grid_relative;
        return g;
    }
    double degenerate_nm() const { return 2.0 * source.pump.lambda_nm; }
};

namespace detail {

inline std::vector<std::string> split_key(const std::string& key) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : key) {
        if (ch == '.') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    for (const auto& p : parts)
        if (p.empty()) throw ConfigError(key, "malformed key path");
    return parts;
}

inline const nlohmann::json* find_key(const nlohmann::json& doc, const std::string& key) {
    const nlohmann::json* cur = &doc;
    for (const auto& p : split_key(key)) {
        if (!cur->is_object()) return nullptr;
        auto it = cur->find(p);
        if (it == cur->end()) return nullptr;
        cur = &*it;
    }
    return cur;
}

/// Collects every leaf key path of a document.
inline void leaf_keys(const nlohmann::json& j, const std::string& prefix, std::vector<std::string>& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            leaf_keys(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else {
        out.push_back(prefix);
    }
}

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

class Reader {
public:
    explicit Reader(const nlohmann::json& doc) : doc_(doc) {}

    double number(const std::string& key, double fallback) {
        const auto* v = get(key);
        if (!v) return fallback;
        if (!v->is_number()) throw ConfigError(key, "expected a number");
        const double x = v->get<double>();
        if (!std::isfinite(x)) throw ConfigError(key, "value must be finite");
        return x;
    }

    std::optional<double> optional_number(const std::string& key) {
        const auto* v = get(key);
        if (!v || v->is_null()) return std::nullopt;
        return number(key, 0.0);
    }

    /// Angle in radians; a bare number means degrees.
    double angle(const std::string& key, double fallback_deg) {
        const auto* v = get(key);
        if (!v) return units::rad(fallback_deg);
        return parse_angle(*v, key);
    }

    std::optional<double> optional_angle(const std::string& key) {
        const auto* v = get(key);
        if (!v || v->is_null()) return std::nullopt;
        return parse_angle(*v, key);
    }

    int integer(const std::string& key, int fallback) {
        const auto* v = get(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) throw ConfigError(key, "expected an integer");
        return v->get<int>();
    }

    bool boolean(const std::string& key, bool fallback) {
        const auto* v = get(key);
        if (!v) return fallback;
        if (!v->is_boolean()) throw ConfigError(key, "expected true or false");
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        const auto* v = get(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ConfigError(key, "expected a string");
        return v->get<std::string>();
    }

    bool has(const std::string& key) const { return find_key(doc_, key) != nullptr; }

    const std::set<std::string>& used() const { return used_; }

    static double parse_angle(const nlohmann::json& v, const std::string& key) {
        if (v.is_number()) {
            const double x = v.get<double>();
            if (!std::isfinite(x)) throw ConfigError(key, "angle must be finite");
            return units::rad(x);
        }
        if (!v.is_string()) throw ConfigError(key, "expected an angle (number of degrees or string with deg/rad)");
        const std::string s = v.get<std::string>();
        std::size_t pos = 0;
        double x = 0.0;
        try {
            x = std::stod(s, &pos);
        } catch (const std::exception&) {
            throw ConfigError(key, "cannot parse angle '" + s + "'");
        }
        const std::string unit = trim(s.substr(pos));
        if (!std::isfinite(x)) throw ConfigError(key, "angle must be finite");
        if (unit.empty() || unit == "deg") return units::rad(x);
        if (unit == "rad") return x;
        throw ConfigError(key, "unknown angle unit '" + unit + "' (use deg or rad)");
    }

private:
    const nlohmann::json* get(const std::string& key) {
        used_.insert(key);
        return find_key(doc_, key);
    }

    const nlohmann::json& doc_;
    std::set<std::string> used_;
};

inline LineSpec parse_line(const std::string& s, const std::string& key) {
    const std::string t = trim(s);
    if (t == "y=0") return LineSpec::y0();
    if (t == "x=0") return LineSpec::x0();
    if (t.rfind("phi=", 0) == 0) return LineSpec::azimuth(Reader::parse_angle(nlohmann::json(t.substr(4)), key));
    throw ConfigError(key, "expected y=0, x=0 or phi=<angle>");
}

}  // namespace detail

/// Applies one `key=value` override; the value is read as JSON when it
/// parses, otherwise as a string.
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError(assignment, "override must have the form key=value");
    const std::string key = detail::trim(assignment.substr(0, eq));
    const std::string raw = detail::trim(assignment.substr(eq + 1));
    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    nlohmann::json* cur = &doc;
    const auto parts = detail::split_key(key);
    for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
        if (!cur->is_object()) throw ConfigError(key, "path crosses a non-object value");
        cur = &(*cur)[parts[k]];
        if (cur->is_null()) *cur = nlohmann::json::object();
    }
    if (!cur->is_object()) throw ConfigError(key, "path crosses a non-object value");
    (*cur)[parts.back()] = value;
}

inline nlohmann::json read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false, true);
    if (doc.is_discarded() || !doc.is_object()) throw ConfigError("", "config file '" + path + "' is not a JSON object");
    return doc;
}

/// Parses and validates a configuration document. Every check runs before
/// any computation; the first violation is reported with its key path.
inline RunConfig parse_run_config(const nlohmann::json& doc, MaterialRegistry registry = {}) {
    if (!doc.is_object()) throw ConfigError("", "configuration must be a JSON object");
    detail::Reader r(doc);
    RunConfig rc;

    const std::string materials_file = r.string("materials_file", "");
    if (!materials_file.empty()) load_materials_file(materials_file, registry);

    auto crystal = [&](const std::string& p, double phi_default) {
        CrystalSpec c;
        const std::string name = r.string(p + ".material", "BBO");
        if (!registry.contains(name)) throw ConfigError(p + ".material", "unknown material '" + name + "'");
        c.material = registry.get(name);
        c.length_mm = r.number(p + ".length_mm", 0.6);
        if (!(c.length_mm > 0.0)) throw ConfigError(p + ".length_mm", "crystal length must be positive");
        c.axis.theta = r.angle(p + ".axis_theta", 29.3);
        if (!(c.axis.theta >= 0.0 && c.axis.theta <= units::pi))
            throw ConfigError(p + ".axis_theta", "polar angle must lie in [0, 180] degrees");
        c.axis.phi = normalize_azimuth(r.angle(p + ".axis_phi", phi_default));
        return c;
    };
    SourceConfig& s = rc.source;
    s.crystal1 = crystal("crystal1", 0.0);
    s.crystal2 = crystal("crystal2", 90.0);

    s.pump.lambda_nm = r.number("pump.lambda_nm", 405.0);
    for (const auto* c : {&s.crystal1, &s.crystal2})
        if (!c->material.validity().contains(s.pump.lambda_nm))
            throw ConfigError("pump.lambda_nm", "pump wavelength " + std::to_string(s.pump.lambda_nm) +
                                                    " nm outside the validity range of " + c->material.name());
    for (const auto* c : {&s.crystal1, &s.crystal2})
        if (!c->material.validity().contains(2.0 * s.pump.lambda_nm))
            throw ConfigError("pump.lambda_nm", "degenerate wavelength outside the validity range of " +
                                                    c->material.name());
    s.pump.theta_p = r.angle("pump.theta", 0.0);
    if (!(s.pump.theta_p >= 0.0 && s.pump.theta_p < units::pi / 2))
        throw ConfigError("pump.theta", "incidence angle must lie in [0, 90) degrees");
    s.pump.phi_p = normalize_azimuth(r.angle("pump.phi", 0.0));
    s.pump.phi_o = r.angle("pump.phi0", 0.0);

    s.detection_distance_mm = r.number("source.detection_distance_mm", 1200.0);
    if (!(s.detection_distance_mm > 0.0))
        throw ConfigError("source.detection_distance_mm", "detection distance must be positive");
    s.include_part_c = r.boolean("source.include_part_c", false);
    s.mu = r.number("source.mu", 0.5);
    if (!(s.mu >= 0.0 && s.mu <= 1.0)) throw ConfigError("source.mu", "depth fraction must lie in [0, 1]");
    s.axes_follow_pump = r.boolean("source.axes_follow_pump", true);
    s.allow_nonorthogonal_axes = r.boolean("source.allow_nonorthogonal_axes", false);
    try {
        s.validate();
    } catch (const ValidationError& e) {
        throw ConfigError("crystal2.axis_phi", e.what());
    }

    const std::string mode = r.string("grid.mode", "xy");
    GridSpec& g = rc.grid;
    if (mode == "xy") {
        g.mode = GridMode::detection_plane_xy;
        g.c1_min = r.number("grid.x_min_mm", 0.0);
        g.c1_max = r.number("grid.x_max_mm", 126.0);
        g.c2_min = r.number("grid.y_min_mm", -126.0);
        g.c2_max = r.number("grid.y_max_mm", 126.0);
    } else if (mode == "angular") {
        g.mode = GridMode::angular_theta_phi;
        g.c1_min = r.angle("grid.theta_min", 0.0);
        g.c1_max = r.angle("grid.theta_max", 6.0);
        g.c2_min = r.angle("grid.phi_min", -90.0);
        g.c2_max = r.angle("grid.phi_max", 90.0);
    } else {
        throw ConfigError("grid.mode", "expected xy or angular");
    }
    g.n1 = r.integer("grid.nx", 65);
    g.n2 = r.integer("grid.ny", 129);
    if (g.n1 < 1) throw ConfigError("grid.nx", "must be at least 1");
    if (g.n2 < 1) throw ConfigError("grid.ny", "must be at least 1");
    rc.grid_relative = r.boolean("grid.relative_to_pump", true);
    try {
        g.validate();
    } catch (const ValidationError& e) {
        throw ConfigError("grid", e.what());
    }

    auto wavelength = [&](const std::string& key) -> std::optional<double> {
        const auto v = r.optional_number(key);
        if (!v) return v;
        if (!(*v > 0.0 && *v > s.pump.lambda_nm)) throw ConfigError(key, "must exceed the pump wavelength");
        for (const auto* c : {&s.crystal1, &s.crystal2})
            if (!c->material.validity().contains(*v))
                throw ConfigError(key, "outside the validity range of " + c->material.name());
        const double idler = 1.0 / (1.0 / s.pump.lambda_nm - 1.0 / *v);
        for (const auto* c : {&s.crystal1, &s.crystal2})
            if (!c->material.validity().contains(idler))
                throw ConfigError(key, "conjugate idler wavelength outside the validity range of " +
                                           c->material.name());
        return v;
    };
    rc.signal_nm = wavelength("phase.signal_nm");
    rc.filter_nm = wavelength("delay.filter_nm");

    TiltOptions& t = rc.tilt;
    t.phi_p = r.angle("tilt.phi", 90.0);
    t.theta_min = r.angle("tilt.theta_min", 0.0);
    t.theta_max = r.angle("tilt.theta_max", 60.0);
    if (!(t.theta_min >= 0.0)) throw ConfigError("tilt.theta_min", "must be non-negative");
    if (!(t.theta_max > t.theta_min && t.theta_max < units::pi / 2))
        throw ConfigError("tilt.theta_max", "must exceed tilt.theta_min and stay below 90 degrees");
    t.samples = r.integer("tilt.samples", 61);
    if (t.samples < 2) throw ConfigError("tilt.samples", "must be at least 2");
    t.target_theta = r.optional_angle("tilt.target_theta");
    t.target_phi = r.angle("tilt.target_phi", 0.0);
    t.target_nm = wavelength("tilt.target_nm");

    rc.fit_line = detail::parse_line(r.string("fit.line", "y=0"), "fit.line");
    const int workers = r.integer("workers", 0);
    if (workers < 0) throw ConfigError("workers", "must be non-negative");
    rc.workers = static_cast<unsigned>(workers);

    std::vector<std::string> keys;
    detail::leaf_keys(doc, "", keys);
    for (const auto& k : keys)
        if (!r.used().count(k)) throw ConfigError(k, "unknown configuration key");

    rc.document = doc;
    return rc;
}

}  // namespace spdcmap
