// spdcmap: relative-phase / time-delay maps and pump-tilt compensation for a
// two-crossed-crystal type-I SPDC source.
//
//   spdcmap phase-map  --config c.json --out maps/phase      -> phase.csv + phase.json
//   spdcmap delay-map  --config c.json --filter-nm 810 --out maps/delay
//   spdcmap phase-match --config c.json [--collinear]
//   spdcmap find-tilt  --config c.json [--scan]
//   spdcmap fit        --input maps/phase.csv --line y=0
//
// Exit codes: 0 ok, 1 other failure, 2 configuration, 3 kinematics / no
// solution, 4 I/O.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "spdcmap/compensation.hpp"
#include "spdcmap/config.hpp"
#include "spdcmap/export.hpp"
#include "spdcmap/maps.hpp"
#include "spdcmap/phasematch.hpp"

using namespace spdcmap;
using nlohmann::json;

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, no_solution = 3, io_error = 4 };

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string grid;  // NXxNY
    int workers = -1;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("-c,--config", c.config_path, "JSON configuration file");
    sub->add_option("--set", c.overrides, "override a configuration key (key=value), repeatable");
}

void add_grid(CLI::App* sub, Common& c) {
    sub->add_option("--grid", c.grid, "grid size NXxNY (e.g. 256x256)");
    sub->add_option("--workers", c.workers, "worker threads (0: all)")->check(CLI::NonNegativeNumber);
}

json load_document(const Common& c) {
    json doc = c.config_path.empty() ? json::object() : read_config_file(c.config_path);
    for (const auto& o : c.overrides) apply_override(doc, o);
    if (!c.grid.empty()) {
        const auto x = c.grid.find('x');
        int nx = 0, ny = 0;
        try {
            if (x == std::string::npos) throw std::invalid_argument("");
            std::size_t p1 = 0, p2 = 0;
            nx = std::stoi(c.grid.substr(0, x), &p1);
            ny = std::stoi(c.grid.substr(x + 1), &p2);
            if (p1 != x || p2 != c.grid.size() - x - 1) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ConfigError("grid", "--grid expects NXxNY, got '" + c.grid + "'");
        }
        doc["grid"]["nx"] = nx;
        doc["grid"]["ny"] = ny;
    }
    if (c.workers >= 0) doc["workers"] = c.workers;
    return doc;
}

// workers does not change results; keep it out of the echoed config so
// outputs stay byte-identical across thread counts
json echoed(json doc) {
    doc.erase("workers");
    return doc;
}

void write_map(const MapGrid& m, const json& doc, const std::string& out) {
    if (out.empty() || out == "-") {
        write_csv(std::cout, m, echoed(doc));
        return;
    }
    write_csv_file(out + ".csv", m, echoed(doc));
    write_json_file(out + ".json", map_metadata(m, echoed(doc)));
    std::cerr << "wrote " << out << ".csv (" << m.grid.n1 << "x" << m.grid.n2 << ", " << m.invalid_count()
              << " invalid cells) and " << out << ".json\n";
}

int run_phase_map(const Common& c, const std::string& out) {
    const json doc = load_document(c);
    const RunConfig rc = parse_run_config(doc);
    std::optional<double> ws;
    if (rc.signal_nm) ws = units::omega_from_wavelength(*rc.signal_nm);
    const auto t0 = std::chrono::steady_clock::now();
    const MapGrid m = sweep_phase_map(rc.source, rc.effective_grid(), ws, {rc.workers});
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_map(m, doc, out);
    std::cerr << "phase map in " << dt << " s\n";
    return ok;
}

int run_delay_map(const Common& c, const std::string& out, std::optional<double> filter_flag) {
    json doc = load_document(c);
    if (filter_flag) doc["delay"]["filter_nm"] = *filter_flag;
    const RunConfig rc = parse_run_config(doc);
    const double filter = rc.filter_nm.value_or(rc.degenerate_nm());
    const auto t0 = std::chrono::steady_clock::now();
    const MapGrid m = sweep_delay_map(rc.source, rc.effective_grid(), filter, {rc.workers});
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_map(m, doc, out);
    std::cerr << "delay map in " << dt << " s\n";
    return ok;
}

int run_phase_match(const Common& c, bool collinear) {
    const RunConfig rc = parse_run_config(load_document(c));
    json out;
    for (CrystalIndex n : {CrystalIndex::first, CrystalIndex::second}) {
        const auto& cr = rc.source.crystal(n);
        json j;
        j["material"] = cr.material.name();
        if (collinear) {
            j["collinear_cut_deg"] = units::deg(collinear_cut_angle(cr.material, rc.source.pump.lambda_nm));
        } else {
            const auto sol = degenerate_emission_angle(rc.source, n, rc.tilt.target_phi);
            j["degenerate_angle_deg"] = units::deg(sol.theta_ext);
            j["residual_per_mm"] = sol.residual_per_mm;
            j["bracket_deg"] = {units::deg(sol.bracket_lo), units::deg(sol.bracket_hi)};
            j["iterations"] = sol.iterations;
        }
        out[n == CrystalIndex::first ? "crystal1" : "crystal2"] = j;
    }
    std::cout << out.dump(2) << '\n';
    return ok;
}

PumpRelativeTarget tilt_target(const RunConfig& rc) {
    PumpRelativeTarget t;
    t.omega_s = units::omega_from_wavelength(rc.tilt.target_nm.value_or(rc.degenerate_nm()));
    t.phi_rel = rc.tilt.target_phi;
    if (rc.tilt.target_theta) {
        t.theta_rel = *rc.tilt.target_theta;
    } else {
        SourceConfig flat = rc.source;
        flat.pump.theta_p = 0.0;
        t.theta_rel = degenerate_emission_angle(flat, CrystalIndex::first, t.phi_rel).theta_ext;
    }
    return t;
}

int run_find_tilt(const Common& c, bool scan_only) {
    const RunConfig rc = parse_run_config(load_document(c));
    const PumpRelativeTarget target = tilt_target(rc);
    const auto& t = rc.tilt;
    json out;
    out["target"] = {{"wavelength_nm", units::wavelength_from_omega(target.omega_s)},
                     {"theta_rel_deg", units::deg(target.theta_rel)},
                     {"phi_rel_deg", units::deg(target.phi_rel)}};
    out["tilt_phi_deg"] = units::deg(t.phi_p);
    if (scan_only) {
        const auto scan = scan_tilt(rc.source, t.phi_p, t.theta_min, t.theta_max, t.samples, target);
        std::cout << "# theta_p_deg,delay_signal_fs\n";
        std::cout << "# target theta_rel_deg " << format_number(units::deg(target.theta_rel)) << " phi_rel_deg "
                  << format_number(units::deg(target.phi_rel)) << '\n';
        for (const auto& s : scan.samples)
            std::cout << format_number(units::deg(s.theta_p)) << ','
                      << (s.delay_fs ? format_number(*s.delay_fs) : "NA") << '\n';
        return ok;
    }
    TiltSearchOptions opt;
    opt.theta_lo = t.theta_min;
    opt.theta_hi = t.theta_max;
    opt.n_samples = t.samples;
    const auto r = find_self_compensating_tilt(rc.source, t.phi_p, target, opt);
    out["theta_p_deg"] = units::deg(r.theta_p);
    out["bracket_deg"] = {units::deg(r.bracket.first), units::deg(r.bracket.second)};
    out["delay_signal_fs"] = r.delay_signal_fs;
    out["delay_idler_fs"] = r.delay_idler_fs;
    if (r.degenerate_angle_at_root) out["degenerate_angle_at_root_deg"] = units::deg(*r.degenerate_angle_at_root);
    json table = json::array();
    for (const auto& s : r.scan.samples)
        table.push_back({units::deg(s.theta_p), s.delay_fs ? json(*s.delay_fs) : json(nullptr)});
    out["scan_deg_fs"] = table;
    std::cout << out.dump(2) << '\n';
    return ok;
}

int run_fit(const Common& c, const std::string& input, const std::string& line_flag, const std::string& out) {
    MapGrid m;
    LineSpec line;
    if (!input.empty()) {
        const MapTable table = read_csv_file(input);
        if (!table.config.is_object()) throw ConfigError("", "CSV header carries no configuration");
        json doc = table.config;
        for (const auto& o : c.overrides) apply_override(doc, o);
        const RunConfig rc = parse_run_config(doc);
        m = map_from_table(table, rc.source);
        line = rc.fit_line;
    } else {
        const json doc = load_document(c);
        const RunConfig rc = parse_run_config(doc);
        std::optional<double> ws;
        if (rc.signal_nm) ws = units::omega_from_wavelength(*rc.signal_nm);
        m = sweep_phase_map(rc.source, rc.effective_grid(), ws, {rc.workers});
        line = rc.fit_line;
    }
    if (!line_flag.empty()) line = detail::parse_line(line_flag, "--line");
    const ProfileFit f = fit_quadratic_profile(m, line);
    std::ostringstream os;
    os << "# " << kToolVersion << '\n';
    os << "# fit: phase ~ c0 + c1 theta + c2 theta^2 (rad)\n";
    os << "# c0 " << format_number(f.c0) << " c1 " << format_number(f.c1) << " c2 " << format_number(f.c2) << '\n';
    os << "# rms_residual_rad " << format_number(f.rms_residual) << " span_rad " << format_number(f.span)
       << " relative_rms " << format_number(f.span > 0.0 ? f.rms_residual / f.span : 0.0) << '\n';
    os << "# columns: theta_deg,phase_deg,slope_deg_per_deg\n";
    for (std::size_t k = 0; k < f.theta.size(); ++k)
        os << format_number(units::deg(f.theta[k])) << ',' << format_number(units::deg(f.value[k])) << ','
           << format_number(f.slope[k]) << '\n';
    if (out.empty() || out == "-") {
        std::cout << os.str();
    } else {
        std::ofstream file(out, std::ios::binary);
        if (!file || !(file << os.str())) throw IoError("cannot write '" + out + "'");
        std::cerr << "wrote " << out << " (" << f.theta.size() << " samples, relative rms "
                  << (f.span > 0.0 ? f.rms_residual / f.span : 0.0) << ")\n";
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relative-phase and time-delay maps for a crossed-crystal type-I SPDC source"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    Common common;
    std::string out;
    std::optional<double> filter_nm;
    bool collinear = false, scan = false;
    std::string input, line;

    auto* phase = app.add_subcommand("phase-map", "relative-phase map over the detection plane or emission angles");
    add_common(phase, common);
    add_grid(phase, common);
    phase->add_option("-o,--out", out, "output prefix (writes PREFIX.csv and PREFIX.json; '-' for stdout)");

    auto* delay = app.add_subcommand("delay-map", "signal/idler time-delay maps behind a narrow filter");
    add_common(delay, common);
    add_grid(delay, common);
    delay->add_option("-o,--out", out, "output prefix");
    delay->add_option("--filter-nm", filter_nm, "filter centre wavelength, nm");

    auto* pm = app.add_subcommand("phase-match", "degenerate phase-matching angle per crystal");
    add_common(pm, common);
    pm->add_flag("--collinear", collinear, "print the collinear cut angle instead");

    auto* tilt = app.add_subcommand("find-tilt", "pump tilt at which the crystal-1/crystal-2 delay vanishes");
    add_common(tilt, common);
    tilt->add_flag("--scan", scan, "print the sampled delay curve only");

    auto* fit = app.add_subcommand("fit", "quadratic fit of a phase-map profile");
    add_common(fit, common);
    add_grid(fit, common);
    fit->add_option("-i,--input", input, "phase-map CSV written by phase-map");
    fit->add_option("--line", line, "y=0, x=0 or phi=<angle>");
    fit->add_option("-o,--out", out, "profile CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : config_error;
    }

    try {
        if (*phase) return run_phase_map(common, out);
        if (*delay) return run_delay_map(common, out, filter_nm);
        if (*pm) return run_phase_match(common, collinear);
        if (*tilt) return run_find_tilt(common, scan);
        if (*fit) return run_fit(common, input, line, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const ValidationError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const RangeError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return io_error;
    } catch (const Error& e) {
        // kinematics, refraction, no-solution, solver, constraint and fit failures
        std::cerr << "error: " << e.what() << '\n';
        return no_solution;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failure;
    }
    return failure;
}
