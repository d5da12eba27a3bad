#pragma once

// Relative-phase and time-delay maps over the emission cone.
//
// The relative phase collects, for both photons of a crystal-1 pair crossing
// crystal 2 as extraordinary waves,
//
//   phi_DC = sum_{s,i} (w d2 / (c r_z)) [ n_e(w, alpha) (K_e . r) + (r_x, r_y, 0) . K_air ]
//
// plus an optional inter-crystal offset term and the initial pump phase
// phi_o. Time delays compare the exit time of a crystal-1 pair with that of a
// pair born at the same depth of crystal 2.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "spdcmap/error.hpp"
#include "spdcmap/phasematch.hpp"
#include "spdcmap/source.hpp"
#include "spdcmap/units.hpp"

namespace spdcmap {

struct PhaseBreakdown {
    double crystal = 0.0;  // crossing of crystal 2 plus free-space offset, both photons
    double part_c = 0.0;   // inter-crystal offset term (zero unless enabled)
    double phi_o = 0.0;
    double total = 0.0;
};

struct TimeIntervals {
    // long double so that t1 - t2 keeps the cancellation of the depth terms
    long double t1 = 0.0L;  // pair born in crystal 1, fs
    long double t2 = 0.0L;  // pair born at the same depth of crystal 2, fs
};

struct PhotonTrace {
    struct Segment {
        std::string label;
        UnitVec3 wavevector;
        UnitVec3 ray;
        double phase_index = 1.0;
        double group_index = 1.0;
        double length_mm = 0.0;
    };
    Photon photon = Photon::signal;
    double omega = 0.0;
    std::vector<Segment> segments;
};

namespace detail {

inline double photon_phase(const PhotonKinematics& k, double d2_mm) {
    const UnitVec3& r = k.ray_e2;
    const double bracket = k.n_e2 * dot(k.k_e2, r) + (r.x() * k.k_air.x() + r.y() * k.k_air.y());
    return units::k0_per_mm(k.omega) * d2_mm / r.z() * bracket;
}

inline double part_c_phase(const SourceModel& m) {
    const auto& src = m.config();
    return -units::k0_per_mm(m.omega_p()) * m.pump_sample(CrystalIndex::first).n_o() *
           m.pump_ordinary_crystal1().z() * src.crystal1.length_mm;
}

inline PhaseBreakdown phase_at(const SourceModel& m, const UnitVec3& u_s) {
    const auto& src = m.config();
    const UnitVec3 u_i = m.idler_direction(u_s);
    PhaseBreakdown b;
    b.crystal = photon_phase(m.kinematics(Photon::signal, u_s), src.crystal2.length_mm) +
                photon_phase(m.kinematics(Photon::idler, u_i), src.crystal2.length_mm);
    b.part_c = src.include_part_c ? part_c_phase(m) : 0.0;
    b.phi_o = src.pump.phi_o;
    b.total = b.crystal + b.part_c + b.phi_o;
    return b;
}

struct DelayTerms {
    long double d1 = 0, d2 = 0;
    long double ng_pe1 = 0, ng_pe2 = 0, ng_po1 = 0;
    long double ng_o1 = 0, k_o1z = 0;
    long double ng_o2 = 0, k_o2z = 0;
    long double ng_e2 = 0, r_z = 0;
};

inline DelayTerms delay_terms(const SourceModel& m, Photon p, const UnitVec3& u) {
    const auto& src = m.config();
    const PhotonKinematics k = m.kinematics(p, u);
    DelayTerms t;
    t.d1 = src.crystal1.length_mm;
    t.d2 = src.crystal2.length_mm;
    t.ng_pe1 = m.pump_sample(CrystalIndex::first).group_index_extraordinary(m.pump_state(CrystalIndex::first).alpha);
    t.ng_pe2 =
        m.pump_sample(CrystalIndex::second).group_index_extraordinary(m.pump_state(CrystalIndex::second).alpha);
    t.ng_po1 = m.pump_sample(CrystalIndex::first).group_index_ordinary();
    t.ng_o1 = m.sample(p, CrystalIndex::first).group_index_ordinary();
    t.k_o1z = k.k_o1.z();
    t.ng_o2 = m.sample(p, CrystalIndex::second).group_index_ordinary();
    t.k_o2z = k.k_o2.z();
    t.ng_e2 = m.sample(p, CrystalIndex::second).group_index_extraordinary(k.alpha_e2);
    t.r_z = k.ray_e2.z();
    return t;
}

inline constexpr long double kFsPerMmIndex = static_cast<long double>(units::nm_per_mm) / units::c_nm_per_fs;

inline TimeIntervals intervals(const DelayTerms& t, double mu) {
    const long double mu_l = mu;
    TimeIntervals out;
    out.t1 = kFsPerMmIndex * (mu_l * t.d1 * t.ng_pe1 + (1 - mu_l) * t.d1 * t.ng_o1 / t.k_o1z + t.d2 * t.ng_e2 / t.r_z);
    out.t2 = kFsPerMmIndex * (t.d1 * t.ng_po1 + mu_l * t.d2 * t.ng_pe2 + (1 - mu_l) * t.d2 * t.ng_o2 / t.k_o2z);
    return out;
}

inline double delay(const DelayTerms& t) {
    return static_cast<double>(kFsPerMmIndex * (t.d2 * t.ng_e2 / t.r_z - t.d1 * t.ng_po1));
}

inline UnitVec3 photon_direction(const SourceModel& m, Photon p, const EmissionCoord& signal) {
    const UnitVec3 u_s = signal.direction();
    return p == Photon::signal ? u_s : m.idler_direction(u_s);
}

}  // namespace detail

/// Relative phase phi_DC at a signal coordinate, rad, split into its parts.
inline PhaseBreakdown relative_phase(const SourceConfig& src, const EmissionCoord& signal) {
    const SourceModel m(src, signal.omega_s);
    return detail::phase_at(m, signal.direction());
}

inline double wrap_phase(double phase) {
    double w = std::fmod(phase, units::two_pi);
    if (w < 0.0) w += units::two_pi;
    return w;
}

inline TimeIntervals time_intervals(const SourceConfig& src, const EmissionCoord& signal, Photon p) {
    const SourceModel m(src, signal.omega_s);
    return detail::intervals(detail::delay_terms(m, p, detail::photon_direction(m, p, signal)), src.mu);
}

/// Delay between wavepackets from crystal 1 and crystal 2, fs.
inline double time_delay(const SourceConfig& src, const EmissionCoord& signal, Photon p) {
    const SourceModel m(src, signal.omega_s);
    return detail::delay(detail::delay_terms(m, p, detail::photon_direction(m, p, signal)));
}

/// Segment-by-segment record of one photon of a crystal-1 pair.
inline PhotonTrace trace_photon(const SourceConfig& src, const EmissionCoord& signal, Photon p) {
    const SourceModel m(src, signal.omega_s);
    const UnitVec3 u = detail::photon_direction(m, p, signal);
    const PhotonKinematics k = m.kinematics(p, u);
    const auto& s1 = m.sample(p, CrystalIndex::first);
    const auto& s2 = m.sample(p, CrystalIndex::second);
    PhotonTrace tr;
    tr.photon = p;
    tr.omega = k.omega;
    tr.segments.push_back({"crystal1_ordinary", k.k_o1, k.k_o1, s1.n_o(), s1.group_index_ordinary(),
                           src.crystal1.length_mm / k.k_o1.z()});
    tr.segments.push_back({"crystal2_extraordinary", k.k_e2, k.ray_e2, k.n_e2,
                           s2.group_index_extraordinary(k.alpha_e2), src.crystal2.length_mm / k.ray_e2.z()});
    tr.segments.push_back({"air", k.k_air, k.k_air, 1.0, 1.0, src.detection_distance_mm / k.k_air.z()});
    return tr;
}

// ---------------------------------------------------------------------------
// Grids

enum class GridMode { detection_plane_xy, angular_theta_phi };

/// Rectangular sample grid. In xy mode coordinates are laboratory detection
/// plane positions in mm; in angular mode they are the signal's external
/// (theta, phi) in rad, measured from the pump direction when
/// `relative_to_pump` is set.
struct GridSpec {
    GridMode mode = GridMode::detection_plane_xy;
    double c1_min = 0.0, c1_max = 0.0;
    int n1 = 1;
    double c2_min = 0.0, c2_max = 0.0;
    int n2 = 1;
    bool relative_to_pump = false;  // angular mode only

    double step1() const { return n1 > 1 ? (c1_max - c1_min) / (n1 - 1) : 0.0; }
    double step2() const { return n2 > 1 ? (c2_max - c2_min) / (n2 - 1) : 0.0; }
    double coord1(int i) const { return c1_min + static_cast<double>(i) * step1(); }
    double coord2(int j) const { return c2_min + static_cast<double>(j) * step2(); }
    std::size_t size() const { return static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2); }

    void validate() const {
        if (n1 < 1 || n2 < 1) throw ValidationError("grid must have at least one cell per axis");
        if (!std::isfinite(c1_min) || !std::isfinite(c1_max) || !std::isfinite(c2_min) || !std::isfinite(c2_max))
            throw ValidationError("grid ranges must be finite");
        if ((n1 > 1 && !(c1_max > c1_min)) || (n2 > 1 && !(c2_max > c2_min)))
            throw ValidationError("grid range maximum must exceed its minimum");
    }
};

/// Point where the external pump meets the detection plane, mm.
inline std::pair<double, double> pump_spot(const SourceConfig& src) {
    const UnitVec3 p = src.pump.direction();
    return {src.detection_distance_mm * p.x() / p.z(), src.detection_distance_mm * p.y() / p.z()};
}

/// Shifts an xy window so that its origin is the pump spot.
inline GridSpec centered_on_pump(GridSpec g, const SourceConfig& src) {
    if (g.mode != GridMode::detection_plane_xy) return g;
    const auto [xc, yc] = pump_spot(src);
    g.c1_min += xc;
    g.c1_max += xc;
    g.c2_min += yc;
    g.c2_max += yc;
    return g;
}

/// External signal direction of a grid cell.
inline UnitVec3 cell_direction(const GridSpec& g, const SourceConfig& src, double c1, double c2) {
    if (g.mode == GridMode::detection_plane_xy)
        return UnitVec3::normalized({c1, c2, src.detection_distance_mm});
    if (g.relative_to_pump) return emission_relative_to_pump(src, 1.0, c1, c2).direction();
    return direction_from_angles({c1, c2});
}

enum class MapKind { phase, delay };

struct MapGrid {
    MapKind kind = MapKind::phase;
    GridSpec grid;
    std::vector<double> value1;  // phase (rad) or dt_s (fs); NaN marks an invalid cell
    std::vector<double> value2;  // dt_i (fs) for delay maps, empty otherwise
    SourceConfig source;
    double omega_s = 0.0;
    std::optional<double> filter_nm;
    std::string timestamp;

    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(grid.n1) + static_cast<std::size_t>(i);
    }
    static bool valid(double v) { return !std::isnan(v); }
    std::size_t invalid_count() const {
        return static_cast<std::size_t>(std::count_if(value1.begin(), value1.end(), [](double v) { return std::isnan(v); }));
    }
};

struct SweepOptions {
    unsigned workers = 0;  // 0: hardware concurrency
};

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace detail {

/// Runs `cell(i, j)` over the grid; rows are split into contiguous blocks,
/// each cell owns its output slot, so results do not depend on scheduling.
template <class Cell>
void for_each_cell(const GridSpec& g, unsigned workers, Cell&& cell) {
    unsigned w = workers ? workers : std::max(1u, std::thread::hardware_concurrency());
    w = std::min<unsigned>(w, static_cast<unsigned>(g.n2));
    auto run_rows = [&](int j0, int j1) {
        for (int j = j0; j < j1; ++j)
            for (int i = 0; i < g.n1; ++i) cell(i, j);
    };
    if (w <= 1) {
        run_rows(0, g.n2);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (unsigned k = 0; k < w; ++k) {
        const int j0 = static_cast<int>(static_cast<long long>(g.n2) * k / w);
        const int j1 = static_cast<int>(static_cast<long long>(g.n2) * (k + 1) / w);
        pool.emplace_back(run_rows, j0, j1);
    }
    for (auto& t : pool) t.join();
}

}  // namespace detail

/// Relative-phase map at signal frequency `omega_s` (degenerate when absent).
inline MapGrid sweep_phase_map(const SourceConfig& src, const GridSpec& grid, std::optional<double> omega_s = {},
                               SweepOptions opt = {}) {
    src.validate();
    grid.validate();
    const double ws = omega_s.value_or(0.5 * src.pump.omega());
    const SourceModel model(src, ws);

    MapGrid out;
    out.kind = MapKind::phase;
    out.grid = grid;
    out.source = src;
    out.omega_s = ws;
    out.timestamp = utc_timestamp();
    out.value1.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());

    detail::for_each_cell(grid, opt.workers, [&](int i, int j) {
        try {
            const UnitVec3 u = cell_direction(grid, src, grid.coord1(i), grid.coord2(j));
            out.value1[out.index(i, j)] = detail::phase_at(model, u).total;
        } catch (const Error&) {
            // cell stays NaN
        }
    });
    return out;
}

/// Signal and idler delay maps for a signal detected behind a narrow filter
/// centred at `filter_nm`.
inline MapGrid sweep_delay_map(const SourceConfig& src, const GridSpec& grid, double filter_nm,
                               SweepOptions opt = {}) {
    src.validate();
    grid.validate();
    const double ws = units::omega_from_wavelength(filter_nm);
    const SourceModel model(src, ws);

    MapGrid out;
    out.kind = MapKind::delay;
    out.grid = grid;
    out.source = src;
    out.omega_s = ws;
    out.filter_nm = filter_nm;
    out.timestamp = utc_timestamp();
    out.value1.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    out.value2.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());

    detail::for_each_cell(grid, opt.workers, [&](int i, int j) {
        try {
            const UnitVec3 u_s = cell_direction(grid, src, grid.coord1(i), grid.coord2(j));
            const UnitVec3 u_i = model.idler_direction(u_s);
            const double ds = detail::delay(detail::delay_terms(model, Photon::signal, u_s));
            const double di = detail::delay(detail::delay_terms(model, Photon::idler, u_i));
            out.value1[out.index(i, j)] = ds;
            out.value2[out.index(i, j)] = di;
        } catch (const Error&) {
        }
    });
    return out;
}

/// Removes 2*pi jumps from wrapped phase values: first along the centre
/// column outward, then along each row from its centre cell outward.
inline void unwrap_from_center(std::vector<double>& v, int n1, int n2) {
    auto fix = [&](std::size_t ref, std::size_t cur) {
        if (std::isnan(v[ref]) || std::isnan(v[cur])) return;
        v[cur] -= units::two_pi * std::round((v[cur] - v[ref]) / units::two_pi);
    };
    auto at = [&](int i, int j) { return static_cast<std::size_t>(j) * static_cast<std::size_t>(n1) + i; };
    const int ic = n1 / 2, jc = n2 / 2;
    for (int j = jc + 1; j < n2; ++j) fix(at(ic, j - 1), at(ic, j));
    for (int j = jc - 1; j >= 0; --j) fix(at(ic, j + 1), at(ic, j));
    for (int j = 0; j < n2; ++j) {
        for (int i = ic + 1; i < n1; ++i) fix(at(i - 1, j), at(i, j));
        for (int i = ic - 1; i >= 0; --i) fix(at(i + 1, j), at(i, j));
    }
}

// ---------------------------------------------------------------------------
// Profile analysis

struct LineSpec {
    enum class Kind { y_zero, x_zero, phi_const };
    Kind kind = Kind::y_zero;
    double phi = 0.0;  // rad, phi_const only

    static LineSpec y0() { return {Kind::y_zero, 0.0}; }
    static LineSpec x0() { return {Kind::x_zero, 0.0}; }
    static LineSpec azimuth(double phi) { return {Kind::phi_const, phi}; }
};

struct ProfileFit {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;  // value ~ c0 + c1 theta + c2 theta^2 (rad)
    double rms_residual = 0.0;
    double span = 0.0;                    // max - min of the sampled values
    std::vector<double> theta;            // signed polar angle of each sample, rad
    std::vector<double> value;
    std::vector<double> slope;            // 2 c2 theta + c1

    double evaluate(double t) const { return c0 + c1 * t + c2 * t * t; }
};

/// Least-squares quadratic fit of (theta, value) samples.
inline ProfileFit fit_quadratic(const std::vector<double>& theta, const std::vector<double>& value) {
    if (theta.size() != value.size()) throw FitError("theta and value sample counts differ");
    std::vector<std::size_t> ok;
    for (std::size_t k = 0; k < theta.size(); ++k)
        if (std::isfinite(theta[k]) && std::isfinite(value[k])) ok.push_back(k);
    if (ok.size() < 5) throw FitError("quadratic fit needs at least 5 valid samples, got " + std::to_string(ok.size()));

    const auto n = static_cast<Eigen::Index>(ok.size());
    Eigen::MatrixXd A(n, 3);
    Eigen::VectorXd b(n);
    ProfileFit fit;
    for (Eigen::Index r = 0; r < n; ++r) {
        const double t = theta[ok[static_cast<std::size_t>(r)]];
        A(r, 0) = 1.0;
        A(r, 1) = t;
        A(r, 2) = t * t;
        b(r) = value[ok[static_cast<std::size_t>(r)]];
        fit.theta.push_back(t);
        fit.value.push_back(b(r));
    }
    const Eigen::Vector3d c = A.colPivHouseholderQr().solve(b);
    fit.c0 = c(0);
    fit.c1 = c(1);
    fit.c2 = c(2);
    double ss = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
        const double e = b(r) - fit.evaluate(A(r, 1));
        ss += e * e;
    }
    fit.rms_residual = std::sqrt(ss / static_cast<double>(n));
    const auto [mn, mx] = std::minmax_element(fit.value.begin(), fit.value.end());
    fit.span = *mx - *mn;
    for (double t : fit.theta) fit.slope.push_back(2.0 * fit.c2 * t + fit.c1);
    return fit;
}

namespace detail {

inline int nearest_index(double target, double min, double step, int n) {
    if (n == 1) return std::abs(target - min) <= 1e-9 * std::max(1.0, std::abs(min)) ? 0 : -1;
    const double f = (target - min) / step;
    const long k = std::lround(f);
    if (k < 0 || k >= n || std::abs(f - static_cast<double>(k)) > 1e-6) return -1;
    return static_cast<int>(k);
}

}  // namespace detail

/// Extracts the samples of a map along a line through the pump and fits a
/// quadratic in the signed polar angle from the pump direction.
inline ProfileFit fit_quadratic_profile(const MapGrid& map, const LineSpec& line) {
    const GridSpec& g = map.grid;
    std::vector<double> theta, value;
    const UnitVec3 pump = map.source.pump.direction();

    if (g.mode == GridMode::detection_plane_xy) {
        if (line.kind == LineSpec::Kind::phi_const)
            throw FitError("azimuth lines need an angular map; use y=0 or x=0 on a detection-plane map");
        const auto [xc, yc] = pump_spot(map.source);
        const bool along_x = line.kind == LineSpec::Kind::y_zero;
        const int fixed = along_x ? detail::nearest_index(yc, g.c2_min, g.step2(), g.n2)
                                  : detail::nearest_index(xc, g.c1_min, g.step1(), g.n1);
        if (fixed < 0) throw FitError(std::string("grid has no ") + (along_x ? "row on y = 0" : "column on x = 0"));
        const int count = along_x ? g.n1 : g.n2;
        for (int k = 0; k < count; ++k) {
            const int i = along_x ? k : fixed, j = along_x ? fixed : k;
            const double c1 = g.coord1(i), c2 = g.coord2(j);
            const UnitVec3 u = cell_direction(g, map.source, c1, c2);
            const double offset = along_x ? c1 - xc : c2 - yc;
            theta.push_back(std::copysign(angle_between(u, pump), offset));
            value.push_back(map.value1[map.index(i, j)]);
        }
    } else {
        double phi = 0.0;
        if (line.kind == LineSpec::Kind::x_zero) phi = units::pi / 2;
        if (line.kind == LineSpec::Kind::phi_const) phi = line.phi;
        const int j = detail::nearest_index(phi, g.c2_min, g.step2(), g.n2);
        if (j < 0) throw FitError("grid has no row at the requested azimuth");
        for (int i = 0; i < g.n1; ++i) {
            theta.push_back(g.coord1(i));
            value.push_back(map.value1[map.index(i, j)]);
        }
    }
    return fit_quadratic(theta, value);
}

}  // namespace spdcmap
