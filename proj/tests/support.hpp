#pragma once

// Shared fixtures and independent oracles for the test suites. The oracles
// deliberately avoid the library's vector code: scalar trigonometry and
// analytic Sellmeier derivatives only.

#include <cmath>
#include <random>

#include "spdcmap/compensation.hpp"
#include "spdcmap/crystal.hpp"
#include "spdcmap/maps.hpp"
#include "spdcmap/phasematch.hpp"
#include "spdcmap/source.hpp"
#include "spdcmap/units.hpp"

namespace fixtures {

using namespace spdcmap;

inline SourceConfig two_crystals(const Material& m, double d_mm, double cut_deg, double lambda_p) {
    SourceConfig s;
    s.crystal1 = {m, d_mm, {units::rad(cut_deg), 0.0}};
    s.crystal2 = {m, d_mm, {units::rad(cut_deg), units::rad(90.0)}};
    s.pump.lambda_nm = lambda_p;
    s.detection_distance_mm = 1200.0;
    return s;
}

// BBO, 0.6 mm, 29.3 deg cut, 405 nm pump
inline SourceConfig bbo() { return two_crystals(materials::bbo(), 0.6, 29.3, 405.0); }
// LiIO3, 0.59 mm, 51.95 deg cut, 351.1 nm pump
inline SourceConfig liio3() { return two_crystals(materials::liio3(), 0.59, 51.95, 351.1); }

/// Dispersionless uniaxial (or isotropic when no == ne) test medium.
inline Material constant_material(const std::string& name, double no, double ne) {
    return Material(name, Sellmeier{no * no, {}}, Sellmeier{ne * ne, {}}, WavelengthRange{200.0, 4000.0});
}

/// LiIO3 detection window: x in [0, 126], y from -126 mm in steps of 252 / n so that
/// row n / 2 sits exactly on y = 0 (n a power of two).
inline GridSpec liio3_window(int n = 256) {
    GridSpec g;
    g.mode = GridMode::detection_plane_xy;
    g.c1_min = 0.0;
    g.c1_max = 126.0;
    g.n1 = n;
    g.c2_min = -126.0;
    g.c2_max = -126.0 + 252.0 / n * (n - 1);
    g.n2 = n;
    return g;
}

inline std::mt19937_64& rng() {
    static std::mt19937_64 g(20241015ULL);
    return g;
}

inline double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng()); }

}  // namespace fixtures

namespace oracle {

// Sellmeier sets transcribed again, independently of the library tables.
struct Coeffs {
    double A, B, C, D;  // n^2 = A + B / (l^2 - C) - D l^2, l in um
};
inline constexpr Coeffs kBboO{2.7359, 0.01878, 0.01822, 0.01354};
inline constexpr Coeffs kBboE{2.3753, 0.01224, 0.01667, 0.01516};
inline constexpr Coeffs kLiio3O{3.415716, 0.047031, 0.035306, 0.008801};
inline constexpr Coeffs kLiio3E{2.918692, 0.035145, 0.028224, 0.003641};

inline double index(const Coeffs& c, double lambda_nm) {
    const double l2 = lambda_nm * lambda_nm * 1e-6;
    return std::sqrt(c.A + c.B / (l2 - c.C) - c.D * l2);
}

/// Analytic dn/dlambda, per nm.
inline double dindex(const Coeffs& c, double lambda_nm) {
    const double l = lambda_nm * 1e-3, l2 = l * l;
    const double dn2_dl = -2.0 * c.B * l / ((l2 - c.C) * (l2 - c.C)) - 2.0 * c.D * l;  // per um
    return dn2_dl / (2.0 * index(c, lambda_nm)) * 1e-3;
}

inline double ellipse(double no, double ne, double alpha) {
    return 1.0 / std::sqrt(std::cos(alpha) * std::cos(alpha) / (no * no) + std::sin(alpha) * std::sin(alpha) / (ne * ne));
}

/// Group index of an extraordinary wave at fixed alpha, analytic.
inline double group_index_e(const Coeffs& o, const Coeffs& e, double lambda_nm, double alpha) {
    const double no = index(o, lambda_nm), ne = index(e, lambda_nm);
    const double n = ellipse(no, ne, alpha);
    const double c2 = std::cos(alpha) * std::cos(alpha), s2 = std::sin(alpha) * std::sin(alpha);
    // n^-2 = c2 no^-2 + s2 ne^-2  ->  dn = n^3 (c2 dno / no^3 + s2 dne / ne^3)
    const double dn = n * n * n * (c2 * dindex(o, lambda_nm) / (no * no * no) + s2 * dindex(e, lambda_nm) / (ne * ne * ne));
    return n - lambda_nm * dn;
}

inline double group_index_o(const Coeffs& o, double lambda_nm) { return index(o, lambda_nm) - lambda_nm * dindex(o, lambda_nm); }

/// Scalar model of one photon crossing crystal 2 (optic axis in the yz plane
/// at polar angle cut) while travelling in the xz plane at signed external
/// angle theta. Returns its phase contribution and the ray's z cosine.
struct ScalarPhoton {
    double phase = 0.0;
    double ray_z = 1.0;
    double n = 1.0;
    double alpha = 0.0;
};

inline ScalarPhoton horizontal_photon(double no, double ne, double cut, double lambda_nm, double d_mm, double theta) {
    const double s_ext = std::sin(theta);
    // n(theta_int) sin(theta_int) = s_ext, cos(alpha) = cos(theta_int) cos(cut); bisection on theta_int
    double lo = -1.5, hi = 1.5;
    auto g = [&](double ti) {
        const double a = std::acos(std::cos(ti) * std::cos(cut));
        return ellipse(no, ne, a) * std::sin(ti) - s_ext;
    };
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        if ((g(mid) > 0.0) == (g(hi) > 0.0))
            hi = mid;
        else
            lo = mid;
    }
    const double ti = 0.5 * (lo + hi);
    const double ca = std::cos(ti) * std::cos(cut);
    const double alpha = std::acos(ca), sa = std::sin(alpha);
    const double n = ellipse(no, ne, alpha);
    const double rho = std::atan(0.5 * n * n * (1.0 / (ne * ne) - 1.0 / (no * no)) * std::sin(2.0 * alpha));
    // ray = cos(rho) k - sin(rho) (axis - k cos(alpha)) / sin(alpha)
    const double rx = std::cos(rho) * std::sin(ti) - std::sin(rho) * (0.0 - std::sin(ti) * ca) / sa;
    const double rz = std::cos(rho) * std::cos(ti) - std::sin(rho) * (std::cos(cut) - std::cos(ti) * ca) / sa;
    const double k0 = 2.0 * M_PI / lambda_nm * 1e6;  // 1/mm
    ScalarPhoton p;
    p.phase = k0 * d_mm / rz * (n * std::cos(rho) + rx * s_ext);
    p.ray_z = rz;
    p.n = n;
    p.alpha = alpha;
    return p;
}

/// Horizontal-plane relative phase at normal incidence: signal at signed
/// external angle theta_s, idler from transverse momentum conservation.
inline double horizontal_phase(const Coeffs& o, const Coeffs& e, double cut, double lambda_p, double lambda_s,
                               double d_mm, double theta_s) {
    const double lambda_i = 1.0 / (1.0 / lambda_p - 1.0 / lambda_s);
    const double s_i = -(lambda_i / lambda_s) * std::sin(theta_s);
    const double theta_i = std::asin(s_i);
    const auto ps = horizontal_photon(index(o, lambda_s), index(e, lambda_s), cut, lambda_s, d_mm, theta_s);
    const auto pi = horizontal_photon(index(o, lambda_i), index(e, lambda_i), cut, lambda_i, d_mm, theta_i);
    return ps.phase + pi.phase;
}

}  // namespace oracle
