#pragma once

// Signal/idler conjugation, longitudinal mismatch, biphoton amplitude and
// the degenerate phase-matching angle.

#include <cmath>
#include <string>

#include "spdcmap/error.hpp"
#include "spdcmap/roots.hpp"
#include "spdcmap/source.hpp"
#include "spdcmap/units.hpp"

namespace spdcmap {

/// sinc(dk d / 2) exp(i dk d / 2), written as magnitude and phase.
struct BiphotonWeight {
    double magnitude = 1.0;
    double phase = 0.0;
};

inline BiphotonWeight amplitude_weight(double delta_kappa_per_mm, double d_mm) {
    const double x = 0.5 * delta_kappa_per_mm * d_mm;
    const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
    BiphotonWeight w;
    w.magnitude = std::abs(sinc);
    w.phase = sinc < 0.0 ? x + units::pi : x;
    return w;
}

/// Idler coordinate conjugate to `signal` under energy and transverse-momentum
/// conservation. Applying it twice returns the signal.
inline EmissionCoord conjugate(const SourceConfig& src, const EmissionCoord& signal) {
    const SourceModel model(src, signal.omega_s);
    return EmissionCoord::from_direction(model.omega_i(), model.idler_direction(signal.direction()));
}

/// Internal pump state (extraordinary component) of crystal n.
inline PumpInternalState pump_internal_state(const SourceConfig& src, CrystalIndex n) {
    const auto& c = src.crystal(n);
    const double omega_p = src.pump.omega();
    const UnitVec3 axis = effective_axis(src, n);
    const Vec3 t = tangential(src.pump.direction().vec(), lab_normal());
    const auto w = extraordinary_from_tangential(t, lab_normal(), axis, n_o(c.material, omega_p),
                                                 n_e_principal(c.material, omega_p));
    return {w.direction, w.index, w.alpha};
}

/// Longitudinal wavevector mismatch in crystal n, 1/mm.
inline double delta_kappa(const SourceConfig& src, const EmissionCoord& signal, CrystalIndex n) {
    const SourceModel model(src, signal.omega_s);
    const UnitVec3 u_s = signal.direction();
    return model.delta_kappa(u_s, model.idler_direction(u_s), n);
}

/// Signal coordinate whose external transverse direction is offset from the
/// pump's by sin(theta_rel) along azimuth phi_rel. At normal incidence this
/// is simply (theta_rel, phi_rel); at the degenerate frequency the idler sits
/// at the mirror offset.
inline EmissionCoord emission_relative_to_pump(const SourceConfig& src, double omega_s, double theta_rel,
                                               double phi_rel) {
    const UnitVec3 p = src.pump.direction();
    const double s = std::sin(theta_rel);
    const SinCos a = azimuth_sincos(phi_rel);
    const double tx = p.x() + s * a.cos;
    const double ty = p.y() + s * a.sin;
    const double t2 = tx * tx + ty * ty;
    if (!(t2 < 1.0)) throw KinematicsError("pump-relative emission direction is evanescent");
    return EmissionCoord::from_direction(omega_s, UnitVec3::trusted({tx, ty, std::sqrt(1.0 - t2)}));
}

struct PhaseMatchSolution {
    double theta_ext = 0.0;        // external angle relative to the pump, rad
    double residual_per_mm = 0.0;  // delta kappa at theta_ext
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int iterations = 0;
};

inline constexpr double kDegenerateBracketLo = units::rad(0.1);
inline constexpr double kDegenerateBracketHi = units::rad(15.0);

/// External emission angle at which degenerate pairs (omega_s = omega_p / 2)
/// are phase matched in crystal n.
inline PhaseMatchSolution degenerate_emission_angle(const SourceConfig& src, CrystalIndex n, double phi_rel = 0.0) {
    const double omega_s = 0.5 * src.pump.omega();
    const SourceModel model(src, omega_s);
    auto dk = [&](double theta) {
        const UnitVec3 u_s = emission_relative_to_pump(src, omega_s, theta, phi_rel).direction();
        return model.delta_kappa(u_s, model.idler_direction(u_s), n);
    };

    PhaseMatchSolution sol;
    // collinear phase matching: the root sits at the bracket's excluded origin
    const double at_zero = dk(0.0);
    if (std::abs(at_zero) < 1e-9) {
        sol.residual_per_mm = at_zero;
        return sol;
    }
    RootOptions opt;
    opt.x_tolerance = 1e-12;
    const auto r = bisect_secant(dk, kDegenerateBracketLo, kDegenerateBracketHi, opt);
    sol.theta_ext = r.x;
    sol.residual_per_mm = r.f;
    sol.bracket_lo = r.lo;
    sol.bracket_hi = r.hi;
    sol.iterations = r.iterations;
    return sol;
}

/// Cut angle (pump-to-axis) giving collinear degenerate phase matching:
/// n_e(omega_p, theta) = n_o(omega_p / 2).
inline double collinear_cut_angle(const Material& m, double lambda_p_nm) {
    const double wp = units::omega_from_wavelength(lambda_p_nm);
    const double nop = n_o(m, wp), nep = n_e_principal(m, wp), nos = n_o(m, 0.5 * wp);
    const double s2 = (1.0 / (nos * nos) - 1.0 / (nop * nop)) / (1.0 / (nep * nep) - 1.0 / (nop * nop));
    if (!(s2 >= 0.0 && s2 <= 1.0)) throw NoSolutionError(m.name() + ": no collinear type-I phase matching");
    return std::asin(std::sqrt(s2));
}

}  // namespace spdcmap
