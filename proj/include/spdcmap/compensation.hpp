#pragma once

// Pump-tilt self-compensation: tilt the pump (with the crystals following it
// so the pump-to-axis angle is preserved) until the crystal-1 / crystal-2
// wavepacket delay vanishes at a chosen emission point.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "spdcmap/error.hpp"
#include "spdcmap/maps.hpp"
#include "spdcmap/phasematch.hpp"
#include "spdcmap/roots.hpp"
#include "spdcmap/source.hpp"

namespace spdcmap {

/// Emission point that moves with the pump: a signal frequency plus an
/// offset (theta_rel, phi_rel) from the pump direction, as in
/// emission_relative_to_pump.
struct PumpRelativeTarget {
    double omega_s = 0.0;
    double theta_rel = 0.0;
    double phi_rel = 0.0;

    EmissionCoord resolve(const SourceConfig& src) const {
        return emission_relative_to_pump(src, omega_s, theta_rel, phi_rel);
    }
};

inline constexpr double kConstraintTolerance = 1e-10;

/// Configuration with `pump` applied and both optic axes co-rotated with the
/// refracted pump so that each crystal keeps its normal-incidence
/// pump-to-axis angle. Idempotent.
inline SourceConfig constrained_pump_state(const PumpConfig& pump, const SourceConfig& src) {
    if (!(pump.theta_p >= 0.0 && pump.theta_p < units::pi / 2))
        throw ConstraintError("pump tilt " + std::to_string(units::deg(pump.theta_p)) +
                              " deg cannot be refracted into the crystals");
    SourceConfig out = src;
    out.pump = pump;
    out.axes_follow_pump = true;
    for (CrystalIndex n : {CrystalIndex::first, CrystalIndex::second}) {
        const double cut = out.crystal(n).axis.theta;
        const double alpha = pump_internal_state(out, n).alpha;
        if (std::abs(alpha - cut) > kConstraintTolerance)
            throw ConstraintError("pump-to-axis angle not preserved in crystal " +
                                  std::to_string(static_cast<int>(n)));
    }
    return out;
}

struct TiltSample {
    double theta_p = 0.0;
    std::optional<double> delay_fs;  // absent when the sample could not be evaluated
};

struct TiltScanResult {
    std::vector<TiltSample> samples;
    std::optional<double> root;
    std::optional<std::pair<double, double>> bracket;
};

inline double delay_at_tilt(const SourceConfig& src, double theta_p, double phi_p, const PumpRelativeTarget& target) {
    PumpConfig pump = src.pump;
    pump.theta_p = theta_p;
    pump.phi_p = phi_p;
    const SourceConfig s = constrained_pump_state(pump, src);
    return time_delay(s, target.resolve(s), Photon::signal);
}

/// Signal delay at `target` over pump tilts in [theta_lo, theta_hi].
inline TiltScanResult scan_tilt(const SourceConfig& src, double phi_p, double theta_lo, double theta_hi, int n_samples,
                                const PumpRelativeTarget& target) {
    if (n_samples < 2) throw ValidationError("tilt scan needs at least two samples");
    if (!(theta_hi > theta_lo)) throw ValidationError("tilt scan range is empty");
    TiltScanResult res;
    for (int k = 0; k < n_samples; ++k) {
        TiltSample s;
        s.theta_p = theta_lo + (theta_hi - theta_lo) * k / (n_samples - 1);
        try {
            s.delay_fs = delay_at_tilt(src, s.theta_p, phi_p, target);
        } catch (const Error&) {
        }
        res.samples.push_back(s);
    }
    const TiltSample* prev = nullptr;
    for (const auto& s : res.samples) {
        if (!s.delay_fs) continue;
        if (*s.delay_fs == 0.0) {
            res.root = s.theta_p;
            res.bracket = {s.theta_p, s.theta_p};
            break;
        }
        if (prev && (*prev->delay_fs > 0.0) != (*s.delay_fs > 0.0)) {
            res.bracket = {prev->theta_p, s.theta_p};
            break;
        }
        prev = &s;
    }
    return res;
}

struct CompensationResult {
    double theta_p = 0.0;
    double phi_p = 0.0;
    double delay_signal_fs = 0.0;
    double delay_idler_fs = 0.0;
    std::pair<double, double> bracket;
    TiltScanResult scan;
    // degenerate phase-matching angle (crystal 1, pump-relative) at the root
    std::optional<double> degenerate_angle_at_root;
};

inline constexpr double kCompensationDelayToleranceFs = 0.01;

struct TiltSearchOptions {
    double theta_lo = 0.0;
    double theta_hi = units::rad(60.0);
    int n_samples = 61;
    double x_tolerance = 1e-9;
};

/// Pump tilt (at azimuth phi_p) at which the signal delay at `target`
/// vanishes. Throws NoSolutionError when the scan finds no sign change.
inline CompensationResult find_self_compensating_tilt(const SourceConfig& src, double phi_p,
                                                      const PumpRelativeTarget& target,
                                                      const TiltSearchOptions& opt = {}) {
    CompensationResult out;
    out.phi_p = phi_p;
    out.scan = scan_tilt(src, phi_p, opt.theta_lo, opt.theta_hi, opt.n_samples, target);
    if (!out.scan.bracket) throw NoSolutionError("delay does not change sign over the scanned tilt range");
    out.bracket = *out.scan.bracket;
    if (out.scan.root) {
        out.theta_p = *out.scan.root;
    } else {
        RootOptions ro;
        ro.x_tolerance = opt.x_tolerance;
        const auto r = bisect_secant([&](double t) { return delay_at_tilt(src, t, phi_p, target); }, out.bracket.first,
                                     out.bracket.second, ro);
        out.theta_p = r.x;
    }

    PumpConfig pump = src.pump;
    pump.theta_p = out.theta_p;
    pump.phi_p = phi_p;
    const SourceConfig s = constrained_pump_state(pump, src);
    const EmissionCoord at = target.resolve(s);
    out.delay_signal_fs = time_delay(s, at, Photon::signal);
    out.delay_idler_fs = time_delay(s, at, Photon::idler);
    if (!(std::abs(out.delay_signal_fs) < kCompensationDelayToleranceFs))
        throw SolverError("compensating tilt failed its re-evaluation (|dt| = " +
                          std::to_string(out.delay_signal_fs) + " fs)");
    try {
        out.degenerate_angle_at_root = degenerate_emission_angle(s, CrystalIndex::first, target.phi_rel).theta_ext;
    } catch (const Error&) {
    }
    return out;
}

}  // namespace spdcmap
