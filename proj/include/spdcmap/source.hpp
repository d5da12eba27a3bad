#pragma once

// Two-crystal source configuration and the frequency-resolved optical model
// that every phase-matching, phase-map and delay-map evaluation shares.
//
// Geometry: laboratory z is the normal of all (planar) interfaces. Crystal 1
// occupies 0 <= z <= d1, crystal 2 follows it. Type-I (ooe): in crystal n the
// pump component that is extraordinary with respect to axis a_n generates
// ordinary signal/idler photons. Pairs born in crystal 1 cross crystal 2 as
// extraordinary waves; pairs born in crystal 2 leave directly into air.

#include <array>
#include <cmath>
#include <string>

#include "spdcmap/crystal.hpp"
#include "spdcmap/error.hpp"
#include "spdcmap/refraction.hpp"
#include "spdcmap/units.hpp"
#include "spdcmap/vecgeom.hpp"

namespace spdcmap {

enum class CrystalIndex { first = 1, second = 2 };
enum class Photon { signal, idler };

inline const char* to_string(Photon p) { return p == Photon::signal ? "signal" : "idler"; }

struct PumpConfig {
    double lambda_nm = 405.0;
    double theta_p = 0.0;  // external incidence polar angle, rad
    double phi_p = 0.0;    // plane-of-incidence azimuth, rad
    double phi_o = 0.0;    // initial phase between orthogonal pump components, rad

    double omega() const { return units::omega_from_wavelength(lambda_nm); }
    UnitVec3 direction() const { return direction_from_angles({theta_p, phi_p}); }
};

struct SourceConfig {
    CrystalSpec crystal1;
    CrystalSpec crystal2;
    PumpConfig pump;
    double detection_distance_mm = 1200.0;
    bool include_part_c = false;
    double mu = 0.5;
    // co-rotate both optic axes with the refracted pump so the pump-to-axis
    // angle keeps its normal-incidence value in each crystal
    bool axes_follow_pump = false;
    bool allow_nonorthogonal_axes = false;

    const CrystalSpec& crystal(CrystalIndex n) const { return n == CrystalIndex::first ? crystal1 : crystal2; }

    void validate() const {
        crystal1.validate();
        crystal2.validate();
        if (!(detection_distance_mm > 0.0)) throw ValidationError("detection distance must be positive");
        if (!(mu >= 0.0 && mu <= 1.0)) throw ValidationError("depth fraction mu must lie in [0, 1]");
        if (!(pump.theta_p >= 0.0 && pump.theta_p < units::pi / 2))
            throw ValidationError("pump incidence angle must lie in [0, 90) degrees");
        crystal1.material.require_in_range(pump.lambda_nm);
        crystal2.material.require_in_range(pump.lambda_nm);
        if (!allow_nonorthogonal_axes) {
            const double dphi = std::remainder(crystal1.axis.phi - crystal2.axis.phi, units::pi);
            if (std::abs(std::abs(dphi) - units::pi / 2) > 1e-9)
                throw ValidationError("optic-axis planes of the two crystals are not orthogonal");
        }
    }
};

/// Signal-photon spectral-angular coordinate; angles are external (in air).
struct EmissionCoord {
    double omega_s = 0.0;
    double theta_sa = 0.0;
    double phi_sa = 0.0;

    UnitVec3 direction() const { return direction_from_angles({theta_sa, phi_sa}); }
    static EmissionCoord from_direction(double omega, const UnitVec3& u) {
        const auto a = angles_from_direction(u);
        return {omega, a.theta, a.phi};
    }
};

/// Internal pump angle in crystal n when the axes follow the pump: the pump
/// refracts with the fixed index n_e(omega_p, cut angle).
inline double followed_pump_internal_angle(const SourceConfig& src, CrystalIndex n) {
    const auto& c = src.crystal(n);
    const double ne_cut = n_e_angle(c.material, src.pump.omega(), c.axis.theta);
    const double s = std::sin(src.pump.theta_p) / ne_cut;
    if (!(s < 1.0)) throw ConstraintError("pump cannot refract into the crystal at this tilt");
    return std::asin(s);
}

/// Laboratory-frame optic axis of crystal n as used by the physics.
inline UnitVec3 effective_axis(const SourceConfig& src, CrystalIndex n) {
    const auto& c = src.crystal(n);
    const UnitVec3 nominal = c.axis_direction();
    if (!src.axes_follow_pump || src.pump.theta_p == 0.0) return nominal;
    const double theta_int = followed_pump_internal_angle(src, n);
    return tilt_rotation(theta_int, src.pump.phi_p) * nominal;
}

inline constexpr UnitVec3 lab_normal() { return UnitVec3::trusted({0.0, 0.0, 1.0}); }

/// Internal extraordinary pump wave of one crystal.
struct PumpInternalState {
    UnitVec3 direction;
    double index = 1.0;
    double alpha = 0.0;
};

/// Kinematics of one down-converted photon born in crystal 1 (ordinary
/// there) that crosses crystal 2 as an extraordinary wave.
struct PhotonKinematics {
    double omega = 0.0;
    UnitVec3 k_air;      // external unit wavevector
    UnitVec3 k_o1;       // ordinary in crystal 1
    UnitVec3 k_o2;       // ordinary in crystal 2 (pairs born there)
    UnitVec3 k_e2;       // extraordinary in crystal 2
    UnitVec3 ray_e2;     // Poynting direction in crystal 2
    double n_e2 = 1.0;   // n_e(omega, alpha) in crystal 2
    double alpha_e2 = 0.0;
};

/// Optical constants of the source at a given signal frequency, with the
/// idler at omega_p - omega_s. Build once per frequency; evaluating a grid
/// with one model or points with fresh models gives identical numbers.
class SourceModel {
public:
    SourceModel(const SourceConfig& src, double omega_s)
        : src_(src),
          omega_p_(src.pump.omega()),
          omega_s_(omega_s),
          omega_i_(idler_omega(src.pump.omega(), omega_s)),
          axis1_(effective_axis(src, CrystalIndex::first)),
          axis2_(effective_axis(src, CrystalIndex::second)),
          pump1_(src.crystal1.material, omega_p_),
          pump2_(src.crystal2.material, omega_p_),
          sig1_(src.crystal1.material, omega_s_),
          sig2_(src.crystal2.material, omega_s_),
          idl1_(src.crystal1.material, omega_i_),
          idl2_(src.crystal2.material, omega_i_) {
        pump_dir_ = src.pump.direction();
        const Vec3 t = tangential(pump_dir_.vec(), lab_normal());
        pump_e_[0] = make_pump_state(t, axis1_, pump1_);
        pump_e_[1] = make_pump_state(t, axis2_, pump2_);
        pump_o1_ = refract_ordinary(pump_dir_, lab_normal(), 1.0, pump1_.n_o());
    }

    /// omega_p - omega_s, nudged by at most a few ulps so that the stored
    /// values satisfy omega_s + omega_i == omega_p exactly.
    static double idler_omega(double omega_p, double omega_s) {
        if (!(omega_s > 0.0 && omega_s < omega_p))
            throw KinematicsError("signal frequency must lie strictly between 0 and the pump frequency");
        double wi = omega_p - omega_s;
        for (int k = 0; k < 4 && omega_s + wi != omega_p; ++k)
            wi = std::nextafter(wi, omega_s + wi < omega_p ? omega_p : 0.0);
        return wi;
    }

    const SourceConfig& config() const { return src_; }
    double omega_p() const { return omega_p_; }
    double omega_s() const { return omega_s_; }
    double omega_i() const { return omega_i_; }
    double omega(Photon p) const { return p == Photon::signal ? omega_s_ : omega_i_; }
    const UnitVec3& axis(CrystalIndex n) const { return n == CrystalIndex::first ? axis1_ : axis2_; }
    const UnitVec3& pump_direction() const { return pump_dir_; }
    const PumpInternalState& pump_state(CrystalIndex n) const { return pump_e_[n == CrystalIndex::first ? 0 : 1]; }
    const UnitVec3& pump_ordinary_crystal1() const { return pump_o1_; }

    const SpectralSample& pump_sample(CrystalIndex n) const { return n == CrystalIndex::first ? pump1_ : pump2_; }
    const SpectralSample& sample(Photon p, CrystalIndex n) const {
        if (p == Photon::signal) return n == CrystalIndex::first ? sig1_ : sig2_;
        return n == CrystalIndex::first ? idl1_ : idl2_;
    }

    /// External idler direction from energy and transverse-momentum
    /// conservation: omega_i u_i,t = omega_p P_t - omega_s u_s,t.
    UnitVec3 idler_direction(const UnitVec3& u_s) const {
        const double px = omega_p_ * pump_dir_.x(), py = omega_p_ * pump_dir_.y();
        const double tx = (px - omega_s_ * u_s.x()) / omega_i_;
        const double ty = (py - omega_s_ * u_s.y()) / omega_i_;
        const double t2 = tx * tx + ty * ty;
        if (!(t2 < 1.0)) throw KinematicsError("conjugate photon would be evanescent");
        return UnitVec3::trusted({tx, ty, std::sqrt(1.0 - t2)});
    }

    /// Full internal kinematics of one photon of a crystal-1 pair.
    PhotonKinematics kinematics(Photon p, const UnitVec3& k_air) const {
        PhotonKinematics k;
        k.omega = omega(p);
        k.k_air = k_air;
        const Vec3 t = tangential(k_air.vec(), lab_normal());
        const auto& s1 = sample(p, CrystalIndex::first);
        const auto& s2 = sample(p, CrystalIndex::second);
        k.k_o1 = ordinary_from_tangential(t, s1.n_o());
        k.k_o2 = ordinary_from_tangential(t, s2.n_o());
        const auto w = extraordinary_from_tangential(t, lab_normal(), axis2_, s2.n_o(), s2.n_e());
        k.k_e2 = w.direction;
        k.n_e2 = w.index;
        k.alpha_e2 = w.alpha;
        k.ray_e2 = walkoff_ray(w.direction, axis2_, s2.n_o(), s2.n_e());
        return k;
    }

    /// Longitudinal mismatch k_p,z - k_s,z - k_i,z in crystal n, 1/mm.
    double delta_kappa(const UnitVec3& u_s, const UnitVec3& u_i, CrystalIndex n) const {
        const auto& ps = pump_state(n);
        const double kpz = units::k0_per_mm(omega_p_) * ps.index * ps.direction.z();
        const double ns = sample(Photon::signal, n).n_o();
        const double ni = sample(Photon::idler, n).n_o();
        const double ts2 = u_s.x() * u_s.x() + u_s.y() * u_s.y();
        const double ti2 = u_i.x() * u_i.x() + u_i.y() * u_i.y();
        const double ksz = units::k0_per_mm(omega_s_) * std::sqrt(ns * ns - ts2);
        const double kiz = units::k0_per_mm(omega_i_) * std::sqrt(ni * ni - ti2);
        return kpz - ksz - kiz;
    }

private:
    static PumpInternalState make_pump_state(const Vec3& t, const UnitVec3& axis, const SpectralSample& s) {
        const auto w = extraordinary_from_tangential(t, lab_normal(), axis, s.n_o(), s.n_e());
        return {w.direction, w.index, w.alpha};
    }

    static UnitVec3 ordinary_from_tangential(const Vec3& t, double n) {
        const double s2 = dot(t, t) / (n * n);
        if (s2 >= 1.0) throw RefractionError("total internal reflection");
        return UnitVec3::trusted(t / n + lab_normal().vec() * std::sqrt(1.0 - s2));
    }

    SourceConfig src_;
    double omega_p_;
    double omega_s_;
    double omega_i_;
    UnitVec3 axis1_;
    UnitVec3 axis2_;
    SpectralSample pump1_, pump2_;
    SpectralSample sig1_, sig2_;
    SpectralSample idl1_, idl2_;
    UnitVec3 pump_dir_;
    std::array<PumpInternalState, 2> pump_e_{};
    UnitVec3 pump_o1_;
};

}  // namespace spdcmap
