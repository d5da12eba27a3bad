#pragma once

// Direction and frame algebra for the two-crystal source: unit vectors,
// spherical angles, rotations between pump and laboratory frames, and
// isotropic (ordinary-wave) refraction at planar interfaces.

#include <array>
#include <cmath>
#include <string>

#include "spdcmap/error.hpp"
#include "spdcmap/units.hpp"

namespace spdcmap {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

/// Direction cosines with |v| = 1 (to 1e-12).
class UnitVec3 {
public:
    static constexpr double kNormTolerance = 1e-12;

    constexpr UnitVec3() : v_{0.0, 0.0, 1.0} {}

    /// Validating constructor; throws ValidationError when |v| differs from 1.
    static UnitVec3 checked(const Vec3& v) {
        const double n = norm(v);
        if (!std::isfinite(n) || std::abs(n - 1.0) > kNormTolerance)
            throw ValidationError("vector is not of unit length (|v| = " + std::to_string(n) + ")");
        return UnitVec3(v);
    }
    static UnitVec3 checked(double x, double y, double z) { return checked(Vec3{x, y, z}); }

    /// Normalizes a nonzero vector.
    static UnitVec3 normalized(const Vec3& v) {
        const double n = norm(v);
        if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("cannot normalize a zero or non-finite vector");
        return UnitVec3(v / n);
    }

    constexpr double x() const { return v_.x; }
    constexpr double y() const { return v_.y; }
    constexpr double z() const { return v_.z; }
    constexpr const Vec3& vec() const { return v_; }
    constexpr operator const Vec3&() const { return v_; }
    constexpr UnitVec3 operator-() const { return UnitVec3(-v_); }
    constexpr bool operator==(const UnitVec3&) const = default;

    /// Wraps an already-normalized vector without checking. Internal use.
    static constexpr UnitVec3 trusted(const Vec3& v) { return UnitVec3(v); }

private:
    constexpr explicit UnitVec3(const Vec3& v) : v_(v) {}
    Vec3 v_;
};

inline double angle_between(const Vec3& a, const Vec3& b) {
    // atan2 form stays accurate for nearly parallel vectors
    return std::atan2(norm(cross(a, b)), dot(a, b));
}

/// Polar angle theta in [0, pi] and azimuth phi in (-pi, pi].
struct SphericalAngles {
    double theta = 0.0;
    double phi = 0.0;

    bool operator==(const SphericalAngles&) const = default;
};

inline double normalize_azimuth(double phi) {
    double r = std::remainder(phi, units::two_pi);
    if (r <= -units::pi) r += units::two_pi;
    return r;
}

struct SinCos {
    double sin, cos;
};

/// sin and cos of an azimuth, reduced by quarter turns first so that
/// multiples of pi/2 give exact 0 and +-1 (std::sin(pi) is 1.2e-16, which
/// breaks the mirror symmetry between phi and phi + pi).
inline SinCos azimuth_sincos(double phi) {
    constexpr double quarter = units::pi / 2;
    const double q = std::nearbyint(phi / quarter);
    const double r = std::fma(-q, quarter, phi);
    const double s = std::sin(r), c = std::cos(r);
    switch (static_cast<long long>(q) & 3) {
        case 0: return {s, c};
        case 1: return {c, -s};
        case 2: return {-s, -c};
        default: return {-c, s};
    }
}

inline UnitVec3 direction_from_angles(const SphericalAngles& a) {
    const double st = std::sin(a.theta);
    const SinCos p = azimuth_sincos(a.phi);
    return UnitVec3::trusted({st * p.cos, st * p.sin, std::cos(a.theta)});
}

inline SphericalAngles angles_from_direction(const Vec3& v) {
    const double n = norm(v);
    if (!std::isfinite(n) || std::abs(n - 1.0) > UnitVec3::kNormTolerance)
        throw ValidationError("angles_from_direction: input is not a unit vector");
    const double rho = std::hypot(v.x, v.y);
    SphericalAngles out;
    out.theta = std::atan2(rho, v.z);
    out.phi = rho == 0.0 ? 0.0 : normalize_azimuth(std::atan2(v.y, v.x));
    return out;
}

/// Row-major 3x3 matrix intended to hold proper rotations.
class Rotation3 {
public:
    constexpr Rotation3() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}
    constexpr explicit Rotation3(const std::array<double, 9>& m) : m_(m) {}

    constexpr double operator()(int r, int c) const { return m_[static_cast<std::size_t>(r * 3 + c)]; }
    constexpr const std::array<double, 9>& data() const { return m_; }

    constexpr Vec3 operator*(const Vec3& v) const {
        return {m_[0] * v.x + m_[1] * v.y + m_[2] * v.z,
                m_[3] * v.x + m_[4] * v.y + m_[5] * v.z,
                m_[6] * v.x + m_[7] * v.y + m_[8] * v.z};
    }
    UnitVec3 operator*(const UnitVec3& v) const { return UnitVec3::trusted(*this * v.vec()); }

    constexpr Rotation3 operator*(const Rotation3& o) const {
        std::array<double, 9> r{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r[static_cast<std::size_t>(i * 3 + j)] = s;
            }
        return Rotation3(r);
    }

    constexpr Rotation3 transpose() const {
        return Rotation3({m_[0], m_[3], m_[6], m_[1], m_[4], m_[7], m_[2], m_[5], m_[8]});
    }

    constexpr double determinant() const {
        return m_[0] * (m_[4] * m_[8] - m_[5] * m_[7]) - m_[1] * (m_[3] * m_[8] - m_[5] * m_[6]) +
               m_[2] * (m_[3] * m_[7] - m_[4] * m_[6]);
    }

    constexpr bool operator==(const Rotation3&) const = default;

private:
    std::array<double, 9> m_;
};

/// Pump frame -> laboratory frame: columns are the pump-frame axes x', y', z'
/// expressed in the laboratory frame, with z' along the pump component at
/// polar/azimuthal angles (theta_p, phi_p).
inline Rotation3 pump_frame_rotation(double theta_p, double phi_p) {
    const double ct = std::cos(theta_p), st = std::sin(theta_p);
    const SinCos a = azimuth_sincos(phi_p);
    const double cp = a.cos, sp = a.sin;
    return Rotation3({ct * cp, -sp, st * cp,  //
                      ct * sp, cp, st * sp,   //
                      -st, 0.0, ct});
}

/// Rotation by `theta` about the in-plane axis perpendicular to the plane of
/// incidence at azimuth `phi`; carries +z to direction (theta, phi). Equal to
/// pump_frame_rotation(theta, phi) * Rz(-phi), but exactly the identity at
/// theta = 0 for every phi.
inline Rotation3 tilt_rotation(double theta, double phi) {
    const SinCos a = azimuth_sincos(phi);
    const double kx = -a.sin, ky = a.cos;
    const double s = std::sin(theta), v = 1.0 - std::cos(theta);
    // Rodrigues with k = (kx, ky, 0)
    return Rotation3({1.0 - v * ky * ky, v * kx * ky, s * ky,  //
                      v * kx * ky, 1.0 - v * kx * kx, -s * kx, //
                      -s * ky, s * kx, 1.0 - v});
}

/// Tangential (in-interface) part of `v` for an interface with unit normal `n`.
inline Vec3 tangential(const Vec3& v, const UnitVec3& n) { return v - n.vec() * dot(v, n.vec()); }

/// Snell refraction of an isotropic (ordinary) wave through a planar interface.
/// `normal` points along the propagation side (k_in . normal > 0).
inline UnitVec3 refract_ordinary(const UnitVec3& k_in, const UnitVec3& normal, double n_in, double n_out) {
    if (!(n_in > 0.0) || !(n_out > 0.0)) throw ValidationError("refract_ordinary: indices must be positive");
    if (!(dot(k_in, normal) > 0.0)) throw ValidationError("refract_ordinary: wave does not propagate toward the interface");
    const Vec3 t = tangential(k_in.vec(), normal) * (n_in / n_out);
    const double s2 = dot(t, t);
    if (s2 >= 1.0) throw RefractionError("total internal reflection");
    return UnitVec3::trusted(t + normal.vec() * std::sqrt(1.0 - s2));
}

/// External emission angles of a point (x, y) on a detection plane at distance L.
inline SphericalAngles detection_point_to_angles(double x_mm, double y_mm, double L_mm) {
    if (!(L_mm > 0.0)) throw ValidationError("detection distance must be positive");
    SphericalAngles a;
    a.theta = std::atan(std::hypot(x_mm, y_mm) / L_mm);
    a.phi = (x_mm == 0.0 && y_mm == 0.0) ? 0.0 : normalize_azimuth(std::atan2(y_mm, x_mm));
    return a;
}

}  // namespace spdcmap
