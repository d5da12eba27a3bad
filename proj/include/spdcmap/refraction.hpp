#pragma once

// Refraction into an extraordinary wave of a uniaxial crystal. The internal
// direction depends on its own index through the angle to the optic axis, so
// the index is found by fixed-point iteration on tangential-wavevector
// continuity:  n * k_t = (n_in * k_in)_t,  n = n_e(alpha(k)).

#include <cmath>
#include <string>

#include "spdcmap/crystal.hpp"
#include "spdcmap/error.hpp"
#include "spdcmap/vecgeom.hpp"

namespace spdcmap {

struct ExtraordinaryWave {
    UnitVec3 direction;
    double index = 1.0;
    double alpha = 0.0;  // angle between direction and optic axis
    int iterations = 0;
};

inline constexpr int kMaxFixedPointIterations = 100;
inline constexpr double kFixedPointTolerance = 1e-10;

/// Core solver. `t` is the conserved tangential component of n*k (from the
/// incident side), `normal` the interface normal along propagation.
inline ExtraordinaryWave extraordinary_from_tangential(const Vec3& t, const UnitVec3& normal, const UnitVec3& axis,
                                                       double n_o, double n_e) {
    const double t2 = dot(t, t);
    auto direction_for = [&](double n) {
        const double s2 = t2 / (n * n);
        if (s2 >= 1.0) throw RefractionError("total internal reflection into extraordinary wave");
        return UnitVec3::trusted(t / n + normal.vec() * std::sqrt(1.0 - s2));
    };
    auto index_for = [&](const UnitVec3& k) {
        const double c = dot(k, axis);
        const Vec3 x = cross(k, axis);
        const double s2 = dot(x, x);
        return 1.0 / std::sqrt(c * c / (n_o * n_o) + s2 / (n_e * n_e));
    };

    double n = n_o;
    double last_change = 0.0;
    int it = 0;
    for (; it < kMaxFixedPointIterations; ++it) {
        const double next = index_for(direction_for(n));
        last_change = std::abs(next - n);
        n = next;
        // iterate to round-off so mirror-image inputs give mirror-image outputs
        if (last_change <= 1e-15 * n) break;
    }
    if (last_change > kFixedPointTolerance)
        throw SolverError("extraordinary refraction did not converge (|dn| = " + std::to_string(last_change) + ")");

    ExtraordinaryWave w;
    w.direction = direction_for(n);
    w.index = n;
    w.alpha = angle_between(w.direction, axis);
    w.iterations = it + 1;
    return w;
}

/// Refracts `k_in` (in a medium of index n_in) into the extraordinary wave of
/// `crystal` at angular frequency `omega`. Returns direction and index.
inline ExtraordinaryWave refract_into_extraordinary(const UnitVec3& k_in, const UnitVec3& normal, double n_in,
                                                    double omega, const CrystalSpec& crystal) {
    if (!(n_in > 0.0)) throw ValidationError("refract_into_extraordinary: n_in must be positive");
    if (!(dot(k_in, normal) > 0.0))
        throw ValidationError("refract_into_extraordinary: wave does not propagate toward the interface");
    const double no = n_o(crystal.material, omega);
    const double ne = n_e_principal(crystal.material, omega);
    const Vec3 t = tangential(k_in.vec(), normal) * n_in;
    return extraordinary_from_tangential(t, normal, crystal.axis_direction(), no, ne);
}

}  // namespace spdcmap
