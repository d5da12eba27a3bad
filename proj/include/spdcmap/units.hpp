#pragma once

// Unit conventions used throughout the library:
//   lengths            mm   (crystal lengths, detection distance, grid coordinates)
//   wavelengths        nm
//   time               fs
//   angular frequency  rad/fs
//   angles             rad  (degrees only at the CLI boundary)

#include <cmath>
#include <numbers>

namespace spdcmap::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Speed of light in vacuum, nm/fs.
inline constexpr double c_nm_per_fs = 299.792458;

inline constexpr double nm_per_mm = 1.0e6;
inline constexpr double nm_per_um = 1.0e3;

inline constexpr double deg(double radians) { return radians * 180.0 / pi; }
inline constexpr double rad(double degrees) { return degrees * pi / 180.0; }

inline double omega_from_wavelength(double lambda_nm) { return two_pi * c_nm_per_fs / lambda_nm; }
inline double wavelength_from_omega(double omega) { return two_pi * c_nm_per_fs / omega; }

/// Vacuum wavenumber omega/c in 1/mm.
inline double k0_per_mm(double omega) { return omega / c_nm_per_fs * nm_per_mm; }

/// Transit time in fs across `length_mm` at group index `n_group`.
inline double transit_fs(double length_mm, double n_group) {
    return length_mm * nm_per_mm * n_group / c_nm_per_fs;
}

}  // namespace spdcmap::units
