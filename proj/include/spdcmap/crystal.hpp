#pragma once

// Uniaxial crystal optics: Sellmeier dispersion, angle-dependent
// extraordinary index, group index and Poynting-vector walkoff.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spdcmap/error.hpp"
#include "spdcmap/units.hpp"
#include "spdcmap/vecgeom.hpp"

namespace spdcmap {

/// One additive term of a Sellmeier expression in lambda [um]:
///   pole:       B / (lambda^2 - C)
///   resonance:  B lambda^2 / (lambda^2 - C)
///   power:      B lambda^C
struct SellmeierTerm {
    enum class Kind { pole, resonance, power };
    Kind kind = Kind::pole;
    double B = 0.0;
    double C = 0.0;

    double eval(double lambda_um) const {
        const double l2 = lambda_um * lambda_um;
        switch (kind) {
            case Kind::pole: return B / (l2 - C);
            case Kind::resonance: return B * l2 / (l2 - C);
            case Kind::power: return B * std::pow(lambda_um, C);
        }
        return 0.0;
    }
};

/// n^2(lambda) = A + sum(terms).
struct Sellmeier {
    double A = 1.0;
    std::vector<SellmeierTerm> terms;

    double index(double lambda_nm) const {
        const double lum = lambda_nm / units::nm_per_um;
        double n2 = A;
        for (const auto& t : terms) n2 += t.eval(lum);
        return std::sqrt(n2);
    }
};

struct WavelengthRange {
    double min_nm = 0.0;
    double max_nm = 0.0;
    bool contains(double lambda_nm) const { return lambda_nm >= min_nm && lambda_nm <= max_nm; }
};

/// A uniaxial crystal material. Immutable after construction.
class Material {
public:
    Material(std::string name, Sellmeier ordinary, Sellmeier extraordinary, WavelengthRange validity,
             std::string reference = {})
        : name_(std::move(name)),
          reference_(std::move(reference)),
          ordinary_(std::move(ordinary)),
          extraordinary_(std::move(extraordinary)),
          validity_(validity) {
        validate();
    }

    const std::string& name() const { return name_; }
    const std::string& reference() const { return reference_; }
    const WavelengthRange& validity() const { return validity_; }
    const Sellmeier& ordinary() const { return ordinary_; }
    const Sellmeier& extraordinary() const { return extraordinary_; }

    /// Raw Sellmeier evaluation, no range check.
    double n_o_unchecked(double lambda_nm) const { return ordinary_.index(lambda_nm); }
    double n_e_unchecked(double lambda_nm) const { return extraordinary_.index(lambda_nm); }

    void require_in_range(double lambda_nm) const {
        if (!std::isfinite(lambda_nm) || !validity_.contains(lambda_nm))
            throw RangeError(name_ + ": wavelength " + std::to_string(lambda_nm) + " nm outside validity range [" +
                             std::to_string(validity_.min_nm) + ", " + std::to_string(validity_.max_nm) + "] nm");
    }

    bool operator==(const Material& o) const { return name_ == o.name_; }

private:
    void validate() const {
        if (name_.empty()) throw ValidationError("material name must not be empty");
        if (!(validity_.min_nm > 0.0) || !(validity_.max_nm > validity_.min_nm))
            throw ValidationError(name_ + ": invalid validity range");
        constexpr int kSamples = 64;
        for (int i = 0; i <= kSamples; ++i) {
            const double l = validity_.min_nm + (validity_.max_nm - validity_.min_nm) * i / kSamples;
            const double no = n_o_unchecked(l), ne = n_e_unchecked(l);
            if (!std::isfinite(no) || !std::isfinite(ne) || !(no > 1.0) || !(ne > 1.0))
                throw ValidationError(name_ + ": index not real and > 1 at " + std::to_string(l) + " nm");
            // negative uniaxial; equality admits isotropic test media
            if (ne > no) throw ValidationError(name_ + ": n_e exceeds n_o at " + std::to_string(l) + " nm");
        }
    }

    std::string name_;
    std::string reference_;
    Sellmeier ordinary_;
    Sellmeier extraordinary_;
    WavelengthRange validity_;
};

namespace materials {

/// BBO, Eimerl et al., J. Appl. Phys. 62, 1968 (1987).
inline const Material& bbo() {
    static const Material m(
        "BBO",
        Sellmeier{2.7359, {{SellmeierTerm::Kind::pole, 0.01878, 0.01822}, {SellmeierTerm::Kind::power, -0.01354, 2.0}}},
        Sellmeier{2.3753, {{SellmeierTerm::Kind::pole, 0.01224, 0.01667}, {SellmeierTerm::Kind::power, -0.01516, 2.0}}},
        WavelengthRange{200.0, 2600.0}, "Eimerl et al., J. Appl. Phys. 62, 1968 (1987)");
    return m;
}

/// LiIO3, two-term Sellmeier fit as tabulated in Nikogosyan, Nonlinear Optical Crystals (2005).
inline const Material& liio3() {
    static const Material m(
        "LiIO3",
        Sellmeier{3.415716,
                  {{SellmeierTerm::Kind::pole, 0.047031, 0.035306}, {SellmeierTerm::Kind::power, -0.008801, 2.0}}},
        Sellmeier{2.918692,
                  {{SellmeierTerm::Kind::pole, 0.035145, 0.028224}, {SellmeierTerm::Kind::power, -0.003641, 2.0}}},
        WavelengthRange{300.0, 4000.0}, "Nikogosyan, Nonlinear Optical Crystals (Springer, 2005)");
    return m;
}

}  // namespace materials

/// Name -> material lookup. Starts with the built-in crystals; more can be
/// added from a data file (see material_io.hpp).
class MaterialRegistry {
public:
    MaterialRegistry() {
        add(materials::bbo());
        add(materials::liio3());
    }

    void add(const Material& m) { table_.insert_or_assign(m.name(), m); }

    const Material& get(const std::string& name) const {
        auto it = table_.find(name);
        if (it == table_.end()) throw ValidationError("unknown material '" + name + "'");
        return it->second;
    }

    bool contains(const std::string& name) const { return table_.count(name) != 0; }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : table_) out.push_back(k);
        return out;
    }

private:
    std::map<std::string, Material> table_;
};

/// One nonlinear crystal: material, length and optic-axis orientation as
/// mounted for normal pump incidence.
struct CrystalSpec {
    Material material = materials::bbo();
    double length_mm = 1.0;
    SphericalAngles axis;

    UnitVec3 axis_direction() const { return direction_from_angles(axis); }

    void validate() const {
        if (!(length_mm > 0.0) || !std::isfinite(length_mm)) throw ValidationError("crystal length must be positive");
        if (!(axis.theta >= 0.0 && axis.theta <= units::pi)) throw ValidationError("optic-axis polar angle out of [0, pi]");
    }
};

/// Index-ellipsoid section: n(alpha) for a wave at angle alpha to the optic axis.
inline double index_at_angle(double n_o, double n_e, double alpha) {
    const double c = std::cos(alpha), s = std::sin(alpha);
    return 1.0 / std::sqrt(c * c / (n_o * n_o) + s * s / (n_e * n_e));
}

/// Walkoff angle (signed) between wavevector and Poynting vector.
inline double walkoff_angle(double n_o, double n_e, double alpha) {
    const double n = index_at_angle(n_o, n_e, alpha);
    return std::atan(0.5 * n * n * (1.0 / (n_e * n_e) - 1.0 / (n_o * n_o)) * std::sin(2.0 * alpha));
}

inline double n_o(const Material& m, double omega) {
    const double l = units::wavelength_from_omega(omega);
    m.require_in_range(l);
    return m.n_o_unchecked(l);
}

inline double n_e_principal(const Material& m, double omega) {
    const double l = units::wavelength_from_omega(omega);
    m.require_in_range(l);
    return m.n_e_unchecked(l);
}

inline double n_e_angle(const Material& m, double omega, double alpha) {
    if (!(alpha >= 0.0 && alpha <= units::pi)) throw ValidationError("angle to optic axis outside [0, pi]");
    return index_at_angle(n_o(m, omega), n_e_principal(m, omega), alpha);
}

/// Wavelength step for the group-index finite difference.
inline constexpr double kGroupIndexStepNm = 0.1;

/// Ordinary and principal-extraordinary indices of one material at one
/// frequency, plus the stencil values needed for group indices. Every
/// pointwise and grid evaluation goes through this so both agree bit for bit.
class SpectralSample {
public:
    SpectralSample(const Material& m, double omega) : omega_(omega), lambda_(units::wavelength_from_omega(omega)) {
        m.require_in_range(lambda_);
        const double h = kGroupIndexStepNm;
        const std::array<double, 5> at = {lambda_ - h, lambda_ - h / 2, lambda_, lambda_ + h / 2, lambda_ + h};
        for (std::size_t i = 0; i < at.size(); ++i) {
            no_[i] = m.n_o_unchecked(at[i]);
            ne_[i] = m.n_e_unchecked(at[i]);
        }
        stencil_ok_ = m.validity().contains(at.front()) && m.validity().contains(at.back());
        dno_ = derivative(no_);
        dne_ = derivative(ne_);
        name_ = m.name();
    }

    double omega() const { return omega_; }
    double lambda_nm() const { return lambda_; }
    double n_o() const { return no_[2]; }
    double n_e() const { return ne_[2]; }
    double n_at(double alpha) const { return index_at_angle(no_[2], ne_[2], alpha); }

    double group_index_ordinary() const {
        require_stencil();
        return no_[2] - lambda_ * dno_;
    }
    // The finite difference is taken of the principal indices only; the
    // angle enters through the exact ellipsoid derivative
    //   dn/dl = n^3 (cos^2 a n_o'/n_o^3 + sin^2 a n_e'/n_e^3),
    // which keeps n_g smooth in alpha (differencing n(alpha, l) directly
    // leaves ~1e-12 cancellation noise that jumps with the last bit of alpha).
    double group_index_extraordinary(double alpha) const {
        require_stencil();
        const double no = no_[2], ne = ne_[2];
        const double c = std::cos(alpha), s = std::sin(alpha);
        const double n = index_at_angle(no, ne, alpha);
        const double dn = n * n * n * (c * c * dno_ / (no * no * no) + s * s * dne_ / (ne * ne * ne));
        return n - lambda_ * dn;
    }

private:
    // dn/dlambda by central difference at steps h and h/2 combined by one
    // Richardson extrapolation; n_g = n + omega dn/domega = n - lambda dn/dlambda.
    static double derivative(const std::array<double, 5>& n) {
        const double h = kGroupIndexStepNm;
        const double d_h = (n[4] - n[0]) / (2.0 * h);
        const double d_h2 = (n[3] - n[1]) / h;
        return (4.0 * d_h2 - d_h) / 3.0;
    }

    void require_stencil() const {
        if (!stencil_ok_)
            throw RangeError(name_ + ": group index stencil at " + std::to_string(lambda_) +
                             " nm leaves the validity range");
    }

    double omega_;
    double lambda_;
    std::array<double, 5> no_{};
    std::array<double, 5> ne_{};
    double dno_ = 0.0, dne_ = 0.0;
    bool stencil_ok_ = false;
    std::string name_;
};

struct Polarization {
    enum class Kind { ordinary, extraordinary };
    Kind kind = Kind::ordinary;
    double alpha = 0.0;  // angle to optic axis, extraordinary only

    static Polarization ordinary() { return {Kind::ordinary, 0.0}; }
    static Polarization extraordinary_at(double alpha) { return {Kind::extraordinary, alpha}; }
};

/// Group index n_g = n + omega dn/domega; group velocity c / n_g.
inline double group_index(const Material& m, double omega, Polarization pol) {
    SpectralSample s(m, omega);
    return pol.kind == Polarization::Kind::ordinary ? s.group_index_ordinary() : s.group_index_extraordinary(pol.alpha);
}

/// Poynting (ray) direction of an extraordinary wave with wavevector `k_e`,
/// walked off away from the optic axis `axis` within the (k_e, axis) plane.
inline UnitVec3 walkoff_ray(const UnitVec3& k_e, const UnitVec3& axis, double n_o, double n_e) {
    const double cos_alpha = dot(k_e, axis);
    const Vec3 a_perp = axis.vec() - k_e.vec() * cos_alpha;
    const double a_perp_norm = norm(a_perp);
    if (a_perp_norm < 1e-15) return k_e;
    const double alpha = angle_between(k_e, axis);
    const double rho = walkoff_angle(n_o, n_e, alpha);
    const Vec3 r = k_e.vec() * std::cos(rho) - a_perp * (std::sin(rho) / a_perp_norm);
    return UnitVec3::normalized(r);
}

inline UnitVec3 walkoff_ray(const UnitVec3& k_e, const CrystalSpec& crystal, double omega) {
    return walkoff_ray(k_e, crystal.axis_direction(), n_o(crystal.material, omega),
                       n_e_principal(crystal.material, omega));
}

}  // namespace spdcmap
