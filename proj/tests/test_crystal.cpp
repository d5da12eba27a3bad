#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "spdcmap/crystal.hpp"
#include "spdcmap/material_io.hpp"
#include "support.hpp"

using namespace spdcmap;

namespace {

double w(double lambda_nm) { return units::omega_from_wavelength(lambda_nm); }

}  // namespace

// Regression baselines: the library against a separate transcription of the
// same Sellmeier sets. These freeze the published dispersion formulas.
TEST(Sellmeier, OrdinaryBaselines) {
    EXPECT_NEAR(n_o(materials::bbo(), w(810.0)), oracle::index(oracle::kBboO, 810.0), 1e-13);
    EXPECT_NEAR(n_o(materials::bbo(), w(810.0)), 1.66, 0.005);
    EXPECT_NEAR(n_o(materials::liio3(), w(702.2)), oracle::index(oracle::kLiio3O, 702.2), 1e-13);
}

TEST(Sellmeier, ExtraordinaryBaselines) {
    EXPECT_NEAR(n_e_principal(materials::bbo(), w(405.0)), oracle::index(oracle::kBboE, 405.0), 1e-13);
    EXPECT_NEAR(n_e_principal(materials::liio3(), w(351.1)), oracle::index(oracle::kLiio3E, 351.1), 1e-13);
}

TEST(Sellmeier, OutOfRangeIsRangeError) {
    EXPECT_THROW(n_o(materials::bbo(), w(150.0)), RangeError);
    EXPECT_THROW(n_e_principal(materials::bbo(), w(3000.0)), RangeError);
    EXPECT_THROW(n_o(materials::liio3(), w(250.0)), RangeError);
    EXPECT_THROW(SpectralSample(materials::bbo(), w(100.0)), RangeError);
}

TEST(Sellmeier, NegativeUniaxialOverRange) {
    for (const Material* m : {&materials::bbo(), &materials::liio3()}) {
        const auto r = m->validity();
        for (int i = 0; i < 1000; ++i) {
            const double l = r.min_nm + (r.max_nm - r.min_nm) * i / 999.0;
            const double no = n_o(*m, w(l)), ne = n_e_principal(*m, w(l));
            ASSERT_LT(ne, no) << m->name() << " at " << l;
            ASSERT_GT(ne, 1.0);
        }
    }
}

TEST(IndexEllipsoid, LimitsAndBaseline) {
    const Material& m = materials::bbo();
    const double wp = w(405.0);
    EXPECT_NEAR(n_e_angle(m, wp, 0.0), n_o(m, wp), 1e-15);
    EXPECT_NEAR(n_e_angle(m, wp, units::pi / 2), n_e_principal(m, wp), 1e-15);
    const double a = units::rad(29.3);
    const double expect =
        oracle::ellipse(oracle::index(oracle::kBboO, 405.0), oracle::index(oracle::kBboE, 405.0), a);
    EXPECT_NEAR(n_e_angle(m, wp, a), expect, 1e-13);
    EXPECT_THROW(n_e_angle(m, wp, -0.1), ValidationError);
}

TEST(IndexEllipsoid, MonotoneDecreasingInAlpha) {
    for (const Material* m : {&materials::bbo(), &materials::liio3()}) {
        for (double l : {400.0, 702.2, 810.0, 1500.0}) {
            double prev = n_e_angle(*m, w(l), 0.0);
            for (int i = 1; i <= 900; ++i) {
                const double cur = n_e_angle(*m, w(l), units::pi / 2 * i / 900.0);
                ASSERT_LT(cur, prev);
                prev = cur;
            }
        }
    }
}

TEST(IndexFunctions, SmoothAtTwoStepSizes) {
    // first derivatives from steps 1 nm and 0.5 nm agree to 4 significant figures
    for (const Material* m : {&materials::bbo(), &materials::liio3()}) {
        for (double l : {405.0, 702.2, 810.0, 1200.0}) {
            auto d = [&](double h) { return (m->n_o_unchecked(l + h) - m->n_o_unchecked(l - h)) / (2 * h); };
            EXPECT_NEAR(d(1.0) / d(0.5), 1.0, 1e-4);
        }
    }
}

TEST(GroupIndex, DispersionlessMaterial) {
    const Material flat = fixtures::constant_material("flat", 1.7, 1.6);
    EXPECT_NEAR(group_index(flat, w(800.0), Polarization::ordinary()), 1.7, 1e-12);
    EXPECT_NEAR(group_index(flat, w(800.0), Polarization::extraordinary_at(0.4)), index_at_angle(1.7, 1.6, 0.4), 1e-12);
}

TEST(GroupIndex, NormalDispersionAndAnalyticOracle) {
    const Material& m = materials::bbo();
    const double ng = group_index(m, w(810.0), Polarization::ordinary());
    EXPECT_GT(ng, n_o(m, w(810.0)));
    // finite difference + Richardson against the analytic derivative
    EXPECT_NEAR(ng / oracle::group_index_o(oracle::kBboO, 810.0), 1.0, 1e-8);
    const double a = units::rad(29.3);
    EXPECT_NEAR(group_index(m, w(405.0), Polarization::extraordinary_at(a)) /
                    oracle::group_index_e(oracle::kBboO, oracle::kBboE, 405.0, a),
                1.0, 1e-8);
    EXPECT_NEAR(group_index(materials::liio3(), w(702.2), Polarization::ordinary()) /
                    oracle::group_index_o(oracle::kLiio3O, 702.2),
                1.0, 1e-8);
}

TEST(GroupIndex, OrdinaryIndependentOfAlphaAndExtraordinaryAtZero) {
    const SpectralSample s(materials::liio3(), w(702.2));
    EXPECT_NEAR(s.group_index_extraordinary(0.0), s.group_index_ordinary(), 1e-10);
    EXPECT_EQ(group_index(materials::liio3(), w(702.2), {Polarization::Kind::ordinary, 1.0}), s.group_index_ordinary());
}

TEST(GroupIndex, NearRangeEdgeIsRangeError) {
    EXPECT_THROW(group_index(materials::bbo(), w(200.0), Polarization::ordinary()), RangeError);
    EXPECT_THROW(group_index(materials::bbo(), w(2600.0), Polarization::ordinary()), RangeError);
}

TEST(Walkoff, ZeroAtAxisAndPrincipalPlane) {
    const UnitVec3 z = UnitVec3::trusted({0, 0, 1});
    EXPECT_EQ(walkoff_ray(z, z, 1.66, 1.55), z);
    const UnitVec3 x = UnitVec3::trusted({1, 0, 0});
    const UnitVec3 r = walkoff_ray(z, x, 1.66, 1.55);
    EXPECT_NEAR(r.x(), 0.0, 1e-16);
    EXPECT_NEAR(r.z(), 1.0, 1e-16);
}

TEST(Walkoff, BaselineAtBboPump) {
    const Material& m = materials::bbo();
    const double wp = w(405.0);
    CrystalSpec c{m, 0.6, {units::rad(29.3), 0.0}};
    const UnitVec3 k = UnitVec3::trusted({0, 0, 1});
    const UnitVec3 r = walkoff_ray(k, c, wp);
    const double no = oracle::index(oracle::kBboO, 405.0), ne = oracle::index(oracle::kBboE, 405.0);
    const double a = units::rad(29.3), n = oracle::ellipse(no, ne, a);
    const double rho = std::atan(0.5 * n * n * (1 / (ne * ne) - 1 / (no * no)) * std::sin(2 * a));
    EXPECT_NEAR(dot(r, k), std::cos(rho), 1e-12);
    EXPECT_NEAR(units::deg(std::abs(rho)), 3.9, 0.3);  // ~4 deg for BBO near 30 deg
    // walks away from the axis
    EXPECT_LT(dot(r, c.axis_direction()), dot(k, c.axis_direction()));
}

TEST(Walkoff, UnitCoplanarAndAngleProperty) {
    using fixtures::uniform;
    for (int k = 0; k < 10000; ++k) {
        const UnitVec3 kv = direction_from_angles({uniform(0, units::pi), uniform(-units::pi, units::pi)});
        const UnitVec3 ax = direction_from_angles({uniform(0, units::pi), uniform(-units::pi, units::pi)});
        const double no = uniform(1.5, 2.0), ne = uniform(1.3, no);
        const UnitVec3 r = walkoff_ray(kv, ax, no, ne);
        ASSERT_NEAR(norm(r), 1.0, 1e-12);
        ASSERT_NEAR(dot(r, cross(kv, ax)), 0.0, 1e-12);
        const double rho = walkoff_angle(no, ne, angle_between(kv, ax));
        ASSERT_NEAR(angle_between(r, kv), std::abs(rho), 1e-12);
    }
}

TEST(MaterialData, RejectsPositiveUniaxialAndBadRanges) {
    EXPECT_THROW(fixtures::constant_material("pos", 1.5, 1.6), ValidationError);
    EXPECT_THROW(Material("r", Sellmeier{2.0, {}}, Sellmeier{2.0, {}}, WavelengthRange{500, 400}), ValidationError);
    EXPECT_NO_THROW(fixtures::constant_material("iso", 1.6, 1.6));
}

TEST(MaterialData, ShippedFileMatchesBuiltIns) {
    MaterialRegistry reg;
    load_materials_file(SPDCMAP_SOURCE_DIR "/data/materials.json", reg);
    for (const Material* m : {&materials::bbo(), &materials::liio3()}) {
        const Material& f = reg.get(m->name());
        for (double l : {351.1, 405.0, 702.2, 810.0, 1600.0}) {
            EXPECT_EQ(f.n_o_unchecked(l), m->n_o_unchecked(l));
            EXPECT_EQ(f.n_e_unchecked(l), m->n_e_unchecked(l));
        }
        EXPECT_EQ(f.validity().min_nm, m->validity().min_nm);
        EXPECT_EQ(f.validity().max_nm, m->validity().max_nm);
    }
}

TEST(MaterialData, ParseErrorsNameTheKey) {
    const auto doc = nlohmann::json::parse(
        R"({"materials":[{"name":"X","validity_nm":[300,900],"ordinary":{"A":2.0},"extraordinary":{"A":1.9,"terms":[{"kind":"bogus","B":1,"C":1}]}}]})");
    try {
        parse_materials(doc);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "materials[0].extraordinary.terms[0].kind");
    }
}
