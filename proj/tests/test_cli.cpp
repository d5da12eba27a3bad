#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "spdcmap/config.hpp"
#include "spdcmap/export.hpp"
#include "support.hpp"

using namespace spdcmap;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct ToolRun {
    int status = -1;
    std::string output;
};

// runs the built tool; stderr is folded into the output unless dropped
ToolRun tool(const std::string& args, bool keep_stderr = true) {
    const std::string cmd = std::string(SPDCMAP_CLI) + " " + args + (keep_stderr ? " 2>&1" : " 2>/dev/null");
    ToolRun r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
    const int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string config(const std::string& name) { return std::string(SPDCMAP_SOURCE_DIR) + "/configs/" + name; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;
    void SetUp() override {
        dir = fs::temp_directory_path() / ("spdcmap_cli_" + std::to_string(getpid()) + "_" +
                                           ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string at(const std::string& f) const { return (dir / f).string(); }
};

std::string config_error_key(const json& doc) {
    try {
        parse_run_config(doc);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<none>";
}

}  // namespace

TEST(Config, DefaultsAreTheBboSource) {
    const RunConfig rc = parse_run_config(json::object());
    EXPECT_EQ(rc.source.crystal1.material.name(), "BBO");
    EXPECT_EQ(rc.source.pump.lambda_nm, 405.0);
    EXPECT_NEAR(rc.source.crystal2.axis.phi, units::pi / 2, 1e-15);
    EXPECT_EQ(rc.degenerate_nm(), 810.0);
}

TEST(Config, ErrorsNameTheKey) {
    EXPECT_EQ(config_error_key(json::parse(R"({"pump":{"lambda_nm":3000}})")), "pump.lambda_nm");
    EXPECT_EQ(config_error_key(json::parse(R"({"tilt":{"phi":"90 grad"}})")), "tilt.phi");
    EXPECT_EQ(config_error_key(json::parse(R"({"pump":{"lamda_nm":405}})")), "pump.lamda_nm");
    EXPECT_EQ(config_error_key(json::parse(R"({"crystal1":{"length_mm":-1}})")), "crystal1.length_mm");
    EXPECT_EQ(config_error_key(json::parse(R"({"crystal2":{"material":"KDP"}})")), "crystal2.material");
}

TEST(Config, AngleUnitsAndOverrides) {
    json doc = json::object();
    apply_override(doc, "tilt.phi=1.5 rad");
    apply_override(doc, "pump.theta=7");
    apply_override(doc, "source.include_part_c=true");
    apply_override(doc, "fit.line=x=0");
    const RunConfig rc = parse_run_config(doc);
    EXPECT_EQ(rc.tilt.phi_p, 1.5);
    EXPECT_NEAR(rc.source.pump.theta_p, units::rad(7.0), 1e-15);
    EXPECT_TRUE(rc.source.include_part_c);
    EXPECT_EQ(rc.fit_line.kind, LineSpec::x0().kind);
    EXPECT_THROW(apply_override(doc, "no_equals_sign"), ConfigError);
}

TEST(Export, NumberFormatting) {
    EXPECT_EQ(format_number(std::nan("")), "NA");
    EXPECT_EQ(format_number(0.1), "0.10000000000000001");
    EXPECT_TRUE(std::isnan(parse_cell("NA", 1)));
    EXPECT_THROW(parse_cell("1.0x", 1), IoError);
    for (int k = 0; k < 10000; ++k) {
        const double v = fixtures::uniform(-1e4, 1e4);
        ASSERT_EQ(parse_cell(format_number(v), 1), v);
    }
}

TEST(Export, CsvRoundTripIsExact) {
    const SourceConfig s = fixtures::liio3();
    for (MapKind kind : {MapKind::phase, MapKind::delay}) {
        const GridSpec g = centered_on_pump(fixtures::liio3_window(16), s);
        const MapGrid m = kind == MapKind::phase ? sweep_phase_map(s, g) : sweep_delay_map(s, g, 710.0);
        std::stringstream ss;
        write_csv(ss, m, json{{"probe", 1}});
        const MapTable t = read_csv(ss);
        EXPECT_EQ(t.kind, kind == MapKind::phase ? "phase" : "delay");
        EXPECT_EQ(t.config["probe"], 1);
        ASSERT_EQ(t.rows.size(), m.value1.size());
        const MapGrid back = map_from_table(t, s);
        EXPECT_EQ(back.grid.n1, m.grid.n1);
        EXPECT_EQ(back.grid.n2, m.grid.n2);
        for (int j = 0; j < m.grid.n2; ++j)
            for (int i = 0; i < m.grid.n1; ++i) {
                const ExportCell c = export_cell(m, i, j);
                const auto& row = t.rows[static_cast<std::size_t>(m.index(i, j))];
                ASSERT_EQ(row[0], c.c1);
                ASSERT_EQ(row[1], c.c2);
                ASSERT_TRUE(row[2] == c.v1 || (std::isnan(row[2]) && std::isnan(c.v1)));
                if (kind == MapKind::delay) {
                    ASSERT_TRUE(row[3] == c.v2 || (std::isnan(row[3]) && std::isnan(c.v2)));
                }
                // and the rebuilt map equals the in-memory one after the degree conversion
                const std::size_t idx = m.index(i, j);
                if (kind == MapKind::delay) {
                    ASSERT_TRUE(back.value1[idx] == m.value1[idx] || std::isnan(m.value1[idx]));
                }
            }
    }
}

TEST(Export, InvalidCellsBecomeNA) {
    SourceConfig s = fixtures::bbo();
    GridSpec g;
    g.mode = GridMode::angular_theta_phi;
    g.c1_min = 0.0;
    g.c1_max = units::rad(60.0);
    g.n1 = 7;
    g.c2_min = g.c2_max = 0.0;
    g.n2 = 1;
    const MapGrid m = sweep_phase_map(s, g, units::omega_from_wavelength(500.0));
    ASSERT_GT(m.invalid_count(), 0u);
    std::stringstream ss;
    write_csv(ss, m, json::object());
    EXPECT_NE(ss.str().find(",NA\n"), std::string::npos);
    const MapTable t = read_csv(ss);
    std::size_t nas = 0;
    for (const auto& r : t.rows) nas += std::isnan(r[2]);
    EXPECT_EQ(nas, m.invalid_count());
}

TEST_F(Cli, PhaseMapIsByteIdenticalAcrossRunsAndWorkers) {
    const std::string c = config("liio3_351nm.json");
    ASSERT_EQ(tool("phase-map -c " + c + " --grid 33x65 -o " + at("a")).status, 0);
    ASSERT_EQ(tool("phase-map -c " + c + " --grid 33x65 --workers 1 -o " + at("b")).status, 0);
    ASSERT_EQ(tool("phase-map -c " + c + " --grid 33x65 --workers 3 -o " + at("c")).status, 0);
    const std::string a = slurp(at("a.csv"));
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(at("b.csv")));
    EXPECT_EQ(a, slurp(at("c.csv")));
    EXPECT_NE(a.find("# columns: x_mm,y_mm,phase_deg"), std::string::npos);
    const json meta = json::parse(slurp(at("a.json")));
    EXPECT_TRUE(meta.contains("timestamp"));
}

TEST_F(Cli, SingleCellMatchesPointwiseApi) {
    const ToolRun r = tool("phase-map -c " + config("liio3_351nm.json") + " --grid 1x1 -o -", false);
    ASSERT_EQ(r.status, 0) << r.output;
    std::stringstream ss(r.output);
    const MapTable t = read_csv(ss);
    ASSERT_EQ(t.rows.size(), 1u);
    const SourceConfig s = fixtures::liio3();
    const GridSpec g = centered_on_pump(fixtures::liio3_window(16), s);
    GridSpec one = g;
    one.n1 = one.n2 = 1;
    one.c2_max = one.c2_min;
    one.c1_max = one.c1_min;
    const MapGrid m = sweep_phase_map(s, one);
    EXPECT_NEAR(t.rows[0][2], units::deg(m.value1[0]), 1e-9);
}

TEST_F(Cli, SetOverridesConfig) {
    const std::string c = config("liio3_351nm.json");
    ASSERT_EQ(tool("phase-map -c " + c + " --grid 5x5 -o " + at("a")).status, 0);
    ASSERT_EQ(tool("phase-map -c " + c + " --grid 5x5 --set crystal2.length_mm=0.3 -o " + at("b")).status, 0);
    const MapTable a = read_csv_file(at("a.csv")), b = read_csv_file(at("b.csv"));
    EXPECT_EQ(b.config["crystal2"]["length_mm"], 0.3);
    EXPECT_NE(a.rows[0][2], b.rows[0][2]);
}

TEST_F(Cli, ExitCodes) {
    const std::string c = config("bbo_405nm.json");
    ToolRun r = tool("phase-map -c " + c + " --set pump.lambda_nm=3000 --grid 3x3 -o " + at("x"));
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.output.find("pump.lambda_nm"), std::string::npos) << r.output;
    r = tool("find-tilt -c " + c + " --set 'tilt.phi=90 grad'");
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.output.find("tilt.phi"), std::string::npos) << r.output;
    EXPECT_EQ(tool("phase-map -c " + at("missing.json")).status, 4);
    EXPECT_EQ(tool("phase-map -c " + c + " --grid 3x3 -o " + at("no/such/dir/x")).status, 4);
    EXPECT_EQ(tool("bogus-command").status, 2);
    // a tilt range without a sign change is not a config error
    r = tool("find-tilt -c " + c + " --set tilt.theta_max=20");
    EXPECT_EQ(r.status, 3) << r.output;
}

TEST_F(Cli, FitOnLiio3ConfigIsQuadratic) {
    const ToolRun r = tool("fit -c " + config("liio3_351nm.json") + " -o " + at("profile.csv"));
    ASSERT_EQ(r.status, 0) << r.output;
    const std::string p = slurp(at("profile.csv"));
    const auto pos = p.find("relative_rms ");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_LT(std::stod(p.substr(pos + 13)), 0.01);
    EXPECT_NE(p.find("# columns: theta_deg,phase_deg,slope_deg_per_deg"), std::string::npos);
}

// The file stores degrees, so the re-read map differs from the computed one
// by the rad -> deg -> rad rounding only.
TEST_F(Cli, FitFromExportedCsvMatchesFitFromConfig) {
    const std::string c = config("liio3_351nm.json");
    ASSERT_EQ(tool("phase-map -c " + c + " -o " + at("m")).status, 0);
    const ToolRun a = tool("fit -i " + at("m.csv"), false);
    const ToolRun b = tool("fit -c " + c, false);
    ASSERT_EQ(a.status, 0) << a.output;
    ASSERT_EQ(b.status, 0) << b.output;
    std::stringstream sa(a.output), sb(b.output);
    std::string la, lb;
    int rows = 0;
    while (std::getline(sa, la) && std::getline(sb, lb)) {
        if (la[0] == '#') {
            EXPECT_EQ(la.substr(0, 4), lb.substr(0, 4));
            continue;
        }
        std::stringstream ra(la), rb(lb);
        std::string ca, cb;
        while (std::getline(ra, ca, ',') && std::getline(rb, cb, ','))
            EXPECT_NEAR(std::stod(ca), std::stod(cb), 1e-8 * std::max(1.0, std::abs(std::stod(cb))));
        ++rows;
    }
    EXPECT_EQ(rows, 129);
}

TEST_F(Cli, FitAlongAzimuthNeedsAngularMap) {
    {
        std::ofstream f(at("ang.json"));
        f << R"({"crystal1":{"material":"LiIO3","length_mm":0.59,"axis_theta":51.95},
                 "crystal2":{"material":"LiIO3","length_mm":0.59,"axis_theta":51.95},
                 "pump":{"lambda_nm":351.1},
                 "grid":{"mode":"angular","theta_min":0,"theta_max":6,"phi_min":-90,"phi_max":90,"nx":61,"ny":19},
                 "fit":{"line":"phi=40"}})";
    }
    ToolRun r = tool("fit -c " + at("ang.json"), false);
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("relative_rms"), std::string::npos);
    r = tool("fit -c " + config("liio3_351nm.json") + " --line phi=45");
    EXPECT_EQ(r.status, 3);
    EXPECT_NE(r.output.find("angular"), std::string::npos);
}

TEST_F(Cli, DelayMapFilterFilesCarryDistinctMetadata) {
    const std::string c = config("bbo_405nm.json");
    for (const char* nm : {"800", "810", "820"})
        ASSERT_EQ(tool("delay-map -c " + c + " --grid 9x9 --filter-nm " + std::string(nm) + " -o " + at(nm)).status,
                  0);
    const json m1 = json::parse(slurp(at("800.json"))), m2 = json::parse(slurp(at("810.json"))),
               m3 = json::parse(slurp(at("820.json")));
    EXPECT_NE(m1["filter_nm"], m2["filter_nm"]);
    EXPECT_NE(m2["filter_nm"], m3["filter_nm"]);
    const MapTable t = read_csv_file(at("810.csv"));
    ASSERT_EQ(t.columns, (std::vector<std::string>{"x_mm", "y_mm", "dt_s_fs", "dt_i_fs"}));
    EXPECT_EQ(t.config["delay"]["filter_nm"], 810);
}

TEST_F(Cli, DelayMapDegenerateSymmetricRowsHaveEqualDelays) {
    // lab xz plane (y = 0 row, offsets from the pump spot)
    ASSERT_EQ(tool("delay-map -c " + config("bbo_405nm.json") + " --grid 17x17 -o " + at("d")).status, 0);
    const MapTable t = read_csv_file(at("d.csv"));
    int checked = 0;
    for (const auto& r : t.rows)
        if (r[1] == 0.0) {
            EXPECT_NEAR(r[2], r[3], 1e-9);
            ++checked;
        }
    EXPECT_EQ(checked, 17);
}

TEST_F(Cli, TiltedBboHorizontalPlaneDelayNearZero) {
    // the published figure shows full compensation along the horizontal
    // line at this tilt; checks |dt| < 1 % of the untilted value
    ASSERT_EQ(tool("delay-map -c " + config("bbo_405nm_tilt52.json") + " --grid 33x33 -o " + at("t")).status, 0);
    ASSERT_EQ(tool("delay-map -c " + config("bbo_405nm.json") + " --grid 33x33 -o " + at("u")).status, 0);
    const MapTable t = read_csv_file(at("t.csv")), u = read_csv_file(at("u.csv"));
    // centre row of the pump-centred window (the tilted pump spot is off y = 0)
    double worst_t = 0, worst_u = 0;
    for (std::size_t i = 0; i < 33; ++i) {
        const std::size_t k = 16 * 33 + i;
        worst_t = std::max(worst_t, std::abs(t.rows[k][2]));
        worst_u = std::max(worst_u, std::abs(u.rows[k][2]));
    }
    EXPECT_GT(worst_u, 0.0);
    EXPECT_LT(worst_t, 0.01 * worst_u);
}

TEST_F(Cli, FindTiltScanTable) {
    const ToolRun r = tool("find-tilt -c " + config("bbo_405nm.json") + " --scan");
    ASSERT_EQ(r.status, 0) << r.output;
    std::stringstream ss(r.output);
    std::string line;
    int rows = 0;
    double prev = -1;
    while (std::getline(ss, line)) {
        if (line.empty() || line[0] == '#') continue;
        const double th = std::stod(line.substr(0, line.find(',')));
        EXPECT_GT(th, prev);
        prev = th;
        ++rows;
    }
    EXPECT_EQ(rows, 61);
}

TEST_F(Cli, FindTiltReportsRoot) {
    const ToolRun r = tool("find-tilt -c " + config("bbo_405nm.json"));
    ASSERT_EQ(r.status, 0) << r.output;
    const json j = json::parse(r.output.substr(r.output.find('{')));
    EXPECT_LT(std::abs(j["delay_signal_fs"].get<double>()), 0.01);
    EXPECT_EQ(j["scan_deg_fs"].size(), 61u);
}

TEST_F(Cli, PhaseMatchReport) {
    ToolRun r = tool("phase-match -c " + config("bbo_405nm.json"));
    ASSERT_EQ(r.status, 0) << r.output;
    json j = json::parse(r.output);
    EXPECT_NEAR(j["crystal1"]["degenerate_angle_deg"].get<double>(), 3.0, 0.5);
    EXPECT_EQ(j["crystal1"]["bracket_deg"].size(), 2u);
    r = tool("phase-match -c " + config("liio3_351nm.json"));
    j = json::parse(r.output);
    EXPECT_NEAR(j["crystal2"]["degenerate_angle_deg"].get<double>(), 3.0, 0.5);
    r = tool("phase-match -c " + config("bbo_405nm.json") + " --collinear");
    j = json::parse(r.output);
    const double cut = j["crystal1"]["collinear_cut_deg"].get<double>();
    r = tool("phase-match -c " + config("bbo_405nm.json") + " --set crystal1.axis_theta=" + format_number(cut) +
             " --set crystal2.axis_theta=" + format_number(cut));
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_LT(std::abs(json::parse(r.output)["crystal1"]["degenerate_angle_deg"].get<double>()), 1e-4);
}
