#include "morphwing/mesh.hpp"
#include "morphwing/lattice.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace morphwing;

namespace {

const std::string kCli = MORPHWING_CLI;
const std::string kData = MORPHWING_TEST_DATA;

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::path(::testing::TempDir()) / ("morphwing_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

CliRun run(const fs::path& dir, const std::string& args) {
    const std::string cmd = "'" + kCli + "' " + args + " > '" + (dir / "stdout.txt").string() + "' 2> '" +
                            (dir / "stderr.txt").string() + "'";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(dir / "stdout.txt");
    r.err = slurp(dir / "stderr.txt");
    return r;
}

std::string cfg(const std::string& name) { return "--config '" + kData + "/" + name + "'"; }
std::string out_dir(const fs::path& d) { return "--out-dir '" + d.string() + "'"; }

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

// "<name> twist_deg a camber_deg b extension_mm c" from a fit report.
std::array<double, 3> report_rmse(const std::string& report, const std::string& name) {
    std::istringstream in(report);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string head, k1, k2, k3;
        std::array<double, 3> v{};
        if (ls >> head >> k1 >> v[0] >> k2 >> v[1] >> k3 >> v[2] && head == name) return v;
    }
    ADD_FAILURE() << "no " << name << " line in report:\n" << report;
    return {NAN, NAN, NAN};
}

}  // namespace

TEST(CliGenerate, DebugConfigSummary) {
    const auto d = fresh_dir("debug");
    const CliRun r = run(d, cfg("debug_1x1x1.json") + " " + out_dir(d) + " generate");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("nodes 9\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("edges 8\n"), std::string::npos) << r.out;
    EXPECT_EQ(slurp(d / "summary.txt"), r.out);
    EXPECT_TRUE(fs::exists(d / "lattice.txt"));
}

TEST(CliGenerate, DefaultReportsFiveSegments) {
    const auto d = fresh_dir("default_gen");
    const CliRun r = run(d, out_dir(d) + " generate");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("segments 5\n"), std::string::npos) << r.out;
    for (int s = 1; s <= 5; ++s) {
        EXPECT_NE(r.out.find("segment " + std::to_string(s) + " nodes "), std::string::npos) << r.out;
    }
    EXPECT_NE(r.out.find("rod_channel intersecting 0 "), std::string::npos) << r.out;
    for (int f = 1; f <= 6; ++f) EXPECT_NE(r.out.find("fiber " + std::to_string(f) + " clearance_mm"), std::string::npos);
}

TEST(CliGenerate, MisalignedRodFailsInCarveChannel) {
    const auto d = fresh_dir("misaligned");
    const CliRun r = run(d, cfg("misaligned_rod.json") + " " + out_dir(d) + " generate");
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("carve_channel"), std::string::npos) << r.err;
}

TEST(CliErrors, ExitCodes) {
    const auto d = fresh_dir("errors");
    {
        std::ofstream(d / "bad.json") << R"({"schema_version": 1, "grid": {"n_u": -2}})";
        const CliRun r = run(d, "--config '" + (d / "bad.json").string() + "' generate");
        EXPECT_EQ(r.code, 2);
        EXPECT_NE(r.err.find("grid.n_u"), std::string::npos) << r.err;
    }
    EXPECT_EQ(run(d, "frobnicate").code, 2);
    EXPECT_EQ(run(d, "").code, 2);
    {
        const CliRun r = run(d, out_dir(d / "empty") + " analyze");
        EXPECT_EQ(r.code, 5) << r.err;
    }
}

TEST(CliExport, DefaultWingAndSegments) {
    const auto d = fresh_dir("export");
    ASSERT_EQ(run(d, out_dir(d) + " generate").code, 0);
    const CliRun r = run(d, out_dir(d) + " export");
    ASSERT_EQ(r.code, 0) << r.err;
    const fs::path stl = d / "wing.stl";
    ASSERT_TRUE(fs::exists(stl));
    const TriangleMesh m = read_stl(stl.string());
    EXPECT_EQ(fs::file_size(stl), 84u + 50u * m.size());
    const auto w = watertight_check(m);
    EXPECT_TRUE(w.is_closed);
    EXPECT_TRUE(w.consistent_orientation);

    EXPECT_EQ(run(d, out_dir(d) + " export").code, 5);  // exists, no --force
    EXPECT_EQ(run(d, out_dir(d) + " export --force").code, 0);

    const CliRun p = run(d, out_dir(d) + " export --per-segment");
    ASSERT_EQ(p.code, 0) << p.err;
    for (int s = 1; s <= 5; ++s) {
        const fs::path f = d / ("segment_" + std::to_string(s) + ".stl");
        ASSERT_TRUE(fs::exists(f)) << f;
        const TriangleMesh sm = read_stl(f.string());
        EXPECT_EQ(fs::file_size(f), 84u + 50u * sm.size());
        EXPECT_TRUE(watertight_check(sm).is_closed) << f;
    }
    EXPECT_FALSE(fs::exists(d / "segment_6.stl"));
}

TEST(CliExport, EmptyLatticeGivesHeaderOnlyStl) {
    const auto d = fresh_dir("export_empty");
    save_lattice((d / "empty.txt").string(), BeamLattice{});
    const CliRun r = run(d, out_dir(d) + " export --lattice '" + (d / "empty.txt").string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(fs::file_size(d / "wing.stl"), 84u);
}

TEST(CliAnalyze, ZeroLoadsGiveZeroColumns) {
    const auto d = fresh_dir("analyze_zero");
    ASSERT_EQ(run(d, cfg("zero_loads.json") + " " + out_dir(d) + " generate").code, 0);
    const CliRun r = run(d, cfg("zero_loads.json") + " " + out_dir(d) + " analyze");
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* mode : {"twist", "camber", "extension"}) {
        const auto rows = read_csv(d / (std::string("compliance_") + mode + ".csv"));
        ASSERT_GT(rows.size(), 2u);
        EXPECT_EQ(rows[0].size(), 6u);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            for (std::size_t c = 1; c < rows[i].size(); ++c) EXPECT_EQ(rows[i][c], "0") << mode << " row " << i;
        }
    }
}

TEST(CliAnalyze, DefaultColumns) {
    const auto d = fresh_dir("analyze");
    ASSERT_EQ(run(d, out_dir(d) + " generate").code, 0);
    const CliRun r = run(d, out_dir(d) + " analyze");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto twist = read_csv(d / "compliance_twist.csv");
    ASSERT_EQ(twist[0][5], "outer_half_twist_fraction");
    EXPECT_GT(std::stod(twist[1][5]), 0.5);
    EXPECT_EQ(std::stod(twist[1][0]), 0.0);
    EXPECT_GT(std::stod(twist.back()[1]), 0.0);
    for (const char* mode : {"twist", "camber", "extension"}) {
        const auto rows = read_csv(d / (std::string("compliance_") + mode + ".csv"));
        ASSERT_EQ(rows[0][4], "equilibrium_error_N");
        for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(std::abs(std::stod(rows[i][4])), 1e-6);
    }
    const std::string svg = slurp(d / "compliance.svg");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("<polyline"), std::string::npos);
}

TEST(CliSensing, SenseFitEstimate) {
    const auto d = fresh_dir("sense");
    const std::string base = cfg("small_sweep.json") + " " + out_dir(d);
    ASSERT_EQ(run(d, base + " generate").code, 0);
    const CliRun s = run(d, base + " sense");
    ASSERT_EQ(s.code, 0) << s.err;
    const auto data = read_csv(d / "dataset.csv");
    ASSERT_EQ(data[0].size(), 9u);
    EXPECT_EQ(data[0][3], "s1");
    EXPECT_EQ(data[0][8], "s6");
    EXPECT_EQ(data.size(), 1u + 7u * 3u * 3u);
    EXPECT_EQ(read_csv(d / "heldout.csv").size(), 1u + 6u * 2u * 2u);
    const std::string svg = slurp(d / "sensors.svg");
    std::size_t panels = 0;
    for (std::size_t p = svg.find("<g>"); p != std::string::npos; p = svg.find("<g>", p + 1)) ++panels;
    EXPECT_EQ(panels, 3u);

    const CliRun f = run(d, base + " fit");
    ASSERT_EQ(f.code, 0) << f.err;
    EXPECT_TRUE(fs::exists(d / "model.txt"));
    const auto train = report_rmse(slurp(d / "fit_report.txt"), "rmse_train");
    report_rmse(slurp(d / "fit_report.txt"), "rmse_heldout");

    const CliRun e = run(d, base + " estimate --readings '" + (d / "dataset.csv").string() + "'");
    ASSERT_EQ(e.code, 0) << e.err;
    const auto est = read_csv(d / "estimates.csv");
    ASSERT_EQ(est.size(), data.size());
    EXPECT_EQ(est[0], (std::vector<std::string>{"twist_deg", "camber_deg", "extension_mm"}));
    // RMSE recomputed from the estimate output matches the fit report.
    std::array<double, 3> sq{0, 0, 0};
    for (std::size_t i = 1; i < est.size(); ++i)
        for (int k = 0; k < 3; ++k) sq[k] += std::pow(std::stod(est[i][k]) - std::stod(data[i][k]), 2);
    for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(std::sqrt(sq[k] / (est.size() - 1)), train[k], 1e-9 * (1.0 + train[k]));
    }
}

TEST(CliSensing, MalformedReadingNamesRow) {
    const auto d = fresh_dir("malformed");
    const std::string base = cfg("small_sweep.json") + " " + out_dir(d);
    ASSERT_EQ(run(d, base + " generate").code, 0);
    ASSERT_EQ(run(d, base + " sense").code, 0);
    ASSERT_EQ(run(d, base + " fit").code, 0);
    std::ofstream(d / "bad.csv") << "s1,s2,s3,s4,s5,s6\n1,1,1,1,1,1\n0.9,0.9,oops,1,1,1\n";
    const CliRun r = run(d, base + " estimate --readings '" + (d / "bad.csv").string() + "'");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("row 2"), std::string::npos) << r.err;
    std::ofstream(d / "bad_fit.csv") << "twist_deg,camber_deg,extension_mm,s1\n0,0,0,1\n1,2\n";
    const CliRun f = run(d, base + " fit --dataset '" + (d / "bad_fit.csv").string() + "'");
    EXPECT_EQ(f.code, 2);
    EXPECT_NE(f.err.find("row 2"), std::string::npos) << f.err;
}

TEST(CliSensing, SameSeedSameFiles) {
    const auto a = fresh_dir("det_a"), b = fresh_dir("det_b"), c = fresh_dir("det_c");
    for (const auto& [dir, seed] : {std::pair{a, "7"}, std::pair{b, "7"}, std::pair{c, "8"}}) {
        const std::string base = cfg("small_sweep.json") + " --seed " + seed + " " + out_dir(dir);
        for (const char* cmd : {"generate", "analyze", "sense", "fit"}) {
            ASSERT_EQ(run(dir, base + " " + cmd).code, 0) << cmd;
        }
    }
    for (const char* f : {"lattice.txt", "fibers.txt", "compliance_twist.csv", "compliance_camber.csv",
                          "compliance_extension.csv", "dataset.csv", "heldout.csv", "model.txt"}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    EXPECT_NE(slurp(a / "dataset.csv"), slurp(c / "dataset.csv"));
}

// Noise-free default sweep: training residual against the estimator
// accuracy goals (2 deg twist, 2 deg camber, 1 mm extension).
TEST(CliSensing, NoiselessFitMeetsTargets) {
    const auto d = fresh_dir("noiseless");
    const std::string base = cfg("noiseless.json") + " " + out_dir(d);
    ASSERT_EQ(run(d, base + " generate").code, 0);
    ASSERT_EQ(run(d, base + " sense").code, 0);
    const CliRun f = run(d, base + " fit");
    ASSERT_EQ(f.code, 0) << f.err;
    const auto train = report_rmse(f.out, "rmse_train");
    EXPECT_LT(train[0], 2.0);
    EXPECT_LT(train[1], 2.0);
    EXPECT_LT(train[2], 1.0);
}
