// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "morphwing/error.hpp"
#include "morphwing/lattice.hpp"
#include "morphwing/mesh.hpp"
#include "morphwing/pipeline.hpp"
#include "morphwing/structural.hpp"
#include "morphwing/wing_geometry.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace morphwing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

BeamLattice single_beam(const Vec3& a, const Vec3& b, double r) {
    BeamLattice l;
    l.nodes = {{a, 0}, {b, 0}};
    l.edges = {{0, 1, r, -1}};
    return l;
}

ModelOptions bare() {
    ModelOptions o;
    o.rod_coupling = false;
    o.tip_cap = false;
    return o;
}

std::pair<std::size_t, std::size_t> bcc_enumerate(int nu, int nv, int nw) {
    std::set<std::array<int, 3>> nodes;
    std::set<std::pair<std::array<int, 3>, std::array<int, 3>>> edges;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j)
            for (int k = 0; k < nw; ++k) {
                const std::array<int, 3> c{2 * i + 1, 2 * j + 1, 2 * k + 1};
                nodes.insert(c);
                for (int n = 0; n < 8; ++n) {
                    const std::array<int, 3> v{2 * (i + (n & 1)), 2 * (j + ((n >> 1) & 1)), 2 * (k + (n >> 2))};
                    nodes.insert(v);
                    edges.insert({c, v});
                }
            }
    return {nodes.size(), edges.size()};
}

double segment_distance_sampled(const Vec3& a, const Vec3& b, const std::function<double(const Vec3&)>& d) {
    double best = 1e300;
    for (int s = 0; s <= 400; ++s) best = std::min(best, d(a + (b - a) * (s / 400.0)));
    return best;
}

std::size_t rod_overlaps(const BeamLattice& l, const WingPlanform& pf, double chord_fraction, double rod_r) {
    auto axis = [&](const Vec3& p) {
        const double y = std::clamp(p.y(), 0.0, pf.span);
        return (p - Vec3(leading_edge_x(pf, y) + chord_fraction * chord_at_span(pf, y), y, 0.0)).norm();
    };
    std::size_t hits = 0;
    for (const auto& e : l.edges) {
        if (segment_distance_sampled(l.nodes[e.a].position, l.nodes[e.b].position, axis) < e.radius + rod_r) ++hits;
    }
    return hits;
}

double capsule_oracle(const Vec3& a, const Vec3& b, double r, const Vec3& p) {
    const Vec3 ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    return (p - (a + t * ab)).norm() - r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Shared work for criteria 9 to 11.
struct Chain {
    SenseResult sense;
    FitResult fit;
};

Chain run_chain(const PipelineConfig& config, const fs::path& dir) {
    fs::create_directories(dir);
    cmd_generate(config, dir.string());
    cmd_analyze(config, dir.string());
    Chain c;
    c.sense = cmd_sense(config, dir.string());
    c.fit = cmd_fit(config, dir.string());
    return c;
}

const fs::path& work_dir() {
    static const fs::path d = fs::temp_directory_path() / ("morphwing_acceptance_" + std::to_string(::getpid()));
    return d;
}

const GenerateResult& default_build() {
    static const GenerateResult r = generate(PipelineConfig{});
    return r;
}

const Chain& noisy_chain() {
    static const Chain c = run_chain(PipelineConfig{}, work_dir() / "run_a");
    return c;
}

const Chain& clean_chain() {
    static const Chain c = [] {
        PipelineConfig cfg;
        cfg.sensing.attenuation.noise_sigma = 0.0;
        return run_chain(cfg, work_dir() / "clean");
    }();
    return c;
}

std::string rmse_text(const EstimateError& e) {
    return fmt("%.3g deg / ", e.twist_deg) + fmt("%.3g deg / ", e.camber_deg) + fmt("%.3g mm", e.extension_mm);
}

// ---- criteria ----

Outcome section_oracle() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uf(-50.0, 50.0), ur(0.1, 3.0), ue(0.5, 3000.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const double F = uf(rng), r = ur(rng), E = ue(rng), L = 20.0;
        const SectionProperties s = section_properties(r);
        worst = std::max(worst, std::abs(E * s.inertia - E * M_PI * std::pow(r, 4) / 4.0) / (E * M_PI * std::pow(r, 4) / 4.0));
        const FrameModel model(single_beam(Vec3(0, 0, 0), Vec3(0, L, 0), r), Material{E, 0.3}, {0}, bare());
        const double strain = model.solve({{1, Vec3(0, F, 0), Vec3::Zero()}}).displacement(1).y() / L;
        const double expect = F / (M_PI * r * r * E);
        worst = std::max(worst, std::abs(strain - expect) / std::abs(expect));
    }
    return {worst < 1e-9, fmt("worst relative error %.2e", worst)};
}

Outcome cantilever_oracle() {
    const double F = 0.05, L = 100.0, r = 1.0, E = 8.0;
    const FrameModel model(single_beam(Vec3(0, 0, 0), Vec3(L, 0, 0), r), Material{E, 0.45}, {0}, bare());
    const double got = model.solve({{1, Vec3(0, 0, F), Vec3::Zero()}}).displacement(1).z();
    const double expect = F * L * L * L / (3.0 * E * M_PI * std::pow(r, 4) / 4.0);
    const double rel = std::abs(got - expect) / expect;
    return {rel < 1e-6, fmt("tip %.6g mm", got) + fmt(", relative error %.2e", rel)};
}

Outcome rigid_nullspace() {
    const auto rep = count_near_zero_eigenvalues(assemble_stiffness(default_build().lattice(), Material{}), 1e-8);
    return {rep.near_zero == 6, std::to_string(rep.near_zero) + " eigenvalues below " + fmt("%.3g", rep.threshold)};
}

Outcome bcc_counts() {
    std::size_t bad = 0, cases = 0;
    for (int nu = 1; nu <= 4; ++nu)
        for (int nv = 1; nv <= 4; ++nv)
            for (int nw = 1; nw <= 4; ++nw) {
                const BeamLattice l = generate_bcc(build_cell_map(WingPlanform{}, nu, nv, nw, WarpProfile{}), GradingField{});
                const auto [n, e] = bcc_enumerate(nu, nv, nw);
                const std::size_t cells = nu * nv * nw;
                const std::size_t formula_n = (nu + 1) * (nv + 1) * (nw + 1) + cells;
                bad += l.nodes.size() != n || l.edges.size() != e || n != formula_n || e != 8 * cells;
                ++cases;
            }
    return {bad == 0, std::to_string(cases - bad) + "/" + std::to_string(cases) + " grids match"};
}

Outcome geometry_fidelity() {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> scale(0.2, 3.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const CellMap map = build_cell_map(WingPlanform{}, 6, 12, 3, WarpProfile{scale(rng), scale(rng)});
        worst = std::max(worst, std::abs(map.span_stations().back() - 250.0) / 250.0);
    }
    const WingPlanform pf;
    const double tip = chord_at_span(pf, pf.span);
    const double t30 = naca4_half_thickness(0.3, pf.airfoil_thickness_ratio);
    const bool ok = worst < 1e-9 && std::abs(tip - 78.0) < 1e-12 && std::abs(t30 - 0.1000) < 1e-4;
    return {ok, fmt("span error %.2e, ", worst) + fmt("tip chord %.6g mm, ", tip) + fmt("y_t(0.3)/c %.6f", t30)};
}

Outcome channel_clearance() {
    const CellMap map = build_cell_map(CellMapSpec{});
    const GradingField g;
    const BeamLattice l = merge(generate_bcc(map, g), generate_surface_lattice(map, g));
    const std::size_t hits = rod_overlaps(l, map.planform(), 0.25, PipelineConfig{}.rod.radius);
    const ClearanceReport& rep = default_build().rod;
    PipelineConfig misaligned;
    misaligned.rod.chord_fraction = 0.33;
    std::string stage = "none";
    try {
        generate(misaligned);
    } catch (const GenerationError& e) {
        stage = e.stage();
    }
    const bool ok = hits == 0 && default_build().rod_carved && rep.intersecting.empty() && stage == "carve_channel";
    return {ok, std::to_string(hits) + " sampled overlaps, clearance " + fmt("%.3f mm", rep.min_clearance) +
                    ", misaligned rod error stage " + stage};
}

Outcome meshing() {
    const MeshConfig mc;
    const ImplicitField field = ImplicitField::from_lattice(default_build().lattice(), mc.blend);
    const TriangleMesh m = polygonize(field, mc.voxel);
    const WatertightReport w = watertight_check(m);
    std::ostringstream stl;
    const std::uint64_t bytes = write_stl(m, stl);
    double worst = 0.0;
    for (const auto& v : m.vertices) worst = std::max(worst, std::abs(field.evaluate(v)));
    // Brute-force check on a sample: sharp union minus cuts, widened by the blend.
    double worst_brute = 0.0;
    for (std::size_t i = 0; i < m.vertices.size(); i += std::max<std::size_t>(1, m.vertices.size() / 1500)) {
        const Vec3& p = m.vertices[i];
        double d = 1e300;
        for (const auto& c : field.solids()) d = std::min(d, capsule_oracle(c.a, c.b, c.radius, p));
        for (const auto& c : field.cuts()) d = std::max(d, -capsule_oracle(c.a, c.b, c.radius, p));
        worst_brute = std::max(worst_brute, std::abs(d));
    }
    const bool ok = w.is_closed && w.boundary_edge_count == 0 && w.consistent_orientation &&
                    bytes == 84 + 50 * m.size() && stl.str().size() == bytes && worst < mc.voxel &&
                    worst_brute < mc.voxel + mc.blend;
    return {ok, std::to_string(m.size()) + " triangles, " + std::to_string(w.boundary_edge_count) +
                    " boundary edges, " + std::to_string(bytes) + " bytes, max |sdf| " + fmt("%.3g mm", worst) +
                    fmt(" (brute %.3g mm)", worst_brute)};
}

Outcome grading() {
    const PipelineConfig cfg;
    const BeamLattice& graded = default_build().lattice();
    const BeamLattice uniform = equal_volume_uniform(graded, cfg.grading.surface_radius_factor);
    auto twist_fraction = [&](const BeamLattice& l) {
        const FrameModel model(l, cfg.material, root_nodes(l), cfg.model);
        return compliance_report(l, model.solve(morph_load_case(MorphMode::Twist, cfg.loads.twist_torque, l)))
            .outer_half_twist_fraction();
    };
    const double g = twist_fraction(graded), u = twist_fraction(uniform);
    std::size_t interval = 0;
    double mid = 0.0;
    for (const auto& c : analyze(cfg, graded)) {
        if (c.mode != MorphMode::Camber) continue;
        interval = c.report.max_camber_slope_interval();
        mid = 0.5 * (c.report.stations[interval] + c.report.stations[interval + 1]);
    }
    const bool ok = g > u && mid < 0.5 * cfg.grid.planform.span;
    return {ok, fmt("outer-half twist fraction graded %.4f", g) + fmt(" vs uniform %.4f, ", u) +
                    fmt("steepest camber interval at %.1f mm", mid)};
}

Outcome sensor_trends() {
    // Twist-only line of the sweep grid (camber 0, extension 0), ordered by twist.
    std::map<double, std::vector<double>> line;
    for (const auto& r : clean_chain().sense.dataset.rows) {
        if (r.state.camber_deg == 0.0 && r.state.extension_mm == 0.0) line[r.state.twist_deg] = r.amplitudes;
    }
    std::size_t violations = 0;
    for (auto it = line.begin(); it != line.end() && std::next(it) != line.end(); ++it) {
        const auto next = std::next(it);
        for (std::size_t s = 0; s < it->second.size(); ++s) {
            // Non-increasing in |twist|: rising on the negative side, falling on the positive.
            if (next->first <= 0.0 && next->second[s] < it->second[s] - 1e-12) ++violations;
            if (it->first >= 0.0 && next->second[s] > it->second[s] + 1e-12) ++violations;
        }
    }
    const auto& sens = clean_chain().sense.sensitivity;
    const bool ok = line.size() >= 3 && line.begin()->first <= -90.0 && line.rbegin()->first >= 90.0 &&
                    violations == 0 && sens.best_ratio >= 3.0;
    return {ok, std::to_string(violations) + " monotonicity violations over " + std::to_string(line.size()) +
                    " twist stations, best camber/twist ratio " + fmt("%.2f", sens.best_ratio) + " (sensor " +
                    std::to_string(sens.best_sensor + 1) + ")"};
}

Outcome estimation() {
    const FitResult& noisy = noisy_chain().fit;
    const FitResult& clean = clean_chain().fit;
    if (!noisy.has_heldout || !clean.has_heldout) return {false, "no held-out set"};
    const EstimateError& a = noisy.heldout;
    const EstimateError& b = clean.heldout;
    const bool ok = a.twist_deg <= 2.0 && a.camber_deg <= 2.0 && a.extension_mm <= 1.0 && b.twist_deg <= 0.1 &&
                    b.camber_deg <= 0.1 && b.extension_mm <= 0.05;
    return {ok, "held-out RMSE sigma 0.01: " + rmse_text(a) + "; sigma 0: " + rmse_text(b)};
}

Outcome determinism() {
    const fs::path a = work_dir() / "run_a";
    const fs::path b = work_dir() / "run_b";
    noisy_chain();
    run_chain(PipelineConfig{}, b);
    std::size_t compared = 0, differing = 0;
    std::string first_diff;
    for (const auto& entry : fs::directory_iterator(a)) {
        const auto ext = entry.path().extension();
        if (ext != ".csv" && entry.path().filename() != kModelFile) continue;
        ++compared;
        if (slurp(entry.path()) != slurp(b / entry.path().filename())) {
            ++differing;
            if (first_diff.empty()) first_diff = entry.path().filename().string();
        }
    }
    const bool ok = compared >= 6 && differing == 0;
    return {ok, std::to_string(compared) + " files compared, " + std::to_string(differing) + " differ" +
                    (first_diff.empty() ? "" : " (" + first_diff + ")")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"section and axial strain oracle", section_oracle},
        {"cantilever tip deflection", cantilever_oracle},
        {"rigid-body nullspace of free stiffness", rigid_nullspace},
        {"BCC node and edge counts", bcc_counts},
        {"span, taper and airfoil fidelity", geometry_fidelity},
        {"rod channel clearance", channel_clearance},
        {"watertight mesh and STL size", meshing},
        {"graded twist and camber distribution", grading},
        {"sensor monotonicity and distinguishability", sensor_trends},
        {"held-out estimation accuracy", estimation},
        {"byte-identical reruns", determinism},
    };
    fs::remove_all(work_dir());
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    fs::remove_all(work_dir());
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
