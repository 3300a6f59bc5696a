#include "morphwing/pipeline.hpp"

#include "morphwing/error.hpp"
#include "morphwing/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace morphwing {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
    if (v == 0.0) v = 0.0;  // no "-0"
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string in_dir(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::string or_default(const std::string& given, const std::string& dir, const char* name) {
    return given.empty() ? in_dir(dir, name) : given;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

const char* mode_name(MorphMode m) {
    switch (m) {
        case MorphMode::Twist: return "twist";
        case MorphMode::Camber: return "camber";
        case MorphMode::Extension: return "extension";
        default: return "custom";
    }
}

}  // namespace

GenerateResult generate(const PipelineConfig& config) {
    config.validate();
    const CellMap map = build_cell_map(config.grid);
    BeamLattice lattice = generate_bcc(map, config.grading);
    if (config.surface_layer) lattice = merge(lattice, generate_surface_lattice(map, config.grading));

    GenerateResult result;
    if (config.rod.enabled) {
        auto [carved, report] =
            carve_channel(lattice, rod_channel(config.grid.planform, config.rod.radius, config.rod.chord_fraction));
        lattice = std::move(carved);
        result.rod = std::move(report);
        result.rod_carved = true;
    }
    if (config.fibers.count > 0) {
        result.fibers = route_fibers(lattice, config.fibers.count, config.fibers.routing);
        for (const auto& f : result.fibers) {
            FiberCarve fc;
            fc.clearance = fiber_clearance(lattice, f);
            auto [carved, report] = carve_channel(lattice, fiber_channel(f, config.fibers.routing.fiber_radius));
            lattice = std::move(carved);
            fc.report = std::move(report);
            result.fiber_carves.push_back(std::move(fc));
        }
    }
    result.segmentation = segment(lattice, config.segments);
    return result;
}

std::string generate_summary(const GenerateResult& r) {
    const BeamLattice& l = r.lattice();
    std::ostringstream o;
    o << "nodes " << l.nodes.size() << '\n';
    o << "edges " << l.edges.size() << '\n';
    const auto& per = r.segmentation.edges_per_segment;
    const std::size_t parts = std::max<std::size_t>(per.size(), 1);
    o << "segments " << parts << '\n';
    std::vector<std::set<std::uint32_t>> seg_nodes(parts);
    std::vector<std::size_t> seg_edges(parts, 0);
    for (const auto& e : l.edges) {
        const std::size_t s = e.segment < 0 ? 0 : static_cast<std::size_t>(e.segment);
        if (s >= parts) continue;
        seg_nodes[s].insert(e.a);
        seg_nodes[s].insert(e.b);
        ++seg_edges[s];
    }
    for (std::size_t s = 0; s < parts; ++s) {
        o << "segment " << s + 1 << " nodes " << seg_nodes[s].size() << " edges " << seg_edges[s] << '\n';
    }
    o << "interface_nodes " << r.segmentation.interface_nodes.size() << '\n';
    o << "cut_stations_mm";
    for (const double c : r.segmentation.cut_stations) o << ' ' << num(c);
    o << '\n';
    if (r.rod_carved) {
        o << "rod_channel intersecting " << r.rod.intersecting.size() << " clearance_mm " << num(r.rod.min_clearance)
          << '\n';
    } else {
        o << "rod_channel disabled\n";
    }
    for (std::size_t f = 0; f < r.fiber_carves.size(); ++f) {
        const auto& fc = r.fiber_carves[f];
        o << "fiber " << f + 1 << " clearance_mm " << num(fc.clearance) << " intersecting "
          << fc.report.intersecting.size() << " removed " << fc.report.removed.size() << " thinned "
          << fc.report.thinned.size() << '\n';
    }
    return o.str();
}

std::string cmd_generate(const PipelineConfig& config, const std::string& out_dir) {
    const GenerateResult r = generate(config);
    ensure_dir(out_dir);
    save_lattice(in_dir(out_dir, kLatticeFile), r.lattice());
    save_fibers(in_dir(out_dir, kFibersFile), r.fibers);
    const std::string summary = generate_summary(r);
    write_text(in_dir(out_dir, kSummaryFile), summary);
    return summary;
}

std::vector<ExportedFile> cmd_export(const PipelineConfig& config, const std::string& out_dir,
                                     const ExportOptions& options) {
    const double voxel = options.voxel > 0.0 ? options.voxel : config.mesh.voxel;
    const double blend = options.blend >= 0.0 ? options.blend : config.mesh.blend;
    if (!(std::isfinite(voxel) && voxel > 0.0)) throw ValidationError("--voxel must be > 0", "export");
    if (!std::isfinite(blend)) throw ValidationError("--blend must be finite", "export");
    const BeamLattice lattice = load_lattice(or_default(options.lattice_path, out_dir, kLatticeFile));
    ensure_dir(out_dir);

    std::vector<int> parts{-1};
    if (options.per_segment) {
        std::set<int> segs;
        for (const auto& e : lattice.edges) segs.insert(e.segment);
        parts.assign(segs.begin(), segs.end());
        if (parts.empty()) parts.push_back(-1);
    }
    std::vector<ExportedFile> files;
    for (const int seg : parts) {
        TriangleMesh mesh;
        if (!lattice.edges.empty()) mesh = polygonize(ImplicitField::from_lattice(lattice, blend, seg), voxel);
        ExportedFile f;
        f.path = in_dir(out_dir, seg < 0 ? std::string("wing.stl") : "segment_" + std::to_string(seg + 1) + ".stl");
        f.triangles = mesh.size();
        f.watertight = watertight_check(mesh);
        if (mesh.size() > 0 && (f.watertight.boundary_edge_count > 0 || f.watertight.nonmanifold_edge_count > 0 ||
                                !f.watertight.consistent_orientation)) {
            throw GenerationError(f.path + " is not watertight (" + std::to_string(f.watertight.boundary_edge_count) +
                                      " boundary edges, " + std::to_string(f.watertight.nonmanifold_edge_count) +
                                      " non-manifold edges)",
                                  "export");
        }
        f.bytes = write_stl(mesh, f.path, options.force);
        files.push_back(std::move(f));
    }
    return files;
}

std::vector<AnalyzeCase> analyze(const PipelineConfig& config, const BeamLattice& lattice) {
    const std::vector<std::pair<MorphMode, double>> cases = {
        {MorphMode::Twist, config.loads.twist_torque},
        {MorphMode::Camber, config.loads.camber_force},
        {MorphMode::Extension, config.loads.extension_force},
    };
    const FrameModel model(lattice, config.material, root_nodes(lattice), config.model);
    std::vector<AnalyzeCase> out;
    for (const auto& [mode, magnitude] : cases) {
        const LoadCase lc = morph_load_case(mode, magnitude, lattice, config.model);
        out.push_back({mode, magnitude, compliance_report(lattice, model.solve(lc))});
    }
    return out;
}

std::vector<AnalyzeCase> cmd_analyze(const PipelineConfig& config, const std::string& out_dir,
                                     const std::string& lattice_path) {
    const BeamLattice lattice = load_lattice(or_default(lattice_path, out_dir, kLatticeFile));
    const auto cases = analyze(config, lattice);
    ensure_dir(out_dir);

    PlotPanel twist{"Twist along span", "span station (mm)", {}};
    PlotPanel camber{"Camber along span", "span station (mm)", {}};
    for (const auto& c : cases) {
        const auto& r = c.report;
        std::ostringstream csv;
        csv << "station_mm,twist_deg,camber_mm,extension_mm,equilibrium_error_N,outer_half_twist_fraction\n";
        for (std::size_t j = 0; j < r.stations.size(); ++j) {
            csv << num(r.stations[j]) << ',' << num(r.twist_deg[j]) << ',' << num(r.camber_mm[j]) << ','
                << num(r.extension_mm) << ',' << num(r.equilibrium_error) << ','
                << num(r.outer_half_twist_fraction()) << '\n';
        }
        write_text(in_dir(out_dir, std::string("compliance_") + mode_name(c.mode) + ".csv"), csv.str());
        const std::string label = std::string(mode_name(c.mode)) + " case";
        twist.series.push_back({label + " (deg)", r.stations, r.twist_deg});
        camber.series.push_back({label + " (mm)", r.stations, r.camber_mm});
    }
    save_svg(in_dir(out_dir, "compliance.svg"), {twist, camber});
    return cases;
}

namespace {

// Rows along one morph axis with the other two at the grid value nearest zero.
PlotPanel sweep_panel(const Dataset& data, const SweepGrid& grid, int axis, const std::string& title,
                      const std::string& x_label) {
    auto nearest_zero = [](const MorphRange& r) {
        const auto v = r.values();
        double best = v.empty() ? 0.0 : v.front();
        for (const double x : v) {
            if (std::abs(x) < std::abs(best)) best = x;
        }
        return best;
    };
    const double fixed[3] = {nearest_zero(grid.twist), nearest_zero(grid.camber), nearest_zero(grid.extension)};
    auto coord = [](const MorphState& s, int a) {
        return a == 0 ? s.twist_deg : a == 1 ? s.camber_deg : s.extension_mm;
    };
    PlotPanel p{title, x_label, {}};
    const std::size_t sensors = data.sensor_count();
    for (std::size_t s = 0; s < sensors; ++s) p.series.push_back({"s" + std::to_string(s + 1), {}, {}});
    std::set<double> seen;
    for (const auto& row : data.rows) {
        bool on_axis = true;
        for (int a = 0; a < 3; ++a) {
            if (a != axis && coord(row.state, a) != fixed[a]) on_axis = false;
        }
        const double x = coord(row.state, axis);
        if (!on_axis || !seen.insert(x).second) continue;
        for (std::size_t s = 0; s < sensors; ++s) {
            p.series[s].x.push_back(x);
            p.series[s].y.push_back(row.amplitudes[s]);
        }
    }
    return p;
}

}  // namespace

SenseResult cmd_sense(const PipelineConfig& config, const std::string& out_dir, const std::string& lattice_path,
                      const std::string& fibers_path) {
    const BeamLattice lattice = load_lattice(or_default(lattice_path, out_dir, kLatticeFile));
    auto fibers = load_fibers(or_default(fibers_path, out_dir, kFibersFile));
    if (fibers.empty()) throw ValidationError("no fibers routed (fibers.count = 0)", "sense");
    for (const auto& f : fibers) {
        for (const auto& att : f.attachment) {
            for (const auto& nw : att) {
                if (nw.node >= lattice.nodes.size()) {
                    throw ValidationError("fiber file does not match the lattice (node " + std::to_string(nw.node) +
                                              ")",
                                          "sense");
                }
            }
        }
    }
    const SensingRig rig(lattice, std::move(fibers), config.material, config.model);

    SenseResult r;
    r.response = rig.response();
    r.dataset = synthesize_sweep(rig, config.sweep, config.sensing, config.seed);
    r.heldout = rig.synthesize(config.sweep.midpoint_states(), config.sensing, config.seed + 1);
    AttenuationModel clean = config.sensing.attenuation;
    clean.noise_sigma = 0.0;
    r.sensitivity = sensitivity(rig, clean, 60.0);

    ensure_dir(out_dir);
    save_dataset_csv(in_dir(out_dir, kDatasetFile), r.dataset);
    save_dataset_csv(in_dir(out_dir, kHeldoutFile), r.heldout);
    save_svg(in_dir(out_dir, "sensors.svg"),
             {sweep_panel(r.dataset, config.sweep, 0, "Amplitude vs twist", "twist (deg)"),
              sweep_panel(r.dataset, config.sweep, 1, "Amplitude vs camber", "camber (deg)"),
              sweep_panel(r.dataset, config.sweep, 2, "Amplitude vs extension", "extension (mm)")});

    std::ostringstream rep;
    rep << "rows " << r.dataset.rows.size() << '\n';
    rep << "heldout_rows " << r.heldout.rows.size() << '\n';
    std::size_t flagged = 0;
    for (const auto& row : r.dataset.rows) flagged += row.flagged;
    rep << "flagged_rows " << flagged << '\n';
    const char* metric[3] = {"twist_deg", "camber_deg", "extension_mm"};
    const char* unit[3] = {"per_Nmm", "per_N", "per_N"};
    for (int i = 0; i < 3; ++i) {
        rep << "response " << metric[i];
        for (int j = 0; j < 3; ++j) rep << ' ' << num(r.response(i, j)) << ' ' << unit[j];
        rep << '\n';
    }
    for (std::size_t s = 0; s < r.sensitivity.camber_slope.size(); ++s) {
        rep << "sensor s" << s + 1 << " camber_slope " << num(r.sensitivity.camber_slope[s]) << " twist_slope "
            << num(r.sensitivity.twist_slope[s]) << '\n';
    }
    rep << "best_camber_twist_ratio " << num(r.sensitivity.best_ratio) << " sensor s" << r.sensitivity.best_sensor + 1
        << '\n';
    write_text(in_dir(out_dir, "sense_report.txt"), rep.str());
    return r;
}

std::string fit_report(const FitResult& fit) {
    std::ostringstream o;
    o << "training_rows " << fit.model.training_rows << '\n';
    o << "degree " << fit.model.features.degree << '\n';
    o << "transform " << (fit.model.features.transform == FeatureTransform::Amplitude ? "amplitude" : "log_attenuation")
      << '\n';
    o << "ridge_lambda " << num(fit.model.ridge_lambda) << '\n';
    auto line = [&](const char* name, const EstimateError& e) {
        o << name << " twist_deg " << num(e.twist_deg) << " camber_deg " << num(e.camber_deg) << " extension_mm "
          << num(e.extension_mm) << '\n';
    };
    line("rmse_train", fit.train);
    if (fit.has_heldout) line("rmse_heldout", fit.heldout);
    return o.str();
}

FitResult cmd_fit(const PipelineConfig& config, const std::string& out_dir, const std::string& dataset_path,
                  const std::string& heldout_path) {
    const Dataset data = load_dataset_csv(or_default(dataset_path, out_dir, kDatasetFile));
    FitResult r;
    r.model = fit_estimator(data, config.estimator.features, config.estimator.ridge_lambda);
    r.train = rmse(r.model, data);
    const std::string held = or_default(heldout_path, out_dir, kHeldoutFile);
    if (!heldout_path.empty() || fs::exists(held)) {
        const Dataset h = load_dataset_csv(held);
        if (h.sensor_count() != data.sensor_count()) {
            throw ValidationError("held-out data has " + std::to_string(h.sensor_count()) + " sensors, training has " +
                                      std::to_string(data.sensor_count()),
                                  "fit");
        }
        r.heldout = rmse(r.model, h);
        r.has_heldout = true;
    }
    ensure_dir(out_dir);
    save_estimator(in_dir(out_dir, kModelFile), r.model);
    write_text(in_dir(out_dir, "fit_report.txt"), fit_report(r));
    return r;
}

std::vector<std::vector<double>> read_readings_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("readings file is empty", "estimate");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) header.push_back(cell);
    }
    std::size_t first = 0;
    if (header.size() >= 3 && header[0] == "twist_deg" && header[1] == "camber_deg" && header[2] == "extension_mm") {
        first = 3;
    }
    if (header.size() <= first) throw ValidationError("readings header has no sensor columns", "estimate");
    for (std::size_t c = first; c < header.size(); ++c) {
        if (header[c] != "s" + std::to_string(c - first + 1)) {
            throw ValidationError("readings header column " + std::to_string(c + 1) + " must be s" +
                                      std::to_string(c - first + 1),
                                  "estimate");
        }
    }
    std::vector<std::vector<double>> rows;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (cells.size() != header.size()) {
            throw ValidationError("readings row " + std::to_string(row_no) + ": expected " +
                                      std::to_string(header.size()) + " columns, found " + std::to_string(cells.size()),
                                  "estimate");
        }
        std::vector<double> amps;
        for (std::size_t c = first; c < cells.size(); ++c) {
            char* end = nullptr;
            const double v = std::strtod(cells[c].c_str(), &end);
            if (cells[c].empty() || end != cells[c].c_str() + cells[c].size() || !std::isfinite(v)) {
                throw ValidationError("readings row " + std::to_string(row_no) + ": '" + cells[c] + "' is not a number",
                                      "estimate");
            }
            if (v < 0.0 || v > 1.0) {
                throw ValidationError("readings row " + std::to_string(row_no) + ": amplitude " + cells[c] +
                                          " outside [0, 1]",
                                      "estimate");
            }
            amps.push_back(v);
        }
        rows.push_back(std::move(amps));
    }
    return rows;
}

std::vector<MorphState> cmd_estimate(const std::string& model_path, const std::string& readings_path,
                                     const std::string& output_path) {
    const EstimatorModel model = load_estimator(model_path);
    std::ifstream in(readings_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + readings_path);
    const auto readings = read_readings_csv(in);
    std::vector<MorphState> out;
    std::ostringstream csv;
    csv << "twist_deg,camber_deg,extension_mm\n";
    for (std::size_t r = 0; r < readings.size(); ++r) {
        if (readings[r].size() != model.sensor_count) {
            throw ValidationError("readings have " + std::to_string(readings[r].size()) + " sensors, model expects " +
                                      std::to_string(model.sensor_count),
                                  "estimate");
        }
        const MorphState s = estimate(model, readings[r]);
        csv << num(s.twist_deg) << ',' << num(s.camber_deg) << ',' << num(s.extension_mm) << '\n';
        out.push_back(s);
    }
    const fs::path parent = fs::path(output_path).parent_path();
    if (!parent.empty()) ensure_dir(parent.string());
    write_text(output_path, csv.str());
    return out;
}

}  // namespace morphwing
