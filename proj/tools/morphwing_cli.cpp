#include "morphwing/error.hpp"
#include "morphwing/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

using namespace morphwing;

namespace {

struct Globals {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

PipelineConfig effective_config(const Globals& g) {
    PipelineConfig c = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
    if (!g.out_dir.empty()) c.output_dir = g.out_dir;
    if (g.seed) c.seed = *g.seed;
    c.validate();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conformal lattice wing pipeline: generate, export, analyze, sense, fit, estimate"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config_path, "JSON config file (defaults when omitted)")->check(CLI::ExistingFile);
    app.add_option("--out-dir", g.out_dir, "Output directory (overrides output_dir)");
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides seed)");

    auto* config_cmd = app.add_subcommand("config", "Print the effective config as JSON");

    auto* gen = app.add_subcommand("generate", "Build the lattice; writes lattice.txt, fibers.txt, summary.txt");

    ExportOptions ex;
    auto* exp = app.add_subcommand("export", "Mesh the lattice to binary STL");
    exp->add_option("--lattice", ex.lattice_path, "Lattice file (default <out-dir>/lattice.txt)");
    exp->add_option("--voxel", ex.voxel, "Voxel size in mm");
    exp->add_option("--blend", ex.blend, "Smooth-union blend radius in mm");
    exp->add_flag("--per-segment", ex.per_segment, "One STL per print segment");
    exp->add_flag("--force", ex.force, "Overwrite existing STL files");

    std::string lattice_path;
    auto* ana = app.add_subcommand("analyze", "Twist, camber and extension load cases; compliance CSV + SVG");
    ana->add_option("--lattice", lattice_path, "Lattice file (default <out-dir>/lattice.txt)");

    std::string fibers_path;
    double noise = -1.0, twist_step = 0.0, camber_step = 0.0, extension_step = 0.0;
    auto* sen = app.add_subcommand("sense", "Synthetic sensor sweep; dataset.csv, heldout.csv, sensors.svg");
    sen->add_option("--lattice", lattice_path, "Lattice file (default <out-dir>/lattice.txt)");
    sen->add_option("--fibers", fibers_path, "Fiber file (default <out-dir>/fibers.txt)");
    sen->add_option("--noise", noise, "Amplitude noise sigma");
    sen->add_option("--twist-step", twist_step, "Twist grid step (deg)");
    sen->add_option("--camber-step", camber_step, "Camber grid step (deg)");
    sen->add_option("--extension-step", extension_step, "Extension grid step (mm)");

    std::string dataset_path, heldout_path;
    int degree = 0;
    double lambda = -1.0;
    auto* fit = app.add_subcommand("fit", "Fit the estimator; model.txt and fit_report.txt");
    fit->add_option("--dataset", dataset_path, "Training CSV (default <out-dir>/dataset.csv)");
    fit->add_option("--heldout", heldout_path, "Held-out CSV (default <out-dir>/heldout.csv if present)");
    fit->add_option("--degree", degree, "Polynomial degree (1 or 2)");
    fit->add_option("--lambda", lambda, "Ridge lambda");

    std::string model_path, readings_path, output_path;
    auto* est = app.add_subcommand("estimate", "Estimate morph states from sensor readings");
    est->add_option("--model", model_path, "Model file (default <out-dir>/model.txt)");
    est->add_option("--readings", readings_path, "Readings CSV (s1..sN columns)")->required();
    est->add_option("--output", output_path, "Output CSV (default <out-dir>/estimates.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ErrorKind::Validation);
    }
    if (*seed_opt) g.seed = seed;

    try {
        PipelineConfig c = effective_config(g);
        const std::string& out = c.output_dir;
        if (config_cmd->parsed()) {
            std::cout << dump_config(c);
        } else if (gen->parsed()) {
            std::cout << cmd_generate(c, out);
        } else if (exp->parsed()) {
            for (const auto& f : cmd_export(c, out, ex)) {
                std::cout << f.path << " triangles " << f.triangles << " bytes " << f.bytes << " boundary_edges "
                          << f.watertight.boundary_edge_count << '\n';
            }
        } else if (ana->parsed()) {
            for (const auto& r : cmd_analyze(c, out, lattice_path)) {
                std::cout << to_string(r.mode) << " tip_twist_deg " << r.report.tip_twist_deg() << " extension_mm "
                          << r.report.extension_mm << " outer_half_twist_fraction "
                          << r.report.outer_half_twist_fraction() << " equilibrium_error_N "
                          << r.report.equilibrium_error << '\n';
            }
        } else if (sen->parsed()) {
            if (noise >= 0.0) c.sensing.attenuation.noise_sigma = noise;
            if (twist_step > 0.0) c.sweep.twist.step = twist_step;
            if (camber_step > 0.0) c.sweep.camber.step = camber_step;
            if (extension_step > 0.0) c.sweep.extension.step = extension_step;
            c.validate();
            const auto r = cmd_sense(c, out, lattice_path, fibers_path);
            std::cout << "rows " << r.dataset.rows.size() << " heldout_rows " << r.heldout.rows.size()
                      << " sensors " << r.dataset.sensor_count() << " best_camber_twist_ratio "
                      << r.sensitivity.best_ratio << " (s" << r.sensitivity.best_sensor + 1 << ")\n";
        } else if (fit->parsed()) {
            if (degree != 0) c.estimator.features.degree = degree;
            if (lambda >= 0.0) c.estimator.ridge_lambda = lambda;
            c.validate();
            std::cout << fit_report(cmd_fit(c, out, dataset_path, heldout_path));
        } else if (est->parsed()) {
            if (model_path.empty()) model_path = (std::filesystem::path(out) / kModelFile).string();
            if (output_path.empty()) output_path = (std::filesystem::path(out) / "estimates.csv").string();
            const auto states = cmd_estimate(model_path, readings_path, output_path);
            std::cout << output_path << " rows " << states.size() << '\n';
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: io: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::Io);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::Generation);
    }
    return 0;
}
