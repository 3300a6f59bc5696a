#pragma once

#include "morphwing/config.hpp"
#include "morphwing/mesh.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace morphwing {

// File names inside the output directory.
inline constexpr const char* kLatticeFile = "lattice.txt";
inline constexpr const char* kFibersFile = "fibers.txt";
inline constexpr const char* kSummaryFile = "summary.txt";
inline constexpr const char* kDatasetFile = "dataset.csv";
inline constexpr const char* kHeldoutFile = "heldout.csv";
inline constexpr const char* kModelFile = "model.txt";

struct FiberCarve {
    double clearance = 0.0;  // fiber axis to nearest beam surface before carving (mm)
    ClearanceReport report;
};

struct GenerateResult {
    Segmentation segmentation;  // final lattice lives in segmentation.lattice
    std::vector<FiberPath> fibers;
    bool rod_carved = false;
    ClearanceReport rod;
    std::vector<FiberCarve> fiber_carves;

    const BeamLattice& lattice() const { return segmentation.lattice; }
};

/// Cell map -> BCC (+ skin) -> merge -> rod and fiber carving -> segmentation.
GenerateResult generate(const PipelineConfig& config);
std::string generate_summary(const GenerateResult& result);

/// Writes lattice.txt, fibers.txt and summary.txt; returns the summary.
std::string cmd_generate(const PipelineConfig& config, const std::string& out_dir);

struct ExportOptions {
    std::string lattice_path;  // empty = <out_dir>/lattice.txt
    double voxel = 0.0;        // 0 = config
    double blend = -1.0;       // < 0 = config
    bool per_segment = false;
    bool force = false;
};

struct ExportedFile {
    std::string path;
    std::size_t triangles = 0;
    std::uint64_t bytes = 0;
    WatertightReport watertight;
};

/// One STL, or one per segment. Throws GenerationError (stage export) if a
/// mesh is not watertight.
std::vector<ExportedFile> cmd_export(const PipelineConfig& config, const std::string& out_dir,
                                     const ExportOptions& options);

struct AnalyzeCase {
    MorphMode mode = MorphMode::Twist;
    double magnitude = 0.0;
    ComplianceReport report;
};

std::vector<AnalyzeCase> analyze(const PipelineConfig& config, const BeamLattice& lattice);

/// compliance_{twist,camber,extension}.csv and compliance.svg.
std::vector<AnalyzeCase> cmd_analyze(const PipelineConfig& config, const std::string& out_dir,
                                     const std::string& lattice_path = "");

struct SenseResult {
    Dataset dataset;
    Dataset heldout;
    SensitivityReport sensitivity;
    Eigen::Matrix3d response = Eigen::Matrix3d::Zero();
};

/// dataset.csv (sweep grid), heldout.csv (grid midpoints, seed + 1),
/// sensors.svg and sense_report.txt.
SenseResult cmd_sense(const PipelineConfig& config, const std::string& out_dir,
                      const std::string& lattice_path = "", const std::string& fibers_path = "");

struct FitResult {
    EstimatorModel model;
    EstimateError train;
    bool has_heldout = false;
    EstimateError heldout;
};

/// model.txt and fit_report.txt. Held-out RMSE is reported when
/// heldout_path (default <out_dir>/heldout.csv) exists.
FitResult cmd_fit(const PipelineConfig& config, const std::string& out_dir,
                  const std::string& dataset_path = "", const std::string& heldout_path = "");

/// Readings CSV: header s1..sN, optionally preceded by the three state
/// columns of a dataset. Writes twist_deg,camber_deg,extension_mm rows.
std::vector<MorphState> cmd_estimate(const std::string& model_path, const std::string& readings_path,
                                     const std::string& output_path);

std::vector<std::vector<double>> read_readings_csv(std::istream& in);

std::string fit_report(const FitResult& fit);

}  // namespace morphwing
