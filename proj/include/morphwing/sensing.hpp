#pragma once

#include "morphwing/fibers.hpp"
#include "morphwing/structural.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace morphwing {

struct AttenuationModel {
    double stretch_coefficient = 5.0;  // per unit strain
    double bend_coefficient = 0.1;     // per rad of added turning
    double noise_sigma = 0.01;

    void validate() const;
};

struct FiberDeformation {
    double elongation_strain = 0.0;
    double curvature_increase = 0.0;  // rad, summed positive turning change
};

FiberDeformation fiber_deformation(const FiberPath& path, const std::vector<Vec3>& node_displacement);
FiberDeformation fiber_deformation(const FiberPath& path, const DeformationState& state);

/// Noise-free amplitude exp(-a e - b k). Inputs must be non-negative.
double attenuation(const AttenuationModel& model, double strain, double curvature);
/// With Gaussian noise drawn from `rng`, clamped to [0, 1].
double attenuate(const AttenuationModel& model, double strain, double curvature, std::mt19937_64& rng);
double attenuate(const AttenuationModel& model, double strain, double curvature, std::uint64_t seed);

/// Amplitude of one fiber; compressive strain leaves the fiber slack and
/// contributes nothing.
double fiber_amplitude(const AttenuationModel& model, const FiberDeformation& d, std::mt19937_64* rng);

struct MorphState {
    double twist_deg = 0.0;
    double camber_deg = 0.0;
    double extension_mm = 0.0;

    void validate() const;
    MorphState clamped() const;
};

struct MorphRange {
    double start = 0.0;
    double stop = 0.0;
    double step = 1.0;

    std::vector<double> values() const;
};

struct SweepGrid {
    MorphRange twist{-90.0, 90.0, 10.0};
    MorphRange camber{0.0, 60.0, 15.0};
    MorphRange extension{-20.0, 30.0, 10.0};
    bool return_sweep = false;

    void validate() const;
    /// Grid states in row order (twist fastest), optionally followed by the
    /// same states in reverse order.
    std::vector<MorphState> states() const;
    /// Cell-center states between grid points, used for held-out evaluation.
    std::vector<MorphState> midpoint_states() const;
};

struct DatasetRow {
    MorphState state;
    std::vector<double> amplitudes;
    bool flagged = false;  // beyond the linear-validity cap
};

struct Dataset {
    std::vector<DatasetRow> rows;
    std::size_t sensor_count() const { return rows.empty() ? 0 : rows.front().amplitudes.size(); }
};

void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in);
void save_dataset_csv(const std::string& path, const Dataset& data);
Dataset load_dataset_csv(const std::string& path);

struct SensingOptions {
    AttenuationModel attenuation;
    /// Rows whose largest fiber strain magnitude exceeds this are flagged.
    double linear_strain_cap = 0.5;
};

/// Lattice + fibers + factorized frame model. Maps a target morph state to
/// loads through the 3 x 3 metric response of the three unit load cases.
class SensingRig {
public:
    SensingRig(const BeamLattice& lattice, std::vector<FiberPath> fibers, const Material& material,
               const ModelOptions& model_options = {});
    ~SensingRig();

    /// Metric (twist_deg, camber_deg, extension_mm) per unit load of each
    /// mode (columns: twist N mm, camber N, extension N).
    const Eigen::Matrix3d& response() const { return response_; }
    std::size_t fiber_count() const { return fibers_.size(); }
    const std::vector<FiberPath>& fibers() const { return fibers_; }

    /// Load magnitudes reaching `target` in the linear model.
    Eigen::Vector3d loads_for(const MorphState& target) const;
    MorphState metrics(const DeformationState& state) const;
    DeformationState deform(const MorphState& target) const;
    std::vector<FiberDeformation> read_fibers(const DeformationState& state) const;

    Dataset synthesize(const std::vector<MorphState>& states, const SensingOptions& options,
                       std::uint64_t seed) const;

private:
    const BeamLattice* lattice_;
    std::vector<FiberPath> fibers_;
    std::unique_ptr<FrameModel> model_;
    std::vector<LoadCase> unit_cases_;
    Eigen::Matrix3d response_ = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d inverse_ = Eigen::Matrix3d::Zero();
    std::size_t camber_station_ = 0;
    double camber_lever_ = 1.0;
};

Dataset synthesize_sweep(const SensingRig& rig, const SweepGrid& grid, const SensingOptions& options,
                         std::uint64_t seed);

/// Slope comparison behind the camber/twist distinguishability property.
struct SensitivityReport {
    std::vector<double> camber_slope;  // |dA| per degree over the common range
    std::vector<double> twist_slope;
    double best_ratio = 0.0;
    std::size_t best_sensor = 0;
};

SensitivityReport sensitivity(const SensingRig& rig, const AttenuationModel& model, double range_deg);

// ---- estimator ----

enum class FeatureTransform { Amplitude, LogAttenuation };

struct FeatureSpec {
    int degree = 2;
    FeatureTransform transform = FeatureTransform::LogAttenuation;
};

std::vector<double> polynomial_features(const FeatureSpec& spec, const std::vector<double>& amplitudes);

struct EstimatorModel {
    FeatureSpec features;
    double ridge_lambda = 0.0;
    std::size_t sensor_count = 0;
    Eigen::VectorXd feature_mean;
    Eigen::VectorXd feature_scale;
    Eigen::Vector3d target_mean = Eigen::Vector3d::Zero();
    Eigen::MatrixXd weights;  // features x 3
    // Training metadata.
    std::size_t training_rows = 0;
    std::string note;

    MorphState predict_raw(const std::vector<double>& amplitudes) const;
};

EstimatorModel fit_estimator(const Dataset& data, const FeatureSpec& features, double ridge_lambda);
MorphState estimate(const EstimatorModel& model, const std::vector<double>& amplitudes);

struct EstimateError {
    double twist_deg = 0.0;
    double camber_deg = 0.0;
    double extension_mm = 0.0;
};

/// Per-DOF RMSE of the model on a dataset.
EstimateError rmse(const EstimatorModel& model, const Dataset& data);

void write_estimator(std::ostream& out, const EstimatorModel& model);
EstimatorModel read_estimator(std::istream& in);
void save_estimator(const std::string& path, const EstimatorModel& model);
EstimatorModel load_estimator(const std::string& path);

}  // namespace morphwing
