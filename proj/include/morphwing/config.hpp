#pragma once

#include "morphwing/fibers.hpp"
#include "morphwing/lattice.hpp"
#include "morphwing/sensing.hpp"
#include "morphwing/structural.hpp"
#include "morphwing/wing_geometry.hpp"

#include <cstdint>
#include <string>

namespace morphwing {

inline constexpr int kConfigSchemaVersion = 1;

struct RodConfig {
    bool enabled = true;
    double radius = 1.0;
    double chord_fraction = 0.25;
};

struct FiberConfig {
    std::size_t count = 6;
    FiberRouting routing;  // empty stations = defaults for the grid
};

struct MeshConfig {
    double voxel = 0.3;
    double blend = 0.2;
};

struct LoadConfig {
    double twist_torque = 100.0;    // N mm
    double camber_force = 2.0;      // N
    double extension_force = 9.29;  // N
};

struct EstimatorConfig {
    FeatureSpec features;
    double ridge_lambda = 1e-8;
};

/// Every stage parameter. JSON on disk; see README for the schema.
struct PipelineConfig {
    int schema_version = kConfigSchemaVersion;
    CellMapSpec grid;  // planform, dims, warp, chord range
    GradingField grading;
    bool surface_layer = true;
    int segments = 5;
    RodConfig rod;
    FiberConfig fibers;
    MeshConfig mesh;
    Material material;
    ModelOptions model;
    LoadConfig loads;
    SweepGrid sweep;
    SensingOptions sensing;
    EstimatorConfig estimator;
    std::uint64_t seed = 42;
    std::string output_dir = "out";

    /// Throws ValidationError with the dotted field path.
    void validate() const;
};

/// Parses and validates. Missing keys keep their defaults; unknown keys,
/// wrong types and out-of-range values are rejected by field path.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::string& path);

/// Full config as JSON (every key present).
std::string dump_config(const PipelineConfig& config);

}  // namespace morphwing
