#pragma once

#include "morphwing/lattice.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <memory>
#include <string>
#include <vector>

namespace morphwing {

struct Material {
    double elastic_modulus = 8.0;  // MPa
    double poisson_ratio = 0.45;

    double shear_modulus() const { return elastic_modulus / (2.0 * (1.0 + poisson_ratio)); }
    void validate() const;
};

struct SectionProperties {
    double area = 0.0;     // mm^2
    double inertia = 0.0;  // mm^4, either bending axis
    double polar = 0.0;    // mm^4
};

SectionProperties section_properties(double radius);

using Matrix12 = Eigen::Matrix<double, 12, 12>;

/// Euler-Bernoulli frame element in global coordinates. DOF order per node:
/// ux uy uz rx ry rz.
Matrix12 element_stiffness(const Vec3& a, const Vec3& b, double radius, const Material& material);

/// Unconstrained 6N x 6N stiffness of the lattice.
Eigen::SparseMatrix<double> assemble_stiffness(const BeamLattice& lattice, const Material& material);

enum class MorphMode { Twist, Camber, Extension, Custom };

std::string to_string(MorphMode mode);

struct NodalLoad {
    std::uint32_t node = 0;
    Vec3 force = Vec3::Zero();
    Vec3 moment = Vec3::Zero();
};

struct LoadCase {
    MorphMode mode = MorphMode::Custom;
    double magnitude = 0.0;  // N mm for twist, N otherwise
    std::vector<std::uint32_t> fixed_nodes;
    std::vector<NodalLoad> loads;
};

/// Rod, tip cap and camber cable modelling switches.
struct ModelOptions {
    /// Tie the lateral motion of rod_anchor nodes to the (rigid, root-held) rod.
    bool rod_coupling = true;
    /// Stiff cap joining every tip_anchor node to a hub on the rod axis.
    bool tip_cap = true;
    double cap_stiffness_factor = 1e3;
    double cap_radius = 2.0;
    /// Span fraction of the camber cable attachment.
    double camber_station = 0.25;

    void validate() const;
};

/// Node id of the tip cap hub (one past the last lattice node).
inline std::uint32_t tip_hub_node(const BeamLattice& lattice) {
    return static_cast<std::uint32_t>(lattice.nodes.size());
}

/// Root-plane nodes fixed; twist and extension act on the tip hub, camber
/// pulls the trailing-edge sheet down at the camber station.
LoadCase morph_load_case(MorphMode mode, double magnitude, const BeamLattice& lattice,
                         const ModelOptions& options = {});

/// Nodes with y below the weld tolerance.
std::vector<std::uint32_t> root_nodes(const BeamLattice& lattice);

struct DeformationState {
    /// 6 per node (lattice nodes, then the hub when present).
    Eigen::VectorXd dofs;
    /// Support and rod reactions, same layout as dofs.
    Eigen::VectorXd reactions;
    Vec3 applied_force = Vec3::Zero();
    Vec3 reaction_force = Vec3::Zero();
    double residual = 0.0;  // relative, ||K u - f|| / ||f||

    std::size_t node_count() const { return static_cast<std::size_t>(dofs.size() / 6); }
    Vec3 displacement(std::size_t n) const { return dofs.segment<3>(6 * n); }
    Vec3 rotation(std::size_t n) const { return dofs.segment<3>(6 * n + 3); }
    std::vector<Vec3> displacements() const;
    /// |sum reactions + sum applied| (N).
    double equilibrium_error() const { return (applied_force + reaction_force).norm(); }
};

/// Assembled and factorized frame model; reuse it for many load vectors
/// sharing the same supports.
class FrameModel {
public:
    FrameModel(const BeamLattice& lattice, const Material& material,
               std::vector<std::uint32_t> fixed_nodes, const ModelOptions& options = {});
    ~FrameModel();
    FrameModel(FrameModel&&) noexcept;
    FrameModel& operator=(FrameModel&&) noexcept;

    bool has_hub() const { return has_hub_; }
    std::size_t node_count() const { return node_count_; }
    const BeamLattice& lattice() const { return *lattice_; }

    DeformationState solve(const std::vector<NodalLoad>& loads) const;
    DeformationState solve(const LoadCase& load_case) const { return solve(load_case.loads); }

private:
    struct Impl;
    const BeamLattice* lattice_;
    bool has_hub_ = false;
    std::size_t node_count_ = 0;
    std::unique_ptr<Impl> impl_;
};

DeformationState assemble_and_solve(const BeamLattice& lattice, const Material& material,
                                    const LoadCase& load_case, const ModelOptions& options = {});

struct ComplianceReport {
    std::vector<double> stations;      // mm
    std::vector<double> twist_deg;     // section rotation about the span axis
    std::vector<double> camber_mm;     // trailing edge drop relative to quarter chord
    double extension_mm = 0.0;         // mean tip axial displacement
    Vec3 reaction_force = Vec3::Zero();
    double equilibrium_error = 0.0;

    double tip_twist_deg() const { return twist_deg.empty() ? 0.0 : twist_deg.back(); }
    /// Share of tip twist accrued between mid-span and the tip.
    double outer_half_twist_fraction() const;
    /// Station pair (index of inboard station) with the steepest camber change.
    std::size_t max_camber_slope_interval() const;
    double twist_at(double y) const;
    double camber_at(double y) const;
};

ComplianceReport compliance_report(const BeamLattice& lattice, const DeformationState& state);

/// Uniform-radius lattice with the same total volume (surface edges keep
/// their radius ratio to internal ones).
BeamLattice equal_volume_uniform(const BeamLattice& lattice, double surface_radius_factor);

/// Eigenvalues of K below rel_tol * lambda_max, counted through the inertia
/// of K - tau I.
struct NullspaceReport {
    std::size_t near_zero = 0;
    double lambda_max = 0.0;
    double threshold = 0.0;
};

NullspaceReport count_near_zero_eigenvalues(const Eigen::SparseMatrix<double>& k, double rel_tol);

}  // namespace morphwing
