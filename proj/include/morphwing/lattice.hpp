#pragma once

#include "morphwing/wing_geometry.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace morphwing {

/// Nodes closer than this are the same node.
inline constexpr double kWeldTolerance = 1e-6;

enum NodeTag : std::uint8_t {
    kTagInternal = 1u << 0,
    kTagSurface = 1u << 1,
    kTagRodAnchor = 1u << 2,
    kTagTipAnchor = 1u << 3,
};

struct LatticeNode {
    Vec3 position = Vec3::Zero();
    std::uint8_t tags = 0;

    bool has(NodeTag t) const { return (tags & t) != 0; }
};

struct LatticeEdge {
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double radius = 0.0;
    int segment = -1;  // -1 = unassigned
};

enum class ChannelKind { Rod, Fiber };

/// Tube of empty space that must stay clear of material.
struct Channel {
    std::vector<Vec3> axis;
    double radius = 0.0;
    ChannelKind kind = ChannelKind::Rod;

    void validate() const;
};

/// Node/edge beam network. Every stage after generation works on this.
struct BeamLattice {
    std::vector<LatticeNode> nodes;
    std::vector<LatticeEdge> edges;
    std::optional<CellMapSpec> provenance;
    /// Channels recorded for subtraction at the meshing stage.
    std::vector<Channel> channels;

    bool empty() const { return nodes.empty(); }
    double edge_length(std::size_t e) const {
        return (nodes[edges[e].b].position - nodes[edges[e].a].position).norm();
    }
    std::vector<std::size_t> degrees() const;
    double total_volume() const;
    double min_radius() const;
    /// Skin-layer edge: at least one endpoint is not an internal node.
    bool is_surface_edge(std::size_t e) const {
        return !(nodes[edges[e].a].has(kTagInternal) && nodes[edges[e].b].has(kTagInternal));
    }
};

/// Strut radius field: smoothstep from root to tip radius along the span.
struct GradingField {
    double root_radius = 1.2;
    double tip_radius = 0.6;
    double surface_radius_factor = 0.6;

    void validate() const;
};

double grading_radius(const GradingField& grading, const Vec3& point, double span,
                      bool surface_edge = false);

/// One BCC cell per map cell: a center node joined to its 8 corners.
BeamLattice generate_bcc(const CellMap& map, const GradingField& grading);

/// Fraction of an internal cell height occupied by the skin layer.
inline constexpr double kSurfaceLayerDepth = 0.5;

/// BCC skin layer on the upper and lower faces, 2x finer in u and v. Outer
/// nodes lie on the analytic surface; inner nodes interpolate the internal
/// map so alternate nodes weld onto internal corners and cell centers.
BeamLattice generate_surface_lattice(const CellMap& map, const GradingField& grading);

/// Graph union: nodes within kWeldTolerance fused, duplicate edges dropped.
/// Throws GenerationError listing components if the result is disconnected.
BeamLattice merge(const BeamLattice& a, const BeamLattice& b);

std::vector<std::vector<std::uint32_t>> connected_components(const BeamLattice& lattice);

struct ClearanceReport {
    ChannelKind kind = ChannelKind::Rod;
    std::vector<std::size_t> intersecting;  // edge ids in the input lattice
    std::vector<std::size_t> removed;
    std::vector<std::size_t> thinned;
    /// Smallest gap between channel wall and beam surface (negative = overlap).
    double min_clearance = 0.0;
};

/// Straight rod channel along the given chord fraction, root to tip, z = 0.
Channel rod_channel(const WingPlanform& planform, double radius, double chord_fraction = 0.25);

/// Rod: throws GenerationError if any beam touches the channel, otherwise
/// records it. Fiber: offending beams are removed, or thinned to half radius
/// when removal would disconnect the graph.
std::pair<BeamLattice, ClearanceReport> carve_channel(const BeamLattice& lattice,
                                                      const Channel& channel);

/// Edge ids whose capsule overlaps the channel capsule.
std::vector<std::size_t> channel_intersections(const BeamLattice& lattice,
                                               const Channel& channel,
                                               double* min_clearance = nullptr);

struct Segmentation {
    BeamLattice lattice;
    std::vector<double> cut_stations;        // span stations (mm)
    std::vector<std::uint32_t> interface_nodes;
    std::vector<std::size_t> edges_per_segment;
};

/// Splits along spanwise node sheets into `parts` print segments. Edges go
/// to the segment holding their midpoint; cut-sheet nodes are shared.
Segmentation segment(const BeamLattice& lattice, int parts);

/// Position -> node id lookup on the weld tolerance.
class NodeLocator {
public:
    explicit NodeLocator(const BeamLattice& lattice, double tolerance = kWeldTolerance);
    std::optional<std::uint32_t> find(const Vec3& p) const;

private:
    std::int64_t key(std::int64_t x, std::int64_t y, std::int64_t z) const;
    const BeamLattice* lattice_;
    double cell_;
    std::unordered_multimap<std::int64_t, std::uint32_t> buckets_;
};

// Line format: header, `N x y z tags`, `E a b radius segment`, `C ...`.
void write_lattice(std::ostream& out, const BeamLattice& lattice);
BeamLattice read_lattice(std::istream& in);
void save_lattice(const std::string& path, const BeamLattice& lattice);
BeamLattice load_lattice(const std::string& path);

std::string format_tags(std::uint8_t tags);

}  // namespace morphwing
