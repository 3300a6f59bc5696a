#pragma once

#include "morphwing/lattice.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace morphwing {

/// A root-to-tip fiber run in fractional grid coordinates: chord u in
/// [0, n_u] (i + 0.5 is the middle of column i), thickness w in [0, n_w].
/// (u, w) is piecewise linear in the span index through `knots`, held
/// constant beyond the ends. Consecutive knots at one span index form a
/// jog within that span plane.
struct FiberLeg {
    struct Knot {
        double span = 0.0;
        double u = 0.0;
        double w = 0.0;
    };
    std::vector<Knot> knots;

    static FiberLeg straight(double u, double w) { return {{{0.0, u, w}}}; }
    /// (u, w) at a span index; at a jog, the first knot of the jog.
    std::pair<double, double> at(double span_index) const;
};

/// Root -> tip on `out`, around the tip cap, tip -> root on `back`.
struct FiberStation {
    FiberLeg out;
    FiberLeg back;
};

struct FiberRouting {
    double fiber_radius = 0.4;   // 0.8 mm thread
    double tip_overhang = 3.0;   // loop turn distance beyond the tip plane (mm)
    std::vector<FiberStation> stations;
};

/// Six loops for maps with n_u >= 6 and odd n_w >= 3: leading-edge loops
/// on the upper and lower interior sheets, mid-chord loops returning on the
/// mid sheet, a trailing-edge loop over the inner span (camber) and one over
/// the outer span.
std::vector<FiberStation> default_fiber_stations(const CellMapSpec& spec);

struct NodeWeight {
    std::uint32_t node = 0;
    double weight = 0.0;
};

struct FiberPath {
    int id = 0;
    std::vector<Vec3> waypoints;
    /// Per waypoint: weights over the nodes of its containing cell.
    std::vector<std::vector<NodeWeight>> attachment;

    double rest_length() const;
};

/// Weights over `nodes` for point p: inverse-distance weights, minimally
/// adjusted so they sum to one and reproduce p (linear precision).
std::vector<double> attachment_weights(const std::vector<Vec3>& nodes, const Vec3& p);

/// Routes `count` fiber loops. Throws GenerationError naming the station if
/// any run comes closer than the fiber radius to a beam surface.
std::vector<FiberPath> route_fibers(const BeamLattice& lattice, std::size_t count,
                                    const FiberRouting& routing);

/// Smallest gap between any fiber segment and any beam surface (mm).
double fiber_clearance(const BeamLattice& lattice, const FiberPath& path);

/// Fiber channel (kind Fiber) along a routed path.
Channel fiber_channel(const FiberPath& path, double radius);

/// Waypoint positions under nodal displacements (3 per node, x y z).
std::vector<Vec3> displaced_waypoints(const FiberPath& path,
                                      const std::vector<Vec3>& node_displacement);

// `morphwing-fibers 1`, then per path `F id waypoints` followed by one
// `W x y z count node weight ...` line per waypoint.
void write_fibers(std::ostream& out, const std::vector<FiberPath>& paths);
std::vector<FiberPath> read_fibers(std::istream& in);
void save_fibers(const std::string& path, const std::vector<FiberPath>& paths);
std::vector<FiberPath> load_fibers(const std::string& path);

}  // namespace morphwing
