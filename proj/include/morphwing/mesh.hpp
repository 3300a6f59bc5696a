#pragma once

#include "morphwing/lattice.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace morphwing {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;

    std::size_t size() const { return triangles.size(); }
    Vec3 normal(std::size_t t) const;
    double area(std::size_t t) const;
};

struct Capsule {
    Vec3 a = Vec3::Zero();
    Vec3 b = Vec3::Zero();
    double radius = 0.0;
};

/// Signed distance to a capsule (negative inside).
double capsule_distance(const Capsule& c, const Vec3& p);

/// Solid = smooth union of beam capsules minus channel capsules.
class ImplicitField {
public:
    ImplicitField() = default;
    ImplicitField(std::vector<Capsule> solids, std::vector<Capsule> cuts, double blend_radius);

    /// Beams of `lattice` (optionally one segment) minus its recorded channels.
    static ImplicitField from_lattice(const BeamLattice& lattice, double blend_radius,
                                      int only_segment = -1);

    double evaluate(const Vec3& p) const;

    bool empty() const { return solids_.empty(); }
    const std::vector<Capsule>& solids() const { return solids_; }
    const std::vector<Capsule>& cuts() const { return cuts_; }
    double blend_radius() const { return blend_; }
    double min_radius() const;
    /// Axis-aligned bounds of the solid capsules.
    std::pair<Vec3, Vec3> bounds() const;

private:
    void build_index();

    std::vector<Capsule> solids_;
    std::vector<Capsule> cuts_;
    double blend_ = 0.0;

    // Uniform bucket grid over the solids; each capsule registered in every
    // bucket its influence box touches.
    double bucket_ = 1.0;
    double reach_ = 0.0;
    Vec3 origin_ = Vec3::Zero();
    std::array<std::int64_t, 3> nb_{0, 0, 0};
    std::vector<std::uint32_t> bucket_start_;
    std::vector<std::uint32_t> bucket_items_;

    friend double sdf_eval(const ImplicitField& field, const Vec3& p);
};

double sdf_eval(const ImplicitField& field, const Vec3& p);

/// Polynomial smooth minimum; k = 0 gives the exact min.
double smooth_min(double a, double b, double k);

/// Marching cubes over the field, face ambiguities resolved with the
/// asymptotic decider. Throws ValidationError if voxel > min radius.
TriangleMesh polygonize(const ImplicitField& field, double voxel);

struct WatertightReport {
    bool is_closed = false;
    std::size_t boundary_edge_count = 0;
    std::size_t nonmanifold_edge_count = 0;
    bool consistent_orientation = false;
    long long euler_characteristic = 0;
};

WatertightReport watertight_check(const TriangleMesh& mesh);

/// Binary STL; returns bytes written (84 + 50 n).
std::uint64_t write_stl(const TriangleMesh& mesh, std::ostream& out);
std::uint64_t write_stl(const TriangleMesh& mesh, const std::string& path, bool force = false);

/// Reads binary STL into an indexed mesh (vertices welded by exact match).
TriangleMesh read_stl(std::istream& in);
TriangleMesh read_stl(const std::string& path);

}  // namespace morphwing
