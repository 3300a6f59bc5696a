#include "morphwing/error.hpp"
#include "morphwing/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace morphwing {

namespace {

// Corner c has offsets (c & 1, c >> 1 & 1, c >> 2 & 1).
constexpr int kEdgeCorners[12][2] = {
    {0, 1}, {2, 3}, {4, 5}, {6, 7},  // along x
    {0, 2}, {1, 3}, {4, 6}, {5, 7},  // along y
    {0, 4}, {1, 5}, {2, 6}, {3, 7},  // along z
};

// Face corners, counter-clockwise seen from outside the cube.
constexpr int kFaces[6][4] = {
    {0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6},
};

struct EdgeTable {
    int of[8][8];
    constexpr EdgeTable() : of{} {
        for (auto& row : of)
            for (auto& v : row) v = -1;
        for (int e = 0; e < 12; ++e) {
            of[kEdgeCorners[e][0]][kEdgeCorners[e][1]] = e;
            of[kEdgeCorners[e][1]][kEdgeCorners[e][0]] = e;
        }
    }
};
constexpr EdgeTable kEdgeOf{};

// Bit f set when edge e lies on face f.
struct FaceMask {
    int of[12];
    constexpr FaceMask() : of{} {
        for (int e = 0; e < 12; ++e) {
            for (int f = 0; f < 6; ++f) {
                int hits = 0;
                for (int m = 0; m < 4; ++m) {
                    hits += kFaces[f][m] == kEdgeCorners[e][0] || kFaces[f][m] == kEdgeCorners[e][1];
                }
                if (hits == 2) of[e] |= 1 << f;
            }
        }
    }
};
constexpr FaceMask kFaceMask{};

// Fan root whose diagonals all cross the cell interior, or -1. A diagonal
// lying in a cube face could be produced by the neighbouring cell as well.
int fan_root(const int* edges, int len) {
    for (int r = 0; r < len; ++r) {
        bool ok = true;
        for (int t = 2; t + 1 < len && ok; ++t) {
            ok = !(kFaceMask.of[edges[r]] & kFaceMask.of[edges[(r + t) % len]]);
        }
        if (ok) return r;
    }
    return -1;
}

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
constexpr double kMinT = 1e-3;

}  // namespace

Vec3 TriangleMesh::normal(std::size_t t) const {
    const auto& tri = triangles[t];
    const Vec3 n = (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]);
    const double len = n.norm();
    return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double TriangleMesh::area(std::size_t t) const {
    const auto& tri = triangles[t];
    return 0.5 *
           (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

TriangleMesh polygonize(const ImplicitField& field, double voxel) {
    if (!(voxel > 0.0) || !std::isfinite(voxel)) {
        throw ValidationError("mesh.voxel: must be a positive number", "export");
    }
    TriangleMesh mesh;
    if (field.empty()) return mesh;
    const double rmin = field.min_radius();
    if (voxel > rmin) {
        std::ostringstream msg;
        msg << "mesh.voxel: " << voxel << " mm exceeds the minimum beam radius " << rmin
            << " mm; thin struts would be lost. Use --voxel " << std::floor(rmin * 90.0) / 100.0
            << " or smaller";
        throw ValidationError(msg.str(), "export");
    }

    auto [lo, hi] = field.bounds();
    const Vec3 origin = lo - Vec3::Constant(2.0 * voxel);
    std::array<std::int64_t, 3> n;
    for (int a = 0; a < 3; ++a) {
        n[a] = static_cast<std::int64_t>(std::ceil((hi[a] - lo[a]) / voxel)) + 5;
    }
    if (static_cast<double>(n[0]) * n[1] * n[2] > 4e9) {
        throw ValidationError("mesh.voxel: grid would exceed 4e9 samples; use a coarser voxel",
                              "export");
    }
    const std::size_t nx = static_cast<std::size_t>(n[0]);
    const std::size_t ny = static_cast<std::size_t>(n[1]);
    const std::size_t plane = nx * ny;

    std::vector<double> val[2] = {std::vector<double>(plane), std::vector<double>(plane)};
    std::vector<std::uint32_t> xe[2] = {std::vector<std::uint32_t>(plane, kNone),
                                        std::vector<std::uint32_t>(plane, kNone)};
    std::vector<std::uint32_t> ye[2] = {std::vector<std::uint32_t>(plane, kNone),
                                        std::vector<std::uint32_t>(plane, kNone)};
    std::vector<std::uint32_t> ze(plane, kNone);

    auto sample = [&](std::vector<double>& out, std::int64_t k) {
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t i = 0; i < nx; ++i) {
                const Vec3 p = origin + voxel * Vec3(double(i), double(j), double(k));
                out[i + nx * j] = field.evaluate(p);
            }
    };
    sample(val[0], 0);

    for (std::int64_t k = 0; k + 1 < n[2]; ++k) {
        sample(val[1], k + 1);
        std::fill(xe[1].begin(), xe[1].end(), kNone);
        std::fill(ye[1].begin(), ye[1].end(), kNone);
        std::fill(ze.begin(), ze.end(), kNone);

        for (std::size_t j = 0; j + 1 < ny; ++j) {
            for (std::size_t i = 0; i + 1 < nx; ++i) {
                double f[8];
                int inside_count = 0;
                for (int c = 0; c < 8; ++c) {
                    const std::size_t ci = (i + (c & 1)) + nx * (j + ((c >> 1) & 1));
                    f[c] = val[(c >> 2) & 1][ci];
                    inside_count += f[c] < 0.0;
                }
                if (inside_count == 0 || inside_count == 8) continue;

                auto vertex = [&](int e) -> std::uint32_t {
                    const int c0 = kEdgeCorners[e][0], c1 = kEdgeCorners[e][1];
                    const std::size_t gi = i + (c0 & 1), gj = j + ((c0 >> 1) & 1);
                    const int dz = (c0 >> 2) & 1;
                    std::uint32_t* slot;
                    if (e < 4) slot = &xe[dz][gi + nx * gj];
                    else if (e < 8) slot = &ye[dz][gi + nx * gj];
                    else slot = &ze[gi + nx * gj];
                    if (*slot != kNone) return *slot;
                    const double t = std::clamp(f[c0] / (f[c0] - f[c1]), kMinT, 1.0 - kMinT);
                    Vec3 p = origin + voxel * Vec3(double(gi), double(gj), double(k + dz));
                    p[e / 4] += t * voxel;
                    *slot = static_cast<std::uint32_t>(mesh.vertices.size());
                    mesh.vertices.push_back(p);
                    return *slot;
                };

                // Isosurface boundary on each face, oriented so triangles face
                // the positive side: next[entry edge] = exit edge.
                int next[12];
                std::fill(std::begin(next), std::end(next), -1);
                for (const auto& face : kFaces) {
                    bool in[4];
                    for (int m = 0; m < 4; ++m) in[m] = f[face[m]] < 0.0;
                    int edge[4];
                    int cuts = 0;
                    for (int m = 0; m < 4; ++m) {
                        edge[m] = kEdgeOf.of[face[m]][face[(m + 1) % 4]];
                        cuts += in[m] != in[(m + 1) % 4];
                    }
                    if (cuts == 0) continue;
                    if (cuts == 2) {
                        int entry = -1, exit = -1;
                        for (int m = 0; m < 4; ++m) {
                            const bool a = in[m], b = in[(m + 1) % 4];
                            if (!a && b) entry = edge[m];
                            if (a && !b) exit = edge[m];
                        }
                        next[entry] = exit;
                        continue;
                    }
                    const double a = f[face[0]], b = f[face[1]], c = f[face[2]], d = f[face[3]];
                    const double saddle = (a * c - b * d) / (a + c - b - d);
                    for (int m = 0; m < 4; ++m) {
                        const int prev = edge[(m + 3) % 4];
                        if (saddle < 0.0 && !in[m]) next[edge[m]] = prev;
                        if (!(saddle < 0.0) && in[m]) next[prev] = edge[m];
                    }
                }

                bool used[12] = {};
                for (int start = 0; start < 12; ++start) {
                    if (next[start] < 0 || used[start]) continue;
                    std::uint32_t loop[12];
                    int loop_edges[12];
                    int len = 0;
                    int e = start;
                    while (!used[e]) {
                        used[e] = true;
                        loop_edges[len] = e;
                        loop[len++] = vertex(e);
                        e = next[e];
                    }
                    const int r = fan_root(loop_edges, len);
                    if (r >= 0) {
                        for (int t = 1; t + 1 < len; ++t) {
                            mesh.triangles.push_back(
                                {loop[r], loop[(r + t) % len], loop[(r + t + 1) % len]});
                        }
                        continue;
                    }
                    Vec3 c = Vec3::Zero();
                    for (int t = 0; t < len; ++t) c += mesh.vertices[loop[t]];
                    const auto center = static_cast<std::uint32_t>(mesh.vertices.size());
                    mesh.vertices.push_back(c / len);
                    for (int t = 0; t < len; ++t) {
                        mesh.triangles.push_back({center, loop[t], loop[(t + 1) % len]});
                    }
                }
            }
        }
        std::swap(val[0], val[1]);
        std::swap(xe[0], xe[1]);
        std::swap(ye[0], ye[1]);
    }
    return mesh;
}

}  // namespace morphwing
