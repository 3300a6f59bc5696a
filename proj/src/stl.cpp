#include "morphwing/error.hpp"
#include "morphwing/mesh.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <unordered_map>

namespace morphwing {

namespace {

constexpr char kHeader[] = "morphwing binary stl";

void put_f32(std::ostream& out, double v) {
    const float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), 4);
}

float get_f32(const char* p) {
    float f;
    std::memcpy(&f, p, 4);
    return f;
}

}  // namespace

std::uint64_t write_stl(const TriangleMesh& mesh, std::ostream& out) {
    char header[80] = {};
    std::memcpy(header, kHeader, sizeof kHeader - 1);
    out.write(header, 80);
    const std::uint32_t count = static_cast<std::uint32_t>(mesh.triangles.size());
    out.write(reinterpret_cast<const char*>(&count), 4);
    const std::uint16_t attr = 0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Vec3 nrm = mesh.normal(t);
        for (int a = 0; a < 3; ++a) put_f32(out, nrm[a]);
        for (const auto v : mesh.triangles[t]) {
            for (int a = 0; a < 3; ++a) put_f32(out, mesh.vertices[v][a]);
        }
        out.write(reinterpret_cast<const char*>(&attr), 2);
    }
    if (!out) throw IoError("STL write failed");
    return 84ull + 50ull * count;
}

std::uint64_t write_stl(const TriangleMesh& mesh, const std::string& path, bool force) {
    if (!force && std::filesystem::exists(path)) {
        throw IoError(path + " already exists (use --force to overwrite)");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    const auto bytes = write_stl(mesh, out);
    out.close();
    if (!out) throw IoError("write failed: " + path);
    return bytes;
}

TriangleMesh read_stl(std::istream& in) {
    char header[84];
    if (!in.read(header, 84)) throw IoError("STL shorter than its 84-byte header");
    std::uint32_t count;
    std::memcpy(&count, header + 80, 4);
    TriangleMesh mesh;
    mesh.triangles.reserve(count);
    std::map<std::array<float, 3>, std::uint32_t> index;
    char rec[50];
    for (std::uint32_t t = 0; t < count; ++t) {
        if (!in.read(rec, 50)) {
            throw IoError("STL truncated at triangle " + std::to_string(t) + " of " +
                          std::to_string(count));
        }
        std::array<std::uint32_t, 3> tri;
        for (int v = 0; v < 3; ++v) {
            const std::array<float, 3> key = {get_f32(rec + 12 + 12 * v), get_f32(rec + 16 + 12 * v),
                                              get_f32(rec + 20 + 12 * v)};
            auto [it, inserted] = index.emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
            if (inserted) mesh.vertices.emplace_back(key[0], key[1], key[2]);
            tri[v] = it->second;
        }
        mesh.triangles.push_back(tri);
    }
    return mesh;
}

TriangleMesh read_stl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_stl(in);
}

WatertightReport watertight_check(const TriangleMesh& mesh) {
    struct EdgeUse {
        int forward = 0;  // a < b direction
        int backward = 0;
    };
    std::unordered_map<std::uint64_t, EdgeUse> edges;
    edges.reserve(mesh.triangles.size() * 2);
    std::vector<char> used(mesh.vertices.size(), 0);
    for (const auto& tri : mesh.triangles) {
        for (int m = 0; m < 3; ++m) {
            const std::uint32_t a = tri[m], b = tri[(m + 1) % 3];
            used[a] = 1;
            const std::uint64_t key =
                (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
            auto& use = edges[key];
            (a < b ? use.forward : use.backward)++;
        }
    }
    WatertightReport r;
    r.consistent_orientation = true;
    for (const auto& [key, use] : edges) {
        const int total = use.forward + use.backward;
        if (total == 1) ++r.boundary_edge_count;
        if (total > 2) ++r.nonmanifold_edge_count;
        if (use.forward > 1 || use.backward > 1) r.consistent_orientation = false;
    }
    long long v = 0;
    for (char u : used) v += u;
    r.euler_characteristic =
        v - static_cast<long long>(edges.size()) + static_cast<long long>(mesh.triangles.size());
    r.is_closed = !mesh.triangles.empty() && r.boundary_edge_count == 0 &&
                  r.nonmanifold_edge_count == 0;
    return r;
}

}  // namespace morphwing
