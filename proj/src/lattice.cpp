#include "morphwing/lattice.hpp"

#include "morphwing/error.hpp"
#include "morphwing/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace morphwing {

namespace {

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a > b) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

// Appends nodes with on-the-fly welding.
class LatticeBuilder {
public:
    explicit LatticeBuilder(BeamLattice& out) : out_(out), cell_(kWeldTolerance * 4.0) {}

    std::uint32_t add_node(const Vec3& p, std::uint8_t tags) {
        if (auto hit = find(p)) {
            out_.nodes[*hit].tags |= tags;
            return *hit;
        }
        const auto id = static_cast<std::uint32_t>(out_.nodes.size());
        out_.nodes.push_back({p, tags});
        buckets_.emplace(key_of(p), id);
        return id;
    }

    void add_edge(std::uint32_t a, std::uint32_t b, double radius, int segment = -1) {
        if (a == b) {
            throw GenerationError("weld collision produced a zero-length edge at node " +
                                  std::to_string(a));
        }
        if (!seen_.insert(edge_key(a, b)).second) return;
        out_.edges.push_back({a, b, radius, segment});
    }

private:
    std::int64_t key_of(const Vec3& p) const {
        const auto q = [&](double v) { return static_cast<std::int64_t>(std::floor(v / cell_)); };
        return pack(q(p.x()), q(p.y()), q(p.z()));
    }
    static std::int64_t pack(std::int64_t x, std::int64_t y, std::int64_t z) {
        return (x * 73856093) ^ (y * 19349663) ^ (z * 83492791);
    }
    std::optional<std::uint32_t> find(const Vec3& p) const {
        const auto q = [&](double v) { return static_cast<std::int64_t>(std::floor(v / cell_)); };
        const std::int64_t x = q(p.x()), y = q(p.y()), z = q(p.z());
        std::optional<std::uint32_t> best;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    auto [lo, hi] = buckets_.equal_range(pack(x + dx, y + dy, z + dz));
                    for (auto it = lo; it != hi; ++it) {
                        if ((out_.nodes[it->second].position - p).norm() <= kWeldTolerance &&
                            (!best || it->second < *best)) {
                            best = it->second;
                        }
                    }
                }
        return best;
    }

    BeamLattice& out_;
    double cell_;
    std::unordered_multimap<std::int64_t, std::uint32_t> buckets_;
    std::unordered_set<std::uint64_t> seen_;
};

std::uint8_t tip_tag(const Vec3& p, double span) {
    return p.y() >= span - kWeldTolerance ? std::uint8_t{kTagTipAnchor} : std::uint8_t{0};
}

}  // namespace

void Channel::validate() const {
    if (axis.size() < 2) throw ValidationError("channel axis needs at least 2 points");
    if (!(radius >= 0.0) || !std::isfinite(radius)) {
        throw ValidationError("channel radius must be >= 0");
    }
}

std::vector<std::size_t> BeamLattice::degrees() const {
    std::vector<std::size_t> deg(nodes.size(), 0);
    for (const auto& e : edges) {
        ++deg[e.a];
        ++deg[e.b];
    }
    return deg;
}

double BeamLattice::total_volume() const {
    double v = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        v += std::numbers::pi * edges[e].radius * edges[e].radius * edge_length(e);
    }
    return v;
}

double BeamLattice::min_radius() const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& e : edges) r = std::min(r, e.radius);
    return r;
}

void GradingField::validate() const {
    if (!(root_radius > 0.0) || !std::isfinite(root_radius)) {
        throw ValidationError("grading.root_radius: must be > 0");
    }
    if (!(tip_radius > 0.0) || !std::isfinite(tip_radius)) {
        throw ValidationError("grading.tip_radius: must be > 0");
    }
    if (!(surface_radius_factor > 0.0) || !std::isfinite(surface_radius_factor)) {
        throw ValidationError("grading.surface_radius_factor: must be > 0");
    }
}

double grading_radius(const GradingField& grading, const Vec3& point, double span,
                      bool surface_edge) {
    const double s = std::clamp(point.y() / span, 0.0, 1.0);
    const double r =
        grading.root_radius + (grading.tip_radius - grading.root_radius) * smoothstep(s);
    return surface_edge ? r * grading.surface_radius_factor : r;
}

BeamLattice generate_bcc(const CellMap& map, const GradingField& grading) {
    grading.validate();
    BeamLattice out;
    out.provenance = map.spec();
    LatticeBuilder builder(out);
    const double span = map.planform().span;
    const auto iq = map.quarter_chord_index();
    const int nw = map.nw();

    auto rod_sheet = [&](int k) {
        // Sheets bracketing the chord plane; for even n_w the middle sheet
        // sits on the axis itself.
        return nw % 2 == 1 ? (k == nw / 2 || k == nw / 2 + 1) : k == nw / 2;
    };

    for (int k = 0; k <= nw; ++k)
        for (int j = 0; j <= map.nv(); ++j)
            for (int i = 0; i <= map.nu(); ++i) {
                const Vec3& p = map.vertex(i, j, k);
                std::uint8_t tags = kTagInternal | tip_tag(p, span);
                if (iq && i == *iq && rod_sheet(k)) tags |= kTagRodAnchor;
                builder.add_node(p, tags);
            }

    std::vector<std::uint32_t> centers;
    centers.reserve(map.cell_count());
    for (int k = 0; k < nw; ++k)
        for (int j = 0; j < map.nv(); ++j)
            for (int i = 0; i < map.nu(); ++i) {
                const Vec3 c = map.cell_center(i, j, k);
                centers.push_back(builder.add_node(c, kTagInternal | tip_tag(c, span)));
            }

    for (int k = 0; k < nw; ++k)
        for (int j = 0; j < map.nv(); ++j)
            for (int i = 0; i < map.nu(); ++i) {
                const std::uint32_t c = centers[map.cell_index(i, j, k)];
                for (int n = 0; n < 8; ++n) {
                    const auto corner = static_cast<std::uint32_t>(
                        map.vertex_index(i + (n & 1), j + ((n >> 1) & 1), k + ((n >> 2) & 1)));
                    const Vec3 mid = 0.5 * (out.nodes[c].position + out.nodes[corner].position);
                    builder.add_edge(c, corner, grading_radius(grading, mid, span));
                }
            }
    return out;
}

BeamLattice generate_surface_lattice(const CellMap& map, const GradingField& grading) {
    grading.validate();
    BeamLattice out;
    out.provenance = map.spec();
    LatticeBuilder builder(out);
    const WingPlanform& pf = map.planform();
    const int fu = 2 * map.nu(), fv = 2 * map.nv();
    const auto& u = map.chord_fractions();
    const auto& y = map.span_stations();

    auto refined_u = [&](int i) { return i % 2 == 0 ? u[i / 2] : 0.5 * (u[i / 2] + u[i / 2 + 1]); };
    auto refined_y = [&](int j) { return j % 2 == 0 ? y[j / 2] : 0.5 * (y[j / 2] + y[j / 2 + 1]); };

    for (const bool upper : {true, false}) {
        const double outer_w = upper ? 1.0 : 0.0;
        const double inner_gk = upper ? map.nw() - kSurfaceLayerDepth : kSurfaceLayerDepth;
        const std::size_t stride = static_cast<std::size_t>(fu + 1);
        std::vector<std::uint32_t> outer((fu + 1) * (fv + 1)), inner((fu + 1) * (fv + 1));
        for (int j = 0; j <= fv; ++j)
            for (int i = 0; i <= fu; ++i) {
                const Vec3 p = wing_point(pf, refined_u(i), refined_y(j), outer_w);
                outer[i + stride * j] = builder.add_node(p, kTagSurface | tip_tag(p, pf.span));
            }
        for (int j = 0; j <= fv; ++j)
            for (int i = 0; i <= fu; ++i) {
                const Vec3 p = map.interpolate(0.5 * i, 0.5 * j, inner_gk);
                inner[i + stride * j] = builder.add_node(p, kTagSurface | tip_tag(p, pf.span));
            }
        for (int j = 0; j < fv; ++j)
            for (int i = 0; i < fu; ++i) {
                std::array<std::uint32_t, 8> corners;
                Vec3 center = Vec3::Zero();
                for (int n = 0; n < 8; ++n) {
                    const std::size_t idx = (i + (n & 1)) + stride * (j + ((n >> 1) & 1));
                    corners[n] = (n >> 2) ? inner[idx] : outer[idx];
                    center += out.nodes[corners[n]].position;
                }
                center /= 8.0;
                const std::uint32_t c =
                    builder.add_node(center, kTagSurface | tip_tag(center, pf.span));
                for (const auto corner : corners) {
                    const Vec3 mid = 0.5 * (out.nodes[c].position + out.nodes[corner].position);
                    builder.add_edge(c, corner, grading_radius(grading, mid, pf.span, true));
                }
            }
    }
    return out;
}

std::vector<std::vector<std::uint32_t>> connected_components(const BeamLattice& lattice) {
    DisjointSet ds(lattice.nodes.size());
    for (const auto& e : lattice.edges) ds.unite(e.a, e.b);
    std::unordered_map<std::size_t, std::size_t> slot;
    std::vector<std::vector<std::uint32_t>> comps;
    for (std::uint32_t n = 0; n < lattice.nodes.size(); ++n) {
        const std::size_t root = ds.find(n);
        auto [it, fresh] = slot.emplace(root, comps.size());
        if (fresh) comps.emplace_back();
        comps[it->second].push_back(n);
    }
    return comps;
}

namespace {

std::string describe_components(const std::vector<std::vector<std::uint32_t>>& comps) {
    std::ostringstream msg;
    msg << comps.size() << " components:";
    for (std::size_t c = 0; c < comps.size() && c < 8; ++c) {
        msg << " [" << comps[c].size() << " nodes from #" << comps[c].front() << "]";
    }
    if (comps.size() > 8) msg << " ...";
    return msg.str();
}

}  // namespace

BeamLattice merge(const BeamLattice& a, const BeamLattice& b) {
    BeamLattice out;
    out.provenance = a.provenance ? a.provenance : b.provenance;
    LatticeBuilder builder(out);
    for (const BeamLattice* src : {&a, &b}) {
        std::vector<std::uint32_t> remap(src->nodes.size());
        for (std::size_t n = 0; n < src->nodes.size(); ++n) {
            remap[n] = builder.add_node(src->nodes[n].position, src->nodes[n].tags);
        }
        for (const auto& e : src->edges) {
            builder.add_edge(remap[e.a], remap[e.b], e.radius, e.segment);
        }
    }
    out.channels = a.channels;
    for (const auto& c : b.channels) {
        const bool dup = std::any_of(out.channels.begin(), out.channels.end(), [&](const Channel& o) {
            return o.kind == c.kind && o.radius == c.radius && o.axis == c.axis;
        });
        if (!dup) out.channels.push_back(c);
    }
    if (!out.empty()) {
        const auto comps = connected_components(out);
        if (comps.size() > 1) {
            throw GenerationError("disconnected result, " + describe_components(comps), "merge");
        }
    }
    return out;
}

Channel rod_channel(const WingPlanform& planform, double radius, double chord_fraction) {
    Channel ch;
    ch.kind = ChannelKind::Rod;
    ch.radius = radius;
    for (const double y : {0.0, planform.span}) {
        ch.axis.push_back(
            {leading_edge_x(planform, y) + chord_fraction * chord_at_span(planform, y), y, 0.0});
    }
    return ch;
}

std::vector<std::size_t> channel_intersections(const BeamLattice& lattice, const Channel& channel,
                                               double* min_clearance) {
    std::vector<std::size_t> hits;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < lattice.edges.size(); ++e) {
        const auto& edge = lattice.edges[e];
        const Vec3& p = lattice.nodes[edge.a].position;
        const Vec3& q = lattice.nodes[edge.b].position;
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s + 1 < channel.axis.size(); ++s) {
            gap = std::min(gap, segment_segment_distance(p, q, channel.axis[s], channel.axis[s + 1]) -
                                    edge.radius - channel.radius);
        }
        worst = std::min(worst, gap);
        if (gap < 0.0) hits.push_back(e);
    }
    if (min_clearance) *min_clearance = worst;
    return hits;
}

namespace {

bool stays_connected(const BeamLattice& lattice, const std::vector<bool>& dropped) {
    DisjointSet ds(lattice.nodes.size());
    std::vector<bool> touched(lattice.nodes.size(), false);
    for (std::size_t e = 0; e < lattice.edges.size(); ++e) {
        if (dropped[e]) continue;
        ds.unite(lattice.edges[e].a, lattice.edges[e].b);
        touched[lattice.edges[e].a] = touched[lattice.edges[e].b] = true;
    }
    if (lattice.nodes.empty()) return true;
    const std::size_t root = ds.find(0);
    for (std::size_t n = 0; n < lattice.nodes.size(); ++n) {
        if (!touched[n] || ds.find(n) != root) return false;
    }
    return true;
}

}  // namespace

std::pair<BeamLattice, ClearanceReport> carve_channel(const BeamLattice& lattice,
                                                      const Channel& channel) {
    channel.validate();
    ClearanceReport report;
    report.kind = channel.kind;
    if (channel.radius == 0.0) {
        report.min_clearance = std::numeric_limits<double>::infinity();
        return {lattice, report};
    }
    report.intersecting = channel_intersections(lattice, channel, &report.min_clearance);

    BeamLattice out = lattice;
    if (channel.kind == ChannelKind::Rod) {
        if (!report.intersecting.empty()) {
            std::ostringstream msg;
            msg << "rod channel intersects " << report.intersecting.size() << " edge(s), first #"
                << report.intersecting.front() << " (min clearance " << report.min_clearance
                << " mm)";
            throw GenerationError(msg.str(), "carve_channel");
        }
        out.channels.push_back(channel);
        return {out, report};
    }

    std::vector<bool> dropped(lattice.edges.size(), false);
    for (const std::size_t e : report.intersecting) {
        dropped[e] = true;
        if (stays_connected(lattice, dropped)) {
            report.removed.push_back(e);
        } else {
            dropped[e] = false;
            out.edges[e].radius *= 0.5;
            report.thinned.push_back(e);
        }
    }
    if (!report.removed.empty()) {
        std::vector<LatticeEdge> kept;
        kept.reserve(out.edges.size());
        for (std::size_t e = 0; e < out.edges.size(); ++e) {
            if (!dropped[e]) kept.push_back(out.edges[e]);
        }
        out.edges = std::move(kept);
    }
    out.channels.push_back(channel);
    return {out, report};
}

Segmentation segment(const BeamLattice& lattice, int parts) {
    if (parts < 1) throw ValidationError("segment: parts must be >= 1");
    Segmentation result;
    result.lattice = lattice;
    if (parts > 1) {
        if (!lattice.provenance) {
            throw GenerationError("lattice has no cell-map provenance", "segment");
        }
        const int nv = lattice.provenance->dims[1];
        if (nv < parts) {
            throw GenerationError("n_v = " + std::to_string(nv) + " is smaller than parts = " +
                                      std::to_string(parts),
                                  "segment");
        }
        const auto stations = build_cell_map(*lattice.provenance).span_stations();
        for (int p = 1; p < parts; ++p) {
            const int j = static_cast<int>(std::lround(static_cast<double>(p) * nv / parts));
            result.cut_stations.push_back(stations[j]);
        }
    }
    result.edges_per_segment.assign(parts, 0);
    std::vector<int> first_segment(lattice.nodes.size(), -1);
    std::vector<bool> shared(lattice.nodes.size(), false);
    for (auto& e : result.lattice.edges) {
        const double ymid = 0.5 * (lattice.nodes[e.a].position.y() + lattice.nodes[e.b].position.y());
        int s = 0;
        for (const double cut : result.cut_stations) s += ymid > cut ? 1 : 0;
        e.segment = s;
        ++result.edges_per_segment[s];
        for (const auto n : {e.a, e.b}) {
            if (first_segment[n] < 0) {
                first_segment[n] = s;
            } else if (first_segment[n] != s) {
                shared[n] = true;
            }
        }
    }
    for (std::uint32_t n = 0; n < lattice.nodes.size(); ++n) {
        if (shared[n]) result.interface_nodes.push_back(n);
    }
    return result;
}

NodeLocator::NodeLocator(const BeamLattice& lattice, double tolerance)
    : lattice_(&lattice), cell_(std::max(tolerance, 1e-12) * 4.0) {
    for (std::uint32_t n = 0; n < lattice.nodes.size(); ++n) {
        const Vec3& p = lattice.nodes[n].position;
        buckets_.emplace(key(static_cast<std::int64_t>(std::floor(p.x() / cell_)),
                             static_cast<std::int64_t>(std::floor(p.y() / cell_)),
                             static_cast<std::int64_t>(std::floor(p.z() / cell_))),
                         n);
    }
}

std::int64_t NodeLocator::key(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return (x * 73856093) ^ (y * 19349663) ^ (z * 83492791);
}

std::optional<std::uint32_t> NodeLocator::find(const Vec3& p) const {
    const std::int64_t x = static_cast<std::int64_t>(std::floor(p.x() / cell_));
    const std::int64_t y = static_cast<std::int64_t>(std::floor(p.y() / cell_));
    const std::int64_t z = static_cast<std::int64_t>(std::floor(p.z() / cell_));
    std::optional<std::uint32_t> best;
    double best_d = cell_ * 0.25;
    for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dz = -1; dz <= 1; ++dz) {
                auto [lo, hi] = buckets_.equal_range(key(x + dx, y + dy, z + dz));
                for (auto it = lo; it != hi; ++it) {
                    const double d = (lattice_->nodes[it->second].position - p).norm();
                    if (d <= best_d) {
                        best_d = d;
                        best = it->second;
                    }
                }
            }
    return best;
}

}  // namespace morphwing
