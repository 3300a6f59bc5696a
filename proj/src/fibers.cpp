#include "morphwing/fibers.hpp"

#include "morphwing/error.hpp"
#include "morphwing/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace morphwing {

std::vector<FiberStation> default_fiber_stations(const CellMapSpec& spec) {
    const int nu = spec.dims[0], nw = spec.dims[2];
    if (nu < 6 || nw < 3 || nw % 2 == 0) {
        throw ValidationError(
            "fibers.stations: no default stations for this grid (need n_u >= 6 and odd n_w >= 3)");
    }
    const double up = nw - 1.0, lo = 1.0, mid = 0.5 * nw;
    const double te = nu - 0.5, te_mid = nu - 1.0;
    auto run = [](double u, double w) { return FiberLeg::straight(u, w); };
    // Column 0 is too thin at the leading edge; the rod sits on u = 3 and
    // mid-sheet runs stay on integer u, clear of the cell centers.
    //
    // Station 2 follows the trailing edge over the inner span, where the
    // camber cable acts, then steps one column forward. Station 5 takes the
    // trailing-edge columns it leaves free, passing under or over the step
    // on the mid sheet.
    const double s_up = std::floor(0.3 * spec.dims[1]) + 0.5, s_lo = s_up + 2.0;
    const FiberLeg camber_out{{{0.0, te, up}, {s_up, te, up}, {s_up, te - 1.0, up}}};
    const FiberLeg camber_back{{{0.0, te, lo}, {s_lo, te, lo}, {s_lo, te - 1.0, lo}}};
    auto braid = [&](double sheet, double at) {
        return FiberLeg{{{0.0, te - 1.0, sheet},
                         {at - 0.5, te - 1.0, sheet},
                         {at - 0.5, te - 1.0, mid},
                         {at - 0.5, te_mid, mid},
                         {at + 0.5, te_mid, mid},
                         {at + 0.5, te, mid},
                         {at + 0.5, te, sheet}}};
    };
    return {
        {run(1.5, up), run(2.5, up)},
        {run(1.5, lo), run(2.5, lo)},
        {camber_out, camber_back},
        {run(3.5, up), run(4.0, mid)},
        {run(3.5, lo), run(2.0, mid)},
        {braid(up, s_up), braid(lo, s_lo)},
    };
}

std::pair<double, double> FiberLeg::at(double span_index) const {
    if (knots.empty()) return {0.0, 0.0};
    if (span_index <= knots.front().span) return {knots.front().u, knots.front().w};
    for (std::size_t i = 1; i < knots.size(); ++i) {
        const Knot& a = knots[i - 1];
        const Knot& b = knots[i];
        if (span_index <= b.span) {
            if (b.span <= a.span) return {a.u, a.w};
            const double t = (span_index - a.span) / (b.span - a.span);
            return {a.u + t * (b.u - a.u), a.w + t * (b.w - a.w)};
        }
    }
    return {knots.back().u, knots.back().w};
}

double FiberPath::rest_length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i) len += (waypoints[i] - waypoints[i - 1]).norm();
    return len;
}

std::vector<double> attachment_weights(const std::vector<Vec3>& nodes, const Vec3& p) {
    const std::size_t n = nodes.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if ((nodes[i] - p).norm() < 1e-12) {
            w[i] = 1.0;
            return w;
        }
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 1.0 / (nodes[i] - p).norm();
        sum += w[i];
    }
    for (auto& wi : w) wi /= sum;

    // Minimize sum (w - w0)^2 / w0 subject to sum w = 1, sum w (x - p) = 0.
    // Solution: w = w0 (1 + l0 + l.(x - p)) with (M - m m^T) l = -m.
    Eigen::Vector3d m = Eigen::Vector3d::Zero();
    Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d y = nodes[i] - p;
        m += w[i] * y;
        M += w[i] * y * y.transpose();
    }
    const Eigen::Matrix3d C = M - m * m.transpose();
    const Eigen::Vector3d l = C.ldlt().solve(-m);
    const double l0 = -l.dot(m);
    for (std::size_t i = 0; i < n; ++i) w[i] *= 1.0 + l0 + l.dot(nodes[i] - p);
    return w;
}

double fiber_clearance(const BeamLattice& lattice, const FiberPath& path) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& e : lattice.edges) {
        const Vec3& a = lattice.nodes[e.a].position;
        const Vec3& b = lattice.nodes[e.b].position;
        for (std::size_t s = 0; s + 1 < path.waypoints.size(); ++s) {
            worst = std::min(worst, segment_segment_distance(a, b, path.waypoints[s],
                                                             path.waypoints[s + 1]) -
                                        e.radius);
        }
    }
    return worst;
}

namespace {

struct LegSample {
    Vec3 point;
    std::array<int, 3> cell;
};

std::vector<std::uint32_t> cell_nodes(const CellMap& map, const NodeLocator& locator,
                                      const std::array<int, 3>& c) {
    std::vector<std::uint32_t> ids;
    auto corners = map.cell_corners(c[0], c[1], c[2]);
    std::vector<Vec3> pts(corners.begin(), corners.end());
    pts.push_back(map.cell_center(c[0], c[1], c[2]));
    for (const auto& p : pts) {
        if (auto id = locator.find(p)) ids.push_back(*id);
    }
    return ids;
}

}  // namespace

std::vector<FiberPath> route_fibers(const BeamLattice& lattice, std::size_t count,
                                    const FiberRouting& routing) {
    if (!lattice.provenance) throw GenerationError("lattice has no provenance", "route_fibers");
    const bool has_tip = std::any_of(lattice.nodes.begin(), lattice.nodes.end(),
                                     [](const LatticeNode& n) { return n.has(kTagTipAnchor); });
    if (!has_tip) throw GenerationError("lattice has no tip_anchor nodes", "route_fibers");
    if (!(routing.fiber_radius >= 0.0)) throw ValidationError("fibers.radius: must be >= 0");

    const CellMap map = build_cell_map(*lattice.provenance);
    const auto stations =
        routing.stations.empty() ? default_fiber_stations(map.spec()) : routing.stations;
    if (count > stations.size()) {
        throw ValidationError("fibers.count: " + std::to_string(count) + " requested but only " +
                              std::to_string(stations.size()) + " stations configured");
    }
    const NodeLocator locator(lattice);
    const int nu = map.nu(), nv = map.nv(), nw = map.nw();

    auto cell_of = [&](double gi, double gj, double gk) -> std::array<int, 3> {
        auto c = [](double g, int n) { return std::clamp(static_cast<int>(std::floor(g)), 0, n - 1); };
        return {c(gi, nu), c(gj, nv), c(gk, nw)};
    };
    auto describe = [](const FiberLeg& leg) {
        std::ostringstream os;
        for (std::size_t i = 0; i < leg.knots.size(); ++i) {
            const auto& k = leg.knots[i];
            os << (i ? " > " : "") << "u " << k.u << " w " << k.w;
            if (i) os << " at " << k.span;
        }
        return os.str();
    };
    auto check_leg = [&](const FiberLeg& leg, std::size_t id) {
        bool ok = !leg.knots.empty();
        for (std::size_t i = 0; ok && i < leg.knots.size(); ++i) {
            const auto& k = leg.knots[i];
            ok = k.u > 0.0 && k.u < nu && k.w > 0.0 && k.w < nw &&
                 (i == 0 || k.span >= leg.knots[i - 1].span);
        }
        if (!ok) {
            throw GenerationError("station " + std::to_string(id) + " leg (" + describe(leg) +
                                      ") is not inside the grid",
                                  "route_fibers");
        }
    };
    // Grid coordinates (u, span, w) every half cell plus every knot.
    auto leg_samples = [&](const FiberLeg& leg) {
        std::vector<Vec3> g;
        auto push = [&](double span) {
            const auto [u, w] = leg.at(span);
            g.emplace_back(u, span, w);
        };
        for (int h = 0; h <= 2 * nv; ++h) {
            const double gj = 0.5 * h;
            const bool at_knot = std::any_of(leg.knots.begin(), leg.knots.end(),
                                             [&](const auto& k) { return k.span == gj; });
            if (!at_knot) push(gj);
        }
        for (const auto& k : leg.knots) {
            if (k.span >= 0.0 && k.span <= nv) g.emplace_back(k.u, k.span, k.w);
        }
        std::stable_sort(g.begin(), g.end(), [](const Vec3& a, const Vec3& b) { return a.y() < b.y(); });
        return g;
    };
    auto sample = [&](const Vec3& g) -> LegSample {
        return {map.interpolate(g.x(), g.y(), g.z()), cell_of(g.x(), g.y(), g.z())};
    };

    std::vector<FiberPath> paths;
    for (std::size_t f = 0; f < count; ++f) {
        const FiberStation& st = stations[f];
        check_leg(st.out, f);
        check_leg(st.back, f);
        const auto out = leg_samples(st.out);
        const auto back = leg_samples(st.back);
        std::vector<LegSample> samples;
        for (const auto& g : out) samples.push_back(sample(g));
        const Vec3 lift(0.0, routing.tip_overhang, 0.0);
        const LegSample tip_out = sample(out.back());
        const LegSample tip_back = sample(back.back());
        samples.push_back({tip_out.point + lift, tip_out.cell});
        samples.push_back({tip_back.point + lift, tip_back.cell});
        for (auto it = back.rbegin(); it != back.rend(); ++it) samples.push_back(sample(*it));

        FiberPath path;
        path.id = static_cast<int>(f);
        for (const auto& s : samples) {
            const auto ids = cell_nodes(map, locator, s.cell);
            if (ids.size() < 4) {
                throw GenerationError("station " + std::to_string(f) +
                                          ": containing cell has too few lattice nodes",
                                      "route_fibers");
            }
            std::vector<Vec3> pts;
            for (const auto id : ids) pts.push_back(lattice.nodes[id].position);
            const auto w = attachment_weights(pts, s.point);
            std::vector<NodeWeight> att;
            for (std::size_t i = 0; i < ids.size(); ++i) att.push_back({ids[i], w[i]});
            path.waypoints.push_back(s.point);
            path.attachment.push_back(std::move(att));
        }

        const double gap = fiber_clearance(lattice, path);
        if (gap < routing.fiber_radius) {
            std::ostringstream msg;
            msg << "no clear path at station " << f << " (out " << describe(st.out) << ", back "
                << describe(st.back) << "): clearance " << gap << " mm < fiber radius " << routing.fiber_radius;
            throw GenerationError(msg.str(), "route_fibers");
        }
        paths.push_back(std::move(path));
    }
    return paths;
}

Channel fiber_channel(const FiberPath& path, double radius) {
    Channel c;
    c.kind = ChannelKind::Fiber;
    c.radius = radius;
    c.axis = path.waypoints;
    return c;
}

std::vector<Vec3> displaced_waypoints(const FiberPath& path,
                                      const std::vector<Vec3>& node_displacement) {
    std::vector<Vec3> out(path.waypoints.size());
    for (std::size_t i = 0; i < path.waypoints.size(); ++i) {
        Vec3 u = Vec3::Zero();
        for (const auto& nw : path.attachment[i]) u += nw.weight * node_displacement[nw.node];
        out[i] = path.waypoints[i] + u;
    }
    return out;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_fibers(std::ostream& out, const std::vector<FiberPath>& paths) {
    out << "morphwing-fibers 1\n";
    for (const auto& p : paths) {
        out << "F " << p.id << ' ' << p.waypoints.size() << '\n';
        for (std::size_t i = 0; i < p.waypoints.size(); ++i) {
            const Vec3& w = p.waypoints[i];
            out << "W " << num(w.x()) << ' ' << num(w.y()) << ' ' << num(w.z()) << ' '
                << p.attachment[i].size();
            for (const auto& nw : p.attachment[i]) out << ' ' << nw.node << ' ' << num(nw.weight);
            out << '\n';
        }
    }
}

std::vector<FiberPath> read_fibers(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line.rfind("morphwing-fibers 1", 0) != 0) {
        throw IoError("not a morphwing-fibers 1 file");
    }
    auto bad = [&](const std::string& what) {
        return IoError("fibers line " + std::to_string(line_no) + ": " + what);
    };
    std::vector<FiberPath> paths;
    std::size_t pending = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "F") {
            if (pending) throw bad("path ended early");
            FiberPath p;
            if (!(ls >> p.id >> pending)) throw bad("expected 'F id waypoints'");
            paths.push_back(std::move(p));
        } else if (kind == "W") {
            if (!pending) throw bad("waypoint outside a path");
            double x, y, z;
            std::size_t n;
            if (!(ls >> x >> y >> z >> n)) throw bad("expected 'W x y z count ...'");
            std::vector<NodeWeight> att(n);
            for (auto& nw : att) {
                if (!(ls >> nw.node >> nw.weight)) throw bad("missing node weight");
            }
            paths.back().waypoints.emplace_back(x, y, z);
            paths.back().attachment.push_back(std::move(att));
            --pending;
        } else {
            throw bad("unknown record '" + kind + "'");
        }
    }
    if (pending) throw bad("file ends inside a path");
    return paths;
}

void save_fibers(const std::string& path, const std::vector<FiberPath>& paths) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_fibers(out, paths);
    if (!out) throw IoError("write failed: " + path);
}

std::vector<FiberPath> load_fibers(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_fibers(in);
}

}  // namespace morphwing
