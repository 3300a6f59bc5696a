#include "morphwing/error.hpp"
#include "morphwing/fibers.hpp"
#include "morphwing/lattice.hpp"
#include "morphwing/pipeline.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

using namespace morphwing;

namespace {

CellMap box_map(int nu, int nv, int nw) { return build_cell_map(WingPlanform{}, nu, nv, nw, WarpProfile{}); }

// Brute-force BCC enumeration: every cell contributes its corners and center,
// duplicates removed by grid key.
std::pair<std::size_t, std::size_t> bcc_enumerate(int nu, int nv, int nw) {
    std::set<std::array<int, 3>> nodes;
    std::set<std::pair<std::array<int, 3>, std::array<int, 3>>> edges;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j)
            for (int k = 0; k < nw; ++k) {
                const std::array<int, 3> c{2 * i + 1, 2 * j + 1, 2 * k + 1};
                nodes.insert(c);
                for (int n = 0; n < 8; ++n) {
                    const std::array<int, 3> v{2 * (i + (n & 1)), 2 * (j + ((n >> 1) & 1)), 2 * (k + (n >> 2))};
                    nodes.insert(v);
                    edges.insert({c, v});
                }
            }
    return {nodes.size(), edges.size()};
}

struct Key {
    long long x, y, z;
    bool operator<(const Key& o) const { return std::tie(x, y, z) < std::tie(o.x, o.y, o.z); }
};
Key key(const Vec3& p) {
    return {std::llround(p.x() * 1e5), std::llround(p.y() * 1e5), std::llround(p.z() * 1e5)};
}

// Distance from p to the straight rod axis (x on the chord line, z = 0).
double rod_axis_distance(const WingPlanform& pf, double chord_fraction, const Vec3& p) {
    const double y = std::clamp(p.y(), 0.0, pf.span);
    const double x = leading_edge_x(pf, y) + chord_fraction * chord_at_span(pf, y);
    const Vec3 q(x, y, 0.0);
    return (p - q).norm();
}

// Sampled capsule overlap with the rod; independent of the library's
// segment-segment routine.
std::size_t rod_overlaps(const BeamLattice& l, const WingPlanform& pf, double chord_fraction, double rod_r) {
    std::size_t hits = 0;
    for (const auto& e : l.edges) {
        const Vec3& a = l.nodes[e.a].position;
        const Vec3& b = l.nodes[e.b].position;
        double best = 1e300;
        for (int s = 0; s <= 400; ++s) best = std::min(best, rod_axis_distance(pf, chord_fraction, a + (b - a) * (s / 400.0)));
        if (best < e.radius + rod_r) ++hits;
    }
    return hits;
}

}  // namespace

TEST(Bcc, SingleCell) {
    const BeamLattice l = generate_bcc(box_map(1, 1, 1), GradingField{});
    EXPECT_EQ(l.nodes.size(), 9u);
    EXPECT_EQ(l.edges.size(), 8u);
}

TEST(Bcc, CountsAgainstEnumerator) {
    for (int nu = 1; nu <= 3; ++nu)
        for (int nv = 1; nv <= 3; ++nv)
            for (int nw = 1; nw <= 3; ++nw) {
                const BeamLattice l = generate_bcc(box_map(nu, nv, nw), GradingField{});
                const auto [n, e] = bcc_enumerate(nu, nv, nw);
                EXPECT_EQ(l.nodes.size(), n) << nu << "x" << nv << "x" << nw;
                EXPECT_EQ(l.edges.size(), e) << nu << "x" << nv << "x" << nw;
            }
    EXPECT_EQ(generate_bcc(box_map(2, 2, 2), GradingField{}).nodes.size(), 35u);
    EXPECT_EQ(generate_bcc(box_map(2, 2, 2), GradingField{}).edges.size(), 64u);
    const BeamLattice l = generate_bcc(box_map(4, 10, 2), GradingField{});
    EXPECT_EQ(l.nodes.size(), 245u);
    EXPECT_EQ(l.edges.size(), 640u);
}

TEST(Bcc, EveryCenterHasDegreeEight) {
    const BeamLattice l = generate_bcc(box_map(3, 4, 2), GradingField{});
    const auto deg = l.degrees();
    std::size_t eights = 0;
    for (const auto d : deg) eights += d == 8;
    EXPECT_GE(eights, 3u * 4u * 2u);
}

TEST(Grading, SmoothstepAlongSpan) {
    const GradingField g;
    EXPECT_DOUBLE_EQ(grading_radius(g, Vec3(0, 0, 0), 250.0), 1.2);
    EXPECT_DOUBLE_EQ(grading_radius(g, Vec3(0, 250, 0), 250.0), 0.6);
    EXPECT_NEAR(grading_radius(g, Vec3(0, 125, 0), 250.0), 0.9, 1e-15);
    EXPECT_NEAR(grading_radius(g, Vec3(0, 125, 0), 250.0, true), 0.9 * g.surface_radius_factor, 1e-15);
}

TEST(Grading, RejectsNonPositiveRadius) {
    GradingField g;
    g.tip_radius = 0.0;
    EXPECT_THROW(g.validate(), ValidationError);
}

TEST(Surface, SingleCellHasTwoByTwoFaces) {
    const BeamLattice s = generate_surface_lattice(box_map(1, 1, 1), GradingField{});
    // Per face: 4 fine cells, 8 struts each.
    EXPECT_EQ(s.edges.size(), 2u * 4u * 8u);
}

TEST(Surface, NodeCountMatchesFaceWalk) {
    const CellMap map = box_map(4, 10, 2);
    const BeamLattice s = generate_surface_lattice(map, GradingField{});
    // Walk the fine faces and collect distinct node positions.
    std::set<Key> seen;
    const auto& u = map.chord_fractions();
    const auto& y = map.span_stations();
    const int fu = 2 * map.nu(), fv = 2 * map.nv();
    auto fine = [](const std::vector<double>& v, int i) { return i % 2 ? 0.5 * (v[i / 2] + v[i / 2 + 1]) : v[i / 2]; };
    for (const bool upper : {true, false}) {
        const double gk = upper ? map.nw() - 0.5 : 0.5;
        std::map<std::pair<int, int>, Vec3> outer, inner;
        for (int j = 0; j <= fv; ++j)
            for (int i = 0; i <= fu; ++i) {
                outer[{i, j}] = wing_point(map.planform(), fine(u, i), fine(y, j), upper ? 1.0 : 0.0);
                inner[{i, j}] = map.interpolate(0.5 * i, 0.5 * j, gk);
                seen.insert(key(outer[{i, j}]));
                seen.insert(key(inner[{i, j}]));
            }
        for (int j = 0; j < fv; ++j)
            for (int i = 0; i < fu; ++i) {
                Vec3 c = Vec3::Zero();
                for (int di = 0; di < 2; ++di)
                    for (int dj = 0; dj < 2; ++dj) c += outer[{i + di, j + dj}] + inner[{i + di, j + dj}];
                seen.insert(key(c / 8.0));
            }
    }
    EXPECT_EQ(s.nodes.size(), seen.size());
    EXPECT_EQ(s.edges.size(), 2u * 8u * fu * fv);
}

TEST(Surface, OuterNodesLieOnAnalyticSurface) {
    const CellMap map = box_map(4, 10, 2);
    const BeamLattice s = generate_surface_lattice(map, GradingField{});
    const WingPlanform& pf = map.planform();
    std::size_t on_surface = 0;
    for (const auto& n : s.nodes) {
        EXPECT_TRUE(n.has(kTagSurface));
        const Vec3& p = n.position;
        const double c = chord_at_span(pf, std::clamp(p.y(), 0.0, pf.span));
        const double xf = std::clamp((p.x() - leading_edge_x(pf, p.y())) / c, 0.0, 1.0);
        const double h = naca4_half_thickness(xf, pf.airfoil_thickness_ratio) * c;
        EXPECT_LE(std::abs(p.z()), h + 1e-6);
        if (std::abs(std::abs(p.z()) - h) < 1e-6) ++on_surface;
    }
    // The grid stops short of both edges, so the two outer sheets are disjoint.
    const std::size_t fine = (2 * 4 + 1) * (2 * 10 + 1);
    EXPECT_EQ(on_surface, 2 * fine);
}

TEST(Merge, IdentityAndIdempotence) {
    const BeamLattice l = generate_bcc(box_map(2, 3, 2), GradingField{});
    const BeamLattice a = merge(l, BeamLattice{});
    EXPECT_EQ(a.nodes.size(), l.nodes.size());
    EXPECT_EQ(a.edges.size(), l.edges.size());
    const BeamLattice b = merge(l, l);
    EXPECT_EQ(b.nodes.size(), l.nodes.size());
    EXPECT_EQ(b.edges.size(), l.edges.size());
}

TEST(Merge, WeldCountMatchesBruteForce) {
    const CellMap map = box_map(4, 10, 2);
    const BeamLattice in = generate_bcc(map, GradingField{});
    const BeamLattice sk = generate_surface_lattice(map, GradingField{});
    std::size_t coincident = 0;
    for (const auto& s : sk.nodes) {
        for (const auto& n : in.nodes) {
            if ((s.position - n.position).norm() < kWeldTolerance) {
                ++coincident;
                break;
            }
        }
    }
    const BeamLattice m = merge(in, sk);
    EXPECT_GT(coincident, 0u);
    EXPECT_EQ(m.nodes.size(), in.nodes.size() + sk.nodes.size() - coincident);
    EXPECT_LT(m.nodes.size(), in.nodes.size() + sk.nodes.size());
    EXPECT_EQ(connected_components(m).size(), 1u);
}

TEST(Merge, DisconnectedUnionIsRejected) {
    BeamLattice a, b;
    a.nodes = {{Vec3(0, 0, 0), 0}, {Vec3(1, 0, 0), 0}};
    a.edges = {{0, 1, 0.1, -1}};
    b.nodes = {{Vec3(5, 0, 0), 0}, {Vec3(6, 0, 0), 0}};
    b.edges = {{0, 1, 0.1, -1}};
    EXPECT_THROW(merge(a, b), GenerationError);
}

TEST(Channel, DefaultRodIsClear) {
    const CellMap map = build_cell_map(CellMapSpec{});
    const GradingField g;
    const BeamLattice l = merge(generate_bcc(map, g), generate_surface_lattice(map, g));
    EXPECT_EQ(rod_overlaps(l, map.planform(), 0.25, 1.0), 0u);
    const auto [carved, rep] = carve_channel(l, rod_channel(map.planform(), 1.0));
    EXPECT_TRUE(rep.intersecting.empty());
    EXPECT_GT(rep.min_clearance, 0.0);
    EXPECT_EQ(carved.channels.size(), 1u);
}

TEST(Channel, MisalignedRodIsHardError) {
    const CellMap map = build_cell_map(CellMapSpec{});
    const GradingField g;
    const BeamLattice l = merge(generate_bcc(map, g), generate_surface_lattice(map, g));
    EXPECT_GE(rod_overlaps(l, map.planform(), 0.3, 1.0), 1u);
    try {
        carve_channel(l, rod_channel(map.planform(), 1.0, 0.3));
        FAIL() << "expected GenerationError";
    } catch (const GenerationError& e) {
        EXPECT_EQ(e.stage(), "carve_channel");
    }
}

TEST(Channel, ZeroRadiusFiberLeavesLatticeUnchanged) {
    const BeamLattice l = generate_bcc(box_map(2, 2, 2), GradingField{});
    Channel c;
    c.kind = ChannelKind::Fiber;
    c.radius = 0.0;
    c.axis = {Vec3(0, 0, 0), Vec3(0, 250, 0)};
    const auto [out, rep] = carve_channel(l, c);
    EXPECT_TRUE(rep.intersecting.empty());
    EXPECT_TRUE(rep.removed.empty());
    EXPECT_TRUE(rep.thinned.empty());
    EXPECT_EQ(out.edges.size(), l.edges.size());
}

TEST(Fibers, SixLoopsThroughTip) {
    const GenerateResult r = generate(PipelineConfig{});
    const BeamLattice& l = r.lattice();
    ASSERT_EQ(r.fibers.size(), 6u);
    const double span = 250.0;
    std::vector<Vec3> rest(l.nodes.size(), Vec3::Zero());
    for (const auto& f : r.fibers) {
        double ymax = -1.0;
        for (const auto& w : f.waypoints) ymax = std::max(ymax, w.y());
        EXPECT_GT(ymax, span);
        EXPECT_NEAR(f.waypoints.front().y(), 0.0, 1e-9);
        EXPECT_NEAR(f.waypoints.back().y(), 0.0, 1e-9);
        double len = 0.0;
        for (std::size_t i = 1; i < f.waypoints.size(); ++i) len += (f.waypoints[i] - f.waypoints[i - 1]).norm();
        EXPECT_GT(len, 2.0 * span);
        // Attachment weights reproduce the rest pose.
        for (std::size_t i = 0; i < f.waypoints.size(); ++i) {
            Vec3 p = Vec3::Zero();
            double wsum = 0.0;
            for (const auto& nw : f.attachment[i]) {
                p += nw.weight * l.nodes[nw.node].position;
                wsum += nw.weight;
            }
            EXPECT_NEAR(wsum, 1.0, 1e-9);
            EXPECT_LT((p - f.waypoints[i]).norm(), 1e-8);
        }
    }
    for (const auto& fc : r.fiber_carves) EXPECT_GE(fc.clearance, 0.4);
}

TEST(Fibers, TooManyRequestedIsRejected) {
    const CellMap map = build_cell_map(CellMapSpec{});
    const BeamLattice l = generate_bcc(map, GradingField{});
    EXPECT_THROW(route_fibers(l, 7, FiberRouting{}), ValidationError);
}

TEST(Fibers, AttachmentWeightsHaveLinearPrecision) {
    const std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 3, 0), Vec3(2, 3, 0),
                                   Vec3(0, 0, 1), Vec3(2, 0, 1), Vec3(0, 3, 1), Vec3(2, 3, 1), Vec3(1, 1.5, 0.5)};
    const Vec3 p(0.7, 2.1, 0.3);
    const auto w = attachment_weights(pts, p);
    Vec3 q = Vec3::Zero();
    double sum = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        q += w[i] * pts[i];
        sum += w[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_LT((q - p).norm(), 1e-12);
}

TEST(Fibers, FileRoundTrip) {
    const GenerateResult r = generate(PipelineConfig{});
    std::stringstream ss;
    write_fibers(ss, r.fibers);
    const auto back = read_fibers(ss);
    ASSERT_EQ(back.size(), r.fibers.size());
    for (std::size_t f = 0; f < back.size(); ++f) {
        ASSERT_EQ(back[f].waypoints.size(), r.fibers[f].waypoints.size());
        for (std::size_t i = 0; i < back[f].waypoints.size(); ++i) {
            EXPECT_EQ(back[f].waypoints[i], r.fibers[f].waypoints[i]);
            ASSERT_EQ(back[f].attachment[i].size(), r.fibers[f].attachment[i].size());
            EXPECT_EQ(back[f].attachment[i][0].weight, r.fibers[f].attachment[i][0].weight);
        }
    }
}

TEST(Segment, SinglePartKeepsEverythingTogether) {
    const BeamLattice l = generate_bcc(box_map(4, 10, 2), GradingField{});
    const Segmentation s = segment(l, 1);
    for (const auto& e : s.lattice.edges) EXPECT_EQ(e.segment, 0);
}

TEST(Segment, FivePartsPartitionEdges) {
    const BeamLattice l = generate_bcc(box_map(4, 10, 2), GradingField{});
    const Segmentation s = segment(l, 5);
    ASSERT_EQ(s.edges_per_segment.size(), 5u);
    std::size_t sum = 0;
    for (const auto n : s.edges_per_segment) sum += n;
    EXPECT_EQ(sum, l.edges.size());
    ASSERT_EQ(s.cut_stations.size(), 4u);
    for (const auto& e : s.lattice.edges) {
        const double ya = s.lattice.nodes[e.a].position.y(), yb = s.lattice.nodes[e.b].position.y();
        for (const double cut : s.cut_stations) {
            EXPECT_FALSE(std::min(ya, yb) < cut - 1e-9 && std::max(ya, yb) > cut + 1e-9)
                << "edge crosses cut at " << cut;
        }
        // Segment index agrees with the midpoint's side of every cut.
        const double ym = 0.5 * (ya + yb);
        int expect = 0;
        for (const double cut : s.cut_stations) expect += ym > cut;
        EXPECT_EQ(e.segment, expect);
    }
    EXPECT_FALSE(s.interface_nodes.empty());
}

TEST(LatticeIo, RoundTripIsExact) {
    const GenerateResult r = generate(PipelineConfig{});
    std::stringstream ss;
    write_lattice(ss, r.lattice());
    const BeamLattice back = read_lattice(ss);
    ASSERT_EQ(back.nodes.size(), r.lattice().nodes.size());
    ASSERT_EQ(back.edges.size(), r.lattice().edges.size());
    for (std::size_t n = 0; n < back.nodes.size(); ++n) {
        EXPECT_EQ(back.nodes[n].position, r.lattice().nodes[n].position);
        EXPECT_EQ(back.nodes[n].tags, r.lattice().nodes[n].tags);
    }
    for (std::size_t e = 0; e < back.edges.size(); ++e) {
        EXPECT_EQ(back.edges[e].radius, r.lattice().edges[e].radius);
        EXPECT_EQ(back.edges[e].segment, r.lattice().edges[e].segment);
    }
    EXPECT_EQ(back.channels.size(), r.lattice().channels.size());
    ASSERT_TRUE(back.provenance.has_value());
    EXPECT_EQ(back.provenance->dims, r.lattice().provenance->dims);
}

TEST(LatticeIo, BadTagNamesLine) {
    std::stringstream ss("morphwing-lattice 1\nN 0 0 0 bogus\n");
    try {
        read_lattice(ss);
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos) << e.what();
    }
}
