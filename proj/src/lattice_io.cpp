#include "morphwing/error.hpp"
#include "morphwing/lattice.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace morphwing {

namespace {

constexpr const char* kMagic = "morphwing-lattice";
constexpr int kVersion = 1;

struct TagName {
    NodeTag tag;
    const char* name;
};
constexpr TagName kTagNames[] = {
    {kTagInternal, "internal"},
    {kTagSurface, "surface"},
    {kTagRodAnchor, "rod_anchor"},
    {kTagTipAnchor, "tip_anchor"},
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint8_t parse_tags(const std::string& s, std::size_t line) {
    if (s == "-") return 0;
    std::uint8_t tags = 0;
    std::istringstream in(s);
    std::string part;
    while (std::getline(in, part, '|')) {
        bool known = false;
        for (const auto& t : kTagNames) {
            if (part == t.name) {
                tags |= t.tag;
                known = true;
            }
        }
        if (!known) {
            throw IoError("line " + std::to_string(line) + ": unknown node tag '" + part + "'");
        }
    }
    return tags;
}

}  // namespace

std::string format_tags(std::uint8_t tags) {
    std::string out;
    for (const auto& t : kTagNames) {
        if (tags & t.tag) {
            if (!out.empty()) out += '|';
            out += t.name;
        }
    }
    return out.empty() ? "-" : out;
}

void write_lattice(std::ostream& out, const BeamLattice& lattice) {
    out << kMagic << ' ' << kVersion << '\n';
    if (lattice.provenance) {
        const auto& p = *lattice.provenance;
        out << "provenance " << num(p.planform.airfoil_thickness_ratio) << ' '
            << num(p.planform.span) << ' ' << num(p.planform.root_chord) << ' '
            << num(p.planform.taper_ratio) << ' ' << num(p.planform.sweep_deg) << ' '
            << p.dims[0] << ' ' << p.dims[1] << ' ' << p.dims[2] << ' '
            << num(p.warp.root_scale) << ' ' << num(p.warp.tip_scale) << ' '
            << num(p.chord_start) << ' ' << num(p.chord_end) << ' '
            << (p.align_quarter_chord ? 1 : 0) << '\n';
    }
    out << "counts " << lattice.nodes.size() << ' ' << lattice.edges.size() << ' '
        << lattice.channels.size() << '\n';
    for (const auto& n : lattice.nodes) {
        out << "N " << num(n.position.x()) << ' ' << num(n.position.y()) << ' '
            << num(n.position.z()) << ' ' << format_tags(n.tags) << '\n';
    }
    for (const auto& e : lattice.edges) {
        out << "E " << e.a << ' ' << e.b << ' ' << num(e.radius) << ' ' << e.segment << '\n';
    }
    for (const auto& c : lattice.channels) {
        out << "C " << (c.kind == ChannelKind::Rod ? "rod" : "fiber") << ' ' << num(c.radius)
            << ' ' << c.axis.size();
        for (const auto& p : c.axis) out << ' ' << num(p.x()) << ' ' << num(p.y()) << ' ' << num(p.z());
        out << '\n';
    }
}

BeamLattice read_lattice(std::istream& in) {
    BeamLattice lattice;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) {
        throw IoError("lattice line " + std::to_string(line_no) + ": " + what);
    };

    if (!std::getline(in, line)) throw IoError("lattice file is empty");
    ++line_no;
    {
        std::istringstream hs(line);
        std::string magic;
        int version = 0;
        if (!(hs >> magic >> version) || magic != kMagic) fail("missing header");
        if (version != kVersion) fail("unsupported version " + std::to_string(version));
    }
    std::size_t n_nodes = 0, n_edges = 0, n_channels = 0;
    bool have_counts = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "provenance") {
            CellMapSpec p;
            int align = 1;
            if (!(ls >> p.planform.airfoil_thickness_ratio >> p.planform.span >>
                  p.planform.root_chord >> p.planform.taper_ratio >> p.planform.sweep_deg >>
                  p.dims[0] >> p.dims[1] >> p.dims[2] >> p.warp.root_scale >> p.warp.tip_scale >>
                  p.chord_start >> p.chord_end >> align)) {
                fail("malformed provenance");
            }
            p.align_quarter_chord = align != 0;
            lattice.provenance = p;
        } else if (kind == "counts") {
            if (!(ls >> n_nodes >> n_edges >> n_channels)) fail("malformed counts");
            have_counts = true;
            lattice.nodes.reserve(n_nodes);
            lattice.edges.reserve(n_edges);
        } else if (kind == "N") {
            LatticeNode n;
            std::string tags;
            if (!(ls >> n.position.x() >> n.position.y() >> n.position.z() >> tags)) {
                fail("malformed node");
            }
            n.tags = parse_tags(tags, line_no);
            lattice.nodes.push_back(n);
        } else if (kind == "E") {
            LatticeEdge e;
            if (!(ls >> e.a >> e.b >> e.radius >> e.segment)) fail("malformed edge");
            if (e.a >= n_nodes || e.b >= n_nodes || e.a == e.b) fail("edge index out of range");
            if (!(e.radius > 0.0)) fail("edge radius must be > 0");
            lattice.edges.push_back(e);
        } else if (kind == "C") {
            Channel c;
            std::string ck;
            std::size_t np = 0;
            if (!(ls >> ck >> c.radius >> np) || (ck != "rod" && ck != "fiber")) {
                fail("malformed channel");
            }
            c.kind = ck == "rod" ? ChannelKind::Rod : ChannelKind::Fiber;
            c.axis.resize(np);
            for (auto& p : c.axis) {
                if (!(ls >> p.x() >> p.y() >> p.z())) fail("malformed channel axis");
            }
            lattice.channels.push_back(std::move(c));
        } else {
            fail("unknown record '" + kind + "'");
        }
    }
    if (!have_counts) throw IoError("lattice file has no counts record");
    if (lattice.nodes.size() != n_nodes || lattice.edges.size() != n_edges ||
        lattice.channels.size() != n_channels) {
        throw IoError("lattice record counts do not match header");
    }
    return lattice;
}

void save_lattice(const std::string& path, const BeamLattice& lattice) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_lattice(out, lattice);
    if (!out) throw IoError("write failed: " + path);
}

BeamLattice load_lattice(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_lattice(in);
}

}  // namespace morphwing
