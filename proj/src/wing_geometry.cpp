#include "morphwing/wing_geometry.hpp"

#include "morphwing/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace morphwing {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ValidationError(field + ": " + what);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void WingPlanform::validate() const {
    require(finite(span) && span > 0.0, "planform.span", "must be > 0");
    require(finite(root_chord) && root_chord > 0.0, "planform.root_chord", "must be > 0");
    require(finite(taper_ratio) && taper_ratio > 0.0 && taper_ratio <= 1.0,
            "planform.taper_ratio", "must be in (0, 1]");
    require(finite(airfoil_thickness_ratio) && airfoil_thickness_ratio > 0.0 &&
                airfoil_thickness_ratio < 0.5,
            "planform.airfoil_thickness_ratio", "must be in (0, 0.5)");
    require(finite(sweep_deg) && std::abs(sweep_deg) < 60.0, "planform.sweep_deg",
            "must be finite and |sweep| < 60");
}

double naca4_half_thickness(double x_frac, double t_ratio) {
    if (!(x_frac >= 0.0 && x_frac <= 1.0)) {
        throw DomainError("naca4_half_thickness: chord fraction outside [0,1]");
    }
    const double x = x_frac;
    // -0.1036 closes the trailing edge exactly.
    const double poly = 0.2969 * std::sqrt(x) - 0.1260 * x - 0.3516 * x * x +
                        0.2843 * x * x * x - 0.1036 * x * x * x * x;
    return std::max(0.0, 5.0 * t_ratio * poly);
}

double chord_at_span(const WingPlanform& planform, double y) {
    if (!(y >= 0.0 && y <= planform.span)) {
        throw DomainError("chord_at_span: y outside [0, span]");
    }
    return planform.root_chord * (1.0 - (1.0 - planform.taper_ratio) * y / planform.span);
}

double leading_edge_x(const WingPlanform& planform, double y) {
    const double c = chord_at_span(planform, y);
    const double sweep = planform.sweep_deg * std::numbers::pi / 180.0;
    return 0.25 * (planform.root_chord - c) + y * std::tan(sweep);
}

Vec3 quarter_chord_point(const WingPlanform& planform, double y) {
    return {leading_edge_x(planform, y) + 0.25 * chord_at_span(planform, y), y, 0.0};
}

Vec3 wing_point(const WingPlanform& planform, double u, double y, double w) {
    const double c = chord_at_span(planform, y);
    const double h = naca4_half_thickness(u, planform.airfoil_thickness_ratio) * c;
    return {leading_edge_x(planform, y) + u * c, y, h * (2.0 * w - 1.0)};
}

Vec3 surface_point(const WingPlanform& planform, double u, double s, Side side) {
    if (!(u >= 0.0 && u <= 1.0) || !(s >= 0.0 && s <= 1.0)) {
        throw DomainError("surface_point: (u, s) outside [0,1]^2");
    }
    const double y = s == 1.0 ? planform.span : s * planform.span;
    return wing_point(planform, u, y, side == Side::Upper ? 1.0 : 0.0);
}

void WarpProfile::validate() const {
    require(finite(root_scale) && root_scale > 0.0, "warp.root_scale", "must be > 0");
    require(finite(tip_scale) && tip_scale > 0.0, "warp.tip_scale", "must be > 0");
}

double smoothstep(double s) {
    s = std::clamp(s, 0.0, 1.0);
    return s * s * (3.0 - 2.0 * s);
}

double warp_scale(const WarpProfile& profile, double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("warp_scale: s outside [0,1]");
    return profile.root_scale + (profile.tip_scale - profile.root_scale) * smoothstep(s);
}

double warp_integral(const WarpProfile& profile, double s) {
    // d/ds (s^3 - s^4/2) = smoothstep(s)
    const double h = s * s * s - 0.5 * s * s * s * s;
    return profile.root_scale * s + (profile.tip_scale - profile.root_scale) * h;
}

void CellMapSpec::validate() const {
    planform.validate();
    warp.validate();
    const char* names[3] = {"grid.n_u", "grid.n_v", "grid.n_w"};
    for (int a = 0; a < 3; ++a) {
        require(dims[a] >= 1 && dims[a] <= 512, names[a], "must be in [1, 512]");
    }
    require(finite(chord_start) && chord_start >= 0.0 && chord_start < 1.0,
            "grid.chord_start", "must be in [0, 1)");
    require(finite(chord_end) && chord_end > chord_start && chord_end <= 1.0,
            "grid.chord_end", "must be in (chord_start, 1]");
}

std::array<Vec3, 8> CellMap::cell_corners(int i, int j, int k) const {
    std::array<Vec3, 8> c;
    for (int n = 0; n < 8; ++n) {
        c[n] = vertex(i + (n & 1), j + ((n >> 1) & 1), k + ((n >> 2) & 1));
    }
    return c;
}

Vec3 CellMap::cell_center(int i, int j, int k) const {
    Vec3 sum = Vec3::Zero();
    for (const auto& p : cell_corners(i, j, k)) sum += p;
    return sum / 8.0;
}

Vec3 CellMap::interpolate(double gi, double gj, double gk) const {
    auto split = [](double g, int n, int& cell, double& t) {
        g = std::clamp(g, 0.0, static_cast<double>(n));
        cell = std::min(static_cast<int>(std::floor(g)), n - 1);
        t = g - cell;
    };
    int i, j, k;
    double a, b, c;
    split(gi, nu(), i, a);
    split(gj, nv(), j, b);
    split(gk, nw(), k, c);
    const auto p = cell_corners(i, j, k);
    // Exact corner hits keep shared geometry bit-identical.
    if ((a == 0.0 || a == 1.0) && (b == 0.0 || b == 1.0) && (c == 0.0 || c == 1.0)) {
        return p[(a == 1.0) + 2 * (b == 1.0) + 4 * (c == 1.0)];
    }
    if (a == 0.5 && b == 0.5 && c == 0.5) return cell_center(i, j, k);
    Vec3 out = Vec3::Zero();
    for (int n = 0; n < 8; ++n) {
        const double wa = (n & 1) ? a : 1.0 - a;
        const double wb = ((n >> 1) & 1) ? b : 1.0 - b;
        const double wc = ((n >> 2) & 1) ? c : 1.0 - c;
        out += wa * wb * wc * p[n];
    }
    return out;
}

namespace {

// Scaled Jacobian at each of the 8 corners; the three edge vectors at a
// corner are oriented along +u, +v, +w.
double cell_min_scaled_jacobian(const std::array<Vec3, 8>& p) {
    double worst = 1.0;
    for (int n = 0; n < 8; ++n) {
        const int di = n & 1, dj = (n >> 1) & 1, dk = (n >> 2) & 1;
        auto at = [&](int a, int b, int c) { return p[a + 2 * b + 4 * c]; };
        const Vec3 eu = at(1, dj, dk) - at(0, dj, dk);
        const Vec3 ev = at(di, 1, dk) - at(di, 0, dk);
        const Vec3 ew = at(di, dj, 1) - at(di, dj, 0);
        const double denom = eu.norm() * ev.norm() * ew.norm();
        const double sj = denom > 0.0 ? eu.dot(ev.cross(ew)) / denom : 0.0;
        worst = std::min(worst, sj);
    }
    return worst;
}

}  // namespace

double CellMap::min_scaled_jacobian() const {
    double worst = 1.0;
    for (int k = 0; k < nw(); ++k)
        for (int j = 0; j < nv(); ++j)
            for (int i = 0; i < nu(); ++i)
                worst = std::min(worst, cell_min_scaled_jacobian(cell_corners(i, j, k)));
    return worst;
}

CellMap build_cell_map(const CellMapSpec& spec) {
    spec.validate();
    CellMap map;
    map.spec_ = spec;
    const int nu = spec.dims[0], nv = spec.dims[1], nw = spec.dims[2];
    const WingPlanform& pf = spec.planform;

    // Chordwise: half-cosine clustering toward the leading edge.
    map.u_.resize(nu + 1);
    const double u0 = spec.chord_start, u1 = spec.chord_end;
    for (int i = 0; i <= nu; ++i) {
        const double xi = static_cast<double>(i) / nu;
        map.u_[i] = u0 + (u1 - u0) * (1.0 - std::cos(0.5 * std::numbers::pi * xi));
    }
    map.u_[0] = u0;
    map.u_[nu] = u1;
    if (spec.align_quarter_chord && nu >= 2 && u0 < 0.25 && u1 > 0.25) {
        int best = 1;
        for (int i = 2; i < nu; ++i) {
            if (std::abs(map.u_[i] - 0.25) < std::abs(map.u_[best] - 0.25)) best = i;
        }
        // Piecewise-linear remap keeps the sheets monotone.
        const double ub = map.u_[best];
        for (int i = 1; i < nu; ++i) {
            double& u = map.u_[i];
            if (i < best) {
                u = u0 + (u - u0) * (0.25 - u0) / (ub - u0);
            } else if (i > best) {
                u = 0.25 + (u - ub) * (u1 - 0.25) / (u1 - ub);
            }
        }
        map.u_[best] = 0.25;
        map.quarter_index_ = best;
    }

    // Spanwise: integrate the warp profile and renormalize to the span.
    map.y_.resize(nv + 1);
    const double total = warp_integral(spec.warp, 1.0);
    for (int j = 0; j <= nv; ++j) {
        map.y_[j] = pf.span * warp_integral(spec.warp, static_cast<double>(j) / nv) / total;
    }
    map.y_[0] = 0.0;
    map.y_[nv] = pf.span;

    map.vertices_.resize(static_cast<std::size_t>(nu + 1) * (nv + 1) * (nw + 1));
    for (int k = 0; k <= nw; ++k) {
        const double w = k == nw ? 1.0 : static_cast<double>(k) / nw;
        for (int j = 0; j <= nv; ++j) {
            for (int i = 0; i <= nu; ++i) {
                map.vertices_[map.vertex_index(i, j, k)] = wing_point(pf, map.u_[i], map.y_[j], w);
            }
        }
    }

    for (int k = 0; k < nw; ++k) {
        for (int j = 0; j < nv; ++j) {
            for (int i = 0; i < nu; ++i) {
                const double sj = cell_min_scaled_jacobian(map.cell_corners(i, j, k));
                if (!(sj > kMinScaledJacobian)) {
                    std::ostringstream msg;
                    msg << "degenerate hexahedron at cell (" << i << ", " << j << ", " << k
                        << "), scaled Jacobian " << sj;
                    throw GenerationError(msg.str(), "build_cell_map");
                }
            }
        }
    }
    return map;
}

}  // namespace morphwing
