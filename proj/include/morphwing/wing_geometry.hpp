#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace morphwing {

using Vec3 = Eigen::Vector3d;

// Frame convention used throughout: x chordwise (leading edge -> trailing
// edge), y spanwise (root -> tip), z thickness (positive up). Lengths in mm.

/// Parametric tapered wing with a symmetric NACA 4-digit section.
/// Defaults are the built wing: NACA 0020, 250 mm span, 130 mm root chord,
/// 60% taper, no sweep.
struct WingPlanform {
    double airfoil_thickness_ratio = 0.20;
    double span = 250.0;
    double root_chord = 130.0;
    double taper_ratio = 0.6;
    double sweep_deg = 0.0;

    /// Throws ValidationError naming the offending field.
    void validate() const;
};

enum class Side { Upper, Lower };

/// Closed-trailing-edge NACA 4-digit half thickness, as a chord fraction.
double naca4_half_thickness(double x_frac, double t_ratio);

double chord_at_span(const WingPlanform& planform, double y);

/// Leading-edge x at span station y. Sweep is measured on the quarter-chord
/// line, so that line stays straight under taper.
double leading_edge_x(const WingPlanform& planform, double y);

/// Point on the quarter-chord line (z = 0) at span station y.
Vec3 quarter_chord_point(const WingPlanform& planform, double y);

/// Point inside the wing: u chord fraction, y span station (mm), w in [0,1]
/// blends lower (0) to upper (1) surface linearly.
Vec3 wing_point(const WingPlanform& planform, double u, double y, double w);

Vec3 surface_point(const WingPlanform& planform, double u, double s, Side side);

/// Spanwise scaling of cell extents, blended root -> tip with a cubic
/// Hermite smoothstep so the gradient vanishes at both ends.
struct WarpProfile {
    double root_scale = 1.0;
    double tip_scale = 1.0;

    void validate() const;
};

/// 3s^2 - 2s^3 on [0,1].
double smoothstep(double s);

double warp_scale(const WarpProfile& profile, double s);

/// Integral of warp_scale over [0, s] (closed form).
double warp_integral(const WarpProfile& profile, double s);

/// Everything needed to rebuild a CellMap deterministically. Stored with
/// lattices so downstream stages can recover grid structure.
struct CellMapSpec {
    WingPlanform planform;
    std::array<int, 3> dims{6, 12, 3};  // (n_u, n_v, n_w)
    WarpProfile warp;
    double chord_start = 0.03;  // chord fraction of the first chordwise sheet
    double chord_end = 0.90;    // chord fraction of the last chordwise sheet
    bool align_quarter_chord = true;

    void validate() const;
};

/// Structured hexahedral grid conformal to the wing. Sheet w = 0 lies on the
/// lower surface, w = n_w on the upper surface.
class CellMap {
public:
    const CellMapSpec& spec() const { return spec_; }
    const WingPlanform& planform() const { return spec_.planform; }
    int nu() const { return spec_.dims[0]; }
    int nv() const { return spec_.dims[1]; }
    int nw() const { return spec_.dims[2]; }

    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t cell_count() const {
        return static_cast<std::size_t>(nu()) * nv() * nw();
    }

    std::size_t vertex_index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(nu() + 1) *
                   (static_cast<std::size_t>(j) +
                    static_cast<std::size_t>(nv() + 1) * static_cast<std::size_t>(k));
    }
    std::size_t cell_index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(nu()) *
                   (static_cast<std::size_t>(j) +
                    static_cast<std::size_t>(nv()) * static_cast<std::size_t>(k));
    }

    const Vec3& vertex(int i, int j, int k) const { return vertices_[vertex_index(i, j, k)]; }
    const std::vector<Vec3>& vertices() const { return vertices_; }

    /// Corners of cell (i,j,k) ordered by (di + 2 dj + 4 dk).
    std::array<Vec3, 8> cell_corners(int i, int j, int k) const;
    Vec3 cell_center(int i, int j, int k) const;

    /// Chord fraction of each chordwise sheet (size n_u + 1).
    const std::vector<double>& chord_fractions() const { return u_; }
    /// Span station (mm) of each spanwise sheet (size n_v + 1).
    const std::vector<double>& span_stations() const { return y_; }

    /// Index of the chordwise sheet snapped onto the quarter chord, if any.
    std::optional<int> quarter_chord_index() const { return quarter_index_; }

    /// Trilinear interpolation at fractional grid coordinates; exact on
    /// vertices, linear along grid lines.
    Vec3 interpolate(double gi, double gj, double gk) const;

    /// Smallest corner scaled Jacobian over all cells.
    double min_scaled_jacobian() const;

private:
    friend CellMap build_cell_map(const CellMapSpec& spec);

    CellMapSpec spec_;
    std::vector<double> u_;
    std::vector<double> y_;
    std::vector<Vec3> vertices_;
    std::optional<int> quarter_index_;
};

/// Scaled Jacobian below which a hexahedron counts as degenerate.
inline constexpr double kMinScaledJacobian = 1e-6;

/// Builds the conformal map. Chordwise sheets are cosine-clustered toward
/// the leading edge, with the nearest interior sheet snapped to u = 0.25.
/// Spanwise sheets follow the integrated warp profile, renormalized to the
/// span. Throws GenerationError naming the first degenerate cell.
CellMap build_cell_map(const CellMapSpec& spec);

inline CellMap build_cell_map(const WingPlanform& planform, int nu, int nv, int nw,
                              const WarpProfile& warp) {
    CellMapSpec spec;
    spec.planform = planform;
    spec.dims = {nu, nv, nw};
    spec.warp = warp;
    return build_cell_map(spec);
}

}  // namespace morphwing
