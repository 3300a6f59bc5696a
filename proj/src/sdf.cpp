#include "morphwing/error.hpp"
#include "morphwing/geometry.hpp"
#include "morphwing/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace morphwing {

namespace {

// Distances beyond this from every capsule are reported as this value.
constexpr double kFieldMargin = 2.0;

}  // namespace

double capsule_distance(const Capsule& c, const Vec3& p) {
    return point_segment_distance(p, c.a, c.b) - c.radius;
}

double smooth_min(double a, double b, double k) {
    if (k <= 0.0) return std::min(a, b);
    const double h = std::max(k - std::abs(a - b), 0.0) / k;
    return std::min(a, b) - h * h * k * 0.25;
}

ImplicitField::ImplicitField(std::vector<Capsule> solids, std::vector<Capsule> cuts,
                             double blend_radius)
    : solids_(std::move(solids)), cuts_(std::move(cuts)), blend_(std::max(0.0, blend_radius)) {
    build_index();
}

ImplicitField ImplicitField::from_lattice(const BeamLattice& lattice, double blend_radius,
                                          int only_segment) {
    std::vector<Capsule> solids, cuts;
    for (const auto& e : lattice.edges) {
        if (only_segment >= 0 && e.segment != only_segment) continue;
        solids.push_back({lattice.nodes[e.a].position, lattice.nodes[e.b].position, e.radius});
    }
    for (const auto& ch : lattice.channels) {
        if (ch.radius <= 0.0) continue;
        for (std::size_t s = 0; s + 1 < ch.axis.size(); ++s) {
            cuts.push_back({ch.axis[s], ch.axis[s + 1], ch.radius});
        }
    }
    return ImplicitField(std::move(solids), std::move(cuts), blend_radius);
}

double ImplicitField::min_radius() const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& c : solids_) r = std::min(r, c.radius);
    return r;
}

std::pair<Vec3, Vec3> ImplicitField::bounds() const {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& c : solids_) {
        lo = lo.cwiseMin(c.a.cwiseMin(c.b) - Vec3::Constant(c.radius));
        hi = hi.cwiseMax(c.a.cwiseMax(c.b) + Vec3::Constant(c.radius));
    }
    return {lo, hi};
}

void ImplicitField::build_index() {
    if (solids_.empty()) return;
    double rmax = 0.0;
    for (const auto& c : solids_) rmax = std::max(rmax, c.radius);
    for (const auto& c : cuts_) rmax = std::max(rmax, c.radius);
    reach_ = rmax + blend_ + kFieldMargin;
    bucket_ = 2.0;
    auto [lo, hi] = bounds();
    for (const auto& c : cuts_) {
        lo = lo.cwiseMin(c.a.cwiseMin(c.b));
        hi = hi.cwiseMax(c.a.cwiseMax(c.b));
    }
    origin_ = lo - Vec3::Constant(reach_);
    for (int a = 0; a < 3; ++a) {
        nb_[a] = static_cast<std::int64_t>(std::ceil((hi[a] + reach_ - origin_[a]) / bucket_)) + 1;
    }
    const std::size_t total = static_cast<std::size_t>(nb_[0] * nb_[1] * nb_[2]);

    // Items: solids use ids [0, n_solids), cuts use n_solids + index.
    const std::size_t n_solids = solids_.size();
    auto range = [&](const Capsule& c, std::array<std::int64_t, 3>& b0, std::array<std::int64_t, 3>& b1) {
        const Vec3 lo_c = c.a.cwiseMin(c.b) - Vec3::Constant(c.radius + blend_ + kFieldMargin);
        const Vec3 hi_c = c.a.cwiseMax(c.b) + Vec3::Constant(c.radius + blend_ + kFieldMargin);
        for (int a = 0; a < 3; ++a) {
            b0[a] = std::clamp<std::int64_t>(
                static_cast<std::int64_t>(std::floor((lo_c[a] - origin_[a]) / bucket_)), 0, nb_[a] - 1);
            b1[a] = std::clamp<std::int64_t>(
                static_cast<std::int64_t>(std::floor((hi_c[a] - origin_[a]) / bucket_)), 0, nb_[a] - 1);
        }
    };
    std::vector<std::uint32_t> counts(total + 1, 0);
    auto visit = [&](auto&& fn) {
        for (std::size_t id = 0; id < n_solids + cuts_.size(); ++id) {
            const Capsule& c = id < n_solids ? solids_[id] : cuts_[id - n_solids];
            std::array<std::int64_t, 3> b0, b1;
            range(c, b0, b1);
            for (auto z = b0[2]; z <= b1[2]; ++z)
                for (auto y = b0[1]; y <= b1[1]; ++y)
                    for (auto x = b0[0]; x <= b1[0]; ++x) {
                        fn(static_cast<std::size_t>(x + nb_[0] * (y + nb_[1] * z)),
                           static_cast<std::uint32_t>(id));
                    }
        }
    };
    visit([&](std::size_t b, std::uint32_t) { ++counts[b + 1]; });
    for (std::size_t b = 0; b < total; ++b) counts[b + 1] += counts[b];
    bucket_start_ = counts;
    bucket_items_.resize(counts[total]);
    std::vector<std::uint32_t> fill(counts.begin(), counts.end() - 1);
    visit([&](std::size_t b, std::uint32_t id) { bucket_items_[fill[b]++] = id; });
}

double ImplicitField::evaluate(const Vec3& p) const { return sdf_eval(*this, p); }

double sdf_eval(const ImplicitField& field, const Vec3& p) {
    if (field.solids_.empty()) return std::numeric_limits<double>::infinity();
    std::array<std::int64_t, 3> cell;
    for (int a = 0; a < 3; ++a) {
        cell[a] = static_cast<std::int64_t>(std::floor((p[a] - field.origin_[a]) / field.bucket_));
        if (cell[a] < 0 || cell[a] >= field.nb_[a]) return field.reach_;
    }
    const std::size_t b =
        static_cast<std::size_t>(cell[0] + field.nb_[0] * (cell[1] + field.nb_[1] * cell[2]));
    const std::size_t n_solids = field.solids_.size();
    double d = field.reach_;
    bool any = false;
    // Items are stored in ascending id order, so the fold order is fixed.
    for (std::uint32_t it = field.bucket_start_[b]; it < field.bucket_start_[b + 1]; ++it) {
        const std::uint32_t id = field.bucket_items_[it];
        if (id >= n_solids) break;
        const double di = capsule_distance(field.solids_[id], p);
        d = any ? smooth_min(d, di, field.blend_) : std::min(d, di);
        any = true;
    }
    for (std::uint32_t it = field.bucket_start_[b]; it < field.bucket_start_[b + 1]; ++it) {
        const std::uint32_t id = field.bucket_items_[it];
        if (id < n_solids) continue;
        d = std::max(d, -capsule_distance(field.cuts_[id - n_solids], p));
    }
    return d;
}

}  // namespace morphwing
