#include "morphwing/structural.hpp"

#include "morphwing/error.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

namespace morphwing {

namespace {

constexpr double kPi = std::numbers::pi;

using Triplets = std::vector<Eigen::Triplet<double>>;

void add_element(Triplets& t, std::uint32_t a, std::uint32_t b, const Matrix12& k) {
    const std::uint32_t base[2] = {6 * a, 6 * b};
    for (int r = 0; r < 12; ++r)
        for (int c = 0; c < 12; ++c) {
            if (k(r, c) != 0.0) t.emplace_back(base[r / 6] + r % 6, base[c / 6] + c % 6, k(r, c));
        }
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
}

}  // namespace

void Material::validate() const {
    if (!(elastic_modulus > 0.0) || !std::isfinite(elastic_modulus)) {
        throw ValidationError("material.elastic_modulus: must be > 0");
    }
    if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5)) {
        throw ValidationError("material.poisson_ratio: must lie in (-1, 0.5)");
    }
}

void ModelOptions::validate() const {
    if (!(cap_stiffness_factor > 0.0)) throw ValidationError("model.cap_stiffness_factor: must be > 0");
    if (!(cap_radius > 0.0)) throw ValidationError("model.cap_radius: must be > 0");
    if (!(camber_station >= 0.0 && camber_station <= 1.0)) {
        throw ValidationError("loads.camber_station: must lie in [0, 1]");
    }
}

SectionProperties section_properties(double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw DomainError("section radius must be > 0", "section_properties");
    }
    const double r2 = radius * radius;
    return {kPi * r2, kPi * r2 * r2 / 4.0, kPi * r2 * r2 / 2.0};
}

Matrix12 element_stiffness(const Vec3& a, const Vec3& b, double radius, const Material& material) {
    const Vec3 d = b - a;
    const double L = d.norm();
    if (!(L > 0.0)) throw GenerationError("zero-length element", "element_stiffness");
    const SectionProperties s = section_properties(radius);
    const double E = material.elastic_modulus, G = material.shear_modulus();
    const double EA = E * s.area / L, GJ = G * s.polar / L;
    const double EI = E * s.inertia;
    const double k12 = 12.0 * EI / (L * L * L), k6 = 6.0 * EI / (L * L);
    const double k4 = 4.0 * EI / L, k2 = 2.0 * EI / L;

    Matrix12 k = Matrix12::Zero();
    k(0, 0) = k(6, 6) = EA;
    k(0, 6) = -EA;
    k(3, 3) = k(9, 9) = GJ;
    k(3, 9) = -GJ;
    // Bending in the local x-y plane (v, theta_z).
    k(1, 1) = k(7, 7) = k12;
    k(1, 7) = -k12;
    k(1, 5) = k(1, 11) = k6;
    k(5, 7) = k(7, 11) = -k6;
    k(5, 5) = k(11, 11) = k4;
    k(5, 11) = k2;
    // Bending in the local x-z plane (w, theta_y).
    k(2, 2) = k(8, 8) = k12;
    k(2, 8) = -k12;
    k(2, 4) = k(2, 10) = -k6;
    k(4, 8) = k(8, 10) = k6;
    k(4, 4) = k(10, 10) = k4;
    k(4, 10) = k2;
    for (int r = 0; r < 12; ++r)
        for (int c = 0; c < r; ++c) k(r, c) = k(c, r);

    const Vec3 ex = d / L;
    const Vec3 ref = std::abs(ex.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
    const Vec3 ey = ref.cross(ex).normalized();
    const Vec3 ez = ex.cross(ey);
    Eigen::Matrix3d R;
    R.row(0) = ex;
    R.row(1) = ey;
    R.row(2) = ez;
    Matrix12 T = Matrix12::Zero();
    for (int blk = 0; blk < 4; ++blk) T.block<3, 3>(3 * blk, 3 * blk) = R;
    Matrix12 K = T.transpose() * k * T;
    // Exact symmetry regardless of rounding in the product.
    return 0.5 * (K + K.transpose());
}

Eigen::SparseMatrix<double> assemble_stiffness(const BeamLattice& lattice, const Material& material) {
    material.validate();
    Triplets t;
    t.reserve(lattice.edges.size() * 144);
    for (const auto& e : lattice.edges) {
        add_element(t, e.a, e.b,
                    element_stiffness(lattice.nodes[e.a].position, lattice.nodes[e.b].position,
                                      e.radius, material));
    }
    const auto n = static_cast<Eigen::Index>(6 * lattice.nodes.size());
    Eigen::SparseMatrix<double> K(n, n);
    K.setFromTriplets(t.begin(), t.end());
    return K;
}

std::string to_string(MorphMode mode) {
    switch (mode) {
        case MorphMode::Twist: return "twist";
        case MorphMode::Camber: return "camber";
        case MorphMode::Extension: return "extension";
        case MorphMode::Custom: return "custom";
    }
    return "custom";
}

std::vector<std::uint32_t> root_nodes(const BeamLattice& lattice) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t n = 0; n < lattice.nodes.size(); ++n) {
        if (lattice.nodes[n].position.y() < kWeldTolerance) out.push_back(n);
    }
    return out;
}

LoadCase morph_load_case(MorphMode mode, double magnitude, const BeamLattice& lattice,
                         const ModelOptions& options) {
    options.validate();
    if (!std::isfinite(magnitude)) throw ValidationError("load magnitude must be finite");
    LoadCase lc;
    lc.mode = mode;
    lc.magnitude = magnitude;
    lc.fixed_nodes = root_nodes(lattice);
    if (lc.fixed_nodes.empty()) {
        throw ValidationError("lattice has no root-plane nodes to fix", "morph_load_case");
    }
    const bool has_tip = std::any_of(lattice.nodes.begin(), lattice.nodes.end(),
                                     [](const LatticeNode& n) { return n.has(kTagTipAnchor); });
    const bool has_rod = std::any_of(lattice.nodes.begin(), lattice.nodes.end(),
                                     [](const LatticeNode& n) { return n.has(kTagRodAnchor); });
    switch (mode) {
        case MorphMode::Twist:
        case MorphMode::Extension: {
            if (!has_tip || !has_rod) {
                throw ValidationError("lattice has no rod_anchor/tip_anchor nodes", "morph_load_case");
            }
            if (!options.tip_cap) {
                throw ValidationError("twist and extension act through the tip cap; enable it",
                                      "morph_load_case");
            }
            NodalLoad load;
            load.node = tip_hub_node(lattice);
            if (mode == MorphMode::Twist) load.moment = Vec3(0.0, magnitude, 0.0);
            else load.force = Vec3(0.0, magnitude, 0.0);
            lc.loads.push_back(load);
            break;
        }
        case MorphMode::Camber: {
            if (!lattice.provenance) {
                throw ValidationError("camber load needs the lattice cell map", "morph_load_case");
            }
            const CellMap map = build_cell_map(*lattice.provenance);
            const auto& y = map.span_stations();
            const double target = options.camber_station * map.planform().span;
            std::size_t j = 0;
            for (std::size_t s = 1; s < y.size(); ++s) {
                if (std::abs(y[s] - target) < std::abs(y[j] - target)) j = s;
            }
            if (j == 0 && y.size() > 1) j = 1;  // root sheet is clamped
            const NodeLocator locator(lattice);
            std::vector<std::uint32_t> te;
            for (int k = 0; k <= map.nw(); ++k) {
                if (auto id = locator.find(map.vertex(map.nu(), static_cast<int>(j), k))) {
                    te.push_back(*id);
                }
            }
            if (te.empty()) throw ValidationError("no trailing-edge nodes at camber station");
            for (const auto id : te) {
                lc.loads.push_back({id, Vec3(0.0, 0.0, -magnitude / te.size()), Vec3::Zero()});
            }
            break;
        }
        case MorphMode::Custom: break;
    }
    return lc;
}

std::vector<Vec3> DeformationState::displacements() const {
    std::vector<Vec3> out(node_count());
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = displacement(n);
    return out;
}

struct FrameModel::Impl {
    Eigen::SparseMatrix<double> k_total;
    Eigen::SparseMatrix<double> transform;  // full DOFs = transform * reduced
    Eigen::SparseMatrix<double> k_free;
    Eigen::Index n_free = 0;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool direct = true;
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
};

FrameModel::~FrameModel() = default;
FrameModel::FrameModel(FrameModel&&) noexcept = default;
FrameModel& FrameModel::operator=(FrameModel&&) noexcept = default;

FrameModel::FrameModel(const BeamLattice& lattice, const Material& material,
                       std::vector<std::uint32_t> fixed_nodes, const ModelOptions& options)
    : lattice_(&lattice), impl_(std::make_unique<Impl>()) {
    material.validate();
    options.validate();
    if (fixed_nodes.empty()) throw SolveError("constraint set is empty", "assemble_and_solve");
    const std::size_t n_lat = lattice.nodes.size();

    std::vector<std::uint32_t> tip;
    for (std::uint32_t n = 0; n < n_lat; ++n) {
        if (lattice.nodes[n].has(kTagTipAnchor)) tip.push_back(n);
    }
    has_hub_ = options.tip_cap && !tip.empty();
    node_count_ = n_lat + (has_hub_ ? 1 : 0);
    const auto ndof = static_cast<Eigen::Index>(6 * node_count_);

    Triplets t;
    t.reserve(lattice.edges.size() * 144 + tip.size() * 144);
    for (const auto& e : lattice.edges) {
        add_element(t, e.a, e.b,
                    element_stiffness(lattice.nodes[e.a].position, lattice.nodes[e.b].position,
                                      e.radius, material));
    }

    std::vector<std::size_t> parent(node_count_);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto unite = [&](std::size_t a, std::size_t b) {
        a = find_root(parent, a);
        b = find_root(parent, b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };
    for (const auto& e : lattice.edges) unite(e.a, e.b);

    std::vector<bool> fixed_dof(static_cast<std::size_t>(ndof), false);
    for (const auto n : fixed_nodes) {
        if (n >= node_count_) throw ValidationError("fixed node id out of range");
        for (int d = 0; d < 6; ++d) fixed_dof[6 * n + d] = true;
    }

    // Rod anchors: lateral (x, z) motion of each station's anchor group is
    // held by the rod; axial slide and spin stay free.
    std::map<long long, std::vector<std::uint32_t>> rod_groups;
    if (options.rod_coupling) {
        for (std::uint32_t n = 0; n < n_lat; ++n) {
            if (lattice.nodes[n].has(kTagRodAnchor)) {
                rod_groups[std::llround(lattice.nodes[n].position.y() / kWeldTolerance)].push_back(n);
            }
        }
    }

    if (has_hub_) {
        const std::uint32_t hub = tip_hub_node(lattice);
        Vec3 pos = Vec3::Zero();
        std::size_t count = 0;
        for (const auto n : tip) {
            if (lattice.nodes[n].has(kTagRodAnchor)) {
                pos += lattice.nodes[n].position;
                ++count;
            }
        }
        if (count == 0) {
            for (const auto n : tip) pos += lattice.nodes[n].position;
            count = tip.size();
        }
        pos /= static_cast<double>(count);
        Material cap = material;
        cap.elastic_modulus *= options.cap_stiffness_factor;
        for (const auto n : tip) {
            if ((lattice.nodes[n].position - pos).norm() < kWeldTolerance) continue;
            add_element(t, n, hub,
                        element_stiffness(lattice.nodes[n].position, pos, options.cap_radius, cap));
            unite(n, hub);
        }
        if (options.rod_coupling) {
            for (const int d : {0, 2, 3, 5}) fixed_dof[6 * hub + d] = true;
        }
    }

    impl_->k_total.resize(ndof, ndof);
    impl_->k_total.setFromTriplets(t.begin(), t.end());

    // Floating parts: components without a fully fixed node.
    {
        std::vector<bool> anchored(node_count_, false);
        for (const auto n : fixed_nodes) anchored[find_root(parent, n)] = true;
        std::map<std::size_t, std::vector<std::size_t>> floating;
        for (std::size_t n = 0; n < node_count_; ++n) {
            const std::size_t r = find_root(parent, n);
            if (!anchored[r]) floating[r].push_back(n);
        }
        if (!floating.empty()) {
            std::ostringstream msg;
            msg << "singular system: " << floating.size() << " unconstrained component(s):";
            std::size_t shown = 0;
            for (const auto& [root, nodes] : floating) {
                if (shown++ == 8) {
                    msg << " ...";
                    break;
                }
                msg << " [" << nodes.size() << " nodes from #" << nodes.front() << "]";
            }
            throw SolveError(msg.str(), "assemble_and_solve");
        }
    }

    // Reduced coordinates: fixed DOFs dropped; in each rod group one lateral
    // DOF becomes minus the sum of the others (zero mean lateral motion).
    std::vector<Eigen::Index> reduced(static_cast<std::size_t>(ndof), -1);
    std::vector<bool> slave(static_cast<std::size_t>(ndof), false);
    std::vector<std::vector<Eigen::Index>> slave_masters;
    std::vector<Eigen::Index> slave_dofs;
    for (const auto& [key, group] : rod_groups) {
        for (const int d : {0, 2}) {
            std::vector<Eigen::Index> members;
            for (const auto n : group) {
                if (!fixed_dof[6 * n + d]) members.push_back(6 * n + d);
            }
            if (members.empty()) continue;
            if (members.size() == 1) {
                fixed_dof[members[0]] = true;
                continue;
            }
            slave[members[0]] = true;
            slave_dofs.push_back(members[0]);
            slave_masters.emplace_back(members.begin() + 1, members.end());
        }
    }
    for (Eigen::Index i = 0; i < ndof; ++i) {
        if (!fixed_dof[i] && !slave[i]) reduced[i] = impl_->n_free++;
    }
    Triplets tt;
    for (Eigen::Index i = 0; i < ndof; ++i) {
        if (reduced[i] >= 0) tt.emplace_back(i, reduced[i], 1.0);
    }
    for (std::size_t s = 0; s < slave_dofs.size(); ++s) {
        for (const auto m : slave_masters[s]) tt.emplace_back(slave_dofs[s], reduced[m], -1.0);
    }
    impl_->transform.resize(ndof, impl_->n_free);
    impl_->transform.setFromTriplets(tt.begin(), tt.end());
    impl_->k_free = impl_->transform.transpose() * impl_->k_total * impl_->transform;
    impl_->k_free = 0.5 * (impl_->k_free + Eigen::SparseMatrix<double>(impl_->k_free.transpose()));

    if (impl_->n_free == 0) return;
    impl_->ldlt.compute(impl_->k_free);
    bool ok = impl_->ldlt.info() == Eigen::Success;
    if (ok) {
        const auto& D = impl_->ldlt.vectorD();
        ok = D.minCoeff() > 0.0;
    }
    if (!ok) {
        impl_->direct = false;
        impl_->cg.setTolerance(1e-10);
        impl_->cg.setMaxIterations(static_cast<Eigen::Index>(20 * impl_->n_free));
        impl_->cg.compute(impl_->k_free);
        if (impl_->cg.info() != Eigen::Success) {
            throw SolveError("stiffness factorization failed", "assemble_and_solve");
        }
    }
}

DeformationState FrameModel::solve(const std::vector<NodalLoad>& loads) const {
    const auto ndof = static_cast<Eigen::Index>(6 * node_count_);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(ndof);
    DeformationState state;
    for (const auto& l : loads) {
        if (l.node >= node_count_) {
            throw ValidationError("load on node " + std::to_string(l.node) + " which does not exist");
        }
        if (!l.force.allFinite() || !l.moment.allFinite()) throw ValidationError("loads must be finite");
        f.segment<3>(6 * l.node) += l.force;
        f.segment<3>(6 * l.node + 3) += l.moment;
        state.applied_force += l.force;
    }
    const Eigen::VectorXd f_free = impl_->transform.transpose() * f;
    Eigen::VectorXd u_free = Eigen::VectorXd::Zero(impl_->n_free);
    if (impl_->n_free > 0 && f_free.norm() > 0.0) {
        if (impl_->direct) {
            u_free = impl_->ldlt.solve(f_free);
            // Iterative refinement while it still pays off.
            double last = std::numeric_limits<double>::infinity();
            for (int it = 0; it < 5; ++it) {
                const Eigen::VectorXd r = f_free - impl_->k_free * u_free;
                const double rel = r.norm() / f_free.norm();
                if (rel <= 1e-11 || rel >= 0.5 * last) break;
                last = rel;
                u_free += impl_->ldlt.solve(r);
            }
        } else {
            u_free = impl_->cg.solve(f_free);
            if (impl_->cg.info() != Eigen::Success) {
                throw SolveError("iterative solve did not converge", "assemble_and_solve");
            }
        }
        state.residual = (impl_->k_free * u_free - f_free).norm() / f_free.norm();
        if (!(state.residual < 1e-8)) {
            std::ostringstream msg;
            msg << "relative residual " << state.residual << " above 1e-8";
            throw SolveError(msg.str(), "assemble_and_solve");
        }
    }
    state.dofs = impl_->transform * u_free;
    // Supports and rod: whatever the stiffness does not balance.
    state.reactions = impl_->k_total * state.dofs - f;
    for (Eigen::Index i = 0; i < ndof; ++i) {
        if (std::abs(state.reactions[i]) < 1e-13 * (1.0 + std::abs(f[i]))) state.reactions[i] = 0.0;
    }
    for (std::size_t n = 0; n < node_count_; ++n) state.reaction_force += state.reactions.segment<3>(6 * n);
    return state;
}

DeformationState assemble_and_solve(const BeamLattice& lattice, const Material& material,
                                    const LoadCase& load_case, const ModelOptions& options) {
    const FrameModel model(lattice, material, load_case.fixed_nodes, options);
    return model.solve(load_case);
}

namespace {

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (xs.empty()) return 0.0;
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return ys[j - 1] + t * (ys[j] - ys[j - 1]);
}

}  // namespace

double ComplianceReport::twist_at(double y) const { return interp(stations, twist_deg, y); }
double ComplianceReport::camber_at(double y) const { return interp(stations, camber_mm, y); }

double ComplianceReport::outer_half_twist_fraction() const {
    if (stations.empty()) return 0.0;
    const double tip = tip_twist_deg();
    if (tip == 0.0) return 0.0;
    return (tip - twist_at(0.5 * stations.back())) / tip;
}

std::size_t ComplianceReport::max_camber_slope_interval() const {
    std::size_t best = 0;
    double best_slope = -1.0;
    for (std::size_t j = 0; j + 1 < stations.size(); ++j) {
        const double s = std::abs(camber_mm[j + 1] - camber_mm[j]) / (stations[j + 1] - stations[j]);
        if (s > best_slope) {
            best_slope = s;
            best = j;
        }
    }
    return best;
}

ComplianceReport compliance_report(const BeamLattice& lattice, const DeformationState& state) {
    if (state.node_count() < lattice.nodes.size()) {
        throw ValidationError("deformation state does not match the lattice", "compliance_report");
    }
    ComplianceReport rep;
    rep.reaction_force = state.reaction_force;
    rep.equilibrium_error = state.equilibrium_error();

    double tip_sum = 0.0;
    std::size_t tip_count = 0;
    for (std::size_t n = 0; n < lattice.nodes.size(); ++n) {
        if (lattice.nodes[n].has(kTagTipAnchor)) {
            tip_sum += state.displacement(n).y();
            ++tip_count;
        }
    }
    rep.extension_mm = tip_count ? tip_sum / tip_count : 0.0;
    if (!lattice.provenance) return rep;

    const CellMap map = build_cell_map(*lattice.provenance);
    const NodeLocator locator(lattice);
    const int iq = map.quarter_chord_index().value_or(0);
    for (int j = 0; j <= map.nv(); ++j) {
        const double y = map.span_stations()[j];
        std::vector<std::pair<Vec3, Vec3>> pts;  // (position, displacement)
        double te_dz = 0.0, qc_dz = 0.0;
        int te_n = 0, qc_n = 0;
        for (int k = 0; k <= map.nw(); ++k)
            for (int i = 0; i <= map.nu(); ++i) {
                const auto id = locator.find(map.vertex(i, j, k));
                if (!id) continue;
                const Vec3 u = state.displacement(*id);
                pts.emplace_back(lattice.nodes[*id].position, u);
                if (i == map.nu()) {
                    te_dz += u.z();
                    ++te_n;
                }
                if (i == iq) {
                    qc_dz += u.z();
                    ++qc_n;
                }
            }
        // Least-squares rotation about the span axis after removing the mean
        // section translation.
        Vec3 mean_r = Vec3::Zero(), mean_u = Vec3::Zero();
        for (const auto& [p, u] : pts) {
            mean_r += p;
            mean_u += u;
        }
        double num = 0.0, den = 0.0;
        if (!pts.empty()) {
            mean_r /= static_cast<double>(pts.size());
            mean_u /= static_cast<double>(pts.size());
            for (const auto& [p, u] : pts) {
                const double rx = p.x() - mean_r.x(), rz = p.z() - mean_r.z();
                const double ux = u.x() - mean_u.x(), uz = u.z() - mean_u.z();
                num += rz * ux - rx * uz;
                den += rx * rx + rz * rz;
            }
        }
        rep.stations.push_back(y);
        rep.twist_deg.push_back(den > 0.0 ? num / den * 180.0 / kPi : 0.0);
        rep.camber_mm.push_back(te_n && qc_n ? -(te_dz / te_n - qc_dz / qc_n) : 0.0);
    }
    return rep;
}

BeamLattice equal_volume_uniform(const BeamLattice& lattice, double surface_radius_factor) {
    if (!(surface_radius_factor > 0.0)) throw ValidationError("surface_radius_factor must be > 0");
    double weighted = 0.0;
    for (std::size_t e = 0; e < lattice.edges.size(); ++e) {
        const double s = lattice.is_surface_edge(e) ? surface_radius_factor : 1.0;
        weighted += kPi * s * s * lattice.edge_length(e);
    }
    BeamLattice out = lattice;
    if (weighted <= 0.0) return out;
    const double r = std::sqrt(lattice.total_volume() / weighted);
    for (std::size_t e = 0; e < out.edges.size(); ++e) {
        out.edges[e].radius = lattice.is_surface_edge(e) ? r * surface_radius_factor : r;
    }
    return out;
}

NullspaceReport count_near_zero_eigenvalues(const Eigen::SparseMatrix<double>& k, double rel_tol) {
    NullspaceReport rep;
    const Eigen::Index n = k.rows();
    if (n == 0) return rep;
    // Power iteration for the largest eigenvalue (K is positive semidefinite).
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 500; ++it) {
        Eigen::VectorXd w = k * v;
        const double next = v.dot(w);
        const double norm = w.norm();
        if (norm == 0.0) break;
        v = w / norm;
        if (it > 10 && std::abs(next - lambda) <= 1e-10 * std::abs(next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    rep.lambda_max = lambda;
    rep.threshold = rel_tol * lambda;
    Eigen::SparseMatrix<double> shifted = k;
    for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= rep.threshold;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
    if (ldlt.info() != Eigen::Success) {
        throw SolveError("factorization of the shifted stiffness failed", "nullspace");
    }
    const auto& D = ldlt.vectorD();
    for (Eigen::Index i = 0; i < D.size(); ++i) rep.near_zero += D[i] < 0.0;
    return rep;
}

}  // namespace morphwing
