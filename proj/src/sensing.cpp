#include "morphwing/sensing.hpp"

#include "morphwing/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace morphwing {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double turning_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 d1 = b - a, d2 = c - b;
    const double n1 = d1.norm(), n2 = d2.norm();
    if (n1 == 0.0 || n2 == 0.0) return 0.0;
    return std::atan2(d1.cross(d2).norm(), d1.dot(d2));
}

std::string fmt(double v) {
    if (v == 0.0) v = 0.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void AttenuationModel::validate() const {
    if (!(stretch_coefficient >= 0.0)) throw ValidationError("attenuation.stretch_coefficient: must be >= 0");
    if (!(bend_coefficient >= 0.0)) throw ValidationError("attenuation.bend_coefficient: must be >= 0");
    if (!(noise_sigma >= 0.0)) throw ValidationError("attenuation.noise_sigma: must be >= 0");
}

FiberDeformation fiber_deformation(const FiberPath& path, const std::vector<Vec3>& node_displacement) {
    for (const auto& att : path.attachment)
        for (const auto& nw : att) {
            if (nw.node >= node_displacement.size()) {
                throw ValidationError("fiber " + std::to_string(path.id) +
                                          " is attached to a node outside the deformation state",
                                      "fiber_deformation");
            }
        }
    const std::vector<Vec3> moved = displaced_waypoints(path, node_displacement);
    FiberDeformation d;
    double rest = 0.0, now = 0.0;
    for (std::size_t i = 1; i < moved.size(); ++i) {
        rest += (path.waypoints[i] - path.waypoints[i - 1]).norm();
        now += (moved[i] - moved[i - 1]).norm();
    }
    d.elongation_strain = rest > 0.0 ? (now - rest) / rest : 0.0;
    for (std::size_t i = 1; i + 1 < moved.size(); ++i) {
        const double before = turning_angle(path.waypoints[i - 1], path.waypoints[i], path.waypoints[i + 1]);
        const double after = turning_angle(moved[i - 1], moved[i], moved[i + 1]);
        d.curvature_increase += std::max(0.0, after - before);
    }
    return d;
}

FiberDeformation fiber_deformation(const FiberPath& path, const DeformationState& state) {
    return fiber_deformation(path, state.displacements());
}

double attenuation(const AttenuationModel& model, double strain, double curvature) {
    if (!(strain >= 0.0) || !(curvature >= 0.0)) {
        throw DomainError("strain and curvature must be non-negative", "attenuate");
    }
    return std::exp(-model.stretch_coefficient * strain - model.bend_coefficient * curvature);
}

double attenuate(const AttenuationModel& model, double strain, double curvature, std::mt19937_64& rng) {
    double a = attenuation(model, strain, curvature);
    if (model.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, model.noise_sigma);
        a += noise(rng);
    }
    return std::clamp(a, 0.0, 1.0);
}

double attenuate(const AttenuationModel& model, double strain, double curvature, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return attenuate(model, strain, curvature, rng);
}

double fiber_amplitude(const AttenuationModel& model, const FiberDeformation& d, std::mt19937_64* rng) {
    const double strain = std::max(0.0, d.elongation_strain);
    if (rng) return attenuate(model, strain, d.curvature_increase, *rng);
    return std::clamp(attenuation(model, strain, d.curvature_increase), 0.0, 1.0);
}

void MorphState::validate() const {
    if (!(twist_deg >= -90.0 && twist_deg <= 90.0)) throw ValidationError("twist must lie in [-90, 90] deg");
    if (!(camber_deg >= 0.0 && camber_deg <= 60.0)) throw ValidationError("camber must lie in [0, 60] deg");
    if (!(extension_mm >= -20.0 && extension_mm <= 30.0)) {
        throw ValidationError("extension must lie in [-20, 30] mm");
    }
}

MorphState MorphState::clamped() const {
    return {std::clamp(twist_deg, -90.0, 90.0), std::clamp(camber_deg, 0.0, 60.0),
            std::clamp(extension_mm, -20.0, 30.0)};
}

std::vector<double> MorphRange::values() const {
    std::vector<double> out;
    if (step <= 0.0) return {start};
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(start + step * static_cast<double>(i));
    return out;
}

void SweepGrid::validate() const {
    auto check = [](const MorphRange& r, const char* name, double lo, double hi) {
        const std::string p = std::string("sweep.") + name;
        if (!(r.step > 0.0)) throw ValidationError(p + ".step: must be > 0");
        if (!(r.stop >= r.start)) throw ValidationError(p + ": stop must be >= start");
        if (r.start < lo || r.stop > hi) {
            throw ValidationError(p + ": must stay within [" + fmt(lo) + ", " + fmt(hi) + "]");
        }
    };
    check(twist, "twist", -90.0, 90.0);
    check(camber, "camber", 0.0, 60.0);
    check(extension, "extension", -20.0, 30.0);
}

std::vector<MorphState> SweepGrid::states() const {
    std::vector<MorphState> out;
    for (const double e : extension.values())
        for (const double c : camber.values())
            for (const double t : twist.values()) out.push_back({t, c, e});
    if (return_sweep) {
        const std::size_t n = out.size();
        for (std::size_t i = n; i-- > 0;) out.push_back(out[i]);
    }
    return out;
}

std::vector<MorphState> SweepGrid::midpoint_states() const {
    auto mids = [](const MorphRange& r) {
        const auto v = r.values();
        std::vector<double> m;
        for (std::size_t i = 0; i + 1 < v.size(); ++i) m.push_back(0.5 * (v[i] + v[i + 1]));
        if (m.empty()) m = v;
        return m;
    };
    std::vector<MorphState> out;
    for (const double e : mids(extension))
        for (const double c : mids(camber))
            for (const double t : mids(twist)) out.push_back({t, c, e});
    return out;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    out << "twist_deg,camber_deg,extension_mm";
    for (std::size_t s = 0; s < data.sensor_count(); ++s) out << ",s" << s + 1;
    out << '\n';
    for (const auto& row : data.rows) {
        out << fmt(row.state.twist_deg) << ',' << fmt(row.state.camber_deg) << ','
            << fmt(row.state.extension_mm);
        for (const double a : row.amplitudes) out << ',' << fmt(a);
        out << '\n';
    }
}

Dataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("dataset is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 4 || header[0] != "twist_deg" || header[1] != "camber_deg" ||
        header[2] != "extension_mm") {
        throw ValidationError("dataset header must start with twist_deg,camber_deg,extension_mm,s1");
    }
    for (std::size_t s = 3; s < header.size(); ++s) {
        if (header[s] != "s" + std::to_string(s - 2)) {
            throw ValidationError("dataset header column " + std::to_string(s + 1) + " must be s" +
                                  std::to_string(s - 2));
        }
    }
    const std::size_t sensors = header.size() - 3;
    Dataset data;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> vals;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
                throw ValidationError("dataset row " + std::to_string(row_no) + ": '" + cell +
                                      "' is not a number");
            }
            vals.push_back(v);
        }
        if (vals.size() != sensors + 3) {
            throw ValidationError("dataset row " + std::to_string(row_no) + ": expected " +
                                  std::to_string(sensors + 3) + " columns, found " +
                                  std::to_string(vals.size()));
        }
        DatasetRow row;
        row.state = {vals[0], vals[1], vals[2]};
        row.amplitudes.assign(vals.begin() + 3, vals.end());
        for (const double a : row.amplitudes) {
            if (a < 0.0 || a > 1.0) {
                throw ValidationError("dataset row " + std::to_string(row_no) +
                                      ": amplitude outside [0, 1]");
            }
        }
        data.rows.push_back(std::move(row));
    }
    return data;
}

void save_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_dataset_csv(out, data);
    if (!out) throw IoError("write failed: " + path);
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_dataset_csv(in);
}

// ---- rig ----

SensingRig::~SensingRig() = default;

SensingRig::SensingRig(const BeamLattice& lattice, std::vector<FiberPath> fibers,
                       const Material& material, const ModelOptions& model_options)
    : lattice_(&lattice), fibers_(std::move(fibers)) {
    if (!lattice.provenance) throw ValidationError("sensing needs the lattice cell map", "sense");
    unit_cases_ = {morph_load_case(MorphMode::Twist, 1.0, lattice, model_options),
                   morph_load_case(MorphMode::Camber, 1.0, lattice, model_options),
                   morph_load_case(MorphMode::Extension, 1.0, lattice, model_options)};
    model_ = std::make_unique<FrameModel>(lattice, material, unit_cases_[0].fixed_nodes, model_options);

    const CellMap map = build_cell_map(*lattice.provenance);
    const auto& y = map.span_stations();
    const double target = model_options.camber_station * map.planform().span;
    for (std::size_t s = 1; s < y.size(); ++s) {
        if (std::abs(y[s] - target) < std::abs(y[camber_station_] - target)) camber_station_ = s;
    }
    if (camber_station_ == 0 && y.size() > 1) camber_station_ = 1;
    const auto& u = map.chord_fractions();
    const int iq = map.quarter_chord_index().value_or(0);
    camber_lever_ = (u.back() - u[iq]) * chord_at_span(map.planform(), y[camber_station_]);

    for (int c = 0; c < 3; ++c) {
        const MorphState m = metrics(model_->solve(unit_cases_[c]));
        response_.col(c) = Eigen::Vector3d(m.twist_deg, m.camber_deg, m.extension_mm);
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(response_);
    if (!lu.isInvertible()) throw SolveError("morph response matrix is singular", "sense");
    inverse_ = lu.inverse();
}

Eigen::Vector3d SensingRig::loads_for(const MorphState& target) const {
    return inverse_ * Eigen::Vector3d(target.twist_deg, target.camber_deg, target.extension_mm);
}

MorphState SensingRig::metrics(const DeformationState& state) const {
    const ComplianceReport rep = compliance_report(*lattice_, state);
    MorphState m;
    m.twist_deg = rep.tip_twist_deg();
    m.camber_deg = rep.camber_mm[camber_station_] / camber_lever_ * kRadToDeg;
    m.extension_mm = rep.extension_mm;
    return m;
}

DeformationState SensingRig::deform(const MorphState& target) const {
    const Eigen::Vector3d l = loads_for(target);
    std::vector<NodalLoad> loads;
    for (int c = 0; c < 3; ++c) {
        for (auto nl : unit_cases_[c].loads) {
            nl.force *= l[c];
            nl.moment *= l[c];
            loads.push_back(nl);
        }
    }
    return model_->solve(loads);
}

std::vector<FiberDeformation> SensingRig::read_fibers(const DeformationState& state) const {
    const auto disp = state.displacements();
    std::vector<FiberDeformation> out;
    for (const auto& f : fibers_) out.push_back(fiber_deformation(f, disp));
    return out;
}

Dataset SensingRig::synthesize(const std::vector<MorphState>& states, const SensingOptions& options,
                               std::uint64_t seed) const {
    options.attenuation.validate();
    std::mt19937_64 rng(seed);
    Dataset data;
    for (const auto& s : states) {
        s.validate();
        DatasetRow row;
        row.state = s;
        const auto reading = read_fibers(deform(s));
        for (const auto& d : reading) {
            row.amplitudes.push_back(fiber_amplitude(options.attenuation, d, &rng));
            if (std::abs(d.elongation_strain) > options.linear_strain_cap) row.flagged = true;
        }
        data.rows.push_back(std::move(row));
    }
    return data;
}

Dataset synthesize_sweep(const SensingRig& rig, const SweepGrid& grid, const SensingOptions& options,
                         std::uint64_t seed) {
    grid.validate();
    return rig.synthesize(grid.states(), options, seed);
}

SensitivityReport sensitivity(const SensingRig& rig, const AttenuationModel& model, double range_deg) {
    if (!(range_deg > 0.0)) throw ValidationError("sensitivity range must be > 0");
    auto amplitudes = [&](const MorphState& s) {
        std::vector<double> a;
        for (const auto& d : rig.read_fibers(rig.deform(s))) a.push_back(fiber_amplitude(model, d, nullptr));
        return a;
    };
    const auto base = amplitudes({0.0, 0.0, 0.0});
    const auto cam = amplitudes({0.0, range_deg, 0.0});
    const auto tp = amplitudes({range_deg, 0.0, 0.0});
    const auto tn = amplitudes({-range_deg, 0.0, 0.0});
    SensitivityReport rep;
    for (std::size_t s = 0; s < base.size(); ++s) {
        rep.camber_slope.push_back(std::abs(cam[s] - base[s]) / range_deg);
        rep.twist_slope.push_back(std::max(std::abs(tp[s] - base[s]), std::abs(tn[s] - base[s])) / range_deg);
        const double ratio = rep.twist_slope[s] > 0.0
                                 ? rep.camber_slope[s] / rep.twist_slope[s]
                                 : (rep.camber_slope[s] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio > rep.best_ratio) {
            rep.best_ratio = ratio;
            rep.best_sensor = s;
        }
    }
    return rep;
}

}  // namespace morphwing
