#include "morphwing/config.hpp"

#include "morphwing/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace morphwing {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

void fail(const std::string& path, const std::string& what) {
    throw ValidationError(path + ": " + what, "config");
}

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
public:
    Section(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail(where(), "expected an object");
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const Json* find(const std::string& key) {
        used_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& v) {
        if (const Json* j = find(key)) {
            if (!j->is_number()) fail(key_path(key), "expected a number");
            v = j->get<double>();
        }
    }

    template <typename Int>
    void integer(const std::string& key, Int& v) {
        if (const Json* j = find(key)) {
            if (!j->is_number_integer()) fail(key_path(key), "expected an integer");
            if (j->is_number_unsigned()) {
                v = static_cast<Int>(j->get<std::uint64_t>());
            } else {
                const auto i = j->get<std::int64_t>();
                if (std::is_unsigned_v<Int> && i < 0) fail(key_path(key), "must be >= 0");
                v = static_cast<Int>(i);
            }
        }
    }

    void boolean(const std::string& key, bool& v) {
        if (const Json* j = find(key)) {
            if (!j->is_boolean()) fail(key_path(key), "expected true or false");
            v = j->get<bool>();
        }
    }

    void string(const std::string& key, std::string& v) {
        if (const Json* j = find(key)) {
            if (!j->is_string()) fail(key_path(key), "expected a string");
            v = j->get<std::string>();
        }
    }

    /// Runs `body` on a nested object if present.
    template <typename F>
    void object(const std::string& key, F&& body) {
        if (const Json* j = find(key)) {
            Section s(*j, key_path(key));
            body(s);
            s.finish();
        }
    }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!used_.count(it.key())) fail(key_path(it.key()), "unknown key");
        }
    }

private:
    std::string where() const { return path_.empty() ? "(root)" : path_; }

    const Json& node_;
    std::string path_;
    std::set<std::string> used_;
};

void read_range(Section& s, const std::string& key, MorphRange& r) {
    s.object(key, [&](Section& o) {
        o.number("start", r.start);
        o.number("stop", r.stop);
        o.number("step", r.step);
    });
}

FiberLeg read_leg(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of [span, u, w] knots");
    FiberLeg leg;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Json& k = j[i];
        const std::string kp = path + "[" + std::to_string(i) + "]";
        if (!k.is_array() || k.size() != 3 || !k[0].is_number() || !k[1].is_number() || !k[2].is_number()) {
            fail(kp, "expected [span, u, w]");
        }
        leg.knots.push_back({k[0].get<double>(), k[1].get<double>(), k[2].get<double>()});
    }
    return leg;
}

OrderedJson leg_json(const FiberLeg& leg) {
    OrderedJson a = OrderedJson::array();
    for (const auto& k : leg.knots) a.push_back({k.span, k.u, k.w});
    return a;
}

const char* transform_key(FeatureTransform t) {
    return t == FeatureTransform::Amplitude ? "amplitude" : "log_attenuation";
}

bool finite_all(std::initializer_list<double> vs) {
    for (const double v : vs) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace

void PipelineConfig::validate() const {
    if (schema_version != kConfigSchemaVersion) {
        fail("schema_version", "unsupported version " + std::to_string(schema_version) + " (expected " +
                                   std::to_string(kConfigSchemaVersion) + ")");
    }
    try {
        grid.validate();
        grading.validate();
        material.validate();
        model.validate();
        sweep.validate();
        sensing.attenuation.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(e.what(), "config");
    }
    if (segments < 1) fail("lattice.segments", "must be >= 1");
    if (segments > grid.dims[1]) fail("lattice.segments", "must not exceed grid.n_v");
    if (!(std::isfinite(rod.radius) && rod.radius > 0.0)) fail("rod.radius", "must be > 0");
    if (!(rod.chord_fraction > 0.0 && rod.chord_fraction < 1.0)) fail("rod.chord_fraction", "must be in (0, 1)");
    if (fibers.count > 64) fail("fibers.count", "must be <= 64");
    if (!(std::isfinite(fibers.routing.fiber_radius) && fibers.routing.fiber_radius >= 0.0)) {
        fail("fibers.radius", "must be >= 0");
    }
    if (!(std::isfinite(fibers.routing.tip_overhang) && fibers.routing.tip_overhang > 0.0)) {
        fail("fibers.tip_overhang", "must be > 0");
    }
    for (std::size_t i = 0; i < fibers.routing.stations.size(); ++i) {
        const auto& st = fibers.routing.stations[i];
        for (const auto* leg : {&st.out, &st.back}) {
            const std::string p = "fibers.stations[" + std::to_string(i) + "]." + (leg == &st.out ? "out" : "back");
            if (leg->knots.empty()) fail(p, "needs at least one knot");
            for (std::size_t k = 0; k < leg->knots.size(); ++k) {
                const auto& kn = leg->knots[k];
                const std::string kp = p + "[" + std::to_string(k) + "]";
                if (!finite_all({kn.span, kn.u, kn.w})) fail(kp, "must be finite");
                if (!(kn.u > 0.0 && kn.u < grid.dims[0])) fail(kp, "u must lie inside (0, n_u)");
                if (!(kn.w > 0.0 && kn.w < grid.dims[2])) fail(kp, "w must lie inside (0, n_w)");
                if (k > 0 && kn.span < leg->knots[k - 1].span) fail(kp, "span indices must not decrease");
            }
        }
    }
    if (!fibers.routing.stations.empty() && fibers.routing.stations.size() < fibers.count) {
        fail("fibers.stations", "fewer stations than fibers.count");
    }
    if (!(std::isfinite(mesh.voxel) && mesh.voxel > 0.0)) fail("mesh.voxel", "must be > 0");
    if (!(std::isfinite(mesh.blend) && mesh.blend >= 0.0)) fail("mesh.blend", "must be >= 0");
    if (!std::isfinite(loads.twist_torque)) fail("loads.twist_torque", "must be finite");
    if (!std::isfinite(loads.camber_force)) fail("loads.camber_force", "must be finite");
    if (!std::isfinite(loads.extension_force)) fail("loads.extension_force", "must be finite");
    if (!(std::isfinite(sensing.linear_strain_cap) && sensing.linear_strain_cap > 0.0)) {
        fail("sensing.linear_strain_cap", "must be > 0");
    }
    if (estimator.features.degree < 1 || estimator.features.degree > 2) fail("estimator.degree", "must be 1 or 2");
    if (!(std::isfinite(estimator.ridge_lambda) && estimator.ridge_lambda >= 0.0)) {
        fail("estimator.ridge_lambda", "must be >= 0");
    }
    if (output_dir.empty()) fail("output_dir", "must not be empty");
}

PipelineConfig parse_config(const std::string& json_text) {
    Json root;
    try {
        root = Json::parse(json_text);
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what(), "config");
    }
    PipelineConfig c;
    Section s(root, "");
    if (!s.find("schema_version")) fail("schema_version", "required");
    s.integer("schema_version", c.schema_version);
    if (c.schema_version != kConfigSchemaVersion) c.validate();

    s.integer("seed", c.seed);
    s.string("output_dir", c.output_dir);
    s.object("planform", [&](Section& o) {
        auto& p = c.grid.planform;
        o.number("airfoil_thickness_ratio", p.airfoil_thickness_ratio);
        o.number("span", p.span);
        o.number("root_chord", p.root_chord);
        o.number("taper_ratio", p.taper_ratio);
        o.number("sweep_deg", p.sweep_deg);
    });
    s.object("grid", [&](Section& o) {
        o.integer("n_u", c.grid.dims[0]);
        o.integer("n_v", c.grid.dims[1]);
        o.integer("n_w", c.grid.dims[2]);
        o.number("chord_start", c.grid.chord_start);
        o.number("chord_end", c.grid.chord_end);
        o.boolean("align_quarter_chord", c.grid.align_quarter_chord);
    });
    s.object("warp", [&](Section& o) {
        o.number("root_scale", c.grid.warp.root_scale);
        o.number("tip_scale", c.grid.warp.tip_scale);
    });
    s.object("grading", [&](Section& o) {
        o.number("root_radius", c.grading.root_radius);
        o.number("tip_radius", c.grading.tip_radius);
        o.number("surface_radius_factor", c.grading.surface_radius_factor);
    });
    s.object("lattice", [&](Section& o) {
        o.boolean("surface_layer", c.surface_layer);
        o.integer("segments", c.segments);
    });
    s.object("rod", [&](Section& o) {
        o.boolean("enabled", c.rod.enabled);
        o.number("radius", c.rod.radius);
        o.number("chord_fraction", c.rod.chord_fraction);
    });
    s.object("fibers", [&](Section& o) {
        o.integer("count", c.fibers.count);
        o.number("radius", c.fibers.routing.fiber_radius);
        o.number("tip_overhang", c.fibers.routing.tip_overhang);
        if (const Json* st = o.find("stations")) {
            const std::string p = o.key_path("stations");
            if (!st->is_array()) fail(p, "expected an array");
            for (std::size_t i = 0; i < st->size(); ++i) {
                Section entry((*st)[i], p + "[" + std::to_string(i) + "]");
                FiberStation station;
                const Json* out = entry.find("out");
                const Json* back = entry.find("back");
                if (!out || !back) fail(entry.key_path(out ? "back" : "out"), "required");
                station.out = read_leg(*out, entry.key_path("out"));
                station.back = read_leg(*back, entry.key_path("back"));
                entry.finish();
                c.fibers.routing.stations.push_back(std::move(station));
            }
        }
    });
    s.object("mesh", [&](Section& o) {
        o.number("voxel", c.mesh.voxel);
        o.number("blend", c.mesh.blend);
    });
    s.object("material", [&](Section& o) {
        o.number("elastic_modulus", c.material.elastic_modulus);
        o.number("poisson_ratio", c.material.poisson_ratio);
    });
    s.object("model", [&](Section& o) {
        o.boolean("rod_coupling", c.model.rod_coupling);
        o.boolean("tip_cap", c.model.tip_cap);
        o.number("cap_stiffness_factor", c.model.cap_stiffness_factor);
        o.number("cap_radius", c.model.cap_radius);
    });
    s.object("loads", [&](Section& o) {
        o.number("twist_torque", c.loads.twist_torque);
        o.number("camber_force", c.loads.camber_force);
        o.number("extension_force", c.loads.extension_force);
        o.number("camber_station", c.model.camber_station);
    });
    s.object("sweep", [&](Section& o) {
        read_range(o, "twist", c.sweep.twist);
        read_range(o, "camber", c.sweep.camber);
        read_range(o, "extension", c.sweep.extension);
        o.boolean("return_sweep", c.sweep.return_sweep);
    });
    s.object("attenuation", [&](Section& o) {
        auto& a = c.sensing.attenuation;
        o.number("stretch_coefficient", a.stretch_coefficient);
        o.number("bend_coefficient", a.bend_coefficient);
        o.number("noise_sigma", a.noise_sigma);
    });
    s.object("sensing", [&](Section& o) { o.number("linear_strain_cap", c.sensing.linear_strain_cap); });
    s.object("estimator", [&](Section& o) {
        o.integer("degree", c.estimator.features.degree);
        std::string t = transform_key(c.estimator.features.transform);
        o.string("transform", t);
        if (t == "amplitude") c.estimator.features.transform = FeatureTransform::Amplitude;
        else if (t == "log_attenuation") c.estimator.features.transform = FeatureTransform::LogAttenuation;
        else fail(o.key_path("transform"), "must be 'amplitude' or 'log_attenuation'");
        o.number("ridge_lambda", c.estimator.ridge_lambda);
    });
    s.finish();
    c.validate();
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string dump_config(const PipelineConfig& c) {
    OrderedJson j;
    j["schema_version"] = c.schema_version;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    const auto& p = c.grid.planform;
    j["planform"] = {{"airfoil_thickness_ratio", p.airfoil_thickness_ratio},
                     {"span", p.span},
                     {"root_chord", p.root_chord},
                     {"taper_ratio", p.taper_ratio},
                     {"sweep_deg", p.sweep_deg}};
    j["grid"] = {{"n_u", c.grid.dims[0]},
                 {"n_v", c.grid.dims[1]},
                 {"n_w", c.grid.dims[2]},
                 {"chord_start", c.grid.chord_start},
                 {"chord_end", c.grid.chord_end},
                 {"align_quarter_chord", c.grid.align_quarter_chord}};
    j["warp"] = {{"root_scale", c.grid.warp.root_scale}, {"tip_scale", c.grid.warp.tip_scale}};
    j["grading"] = {{"root_radius", c.grading.root_radius},
                    {"tip_radius", c.grading.tip_radius},
                    {"surface_radius_factor", c.grading.surface_radius_factor}};
    j["lattice"] = {{"surface_layer", c.surface_layer}, {"segments", c.segments}};
    j["rod"] = {{"enabled", c.rod.enabled}, {"radius", c.rod.radius}, {"chord_fraction", c.rod.chord_fraction}};
    OrderedJson fibers = {{"count", c.fibers.count},
                          {"radius", c.fibers.routing.fiber_radius},
                          {"tip_overhang", c.fibers.routing.tip_overhang}};
    if (!c.fibers.routing.stations.empty()) {
        OrderedJson st = OrderedJson::array();
        for (const auto& s : c.fibers.routing.stations) {
            st.push_back({{"out", leg_json(s.out)}, {"back", leg_json(s.back)}});
        }
        fibers["stations"] = st;
    }
    j["fibers"] = fibers;
    j["mesh"] = {{"voxel", c.mesh.voxel}, {"blend", c.mesh.blend}};
    j["material"] = {{"elastic_modulus", c.material.elastic_modulus}, {"poisson_ratio", c.material.poisson_ratio}};
    j["model"] = {{"rod_coupling", c.model.rod_coupling},
                  {"tip_cap", c.model.tip_cap},
                  {"cap_stiffness_factor", c.model.cap_stiffness_factor},
                  {"cap_radius", c.model.cap_radius}};
    j["loads"] = {{"twist_torque", c.loads.twist_torque},
                  {"camber_force", c.loads.camber_force},
                  {"extension_force", c.loads.extension_force},
                  {"camber_station", c.model.camber_station}};
    auto range = [](const MorphRange& r) {
        return OrderedJson{{"start", r.start}, {"stop", r.stop}, {"step", r.step}};
    };
    j["sweep"] = {{"twist", range(c.sweep.twist)},
                  {"camber", range(c.sweep.camber)},
                  {"extension", range(c.sweep.extension)},
                  {"return_sweep", c.sweep.return_sweep}};
    const auto& a = c.sensing.attenuation;
    j["attenuation"] = {{"stretch_coefficient", a.stretch_coefficient},
                        {"bend_coefficient", a.bend_coefficient},
                        {"noise_sigma", a.noise_sigma}};
    j["sensing"] = {{"linear_strain_cap", c.sensing.linear_strain_cap}};
    j["estimator"] = {{"degree", c.estimator.features.degree},
                      {"transform", transform_key(c.estimator.features.transform)},
                      {"ridge_lambda", c.estimator.ridge_lambda}};
    return j.dump(2) + "\n";
}

}  // namespace morphwing
