#include "morphwing/error.hpp"
#include "morphwing/sensing.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace morphwing {

namespace {

constexpr const char* kMagic = "morphwing-estimator";
constexpr int kVersion = 1;
constexpr double kMinAmplitude = 1e-6;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* transform_name(FeatureTransform t) {
    return t == FeatureTransform::Amplitude ? "amplitude" : "log_attenuation";
}

void check_spec(const FeatureSpec& spec) {
    if (spec.degree < 1 || spec.degree > 2) throw ValidationError("estimator.degree: must be 1 or 2");
}

}  // namespace

std::vector<double> polynomial_features(const FeatureSpec& spec, const std::vector<double>& amplitudes) {
    check_spec(spec);
    std::vector<double> x;
    for (const double a : amplitudes) {
        x.push_back(spec.transform == FeatureTransform::Amplitude ? a
                                                                 : -std::log(std::max(a, kMinAmplitude)));
    }
    std::vector<double> f = x;
    if (spec.degree >= 2) {
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = i; j < x.size(); ++j) f.push_back(x[i] * x[j]);
    }
    return f;
}

MorphState EstimatorModel::predict_raw(const std::vector<double>& amplitudes) const {
    if (amplitudes.size() != sensor_count) {
        throw ValidationError("reading has " + std::to_string(amplitudes.size()) + " amplitudes, model expects " +
                              std::to_string(sensor_count));
    }
    const auto f = polynomial_features(features, amplitudes);
    Eigen::RowVectorXd z(static_cast<Eigen::Index>(f.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = (f[i] - feature_mean[i]) / feature_scale[i];
    const Eigen::RowVector3d y = z * weights + target_mean.transpose();
    return {y[0], y[1], y[2]};
}

EstimatorModel fit_estimator(const Dataset& data, const FeatureSpec& features, double ridge_lambda) {
    check_spec(features);
    if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) {
        throw ValidationError("estimator.ridge_lambda: must be >= 0");
    }
    if (data.rows.empty()) throw ValidationError("dataset has no rows", "fit");
    EstimatorModel m;
    m.features = features;
    m.ridge_lambda = ridge_lambda;
    m.sensor_count = data.sensor_count();
    m.training_rows = data.rows.size();

    const auto n = static_cast<Eigen::Index>(data.rows.size());
    const auto p = static_cast<Eigen::Index>(polynomial_features(features, data.rows[0].amplitudes).size());
    if (n < p + 1) {
        throw ValidationError("dataset has " + std::to_string(n) + " rows but the model needs at least " +
                                  std::to_string(p + 1),
                              "fit");
    }
    Eigen::MatrixXd X(n, p);
    Eigen::MatrixXd Y(n, 3);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = data.rows[static_cast<std::size_t>(r)];
        if (row.amplitudes.size() != m.sensor_count) {
            throw ValidationError("dataset row " + std::to_string(r + 1) + ": sensor count differs", "fit");
        }
        const auto f = polynomial_features(features, row.amplitudes);
        for (Eigen::Index c = 0; c < p; ++c) X(r, c) = f[c];
        Y.row(r) << row.state.twist_deg, row.state.camber_deg, row.state.extension_mm;
    }
    m.feature_mean = X.colwise().mean().transpose();
    m.feature_scale = Eigen::VectorXd::Ones(p);
    X.rowwise() -= m.feature_mean.transpose();
    for (Eigen::Index c = 0; c < p; ++c) {
        const double s = std::sqrt(X.col(c).squaredNorm() / static_cast<double>(n));
        if (s > 0.0) {
            m.feature_scale[c] = s;
            X.col(c) /= s;
        }
    }
    m.target_mean = Y.colwise().mean().transpose();
    Y.rowwise() -= m.target_mean.transpose();

    // Ridge as an augmented least-squares problem (intercept unpenalized).
    Eigen::MatrixXd A(n + p, p);
    A.topRows(n) = X;
    A.bottomRows(p) = std::sqrt(ridge_lambda * static_cast<double>(n)) * Eigen::MatrixXd::Identity(p, p);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n + p, 3);
    B.topRows(n) = Y;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-12);
    if (qr.rank() < p) {
        throw ValidationError("features are rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                                  std::to_string(p) + "); use a ridge lambda > 0",
                              "fit");
    }
    m.weights = qr.solve(B);
    return m;
}

MorphState estimate(const EstimatorModel& model, const std::vector<double>& amplitudes) {
    for (const double a : amplitudes) {
        if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("amplitude " + num(a) + " outside [0, 1]", "estimate");
    }
    return model.predict_raw(amplitudes).clamped();
}

EstimateError rmse(const EstimatorModel& model, const Dataset& data) {
    EstimateError e;
    if (data.rows.empty()) return e;
    for (const auto& row : data.rows) {
        const MorphState p = estimate(model, row.amplitudes);
        e.twist_deg += std::pow(p.twist_deg - row.state.twist_deg, 2);
        e.camber_deg += std::pow(p.camber_deg - row.state.camber_deg, 2);
        e.extension_mm += std::pow(p.extension_mm - row.state.extension_mm, 2);
    }
    const double n = static_cast<double>(data.rows.size());
    return {std::sqrt(e.twist_deg / n), std::sqrt(e.camber_deg / n), std::sqrt(e.extension_mm / n)};
}

void write_estimator(std::ostream& out, const EstimatorModel& m) {
    out << kMagic << ' ' << kVersion << '\n';
    out << "degree " << m.features.degree << '\n';
    out << "transform " << transform_name(m.features.transform) << '\n';
    out << "ridge_lambda " << num(m.ridge_lambda) << '\n';
    out << "sensors " << m.sensor_count << '\n';
    out << "training_rows " << m.training_rows << '\n';
    out << "features " << m.weights.rows() << '\n';
    out << "target_mean " << num(m.target_mean[0]) << ' ' << num(m.target_mean[1]) << ' '
        << num(m.target_mean[2]) << '\n';
    for (Eigen::Index i = 0; i < m.weights.rows(); ++i) {
        out << "w " << num(m.feature_mean[i]) << ' ' << num(m.feature_scale[i]) << ' ' << num(m.weights(i, 0))
            << ' ' << num(m.weights(i, 1)) << ' ' << num(m.weights(i, 2)) << '\n';
    }
}

EstimatorModel read_estimator(std::istream& in) {
    EstimatorModel m;
    std::string line, key;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) {
        throw IoError("model line " + std::to_string(line_no) + ": " + what);
    };
    auto next = [&]() -> std::istringstream {
        if (!std::getline(in, line)) fail("unexpected end of file");
        ++line_no;
        return std::istringstream(line);
    };
    {
        auto ls = next();
        int version = 0;
        if (!(ls >> key >> version) || key != kMagic) fail("missing header");
        if (version != kVersion) fail("unsupported version " + std::to_string(version));
    }
    std::string transform;
    Eigen::Index p = 0;
    auto field = [&](const char* name, auto& value) {
        auto ls = next();
        if (!(ls >> key >> value) || key != name) fail(std::string("expected ") + name);
    };
    field("degree", m.features.degree);
    field("transform", transform);
    if (transform == "amplitude") m.features.transform = FeatureTransform::Amplitude;
    else if (transform == "log_attenuation") m.features.transform = FeatureTransform::LogAttenuation;
    else fail("unknown transform '" + transform + "'");
    field("ridge_lambda", m.ridge_lambda);
    field("sensors", m.sensor_count);
    field("training_rows", m.training_rows);
    field("features", p);
    {
        auto ls = next();
        if (!(ls >> key >> m.target_mean[0] >> m.target_mean[1] >> m.target_mean[2]) || key != "target_mean") {
            fail("expected target_mean");
        }
    }
    m.feature_mean.resize(p);
    m.feature_scale.resize(p);
    m.weights.resize(p, 3);
    for (Eigen::Index i = 0; i < p; ++i) {
        auto ls = next();
        if (!(ls >> key >> m.feature_mean[i] >> m.feature_scale[i] >> m.weights(i, 0) >> m.weights(i, 1) >>
              m.weights(i, 2)) ||
            key != "w") {
            fail("malformed weight row");
        }
    }
    try {
        check_spec(m.features);
    } catch (const Error& e) {
        fail(e.what());
    }
    const auto expected = polynomial_features(m.features, std::vector<double>(m.sensor_count, 1.0)).size();
    if (static_cast<Eigen::Index>(expected) != p) fail("feature count does not match degree and sensors");
    return m;
}

void save_estimator(const std::string& path, const EstimatorModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_estimator(out, model);
    if (!out) throw IoError("write failed: " + path);
}

EstimatorModel load_estimator(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_estimator(in);
}

}  // namespace morphwing
