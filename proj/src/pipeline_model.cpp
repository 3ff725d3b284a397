#include "mealmeter/pipeline_model.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

namespace mealmeter {

using nlohmann::json;

// ---- split -----------------------------------------------------------------

SplitIndices split_indices(int n_rows, double ratio, uint64_t seed) {
    if (n_rows < 5)
        throw data_error("split: need at least 5 rows, got " + std::to_string(n_rows));
    if (!(ratio > 0.0) || !(ratio < 1.0))
        throw config_error("split ratio must be in (0, 1)");

    std::vector<int> order(static_cast<std::size_t>(n_rows));
    for (int i = 0; i < n_rows; ++i)
        order[static_cast<std::size_t>(i)] = i;
    Rng rng(seed);
    for (int i = n_rows - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.bounded(static_cast<uint64_t>(i) + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    // epsilon guards against 0.8*15 rounding up past the intended ceil
    const int n_train = static_cast<int>(std::ceil(ratio * n_rows - 1e-9));
    SplitIndices s;
    s.train.assign(order.begin(), order.begin() + n_train);
    s.test.assign(order.begin() + n_train, order.end());
    return s;
}

std::pair<FeatureMatrix, FeatureMatrix> split_train_test(const FeatureMatrix& rows, double ratio,
                                                         uint64_t seed) {
    const SplitIndices idx = split_indices(static_cast<int>(rows.rows()), ratio, seed);
    return {rows.take_rows(idx.train), rows.take_rows(idx.test)};
}

// ---- standardizer -------------------------------------------------------------

Standardizer fit_standardizer(const Eigen::MatrixXd& train) {
    if (train.rows() == 0)
        throw data_error("standardizer: empty training matrix");
    const auto n = static_cast<double>(train.rows());
    Standardizer s;
    s.mu = train.colwise().mean();
    s.sigma.resize(train.cols());
    for (Eigen::Index c = 0; c < train.cols(); ++c) {
        // identical values have sigma 0 by definition; detect that exactly,
        // since the rounded mean of identical values can differ from them by
        // an ulp and leave a spurious sigma of ~1e-20
        if (train.col(c).maxCoeff() == train.col(c).minCoeff()) {
            s.sigma(c) = 0.0;
            s.constant_columns.push_back(static_cast<int>(c));
            continue;
        }
        const double var = (train.col(c).array() - s.mu(c)).square().sum() / n;
        s.sigma(c) = std::sqrt(var);
    }
    return s;
}

Eigen::MatrixXd apply_standardizer(const Standardizer& s, const Eigen::MatrixXd& rows) {
    if (rows.cols() != s.mu.size())
        throw data_error("standardizer: column count mismatch");
    Eigen::MatrixXd out(rows.rows(), rows.cols());
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
        if (s.sigma(c) == 0.0)
            out.col(c).setZero();
        else
            out.col(c) = (rows.col(c).array() - s.mu(c)) / s.sigma(c);
    }
    return out;
}

// ---- PCA ----------------------------------------------------------------------

PcaLoadings fit_pca(const Eigen::MatrixXd& x_scaled, int components) {
    if (components < 1)
        throw config_error("PCA components must be >= 1");
    if (x_scaled.rows() < components)
        throw data_error("PCA: fewer rows (" + std::to_string(x_scaled.rows()) + ") than components (" +
                         std::to_string(components) + ")");
    if (std::min(x_scaled.rows(), x_scaled.cols()) < components)
        throw data_error("PCA: matrix rank bound below requested components");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(x_scaled, Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw numeric_error("PCA: singular value decomposition failed");

    PcaLoadings p;
    p.W = svd.matrixV().leftCols(components);
    p.explained_variance.resize(components);
    const double denom = std::max<double>(1.0, static_cast<double>(x_scaled.rows() - 1));
    for (int k = 0; k < components; ++k) {
        const double sv = svd.singularValues()(k);
        p.explained_variance(k) = sv * sv / denom;
    }

    // sign convention: largest-|entry| of each loading vector is positive
    for (Eigen::Index k = 0; k < p.W.cols(); ++k) {
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < p.W.rows(); ++i) {
            const double a = std::abs(p.W(i, k));
            if (a > best) {
                best = a;
                imax = i;
            }
        }
        if (p.W(imax, k) < 0.0)
            p.W.col(k) = -p.W.col(k);
    }
    return p;
}

Eigen::MatrixXd pca_transform(const PcaLoadings& pca, const Eigen::MatrixXd& x_scaled) {
    if (x_scaled.cols() != pca.W.rows())
        throw data_error("PCA transform: column count mismatch");
    return x_scaled * pca.W;
}

// ---- regression -------------------------------------------------------------------

LinearModel fit_regression(const Eigen::MatrixXd& scores, const Eigen::VectorXd& y) {
    const Eigen::Index n = scores.rows();
    const Eigen::Index k = scores.cols();
    if (y.size() != n)
        throw data_error("regression: row count mismatch");
    if (n <= k + 1)
        throw data_error("regression: need more than " + std::to_string(k + 1) + " rows, got " +
                         std::to_string(n));

    Eigen::MatrixXd design(n, k + 1);
    design.col(0).setOnes();
    design.rightCols(k) = scores;

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    const Eigen::VectorXd beta = cod.solve(y);
    for (Eigen::Index i = 0; i < beta.size(); ++i)
        if (!std::isfinite(beta(i)))
            throw numeric_error("regression: non-finite coefficient");

    LinearModel m;
    m.intercept = beta(0);
    m.coef = beta.tail(k);
    return m;
}

// ---- fitted pipeline -----------------------------------------------------------------

FittedPipeline fit_pipeline(const FeatureMatrix& train, int components, uint64_t split_seed,
                            double split_ratio, const std::string& scope, const std::string& scope_key) {
    FittedPipeline p;
    p.schema.signals = train.signals;
    p.schema.columns = train.column_names;
    p.schema.column_signal = train.column_signal;
    p.split_seed = split_seed;
    p.split_ratio = split_ratio;
    p.scope = scope;
    p.scope_key = scope_key;

    p.standardizer = fit_standardizer(train.X);
    const Eigen::MatrixXd x_scaled = apply_standardizer(p.standardizer, train.X);
    p.pca = fit_pca(x_scaled, components);
    const Eigen::MatrixXd z = pca_transform(p.pca, x_scaled);
    for (int t = 0; t < kTargetCount; ++t)
        p.models[static_cast<std::size_t>(t)] = fit_regression(z, train.targets.col(t));
    return p;
}

namespace {

void check_schema(const FittedPipeline& p, const FeatureMatrix& rows) {
    if (rows.column_names != p.schema.columns)
        throw data_error("pipeline schema mismatch: feature columns differ from the fitted model");
}

} // namespace

Eigen::MatrixXd standardized_rows(const FittedPipeline& p, const FeatureMatrix& rows) {
    check_schema(p, rows);
    return apply_standardizer(p.standardizer, rows.X);
}

Predictions predict(const FittedPipeline& p, const FeatureMatrix& rows) {
    check_schema(p, rows);
    const Eigen::MatrixXd z = pca_transform(p.pca, apply_standardizer(p.standardizer, rows.X));

    Predictions out;
    out.raw.resize(rows.X.rows(), kTargetCount);
    out.estimates.resize(rows.X.rows(), kTargetCount);
    out.clamped.resize(static_cast<std::size_t>(rows.X.rows()));
    for (int t = 0; t < kTargetCount; ++t) {
        const LinearModel& m = p.models[static_cast<std::size_t>(t)];
        out.raw.col(t) = (z * m.coef).array() + m.intercept;
        for (Eigen::Index r = 0; r < out.raw.rows(); ++r) {
            const bool clamp = out.raw(r, t) < 0.0;
            out.estimates(r, t) = clamp ? 0.0 : out.raw(r, t);
            out.clamped[static_cast<std::size_t>(r)][static_cast<std::size_t>(t)] = clamp;
        }
    }
    return out;
}

// ---- persistence -----------------------------------------------------------------------

namespace {

constexpr const char* kArtifactFormat = "mealmeter-pipeline";
constexpr int kArtifactVersion = 1;

json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v(i));
    return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    if (rows.empty())
        return {};
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
    return m;
}

} // namespace

void save_pipeline(const FittedPipeline& p, const std::filesystem::path& path) {
    json j;
    j["format"] = kArtifactFormat;
    j["version"] = kArtifactVersion;
    j["scope"] = p.scope;
    j["scope_key"] = p.scope_key;
    j["split_seed"] = p.split_seed;
    j["split_ratio"] = p.split_ratio;
    j["config"] = p.config_echo;

    json schema;
    json sigs = json::array();
    for (SignalName s : p.schema.signals)
        sigs.push_back(to_string(s));
    schema["signals"] = std::move(sigs);
    schema["columns"] = p.schema.columns;
    schema["column_signal"] = p.schema.column_signal;
    schema["entropy_bins"] = p.schema.entropy_bins;
    schema["resample_hz"] = p.schema.resample_hz;
    schema["horizon_min"] = p.schema.horizon_min;
    schema["smooth_window"] = p.schema.smooth_window;
    schema["smooth_all"] = p.schema.smooth_all;
    j["schema"] = std::move(schema);

    j["standardizer"] = {{"mu", vector_to_json(p.standardizer.mu)},
                         {"sigma", vector_to_json(p.standardizer.sigma)},
                         {"constant_columns", p.standardizer.constant_columns}};
    j["pca"] = {{"loadings", matrix_to_json(p.pca.W)},
                {"explained_variance", vector_to_json(p.pca.explained_variance)}};
    json reg;
    for (int t = 0; t < kTargetCount; ++t) {
        const LinearModel& m = p.models[static_cast<std::size_t>(t)];
        reg[to_string(static_cast<Target>(t))] = {{"intercept", m.intercept},
                                                  {"coefficients", vector_to_json(m.coef)}};
    }
    j["regression"] = std::move(reg);

    write_file(path, j.dump(2) + "\n");
}

FittedPipeline load_pipeline(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw data_error("model artifact " + path.string() + " is unreadable: " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kArtifactFormat)
            throw data_error("model artifact " + path.string() + ": unrecognized format");
        if (j.at("version").get<int>() != kArtifactVersion)
            throw data_error("model artifact " + path.string() + ": unsupported version " +
                             j.at("version").dump());

        FittedPipeline p;
        p.scope = j.at("scope").get<std::string>();
        p.scope_key = j.at("scope_key").get<std::string>();
        p.split_seed = j.at("split_seed").get<uint64_t>();
        p.split_ratio = j.at("split_ratio").get<double>();
        if (j.contains("config"))
            p.config_echo = j.at("config").get<std::map<std::string, std::string>>();

        const json& schema = j.at("schema");
        for (const auto& s : schema.at("signals")) {
            const auto sig = signal_name_from_string(s.get<std::string>());
            if (!sig)
                throw data_error("model artifact: unknown signal " + s.dump());
            p.schema.signals.push_back(*sig);
        }
        p.schema.columns = schema.at("columns").get<std::vector<std::string>>();
        p.schema.column_signal = schema.at("column_signal").get<std::vector<int>>();
        p.schema.entropy_bins = schema.at("entropy_bins").get<int>();
        p.schema.resample_hz = schema.at("resample_hz").get<double>();
        p.schema.horizon_min = schema.at("horizon_min").get<double>();
        p.schema.smooth_window = schema.at("smooth_window").get<int>();
        p.schema.smooth_all = schema.at("smooth_all").get<bool>();

        const json& st = j.at("standardizer");
        p.standardizer.mu = vector_from_json(st.at("mu"));
        p.standardizer.sigma = vector_from_json(st.at("sigma"));
        p.standardizer.constant_columns = st.at("constant_columns").get<std::vector<int>>();

        p.pca.W = matrix_from_json(j.at("pca").at("loadings"));
        p.pca.explained_variance = vector_from_json(j.at("pca").at("explained_variance"));

        for (int t = 0; t < kTargetCount; ++t) {
            const json& m = j.at("regression").at(to_string(static_cast<Target>(t)));
            p.models[static_cast<std::size_t>(t)].intercept = m.at("intercept").get<double>();
            p.models[static_cast<std::size_t>(t)].coef = vector_from_json(m.at("coefficients"));
        }
        return p;
    } catch (const json::exception& e) {
        throw data_error("model artifact " + path.string() + " is malformed: " + e.what());
    }
}

} // namespace mealmeter
