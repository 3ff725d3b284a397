#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mealmeter/pipeline_model.hpp"

namespace mealmeter {

// ---- metrics ------------------------------------------------------------------

double mae(std::span<const double> y, std::span<const double> yhat);

/// Root mean squared relative error. Every y must be nonzero; callers exclude
/// zero-target rows beforehand (see filter_rmsre_pairs) and report the count.
double rmsre(std::span<const double> y, std::span<const double> yhat);

struct PearsonResult {
    std::optional<double> r;
    std::string note; // set when r is undefined
};

PearsonResult pearson(std::span<const double> a, std::span<const double> b);

/// Drop pairs with y == 0; returns the number excluded.
int filter_rmsre_pairs(std::vector<double>& y, std::vector<double>& yhat);

struct TargetMetrics {
    double mae = 0.0;
    std::optional<double> rmsre;
    int rmsre_excluded = 0;
    std::optional<double> pearson_r;
    std::string note;
};

struct EvalReport {
    std::string method;    // "mealmeter" | "huo"
    std::string scope;     // "pooled" | "per-subject"
    std::string scope_key; // "pooled", subject id, or "average"
    int n_train = 0;
    int n_test = 0;
    int skipped_windows = 0;
    std::array<TargetMetrics, kTargetCount> per_target;
};

/// Metrics for one scope key from actual/predicted test targets (n x 3 each).
EvalReport evaluate_predictions(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted);

// ---- contribution decomposition --------------------------------------------------

/// Per-feature contribution gamma = W * beta (length p). Negative values are
/// meaningful: the feature pulls the estimate down.
Eigen::VectorXd feature_contributions(const PcaLoadings& pca, const Eigen::VectorXd& beta);

/// Sum gamma within each signal's column group, ordered like `signals`.
std::vector<double> signal_contributions(const Eigen::VectorXd& gamma,
                                         const std::vector<int>& column_signal, int n_signals);

struct ContributionReport {
    std::string scope_label; // e.g. "pooled" or "per-subject-averaged"
    std::vector<SignalName> signals;
    std::vector<std::string> columns;
    std::array<Eigen::VectorXd, kTargetCount> gamma;       // per feature
    std::array<std::vector<double>, kTargetCount> signal_gamma; // per signal
};

ContributionReport compute_contributions(const FittedPipeline& p, const std::string& scope_label);

} // namespace mealmeter
