#include "mealmeter/analysis.hpp"

#include <cmath>

namespace mealmeter {

double mae(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size())
        throw data_error("mae: length mismatch");
    if (y.empty())
        throw data_error("mae: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        sum += std::abs(y[i] - yhat[i]);
    return sum / static_cast<double>(y.size());
}

double rmsre(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size())
        throw data_error("rmsre: length mismatch");
    if (y.empty())
        throw data_error("rmsre: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0)
            throw data_error("rmsre: zero target at index " + std::to_string(i) +
                             " (exclude such rows first)");
        const double rel = (y[i] - yhat[i]) / y[i];
        sum += rel * rel;
    }
    return std::sqrt(sum / static_cast<double>(y.size()));
}

PearsonResult pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw data_error("pearson: length mismatch");
    if (a.size() < 2)
        throw data_error("pearson: need at least 2 pairs");
    const auto n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        PearsonResult res;
        res.note = saa == 0.0 ? "undefined: first argument has zero variance"
                              : "undefined: second argument has zero variance";
        return res;
    }
    return {sab / std::sqrt(saa * sbb), ""};
}

int filter_rmsre_pairs(std::vector<double>& y, std::vector<double>& yhat) {
    int excluded = 0;
    std::size_t w = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0) {
            ++excluded;
            continue;
        }
        y[w] = y[i];
        yhat[w] = yhat[i];
        ++w;
    }
    y.resize(w);
    yhat.resize(w);
    return excluded;
}

EvalReport evaluate_predictions(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted) {
    if (actual.rows() != predicted.rows() || actual.cols() != kTargetCount ||
        predicted.cols() != kTargetCount)
        throw data_error("evaluate: actual/predicted shape mismatch");
    if (actual.rows() == 0)
        throw data_error("evaluate: empty test set");

    EvalReport rep;
    rep.n_test = static_cast<int>(actual.rows());
    for (int t = 0; t < kTargetCount; ++t) {
        std::vector<double> y(actual.col(t).data(), actual.col(t).data() + actual.rows());
        std::vector<double> yhat(predicted.col(t).data(), predicted.col(t).data() + predicted.rows());

        TargetMetrics& m = rep.per_target[static_cast<std::size_t>(t)];
        m.mae = mae(y, yhat);

        if (y.size() < 2) {
            m.note = std::string(to_string(static_cast<Target>(t))) +
                     " r undefined: fewer than 2 test rows";
        } else {
            const PearsonResult pr = pearson(y, yhat);
            m.pearson_r = pr.r;
            if (!pr.note.empty())
                m.note = std::string(to_string(static_cast<Target>(t))) + " r " + pr.note;
        }

        std::vector<double> yf = y, yhf = yhat;
        m.rmsre_excluded = filter_rmsre_pairs(yf, yhf);
        if (!yf.empty())
            m.rmsre = rmsre(yf, yhf);
        else
            m.note += std::string(m.note.empty() ? "" : "; ") +
                      to_string(static_cast<Target>(t)) + " rmsre undefined: all targets zero";
    }
    return rep;
}

// ---- contributions ------------------------------------------------------------

Eigen::VectorXd feature_contributions(const PcaLoadings& pca, const Eigen::VectorXd& beta) {
    if (pca.W.cols() != beta.size())
        throw data_error("contributions: coefficient length " + std::to_string(beta.size()) +
                         " does not match " + std::to_string(pca.W.cols()) + " components");
    return pca.W * beta;
}

std::vector<double> signal_contributions(const Eigen::VectorXd& gamma,
                                         const std::vector<int>& column_signal, int n_signals) {
    if (static_cast<std::size_t>(gamma.size()) != column_signal.size())
        throw data_error("contributions: column/signal map length mismatch");
    std::vector<double> out(static_cast<std::size_t>(n_signals), 0.0);
    for (std::size_t i = 0; i < column_signal.size(); ++i) {
        const int s = column_signal[i];
        if (s < 0 || s >= n_signals)
            throw data_error("contributions: column " + std::to_string(i) + " maps to no signal");
        out[static_cast<std::size_t>(s)] += gamma(static_cast<Eigen::Index>(i));
    }
    return out;
}

ContributionReport compute_contributions(const FittedPipeline& p, const std::string& scope_label) {
    ContributionReport rep;
    rep.scope_label = scope_label;
    rep.signals = p.schema.signals;
    rep.columns = p.schema.columns;
    for (int t = 0; t < kTargetCount; ++t) {
        rep.gamma[static_cast<std::size_t>(t)] =
            feature_contributions(p.pca, p.models[static_cast<std::size_t>(t)].coef);
        rep.signal_gamma[static_cast<std::size_t>(t)] =
            signal_contributions(rep.gamma[static_cast<std::size_t>(t)], p.schema.column_signal,
                                 static_cast<int>(p.schema.signals.size()));
    }
    return rep;
}

} // namespace mealmeter
