#include "mealmeter/baseline_huo.hpp"

#include <algorithm>
#include <cmath>

namespace mealmeter {

KernelBank make_kernel_bank(std::size_t segment_len, double rate_hz, double bandwidth_min) {
    if (segment_len < 2)
        throw config_error("kernel bank: segment length must be >= 2");
    if (!(rate_hz > 0.0))
        throw config_error("kernel bank: rate must be positive");
    KernelBank bank;
    bank.segment_len = segment_len;
    bank.rate_hz = rate_hz;
    // equidistant interior centers over the sampled extent, so mirrored pairs
    // sit symmetric about the segment midpoint
    const double span_s = static_cast<double>(segment_len - 1) / rate_hz;
    const double spacing = span_s / (kKernelCount + 1);
    for (int m = 0; m < kKernelCount; ++m)
        bank.centers_s[static_cast<std::size_t>(m)] = spacing * (m + 1);
    bank.bandwidth_s = bandwidth_min > 0.0 ? bandwidth_min * 60.0 : spacing / 2.0;
    if (!(bank.bandwidth_s > 0.0))
        throw config_error("kernel bank: bandwidth must be positive");
    return bank;
}

std::array<double, kKernelCount> gaussian_auc_features(std::span<const double> bgl_post,
                                                       const KernelBank& bank) {
    if (bgl_post.size() != bank.segment_len)
        throw data_error("kernel features: segment length " + std::to_string(bgl_post.size()) +
                         " does not match the bank's " + std::to_string(bank.segment_len));
    const double dt = 1.0 / bank.rate_hz;
    const double inv_two_b2 = 1.0 / (2.0 * bank.bandwidth_s * bank.bandwidth_s);

    std::array<double, kKernelCount> f{};
    for (int m = 0; m < kKernelCount; ++m) {
        const double c = bank.centers_s[static_cast<std::size_t>(m)];
        double acc = 0.0;
        for (std::size_t i = 0; i < bgl_post.size(); ++i) {
            const double t = static_cast<double>(i) * dt;
            const double d = t - c;
            double w = std::exp(-d * d * inv_two_b2);
            if (i == 0 || i + 1 == bgl_post.size())
                w *= 0.5; // trapezoidal ends
            acc += bgl_post[i] * w;
        }
        f[static_cast<std::size_t>(m)] = acc * dt;
    }
    return f;
}

FeatureMatrix build_baseline_matrix(std::span<const MealWindow> windows, const KernelBank& bank) {
    FeatureMatrix m;
    m.signals = {SignalName::BGL_POST};
    for (int k = 0; k < kKernelCount; ++k) {
        m.column_names.push_back("BGL_POST_KAUC" + std::to_string(k + 1));
        m.column_signal.push_back(0);
    }

    std::vector<int> order(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i)
        order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const MealEvent& ma = windows[static_cast<std::size_t>(a)].meal;
        const MealEvent& mb = windows[static_cast<std::size_t>(b)].meal;
        if (ma.subject_id != mb.subject_id)
            return ma.subject_id < mb.subject_id;
        return ma.timestamp < mb.timestamp;
    });

    m.X.resize(static_cast<Eigen::Index>(windows.size()), kKernelCount);
    m.targets.resize(static_cast<Eigen::Index>(windows.size()), kTargetCount);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const MealWindow& w = windows[static_cast<std::size_t>(order[r])];
        const auto it = w.segments.find(SignalName::BGL_POST);
        if (it == w.segments.end())
            throw data_error("baseline requires the BGL_POST segment");
        const auto f = gaussian_auc_features(it->second, bank);
        for (int k = 0; k < kKernelCount; ++k)
            m.X(static_cast<Eigen::Index>(r), k) = f[static_cast<std::size_t>(k)];
        m.keys.push_back({w.meal.subject_id, w.meal.timestamp});
        m.targets(static_cast<Eigen::Index>(r), 0) = w.meal.carbs_g;
        m.targets(static_cast<Eigen::Index>(r), 1) = w.meal.protein_g;
        m.targets(static_cast<Eigen::Index>(r), 2) = w.meal.fat_g;
    }
    return m;
}

std::array<LinearModel, kTargetCount> fit_baseline(const FeatureMatrix& train) {
    std::array<LinearModel, kTargetCount> models;
    for (int t = 0; t < kTargetCount; ++t)
        models[static_cast<std::size_t>(t)] = fit_regression(train.X, train.targets.col(t));
    return models;
}

Eigen::MatrixXd predict_baseline(const std::array<LinearModel, kTargetCount>& models,
                                 const FeatureMatrix& rows, bool clamp_at_zero) {
    Eigen::MatrixXd out(rows.X.rows(), kTargetCount);
    for (int t = 0; t < kTargetCount; ++t) {
        const LinearModel& m = models[static_cast<std::size_t>(t)];
        if (m.coef.size() != rows.X.cols())
            throw data_error("baseline predict: feature count mismatch");
        out.col(t) = (rows.X * m.coef).array() + m.intercept;
        if (clamp_at_zero)
            out.col(t) = out.col(t).cwiseMax(0.0);
    }
    return out;
}

} // namespace mealmeter
