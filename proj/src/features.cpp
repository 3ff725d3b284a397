#include "mealmeter/features.hpp"

#include <algorithm>
#include <cmath>

#include <fftw3.h>

namespace mealmeter {

const char* to_string(FeatureName f) {
    switch (f) {
    case FeatureName::MIN: return "MIN";
    case FeatureName::MAX: return "MAX";
    case FeatureName::MEAN: return "MEAN";
    case FeatureName::SD: return "SD";
    case FeatureName::SKEW: return "SKEW";
    case FeatureName::KURT: return "KURT";
    case FeatureName::RANGE: return "RANGE";
    case FeatureName::RMS: return "RMS";
    case FeatureName::MEDIAN: return "MEDIAN";
    case FeatureName::AUTOCORR: return "AUTOCORR";
    case FeatureName::IQR: return "IQR";
    case FeatureName::ENTROPY: return "ENTROPY";
    case FeatureName::ZCR: return "ZCR";
    case FeatureName::PSD_POWER: return "PSD_POWER";
    case FeatureName::DOM_FREQ: return "DOM_FREQ";
    case FeatureName::SPEC_ENTROPY: return "SPEC_ENTROPY";
    }
    return "?";
}

std::array<FeatureName, kFeatureCount> all_features() {
    return {FeatureName::MIN,      FeatureName::MAX,     FeatureName::MEAN,    FeatureName::SD,
            FeatureName::SKEW,     FeatureName::KURT,    FeatureName::RANGE,   FeatureName::RMS,
            FeatureName::MEDIAN,   FeatureName::AUTOCORR, FeatureName::IQR,    FeatureName::ENTROPY,
            FeatureName::ZCR,      FeatureName::PSD_POWER, FeatureName::DOM_FREQ,
            FeatureName::SPEC_ENTROPY};
}

const char* to_string(Target t) {
    switch (t) {
    case Target::Carbs: return "carbs";
    case Target::Protein: return "protein";
    case Target::Fat: return "fat";
    }
    return "?";
}

// ---- time domain ------------------------------------------------------------

namespace {

// type-7 quantile: linear interpolation at rank (n-1)p of the sorted values
double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    const double h = static_cast<double>(n - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n)
        return sorted.back();
    const double f = h - static_cast<double>(lo);
    return sorted[lo] + f * (sorted[lo + 1] - sorted[lo]);
}

} // namespace

std::array<double, kTimeFeatureCount> time_features(std::span<const double> segment, int entropy_bins) {
    const std::size_t n = segment.size();
    if (n < 2)
        throw data_error("time_features: need at least 2 samples");
    if (entropy_bins < 1)
        throw config_error("entropy bin count must be >= 1");

    double lo = segment[0], hi = segment[0], sum = 0.0, sum_sq = 0.0;
    for (double v : segment) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
        sum_sq += v * v;
    }
    const double nd = static_cast<double>(n);
    const double mean = sum / nd;
    const double rms = std::sqrt(sum_sq / nd);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : segment) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nd;
    m3 /= nd;
    m4 /= nd;
    const double sd = std::sqrt(m2);

    std::vector<double> sorted(segment.begin(), segment.end());
    std::sort(sorted.begin(), sorted.end());
    const double median = quantile_sorted(sorted, 0.5);
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);

    std::array<double, kTimeFeatureCount> f{};
    f[static_cast<int>(FeatureName::MIN)] = lo;
    f[static_cast<int>(FeatureName::MAX)] = hi;
    f[static_cast<int>(FeatureName::MEAN)] = mean;
    f[static_cast<int>(FeatureName::SD)] = sd;
    f[static_cast<int>(FeatureName::RANGE)] = hi - lo;
    f[static_cast<int>(FeatureName::RMS)] = rms;
    f[static_cast<int>(FeatureName::MEDIAN)] = median;
    f[static_cast<int>(FeatureName::IQR)] = iqr;

    const bool degenerate = m2 == 0.0 || hi == lo;
    if (!degenerate) {
        f[static_cast<int>(FeatureName::SKEW)] = m3 / std::pow(m2, 1.5);
        f[static_cast<int>(FeatureName::KURT)] = m4 / (m2 * m2) - 3.0;

        double lag1 = 0.0;
        std::size_t crossings = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double a = segment[i] - mean;
            const double b = segment[i + 1] - mean;
            lag1 += a * b;
            if (a * b < 0.0) // exact zeros count as no crossing
                ++crossings;
        }
        f[static_cast<int>(FeatureName::AUTOCORR)] = lag1 / (m2 * nd);
        f[static_cast<int>(FeatureName::ZCR)] = static_cast<double>(crossings) / (nd - 1.0);

        std::vector<std::size_t> counts(static_cast<std::size_t>(entropy_bins), 0);
        const double width = (hi - lo) / static_cast<double>(entropy_bins);
        for (double v : segment) {
            auto b = static_cast<std::size_t>((v - lo) / width);
            if (b >= counts.size())
                b = counts.size() - 1;
            ++counts[b];
        }
        double h_ent = 0.0;
        for (std::size_t c : counts) {
            if (c == 0)
                continue;
            const double p = static_cast<double>(c) / nd;
            h_ent -= p * std::log(p);
        }
        f[static_cast<int>(FeatureName::ENTROPY)] = h_ent;
    }
    return f;
}

// ---- frequency domain ----------------------------------------------------------

std::array<double, kFreqFeatureCount> freq_features(std::span<const double> segment, double rate_hz) {
    const std::size_t n = segment.size();
    if (n < 4)
        throw data_error("freq_features: need at least 4 samples");
    if (!(rate_hz > 0.0))
        throw data_error("freq_features: rate must be positive");

    double sum = 0.0;
    for (double v : segment)
        sum += v;
    const double mean = sum / static_cast<double>(n);

    // fftw_malloc keeps buffer alignment (and thus the chosen codelets)
    // identical across runs
    double* in = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    const std::size_t n_bins = n / 2; // positive-frequency bins 1..n/2
    auto* spec = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, spec, FFTW_ESTIMATE);
    if (!plan) {
        fftw_free(in);
        fftw_free(spec);
        throw numeric_error("freq_features: FFT planning failed");
    }
    for (std::size_t i = 0; i < n; ++i)
        in[i] = segment[i] - mean;
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    // Fold negative frequencies so the bin powers sum to the population variance.
    std::vector<double> power(n_bins);
    const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    for (std::size_t k = 1; k <= n_bins; ++k) {
        const double re = spec[k][0];
        const double im = spec[k][1];
        const bool nyquist = (n % 2 == 0) && k == n_bins;
        power[k - 1] = (nyquist ? 1.0 : 2.0) * (re * re + im * im) * norm;
    }
    fftw_free(in);
    fftw_free(spec);

    double total = 0.0;
    for (double p : power)
        total += p;

    std::array<double, kFreqFeatureCount> out{};
    if (total <= 0.0)
        return out; // constant segment convention

    std::size_t peak = 0;
    for (std::size_t k = 1; k < n_bins; ++k)
        if (power[k] > power[peak]) // ties resolve to the lowest frequency
            peak = k;

    double spec_entropy = 0.0;
    for (double p : power) {
        if (p <= 0.0)
            continue;
        const double q = p / total;
        spec_entropy -= q * std::log(q);
    }
    if (n_bins > 1)
        spec_entropy /= std::log(static_cast<double>(n_bins));
    else
        spec_entropy = 0.0;

    out[0] = total;
    out[1] = static_cast<double>(peak + 1) * rate_hz / static_cast<double>(n);
    out[2] = spec_entropy;
    return out;
}

// ---- assembly ---------------------------------------------------------------------

std::vector<std::string> feature_column_names(const std::vector<SignalName>& signals) {
    std::vector<std::string> names;
    names.reserve(signals.size() * kFeatureCount);
    for (SignalName s : signals)
        for (FeatureName f : all_features())
            names.push_back(std::string(to_string(s)) + "_" + to_string(f));
    return names;
}

FeatureMatrix FeatureMatrix::take_rows(std::span<const int> idx) const {
    FeatureMatrix out;
    out.signals = signals;
    out.column_names = column_names;
    out.column_signal = column_signal;
    out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
    out.targets.resize(static_cast<Eigen::Index>(idx.size()), targets.cols());
    out.keys.reserve(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.keys.push_back(keys[static_cast<std::size_t>(idx[i])]);
        out.X.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
        out.targets.row(static_cast<Eigen::Index>(i)) = targets.row(idx[i]);
    }
    return out;
}

FeatureMatrix build_feature_matrix(std::span<const MealWindow> windows,
                                   const std::vector<SignalName>& signals, int entropy_bins) {
    if (signals.empty())
        throw config_error("signal set must be non-empty");

    FeatureMatrix m;
    m.signals = signals;
    m.column_names = feature_column_names(signals);
    m.column_signal.reserve(m.column_names.size());
    for (std::size_t s = 0; s < signals.size(); ++s)
        for (int f = 0; f < kFeatureCount; ++f)
            m.column_signal.push_back(static_cast<int>(s));

    std::vector<int> order(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i)
        order[static_cast<std::size_t>(i)] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const MealEvent& ma = windows[static_cast<std::size_t>(a)].meal;
        const MealEvent& mb = windows[static_cast<std::size_t>(b)].meal;
        if (ma.subject_id != mb.subject_id)
            return ma.subject_id < mb.subject_id;
        return ma.timestamp < mb.timestamp;
    });

    const auto p = static_cast<Eigen::Index>(m.column_names.size());
    m.X.resize(static_cast<Eigen::Index>(windows.size()), p);
    m.targets.resize(static_cast<Eigen::Index>(windows.size()), kTargetCount);

    for (std::size_t r = 0; r < order.size(); ++r) {
        const MealWindow& w = windows[static_cast<std::size_t>(order[r])];
        m.keys.push_back({w.meal.subject_id, w.meal.timestamp});
        Eigen::Index c = 0;
        for (SignalName s : signals) {
            const auto it = w.segments.find(s);
            if (it == w.segments.end())
                throw data_error(std::string("window missing segment ") + to_string(s));
            const auto tf = time_features(it->second, entropy_bins);
            const auto ff = freq_features(it->second, w.rate);
            for (double v : tf)
                m.X(static_cast<Eigen::Index>(r), c++) = v;
            for (double v : ff)
                m.X(static_cast<Eigen::Index>(r), c++) = v;
        }
        m.targets(static_cast<Eigen::Index>(r), 0) = w.meal.carbs_g;
        m.targets(static_cast<Eigen::Index>(r), 1) = w.meal.protein_g;
        m.targets(static_cast<Eigen::Index>(r), 2) = w.meal.fat_g;
    }

    for (Eigen::Index r = 0; r < m.X.rows(); ++r)
        for (Eigen::Index c = 0; c < m.X.cols(); ++c)
            if (!std::isfinite(m.X(r, c)))
                throw numeric_error("non-finite feature at row " + m.keys[static_cast<std::size_t>(r)].subject_id +
                                    "@" + format_iso8601_utc(m.keys[static_cast<std::size_t>(r)].timestamp) +
                                    ", column " + m.column_names[static_cast<std::size_t>(c)]);
    return m;
}

} // namespace mealmeter
