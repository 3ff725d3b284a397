#include "mealmeter/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mealmeter {

const char* to_string(SignalName s) {
    switch (s) {
    case SignalName::BGL_PRE: return "BGL_PRE";
    case SignalName::BGL_POST: return "BGL_POST";
    case SignalName::EDA: return "EDA";
    case SignalName::HR: return "HR";
    case SignalName::TEMP: return "TEMP";
    case SignalName::ACC_MAG: return "ACC_MAG";
    case SignalName::BVP: return "BVP";
    }
    return "?";
}

std::optional<SignalName> signal_name_from_string(std::string_view s) {
    for (SignalName n : {SignalName::BGL_PRE, SignalName::BGL_POST, SignalName::EDA, SignalName::HR,
                         SignalName::TEMP, SignalName::ACC_MAG, SignalName::BVP})
        if (s == to_string(n))
            return n;
    return std::nullopt;
}

std::vector<SignalName> default_signal_set() {
    return {SignalName::BGL_PRE, SignalName::BGL_POST, SignalName::EDA,
            SignalName::HR,      SignalName::TEMP,     SignalName::ACC_MAG};
}

// ---- primitives ------------------------------------------------------------

TimeSeries resample(const TimeSeries& ts, double target_rate) {
    ts.validate();
    if (!(target_rate > 0.0))
        throw data_error("resample: target rate must be positive");
    if (ts.values.size() < 2)
        throw data_error("resample: need at least 2 source samples");

    const double span = ts.duration();
    const std::size_t n_out = static_cast<std::size_t>(std::floor(span * target_rate + 1e-9)) + 1;
    const std::size_t n_src = ts.values.size();

    TimeSeries out;
    out.kind = ts.kind;
    out.start = ts.start;
    out.rate = target_rate;
    out.values.resize(n_out);

    auto interpolate_at = [&](double t) {
        double pos = t * ts.rate;
        if (pos <= 0.0)
            return ts.values.front();
        if (pos >= static_cast<double>(n_src - 1))
            return ts.values.back();
        const std::size_t i = static_cast<std::size_t>(pos);
        const double f = pos - static_cast<double>(i);
        return ts.values[i] + f * (ts.values[i + 1] - ts.values[i]);
    };

    if (target_rate >= ts.rate) {
        for (std::size_t k = 0; k < n_out; ++k)
            out.values[k] = interpolate_at(static_cast<double>(k) / target_rate);
    } else {
        const double ratio = ts.rate / target_rate; // source samples per target interval
        for (std::size_t k = 0; k < n_out; ++k) {
            const auto lo = static_cast<std::size_t>(
                std::max(0.0, std::ceil(static_cast<double>(k) * ratio - 1e-9)));
            auto hi = static_cast<std::size_t>(
                std::ceil(static_cast<double>(k + 1) * ratio - 1e-9)); // exclusive
            hi = std::min(hi, n_src);
            if (lo < hi) {
                double sum = 0.0;
                for (std::size_t i = lo; i < hi; ++i)
                    sum += ts.values[i];
                out.values[k] = sum / static_cast<double>(hi - lo);
            } else {
                out.values[k] = interpolate_at(static_cast<double>(k) / target_rate);
            }
        }
    }
    return out;
}

TimeSeries moving_average(const TimeSeries& ts, std::size_t window) {
    if (window == 0)
        throw data_error("moving_average: window must be >= 1");
    ts.validate();
    TimeSeries out = ts;
    // direct per-window sums: no prefix-sum cancellation, output stays inside
    // the input's min/max
    for (std::size_t i = 0; i < ts.values.size(); ++i) {
        const std::size_t lo = (i + 1 >= window) ? i + 1 - window : 0;
        double sum = 0.0;
        for (std::size_t j = lo; j <= i; ++j)
            sum += ts.values[j];
        out.values[i] = sum / static_cast<double>(i - lo + 1);
    }
    return out;
}

TimeSeries acc_magnitude(const TimeSeries& x, const TimeSeries& y, const TimeSeries& z) {
    x.validate();
    y.validate();
    z.validate();
    const bool same_grid = x.rate == y.rate && y.rate == z.rate && x.start == y.start &&
                           y.start == z.start && x.size() == y.size() && y.size() == z.size();
    if (!same_grid)
        throw data_error("acc_magnitude: axis channels must share start, rate and length");
    TimeSeries out;
    out.kind = ChannelKind::ACC_MAG;
    out.start = x.start;
    out.rate = x.rate;
    out.values.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out.values[i] = std::sqrt(x.values[i] * x.values[i] + y.values[i] * y.values[i] +
                                  z.values[i] * z.values[i]);
    return out;
}

std::vector<double> min_normalize(std::vector<double> segment) {
    if (segment.empty())
        throw data_error("min_normalize: empty segment");
    const double lo = *std::min_element(segment.begin(), segment.end());
    for (double& v : segment)
        v -= lo;
    return segment;
}

void joint_min_normalize(std::vector<double>& pre, std::vector<double>& post) {
    if (pre.empty() && post.empty())
        throw data_error("min_normalize: empty segment");
    double lo = std::numeric_limits<double>::infinity();
    for (double v : pre)
        lo = std::min(lo, v);
    for (double v : post)
        lo = std::min(lo, v);
    for (double& v : pre)
        v -= lo;
    for (double& v : post)
        v -= lo;
}

// ---- windowing ---------------------------------------------------------------

namespace {

struct Prepared {
    // channels already resampled (and smoothed where configured), by signal
    std::map<SignalName, TimeSeries> by_signal;
};

bool needs_channel(const std::vector<SignalName>& signals, SignalName s) {
    return std::find(signals.begin(), signals.end(), s) != signals.end();
}

const TimeSeries& require_channel(const SubjectRecord& rec, ChannelKind kind) {
    const auto it = rec.channels.find(kind);
    if (it == rec.channels.end())
        throw data_error("subject " + rec.subject_id + (rec.day_id.empty() ? "" : "/" + rec.day_id) +
                         ": missing channel " + to_string(kind));
    return it->second;
}

Prepared prepare_channels(const SubjectRecord& rec, const PreprocessConfig& cfg) {
    Prepared prep;
    const auto& signals = cfg.signals;
    const auto w = static_cast<std::size_t>(cfg.smooth_window);

    const bool want_bgl = needs_channel(signals, SignalName::BGL_PRE) ||
                          needs_channel(signals, SignalName::BGL_POST);
    if (want_bgl) {
        TimeSeries bgl = resample(require_channel(rec, ChannelKind::BGL), cfg.resample_hz);
        if (cfg.smooth_all)
            bgl = moving_average(bgl, w);
        if (needs_channel(signals, SignalName::BGL_PRE))
            prep.by_signal.emplace(SignalName::BGL_PRE, bgl);
        if (needs_channel(signals, SignalName::BGL_POST))
            prep.by_signal.emplace(SignalName::BGL_POST, std::move(bgl));
    }

    const std::pair<SignalName, ChannelKind> plain[] = {
        {SignalName::EDA, ChannelKind::EDA},
        {SignalName::HR, ChannelKind::HR},
        {SignalName::TEMP, ChannelKind::TEMP},
        {SignalName::BVP, ChannelKind::BVP},
    };
    for (const auto& [sig, kind] : plain) {
        if (!needs_channel(signals, sig))
            continue;
        TimeSeries ts = resample(require_channel(rec, kind), cfg.resample_hz);
        if (cfg.smooth_all)
            ts = moving_average(ts, w);
        prep.by_signal.emplace(sig, std::move(ts));
    }

    if (needs_channel(signals, SignalName::ACC_MAG)) {
        const TimeSeries x = resample(require_channel(rec, ChannelKind::ACC_X), cfg.resample_hz);
        const TimeSeries y = resample(require_channel(rec, ChannelKind::ACC_Y), cfg.resample_hz);
        const TimeSeries z = resample(require_channel(rec, ChannelKind::ACC_Z), cfg.resample_hz);
        prep.by_signal.emplace(SignalName::ACC_MAG, moving_average(acc_magnitude(x, y, z), w));
    }
    return prep;
}

// First sample index at or after time t on the channel grid.
std::ptrdiff_t grid_index_at(const TimeSeries& ts, double t) {
    return static_cast<std::ptrdiff_t>(std::ceil((t - ts.start) * ts.rate - 1e-9));
}

} // namespace

WindowExtraction extract_meal_windows(const SubjectRecord& record, const PreprocessConfig& config) {
    if (config.signals.empty())
        throw config_error("signal set must be non-empty");
    if (!(config.horizon_min > 0.0) || !(config.resample_hz > 0.0))
        throw config_error("horizon and resample rate must be positive");
    if (config.smooth_window < 1)
        throw config_error("smoothing window must be >= 1");

    const Prepared prep = prepare_channels(record, config);
    const double horizon_s = config.horizon_min * 60.0;
    const auto seg_len =
        static_cast<std::size_t>(std::llround(horizon_s * config.resample_hz));

    WindowExtraction out;
    for (const MealEvent& meal : record.meals) {
        MealWindow win;
        win.meal = meal;
        win.rate = config.resample_hz;
        std::string skip_reason;

        for (SignalName sig : config.signals) {
            const TimeSeries& ts = prep.by_signal.at(sig);
            const bool pre = sig == SignalName::BGL_PRE;
            const double t0 = pre ? meal.timestamp - horizon_s : meal.timestamp;
            const std::ptrdiff_t k0 = grid_index_at(ts, t0);
            const std::ptrdiff_t k1 = k0 + static_cast<std::ptrdiff_t>(seg_len);
            if (k0 < 0 || k1 > static_cast<std::ptrdiff_t>(ts.size())) {
                skip_reason = std::string("insufficient ") + (pre ? "pre" : "post") +
                              "-meal coverage for " + to_string(sig);
                break;
            }
            win.segments[sig] = std::vector<double>(ts.values.begin() + k0, ts.values.begin() + k1);
        }

        if (!skip_reason.empty()) {
            ++out.skipped;
            out.warnings.push_back("skipping meal " + meal.subject_id + " @ " +
                                   format_iso8601_utc(meal.timestamp) + ": " + skip_reason);
            continue;
        }

        const auto pre_it = win.segments.find(SignalName::BGL_PRE);
        const auto post_it = win.segments.find(SignalName::BGL_POST);
        if (pre_it != win.segments.end() && post_it != win.segments.end()) {
            joint_min_normalize(pre_it->second, post_it->second);
        } else if (post_it != win.segments.end()) {
            post_it->second = min_normalize(std::move(post_it->second));
        } else if (pre_it != win.segments.end()) {
            pre_it->second = min_normalize(std::move(pre_it->second));
        }

        out.windows.push_back(std::move(win));
    }
    return out;
}

} // namespace mealmeter
