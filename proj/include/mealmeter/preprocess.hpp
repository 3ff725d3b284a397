#pragma once

#include <map>
#include <span>
#include <vector>

#include "mealmeter/signal_model.hpp"

namespace mealmeter {

/// Model inputs derived from channels. BGL_PRE/BGL_POST both come from the BGL
/// channel; ACC_MAG from the three accelerometer axes.
enum class SignalName { BGL_PRE, BGL_POST, EDA, HR, TEMP, ACC_MAG, BVP };

const char* to_string(SignalName s);
std::optional<SignalName> signal_name_from_string(std::string_view s);

/// Default input set (BVP is opt-in).
std::vector<SignalName> default_signal_set();

struct PreprocessConfig {
    std::vector<SignalName> signals = default_signal_set();
    double horizon_min = 90.0;
    double resample_hz = 8.0;
    int smooth_window = 20;
    bool smooth_all = false; // smoothing beyond ACC_MAG is opt-in
};

/// One meal's uniformly sampled input segments, all at `rate` Hz and of equal
/// length (43,200 samples at the 90 min / 8 Hz defaults).
struct MealWindow {
    MealEvent meal;
    double rate = 0.0;
    std::map<SignalName, std::vector<double>> segments;
};

struct WindowExtraction {
    std::vector<MealWindow> windows;
    int skipped = 0;
    std::vector<std::string> warnings; // one human-readable entry per skipped meal
};

// ---- primitives ------------------------------------------------------------

/// Resample onto the grid start + k/target_rate over the same span. Upsampling
/// interpolates linearly; downsampling takes the sample mean over each target
/// interval [k/target, (k+1)/target), falling back to interpolation if an
/// interval holds no source sample.
TimeSeries resample(const TimeSeries& ts, double target_rate);

/// Trailing mean over `window` samples; indices below window-1 use the
/// expanding prefix mean. Length and rate are preserved.
TimeSeries moving_average(const TimeSeries& ts, std::size_t window);

/// Elementwise magnitude of three axis channels sharing one grid.
TimeSeries acc_magnitude(const TimeSeries& x, const TimeSeries& y, const TimeSeries& z);

/// segment - min(segment).
std::vector<double> min_normalize(std::vector<double> segment);

/// Subtract the joint minimum of both segments from each (the per-meal glucose
/// convention: pre and post share one reference level).
void joint_min_normalize(std::vector<double>& pre, std::vector<double>& post);

// ---- windowing ---------------------------------------------------------------

/// Fixed stage order: resample -> acc magnitude + smoothing -> windowing ->
/// min-normalization of the glucose pair. Meals without full pre/post coverage
/// are skipped and counted, not errors.
WindowExtraction extract_meal_windows(const SubjectRecord& record, const PreprocessConfig& config);

} // namespace mealmeter
