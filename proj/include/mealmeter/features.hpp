#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mealmeter/preprocess.hpp"

namespace mealmeter {

enum class FeatureName {
    MIN, MAX, MEAN, SD, SKEW, KURT, RANGE, RMS, MEDIAN, AUTOCORR, IQR, ENTROPY, ZCR,
    PSD_POWER, DOM_FREQ, SPEC_ENTROPY
};

inline constexpr int kTimeFeatureCount = 13;
inline constexpr int kFreqFeatureCount = 3;
inline constexpr int kFeatureCount = kTimeFeatureCount + kFreqFeatureCount;
inline constexpr int kDefaultEntropyBins = 16;

const char* to_string(FeatureName f);
std::array<FeatureName, kFeatureCount> all_features();

/// The 13 time-domain statistics, in enum order MIN..ZCR. Population moments;
/// lag-1 autocorrelation; type-7 interpolated quantiles; natural-log histogram
/// entropy; sign-change rate of the mean-removed samples. A constant segment
/// takes the degenerate convention (SKEW/KURT/AUTOCORR/ENTROPY/ZCR = 0).
std::array<double, kTimeFeatureCount> time_features(std::span<const double> segment,
                                                    int entropy_bins = kDefaultEntropyBins);

/// Periodogram summaries of the mean-removed segment (no taper), in enum order
/// PSD_POWER, DOM_FREQ, SPEC_ENTROPY. Total power is normalized to equal the
/// segment's population variance; spectral entropy is scaled into [0, 1].
/// Constant segments yield (0, 0, 0).
std::array<double, kFreqFeatureCount> freq_features(std::span<const double> segment, double rate_hz);

// ---- assembly ---------------------------------------------------------------

enum class Target { Carbs, Protein, Fat };
inline constexpr int kTargetCount = 3;
const char* to_string(Target t);

struct RowKey {
    std::string subject_id;
    double timestamp = 0.0;
};

/// Rows = meal windows (sorted by subject, then time); columns = the fixed
/// (signal, feature) grid; targets = the three macronutrient masses.
struct FeatureMatrix {
    std::vector<SignalName> signals;
    std::vector<std::string> column_names; // "<SIGNAL>_<FEATURE>"
    std::vector<int> column_signal;        // index into `signals` per column
    std::vector<RowKey> keys;
    Eigen::MatrixXd X;       // n x p
    Eigen::MatrixXd targets; // n x 3, columns in Target order

    std::size_t rows() const { return keys.size(); }
    std::size_t cols() const { return column_names.size(); }

    /// Row subset in the given order (keys, X and targets together).
    FeatureMatrix take_rows(std::span<const int> idx) const;
};

std::vector<std::string> feature_column_names(const std::vector<SignalName>& signals);

FeatureMatrix build_feature_matrix(std::span<const MealWindow> windows,
                                   const std::vector<SignalName>& signals,
                                   int entropy_bins = kDefaultEntropyBins);

} // namespace mealmeter
