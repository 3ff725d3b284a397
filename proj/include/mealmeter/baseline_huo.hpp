#pragma once

#include <array>
#include <span>
#include <vector>

#include "mealmeter/pipeline_model.hpp"

namespace mealmeter {

inline constexpr int kKernelCount = 5;

/// Five Gaussian kernels at equidistant interior times over the sampled
/// post-meal window (~15..75 min at the 90-min / 8 Hz defaults), symmetric
/// about the window midpoint. Bandwidth defaults to half the center spacing.
struct KernelBank {
    std::size_t segment_len = 0; // expected post-meal sample count
    double rate_hz = 0.0;
    std::array<double, kKernelCount> centers_s{};
    double bandwidth_s = 0.0;
};

KernelBank make_kernel_bank(std::size_t segment_len, double rate_hz, double bandwidth_min = -1.0);

/// Kernel-weighted AUC of the (min-normalized) post-meal glucose segment:
/// trapezoidal sum of g(t) * exp(-(t - c_m)^2 / (2 b^2)) * dt per kernel.
std::array<double, kKernelCount> gaussian_auc_features(std::span<const double> bgl_post,
                                                       const KernelBank& bank);

/// One row per window (sorted by subject, then time): the 5 kernel features,
/// with the targets attached. Reuses FeatureMatrix so the split/fit/eval path
/// is identical to the main method's.
FeatureMatrix build_baseline_matrix(std::span<const MealWindow> windows, const KernelBank& bank);

/// Per-target least squares on the kernel features (the multi-output linear
/// head standing in for the original network).
std::array<LinearModel, kTargetCount> fit_baseline(const FeatureMatrix& train);

Eigen::MatrixXd predict_baseline(const std::array<LinearModel, kTargetCount>& models,
                                 const FeatureMatrix& rows, bool clamp_at_zero = true);

} // namespace mealmeter
