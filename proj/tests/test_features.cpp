#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mealmeter/features.hpp"
#include "oracles.hpp"

using namespace mealmeter;

namespace {
constexpr double kPi = 3.14159265358979323846;

double tf(const std::array<double, kTimeFeatureCount>& f, FeatureName n) {
    return f[static_cast<std::size_t>(n)];
}
} // namespace

TEST_CASE("time features: constant segment takes the degenerate convention") {
    const std::vector<double> seg = {5, 5, 5, 5};
    const auto f = time_features(seg);
    CHECK(tf(f, FeatureName::MIN) == 5.0);
    CHECK(tf(f, FeatureName::MAX) == 5.0);
    CHECK(tf(f, FeatureName::MEAN) == 5.0);
    CHECK(tf(f, FeatureName::MEDIAN) == 5.0);
    CHECK(tf(f, FeatureName::SD) == 0.0);
    CHECK(tf(f, FeatureName::RANGE) == 0.0);
    CHECK(tf(f, FeatureName::RMS) == 5.0);
    CHECK(tf(f, FeatureName::IQR) == 0.0);
    CHECK(tf(f, FeatureName::SKEW) == 0.0);
    CHECK(tf(f, FeatureName::KURT) == 0.0);
    CHECK(tf(f, FeatureName::AUTOCORR) == 0.0);
    CHECK(tf(f, FeatureName::ENTROPY) == 0.0);
    CHECK(tf(f, FeatureName::ZCR) == 0.0);
}

TEST_CASE("time features: alternating unit signal") {
    const std::vector<double> seg = {-1, 1, -1, 1};
    const auto f = time_features(seg);
    CHECK(tf(f, FeatureName::MEAN) == 0.0);
    CHECK(tf(f, FeatureName::ZCR) == 1.0);
    CHECK(tf(f, FeatureName::RMS) == 1.0);
    CHECK(tf(f, FeatureName::SD) == 1.0);
    CHECK(tf(f, FeatureName::RANGE) == 2.0);
}

TEST_CASE("time features: sine statistics match closed forms") {
    std::vector<double> seg(1000);
    for (std::size_t i = 0; i < seg.size(); ++i)
        seg[i] = 2.0 * std::sin(2.0 * kPi * 5.0 * static_cast<double>(i) / 1000.0);
    const auto f = time_features(seg);
    CHECK(std::abs(tf(f, FeatureName::RMS) - std::sqrt(2.0)) < 0.01);
    CHECK(std::abs(tf(f, FeatureName::MEAN)) < 1e-12);
    CHECK(tf(f, FeatureName::RANGE) == doctest::Approx(4.0).epsilon(0.001));
}

TEST_CASE("time features: moments, quantiles and lag-1 match brute-force oracles") {
    Rng rng(101);
    for (int rep = 0; rep < 20; ++rep) {
        const auto seg = oracle::random_segment(rng, 50 + rng.bounded(100), 10.0, 4.0);
        const auto f = time_features(seg);
        const double n = static_cast<double>(seg.size());

        const double mean = std::accumulate(seg.begin(), seg.end(), 0.0) / n;
        double m2 = 0, m3 = 0, m4 = 0, sq = 0;
        for (double v : seg) {
            const double d = v - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
            sq += v * v;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        CHECK(tf(f, FeatureName::MEAN) == doctest::Approx(mean).epsilon(1e-12));
        CHECK(tf(f, FeatureName::SD) == doctest::Approx(std::sqrt(m2)).epsilon(1e-12));
        CHECK(tf(f, FeatureName::SKEW) == doctest::Approx(m3 / std::pow(m2, 1.5)).epsilon(1e-9));
        CHECK(tf(f, FeatureName::KURT) == doctest::Approx(m4 / (m2 * m2) - 3.0).epsilon(1e-9));
        CHECK(tf(f, FeatureName::RMS) == doctest::Approx(std::sqrt(sq / n)).epsilon(1e-12));
        CHECK(tf(f, FeatureName::MEDIAN) ==
              doctest::Approx(oracle::sorted_quantile(seg, 0.5)).epsilon(1e-12));
        CHECK(tf(f, FeatureName::IQR) ==
              doctest::Approx(oracle::sorted_quantile(seg, 0.75) - oracle::sorted_quantile(seg, 0.25))
                  .epsilon(1e-12));

        double lag1 = 0.0;
        for (std::size_t i = 0; i + 1 < seg.size(); ++i)
            lag1 += (seg[i] - mean) * (seg[i + 1] - mean);
        CHECK(tf(f, FeatureName::AUTOCORR) == doctest::Approx(lag1 / (m2 * n)).epsilon(1e-9));
    }
}

TEST_CASE("time features: histogram entropy on constructed distributions") {
    // half the mass at each end: two occupied bins -> ln 2
    std::vector<double> two_level;
    for (int i = 0; i < 32; ++i)
        two_level.push_back(i % 2 == 0 ? 0.0 : 1.0);
    CHECK(tf(time_features(two_level), FeatureName::ENTROPY) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // exactly one sample per bin edge-to-edge -> ln(bins)
    std::vector<double> ramp;
    for (int i = 0; i < 16; ++i)
        ramp.push_back(static_cast<double>(i));
    CHECK(tf(time_features(ramp), FeatureName::ENTROPY) ==
          doctest::Approx(std::log(16.0)).epsilon(1e-12));
}

TEST_CASE("time features: exact zeros after mean removal do not count as crossings") {
    // mean-removed: [2, 0, -2, 0] -> all consecutive products are <= 0 but touch zero
    const std::vector<double> seg = {4, 2, 0, 2};
    CHECK(tf(time_features(seg), FeatureName::ZCR) == 0.0);

    const std::vector<double> crossing = {3, 1, 1, 3}; // mean-removed [1,-1,-1,1]
    CHECK(tf(time_features(crossing), FeatureName::ZCR) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("time features: too-short segments are errors") {
    CHECK_THROWS_AS(time_features(std::vector<double>{1.0}), data_error);
}

// ---- frequency features -------------------------------------------------------

TEST_CASE("freq features: bin-aligned sine concentrates the spectrum") {
    const std::size_t n = 4096;
    std::vector<double> seg(n);
    for (std::size_t i = 0; i < n; ++i)
        seg[i] = 3.0 * std::sin(2.0 * kPi * 1.0 * static_cast<double>(i) / 8.0); // 1 Hz at 8 Hz
    const auto f = freq_features(seg, 8.0);
    CHECK(f[1] == 1.0); // dominant frequency, exactly on a bin
    CHECK(f[2] < 0.1);  // near-degenerate spectral entropy
    CHECK(f[0] == doctest::Approx(4.5).epsilon(1e-9)); // amplitude^2 / 2
}

TEST_CASE("freq features: constant segment yields zeros") {
    const std::vector<double> seg(64, 7.0);
    const auto f = freq_features(seg, 8.0);
    CHECK(f[0] == 0.0);
    CHECK(f[1] == 0.0);
    CHECK(f[2] == 0.0);
}

TEST_CASE("freq features: white noise spreads the spectrum and obeys Parseval") {
    Rng rng(202);
    const auto seg = oracle::random_segment(rng, 4096);
    const auto f = freq_features(seg, 8.0);
    CHECK(f[2] > 0.9);

    const double mean = std::accumulate(seg.begin(), seg.end(), 0.0) / 4096.0;
    double var = 0.0;
    for (double v : seg)
        var += (v - mean) * (v - mean);
    var /= 4096.0;
    CHECK(f[0] == doctest::Approx(var).epsilon(0.02));
}

TEST_CASE("freq features: agree with the naive DFT oracle on small segments") {
    Rng rng(303);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 32 + 2 * rng.bounded(32); // mixed even lengths
        const auto seg = oracle::random_segment(rng, n, 5.0, 2.0);
        const auto f = freq_features(seg, 8.0);

        const auto spec = oracle::naive_periodogram(seg);
        CHECK(f[0] == doctest::Approx(spec.total).epsilon(1e-9));

        std::size_t peak = 0;
        for (std::size_t k = 1; k < spec.power.size(); ++k)
            if (spec.power[k] > spec.power[peak])
                peak = k;
        CHECK(f[1] == doctest::Approx(static_cast<double>(peak + 1) * 8.0 / static_cast<double>(n))
                          .epsilon(1e-9));

        double h = 0.0;
        for (double p : spec.power) {
            if (p <= 0.0)
                continue;
            const double q = p / spec.total;
            h -= q * std::log(q);
        }
        h /= std::log(static_cast<double>(spec.power.size()));
        CHECK(f[2] == doctest::Approx(h).epsilon(1e-9));
    }
}

TEST_CASE("freq features: an impulse has a maximally flat spectrum") {
    // delta at t=0: every non-Nyquist bin carries identical power, so spectral
    // entropy sits at the top of its [0, 1] scale
    // (the Nyquist bin folds at half weight, so the scale tops out just shy of 1)
    std::vector<double> seg(64, 0.0);
    seg[0] = 1.0;
    const auto f = freq_features(seg, 8.0);
    CHECK(f[2] > 0.99);
}

TEST_CASE("freq features: too-short segments are errors") {
    CHECK_THROWS_AS(freq_features(std::vector<double>{1, 2, 3}, 8.0), data_error);
}

// ---- invariance properties --------------------------------------------------------

TEST_CASE("shift invariance over 120 random segments") {
    Rng rng(404);
    for (int rep = 0; rep < 120; ++rep) {
        const auto seg = oracle::random_segment(rng, 64 + rng.bounded(192));
        const double c = rng.uniform(-10.0, 10.0);
        std::vector<double> shifted(seg);
        for (double& v : shifted)
            v += c;

        const auto f0 = time_features(seg);
        const auto f1 = time_features(shifted);
        CHECK(std::abs(tf(f1, FeatureName::MIN) - tf(f0, FeatureName::MIN) - c) <= 1e-9);
        CHECK(std::abs(tf(f1, FeatureName::MAX) - tf(f0, FeatureName::MAX) - c) <= 1e-9);
        CHECK(std::abs(tf(f1, FeatureName::MEAN) - tf(f0, FeatureName::MEAN) - c) <= 1e-9);
        CHECK(std::abs(tf(f1, FeatureName::MEDIAN) - tf(f0, FeatureName::MEDIAN) - c) <= 1e-9);
        CHECK(std::abs(tf(f1, FeatureName::SD) - tf(f0, FeatureName::SD)) <= 1e-9);
        CHECK(std::abs(tf(f1, FeatureName::RANGE) - tf(f0, FeatureName::RANGE)) <= 1e-9);
        CHECK(std::abs(tf(f1, FeatureName::IQR) - tf(f0, FeatureName::IQR)) <= 1e-9);
        CHECK(std::abs(tf(f1, FeatureName::AUTOCORR) - tf(f0, FeatureName::AUTOCORR)) <= 1e-9);
        CHECK(std::abs(tf(f1, FeatureName::ZCR) - tf(f0, FeatureName::ZCR)) <= 1e-9);

        const auto g0 = freq_features(seg, 8.0);
        const auto g1 = freq_features(shifted, 8.0);
        CHECK(std::abs(g1[0] - g0[0]) <= 1e-9);
        CHECK(std::abs(g1[1] - g0[1]) <= 1e-9);
        CHECK(std::abs(g1[2] - g0[2]) <= 1e-9);
    }
}

TEST_CASE("scale equivariance over 120 random segments") {
    Rng rng(505);
    for (int rep = 0; rep < 120; ++rep) {
        const auto seg = oracle::random_segment(rng, 64 + rng.bounded(192));
        const double s = rng.uniform(0.1, 5.0);
        std::vector<double> scaled(seg);
        for (double& v : scaled)
            v *= s;

        const auto f0 = time_features(seg);
        const auto f1 = time_features(scaled);
        CHECK(std::abs(tf(f1, FeatureName::SD) - s * tf(f0, FeatureName::SD)) <= 1e-9);
        CHECK(std::abs(tf(f1, FeatureName::RANGE) - s * tf(f0, FeatureName::RANGE)) <= 1e-9);
        CHECK(std::abs(tf(f1, FeatureName::RMS) - s * tf(f0, FeatureName::RMS)) <= 1e-9);
        CHECK(std::abs(tf(f1, FeatureName::IQR) - s * tf(f0, FeatureName::IQR)) <= 1e-9);
        CHECK(std::abs(tf(f1, FeatureName::SKEW) - tf(f0, FeatureName::SKEW)) <= 1e-9);
        CHECK(std::abs(tf(f1, FeatureName::KURT) - tf(f0, FeatureName::KURT)) <= 1e-9);
        CHECK(std::abs(tf(f1, FeatureName::AUTOCORR) - tf(f0, FeatureName::AUTOCORR)) <= 1e-9);

        const auto g0 = freq_features(seg, 8.0);
        const auto g1 = freq_features(scaled, 8.0);
        CHECK(std::abs(g1[0] - s * s * g0[0]) <= 1e-9 * std::max(1.0, s * s * g0[0]));
        CHECK(std::abs(g1[1] - g0[1]) <= 1e-9);
        CHECK(std::abs(g1[2] - g0[2]) <= 1e-9);
    }
}

TEST_CASE("Parseval: total spectral power equals population variance") {
    Rng rng(606);
    for (int rep = 0; rep < 120; ++rep) {
        const auto seg = oracle::random_segment(rng, 16 + rng.bounded(500), 3.0, 2.0);
        const auto f = freq_features(seg, 8.0);
        const double mean = std::accumulate(seg.begin(), seg.end(), 0.0) /
                            static_cast<double>(seg.size());
        double var = 0.0;
        for (double v : seg)
            var += (v - mean) * (v - mean);
        var /= static_cast<double>(seg.size());
        CHECK(std::abs(f[0] - var) <= 1e-6 * var);
    }
}

TEST_CASE("determinism: identical segments give bit-identical features") {
    Rng rng(707);
    const auto seg = oracle::random_segment(rng, 1000, 2.0, 5.0);
    const auto t1 = time_features(seg);
    const auto t2 = time_features(seg);
    const auto g1 = freq_features(seg, 8.0);
    const auto g2 = freq_features(seg, 8.0);
    for (int i = 0; i < kTimeFeatureCount; ++i)
        CHECK(t1[static_cast<std::size_t>(i)] == t2[static_cast<std::size_t>(i)]);
    for (int i = 0; i < kFreqFeatureCount; ++i)
        CHECK(g1[static_cast<std::size_t>(i)] == g2[static_cast<std::size_t>(i)]);
}

// ---- matrix assembly ------------------------------------------------------------

namespace {

MealWindow tiny_window(const std::string& subject, double ts, double carbs,
                       const std::vector<SignalName>& signals, uint64_t seed) {
    Rng rng(seed);
    MealWindow w;
    w.meal.subject_id = subject;
    w.meal.timestamp = ts;
    w.meal.carbs_g = carbs;
    w.meal.protein_g = 10.0;
    w.meal.fat_g = 5.0;
    w.rate = 8.0;
    for (SignalName s : signals)
        w.segments[s] = oracle::random_segment(rng, 64, 1.0, 0.5);
    return w;
}

} // namespace

TEST_CASE("feature matrix: 15 windows x 6 signals give a 15x96 matrix") {
    const auto signals = default_signal_set();
    std::vector<MealWindow> windows;
    for (int i = 0; i < 15; ++i)
        windows.push_back(tiny_window("S01", 1000.0 * (i + 1), 40.0 + i, signals, 900 + i));
    const FeatureMatrix m = build_feature_matrix(windows, signals);
    CHECK(m.rows() == 15);
    CHECK(m.cols() == 96);
    CHECK(m.column_names.size() == 96);
    CHECK(m.column_names[0] == "BGL_PRE_MIN");
    CHECK(m.column_names[95] == "ACC_MAG_SPEC_ENTROPY");
    CHECK(m.targets.rows() == 15);
    // rows sorted by timestamp within the subject
    for (std::size_t r = 1; r < m.rows(); ++r)
        CHECK(m.keys[r].timestamp > m.keys[r - 1].timestamp);
}

TEST_CASE("feature matrix: empty window list keeps the full column schema") {
    const FeatureMatrix m = build_feature_matrix({}, default_signal_set());
    CHECK(m.rows() == 0);
    CHECK(m.cols() == 96);
}

TEST_CASE("feature matrix: one window over a single signal gives a 1x16 row") {
    const std::vector<SignalName> signals = {SignalName::BGL_POST};
    const auto w = tiny_window("S01", 500.0, 30.0, signals, 42);
    const FeatureMatrix m = build_feature_matrix(std::vector<MealWindow>{w}, signals);
    CHECK(m.rows() == 1);
    CHECK(m.cols() == 16);
    CHECK(m.targets(0, 0) == 30.0);
}

TEST_CASE("feature matrix: non-finite features are reported with row and column") {
    const std::vector<SignalName> signals = {SignalName::BGL_POST};
    auto w = tiny_window("S09", 500.0, 30.0, signals, 13);
    // overflow the second moment so RMS becomes infinite
    w.segments[SignalName::BGL_POST][5] = 1e308;
    try {
        build_feature_matrix(std::vector<MealWindow>{w}, signals);
        FAIL("expected numeric error");
    } catch (const numeric_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("S09") != std::string::npos);
        CHECK(msg.find("BGL_POST") != std::string::npos);
    }
}

TEST_CASE("feature matrix: rows are sorted across subjects") {
    const std::vector<SignalName> signals = {SignalName::HR};
    std::vector<MealWindow> windows;
    windows.push_back(tiny_window("S02", 100.0, 10.0, signals, 1));
    windows.push_back(tiny_window("S01", 200.0, 20.0, signals, 2));
    windows.push_back(tiny_window("S01", 100.0, 30.0, signals, 3));
    const FeatureMatrix m = build_feature_matrix(windows, signals);
    REQUIRE(m.rows() == 3);
    CHECK(m.keys[0].subject_id == "S01");
    CHECK(m.keys[0].timestamp == 100.0);
    CHECK(m.keys[1].subject_id == "S01");
    CHECK(m.keys[1].timestamp == 200.0);
    CHECK(m.keys[2].subject_id == "S02");
    CHECK(m.targets(0, 0) == 30.0);
}
