#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mealmeter/preprocess.hpp"
#include "oracles.hpp"

using namespace mealmeter;

namespace {

TimeSeries make_series(ChannelKind kind, double start, double rate, std::vector<double> values) {
    TimeSeries ts;
    ts.kind = kind;
    ts.start = start;
    ts.rate = rate;
    ts.values = std::move(values);
    return ts;
}

// brute-force reference for downsampling: sample mean per target interval
std::vector<double> interval_mean_oracle(const TimeSeries& src, double target) {
    const double span = src.duration();
    const auto n_out = static_cast<std::size_t>(std::floor(span * target + 1e-9)) + 1;
    std::vector<double> out(n_out);
    for (std::size_t k = 0; k < n_out; ++k) {
        double sum = 0.0;
        int cnt = 0;
        for (std::size_t i = 0; i < src.values.size(); ++i) {
            const double t = static_cast<double>(i) / src.rate;
            if (t >= static_cast<double>(k) / target - 1e-12 &&
                t < static_cast<double>(k + 1) / target - 1e-12) {
                sum += src.values[i];
                ++cnt;
            }
        }
        REQUIRE(cnt > 0);
        out[k] = sum / cnt;
    }
    return out;
}

} // namespace

TEST_CASE("resample: linear upsampling of a ramp") {
    const TimeSeries ts = make_series(ChannelKind::HR, 0.0, 1.0, {0, 1, 2, 3});
    const TimeSeries out = resample(ts, 2.0);
    const std::vector<double> expect = {0, 0.5, 1, 1.5, 2, 2.5, 3};
    REQUIRE(out.values.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i)
        CHECK(out.values[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    CHECK(out.rate == 2.0);
    CHECK(out.start == ts.start);
}

TEST_CASE("resample: constants are fixed points at any rate pair") {
    Rng rng(9);
    for (int rep = 0; rep < 30; ++rep) {
        const double r_src = rng.uniform(0.5, 64.0);
        const double r_dst = rng.uniform(0.5, 64.0);
        const auto n = static_cast<std::size_t>(10 + rng.bounded(100));
        const TimeSeries ts =
            make_series(ChannelKind::EDA, 0.0, r_src, std::vector<double>(n, 2.5));
        const TimeSeries out = resample(ts, r_dst);
        for (double v : out.values)
            CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
    }
}

TEST_CASE("resample: 64 -> 8 Hz takes the mean of each 8-sample block") {
    Rng rng(21);
    TimeSeries ts = make_series(ChannelKind::BVP, 0.0, 64.0, {});
    for (int i = 0; i < 640; ++i)
        ts.values.push_back(rng.normal());
    const TimeSeries out = resample(ts, 8.0);
    REQUIRE(out.values.size() == 80);
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        double sum = 0.0;
        for (std::size_t i = 8 * k; i < 8 * k + 8; ++i)
            sum += ts.values[i];
        CHECK(out.values[k] == doctest::Approx(sum / 8.0).epsilon(1e-12));
    }
}

TEST_CASE("resample: downsampling matches the interval-mean oracle for awkward rate pairs") {
    Rng rng(33);
    for (const auto& [r_src, r_dst] : std::vector<std::pair<double, double>>{
             {32.0, 8.0}, {7.0, 3.0}, {5.0, 2.0}, {64.0, 8.0}, {4.0, 1.0}}) {
        TimeSeries ts = make_series(ChannelKind::ACC_X, 0.0, r_src, {});
        const auto n = static_cast<std::size_t>(r_src * 20.0);
        for (std::size_t i = 0; i < n; ++i)
            ts.values.push_back(rng.normal());
        const TimeSeries out = resample(ts, r_dst);
        const auto expect = interval_mean_oracle(ts, r_dst);
        REQUIRE(out.values.size() == expect.size());
        for (std::size_t k = 0; k < expect.size(); ++k)
            CHECK(out.values[k] == doctest::Approx(expect[k]).epsilon(1e-12));
    }
}

TEST_CASE("resample: upsampling is exact on affine signals") {
    Rng rng(41);
    for (int rep = 0; rep < 40; ++rep) {
        const double r_src = rng.uniform(0.5, 16.0);
        const double r_dst = r_src * rng.uniform(1.0, 8.0); // upsampling only
        const double a = rng.uniform(-5.0, 5.0), b = rng.uniform(-2.0, 2.0);
        TimeSeries ts = make_series(ChannelKind::TEMP, 0.0, r_src, {});
        const auto n = static_cast<std::size_t>(16 + rng.bounded(64));
        for (std::size_t i = 0; i < n; ++i)
            ts.values.push_back(a + b * static_cast<double>(i) / r_src);
        const TimeSeries out = resample(ts, r_dst);
        for (std::size_t k = 0; k < out.values.size(); ++k) {
            const double t = static_cast<double>(k) / r_dst;
            if (t >= ts.duration())
                continue; // clamped endpoint
            CHECK(std::abs(out.values[k] - (a + b * t)) < 1e-9);
        }
    }
}

TEST_CASE("resample: identical rates reproduce the samples") {
    const TimeSeries ts = make_series(ChannelKind::HR, 5.0, 4.0, {1, 2, 3, 4, 5});
    const TimeSeries out = resample(ts, 4.0);
    REQUIRE(out.values.size() == ts.values.size());
    for (std::size_t i = 0; i < ts.values.size(); ++i)
        CHECK(out.values[i] == doctest::Approx(ts.values[i]).epsilon(1e-12));
}

TEST_CASE("resample: fewer than two samples is an error") {
    const TimeSeries ts = make_series(ChannelKind::HR, 0.0, 1.0, {1});
    CHECK_THROWS_AS(resample(ts, 2.0), data_error);
}

TEST_CASE("moving average: constants are fixed points") {
    const TimeSeries ts = make_series(ChannelKind::ACC_MAG, 0.0, 8.0, {1, 1, 1, 1});
    const TimeSeries out = moving_average(ts, 2);
    for (double v : out.values)
        CHECK(v == 1.0);
}

TEST_CASE("moving average: trailing means with expanding warm-up") {
    const TimeSeries ts = make_series(ChannelKind::ACC_MAG, 0.0, 8.0, {0, 2, 4, 6});
    const TimeSeries out = moving_average(ts, 2);
    const std::vector<double> expect = {0, 1, 3, 5};
    REQUIRE(out.values.size() == 4);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(out.values[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("moving average: window larger than the series gives expanding means") {
    const TimeSeries ts = make_series(ChannelKind::ACC_MAG, 0.0, 8.0, {2, 4, 6, 8, 10});
    const TimeSeries out = moving_average(ts, 20);
    REQUIRE(out.values.size() == 5);
    CHECK(out.values[0] == 2.0);
    CHECK(out.values[1] == doctest::Approx((2.0 + 4.0) / 2.0));
    CHECK(out.values[2] == doctest::Approx((2.0 + 4.0 + 6.0) / 3.0));
    CHECK(out.values[4] == doctest::Approx((2.0 + 4.0 + 6.0 + 8.0 + 10.0) / 5.0));
}

TEST_CASE("moving average: zero window is an error; output stays inside input bounds") {
    const TimeSeries ts = make_series(ChannelKind::ACC_MAG, 0.0, 8.0, {1, 2, 3});
    CHECK_THROWS_AS(moving_average(ts, 0), data_error);

    Rng rng(55);
    for (int rep = 0; rep < 20; ++rep) {
        TimeSeries noisy = make_series(ChannelKind::ACC_MAG, 0.0, 8.0, {});
        for (int i = 0; i < 500; ++i)
            noisy.values.push_back(rng.normal(0.0, 3.0));
        const double lo = *std::min_element(noisy.values.begin(), noisy.values.end());
        const double hi = *std::max_element(noisy.values.begin(), noisy.values.end());
        const TimeSeries out = moving_average(noisy, 1 + rng.bounded(40));
        for (double v : out.values) {
            CHECK(v >= lo - 1e-12);
            CHECK(v <= hi + 1e-12);
        }
    }
}

TEST_CASE("acc magnitude: 3-4-5 and zero cases") {
    const TimeSeries x = make_series(ChannelKind::ACC_X, 0.0, 32.0, {3, 0});
    const TimeSeries y = make_series(ChannelKind::ACC_Y, 0.0, 32.0, {4, 0});
    const TimeSeries z = make_series(ChannelKind::ACC_Z, 0.0, 32.0, {0, 0});
    const TimeSeries mag = acc_magnitude(x, y, z);
    CHECK(mag.kind == ChannelKind::ACC_MAG);
    CHECK(mag.values[0] == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(mag.values[1] == 0.0);
}

TEST_CASE("acc magnitude matches the elementwise oracle on random 32 Hz input") {
    Rng rng(60);
    TimeSeries x = make_series(ChannelKind::ACC_X, 0.0, 32.0, {});
    TimeSeries y = make_series(ChannelKind::ACC_Y, 0.0, 32.0, {});
    TimeSeries z = make_series(ChannelKind::ACC_Z, 0.0, 32.0, {});
    for (int i = 0; i < 320; ++i) {
        x.values.push_back(rng.normal());
        y.values.push_back(rng.normal());
        z.values.push_back(rng.normal());
    }
    const TimeSeries mag = acc_magnitude(x, y, z);
    for (std::size_t i = 0; i < mag.values.size(); ++i) {
        const double expect = std::sqrt(x.values[i] * x.values[i] + y.values[i] * y.values[i] +
                                        z.values[i] * z.values[i]);
        CHECK(mag.values[i] == doctest::Approx(expect).epsilon(1e-15));
    }
}

TEST_CASE("acc magnitude rejects mismatched grids") {
    const TimeSeries x = make_series(ChannelKind::ACC_X, 0.0, 32.0, {1, 2});
    const TimeSeries y = make_series(ChannelKind::ACC_Y, 0.0, 32.0, {1, 2});
    const TimeSeries z_rate = make_series(ChannelKind::ACC_Z, 0.0, 16.0, {1, 2});
    const TimeSeries z_len = make_series(ChannelKind::ACC_Z, 0.0, 32.0, {1, 2, 3});
    const TimeSeries z_start = make_series(ChannelKind::ACC_Z, 1.0, 32.0, {1, 2});
    CHECK_THROWS_AS(acc_magnitude(x, y, z_rate), data_error);
    CHECK_THROWS_AS(acc_magnitude(x, y, z_len), data_error);
    CHECK_THROWS_AS(acc_magnitude(x, y, z_start), data_error);
}

TEST_CASE("min normalize: basic and joint variants") {
    const auto out = min_normalize({100, 110, 120});
    CHECK(out == std::vector<double>{0, 10, 20});
    CHECK(min_normalize({90, 90}) == std::vector<double>{0, 0});
    CHECK_THROWS_AS(min_normalize({}), data_error);

    std::vector<double> pre = {95, 90}, post = {100, 140};
    joint_min_normalize(pre, post);
    CHECK(pre == std::vector<double>{5, 0});
    CHECK(post == std::vector<double>{10, 50});
}

TEST_CASE("min normalize: minimum becomes exactly 0 and differences survive") {
    Rng rng(71);
    for (int rep = 0; rep < 25; ++rep) {
        std::vector<double> xs = oracle::random_segment(rng, 64, 100.0, 15.0);
        const auto out = min_normalize(xs);
        CHECK(*std::min_element(out.begin(), out.end()) == 0.0);
        for (std::size_t i = 1; i < xs.size(); ++i)
            CHECK(out[i] - out[0] == doctest::Approx(xs[i] - xs[0]).epsilon(1e-12));
    }
}

// ---- meal-window extraction ---------------------------------------------------

namespace {

// one lab day: channels 08:00-18:00 on 2026-01-05, glucose carrying a marker
SubjectRecord make_day_record(const std::string& subject, double day_offset_s = 0.0) {
    const double start = parse_iso8601_utc("2026-01-05T08:00:00Z") + day_offset_s;
    const double span = 10.0 * 3600.0;
    SubjectRecord rec;
    rec.subject_id = subject;
    rec.day_id = "day1";

    auto fill = [&](ChannelKind kind, double rate, auto value_at) {
        TimeSeries ts;
        ts.kind = kind;
        ts.start = start;
        ts.rate = rate;
        const auto n = static_cast<std::size_t>(span * rate) + 1;
        ts.values.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            ts.values.push_back(value_at(static_cast<double>(i) / rate));
        rec.channels.emplace(kind, std::move(ts));
    };

    fill(ChannelKind::BGL, 1.0 / 300.0, [](double t) { return 90.0 + t / 3600.0; });
    fill(ChannelKind::EDA, 4.0, [](double t) { return 2.0 + 0.1 * std::sin(t / 500.0); });
    fill(ChannelKind::HR, 1.0, [](double) { return 70.0; });
    fill(ChannelKind::TEMP, 4.0, [](double) { return 33.5; });
    fill(ChannelKind::ACC_X, 32.0, [](double t) { return 0.02 * std::sin(t); });
    fill(ChannelKind::ACC_Y, 32.0, [](double t) { return 0.02 * std::cos(t); });
    fill(ChannelKind::ACC_Z, 32.0, [](double) { return 1.0; });
    return rec;
}

MealEvent meal_at(const std::string& subject, const char* iso, double carbs = 60.0) {
    MealEvent m;
    m.subject_id = subject;
    m.timestamp = parse_iso8601_utc(iso);
    m.carbs_g = carbs;
    m.protein_g = 20.0;
    m.fat_g = 15.0;
    return m;
}

} // namespace

TEST_CASE("extract: ample coverage yields full windows of 43200 samples") {
    SubjectRecord rec = make_day_record("S01");
    rec.meals = {meal_at("S01", "2026-01-05T12:30:00Z")};
    const WindowExtraction ex = extract_meal_windows(rec, PreprocessConfig{});
    REQUIRE(ex.windows.size() == 1);
    CHECK(ex.skipped == 0);
    const MealWindow& w = ex.windows[0];
    CHECK(w.rate == 8.0);
    REQUIRE(w.segments.size() == 6);
    for (const auto& [sig, seg] : w.segments) {
        INFO(to_string(sig));
        CHECK(seg.size() == 43200);
        for (double v : seg)
            REQUIRE(std::isfinite(v));
    }
}

TEST_CASE("extract: meal 30 minutes after start is skipped with a warning") {
    SubjectRecord rec = make_day_record("S01");
    rec.meals = {meal_at("S01", "2026-01-05T08:30:00Z")};
    const WindowExtraction ex = extract_meal_windows(rec, PreprocessConfig{});
    CHECK(ex.windows.empty());
    CHECK(ex.skipped == 1);
    REQUIRE(ex.warnings.size() == 1);
    CHECK(ex.warnings[0].find("S01") != std::string::npos);
    CHECK(ex.warnings[0].find("pre") != std::string::npos);
}

TEST_CASE("extract: meal too close to the end lacks post coverage") {
    SubjectRecord rec = make_day_record("S01");
    rec.meals = {meal_at("S01", "2026-01-05T17:00:00Z")};
    const WindowExtraction ex = extract_meal_windows(rec, PreprocessConfig{});
    CHECK(ex.windows.empty());
    CHECK(ex.skipped == 1);
}

TEST_CASE("extract: five meals per day over three days give fifteen windows") {
    std::vector<MealWindow> all;
    for (int d = 0; d < 3; ++d) {
        SubjectRecord rec = make_day_record("S01", static_cast<double>(d) * 2.0 * 86400.0);
        const double base = rec.channels.at(ChannelKind::HR).start;
        for (int m = 0; m < 5; ++m) {
            MealEvent ev;
            ev.subject_id = "S01";
            // 09:30, 11:00, 12:30, 14:00, 15:30 - all fully covered
            ev.timestamp = base + 5400.0 + static_cast<double>(m) * 5400.0;
            ev.carbs_g = 50.0 + m;
            ev.protein_g = 20.0;
            ev.fat_g = 10.0;
            rec.meals.push_back(ev);
        }
        const WindowExtraction ex = extract_meal_windows(rec, PreprocessConfig{});
        CHECK(ex.skipped == 0);
        for (const MealWindow& w : ex.windows)
            all.push_back(w);
    }
    CHECK(all.size() == 15);
}

TEST_CASE("extract: glucose pre/post pair is normalized against its joint minimum") {
    SubjectRecord rec = make_day_record("S01"); // BGL ramps upward all day
    rec.meals = {meal_at("S01", "2026-01-05T12:30:00Z")};
    const WindowExtraction ex = extract_meal_windows(rec, PreprocessConfig{});
    REQUIRE(ex.windows.size() == 1);
    const auto& pre = ex.windows[0].segments.at(SignalName::BGL_PRE);
    const auto& post = ex.windows[0].segments.at(SignalName::BGL_POST);
    const double pre_min = *std::min_element(pre.begin(), pre.end());
    const double post_min = *std::min_element(post.begin(), post.end());
    CHECK(std::min(pre_min, post_min) == 0.0);
    CHECK(pre_min == 0.0);  // rising signal: the joint minimum sits in the pre window
    CHECK(post_min > 0.0);
    // differences along the ramp survive normalization: the pre window starts
    // 3 h before the last post sample (less one 8 Hz step)
    CHECK(post.back() - pre.front() ==
          doctest::Approx((3.0 * 3600.0 - 0.125) / 3600.0).epsilon(1e-9));
}

TEST_CASE("extract: missing channel names the subject and channel") {
    SubjectRecord rec = make_day_record("S07");
    rec.channels.erase(ChannelKind::EDA);
    rec.meals = {meal_at("S07", "2026-01-05T12:30:00Z")};
    try {
        extract_meal_windows(rec, PreprocessConfig{});
        FAIL("expected data error");
    } catch (const data_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("S07") != std::string::npos);
        CHECK(msg.find("EDA") != std::string::npos);
    }
}

TEST_CASE("extract: ACC_MAG segment equals the hand-composed pipeline") {
    SubjectRecord rec = make_day_record("S01");
    rec.meals = {meal_at("S01", "2026-01-05T12:30:00Z")};
    PreprocessConfig cfg;
    const WindowExtraction ex = extract_meal_windows(rec, cfg);
    REQUIRE(ex.windows.size() == 1);
    const auto& seg = ex.windows[0].segments.at(SignalName::ACC_MAG);

    // oracle: resample axes -> magnitude -> moving average -> slice
    const TimeSeries mag = moving_average(
        acc_magnitude(resample(rec.channels.at(ChannelKind::ACC_X), cfg.resample_hz),
                      resample(rec.channels.at(ChannelKind::ACC_Y), cfg.resample_hz),
                      resample(rec.channels.at(ChannelKind::ACC_Z), cfg.resample_hz)),
        static_cast<std::size_t>(cfg.smooth_window));
    const auto k0 = static_cast<std::size_t>(
        std::llround((rec.meals[0].timestamp - mag.start) * cfg.resample_hz));
    REQUIRE(seg.size() == 43200);
    for (std::size_t i = 0; i < seg.size(); ++i)
        REQUIRE(seg[i] == mag.values[k0 + i]);
}

TEST_CASE("extract: BVP is only produced when configured") {
    SubjectRecord rec = make_day_record("S01");
    {
        TimeSeries bvp;
        bvp.kind = ChannelKind::BVP;
        bvp.start = rec.channels.at(ChannelKind::HR).start;
        bvp.rate = 64.0;
        bvp.values.assign(static_cast<std::size_t>(64.0 * 36000.0) + 1, 1.0);
        rec.channels.emplace(ChannelKind::BVP, std::move(bvp));
    }
    rec.meals = {meal_at("S01", "2026-01-05T12:30:00Z")};

    PreprocessConfig without;
    CHECK(extract_meal_windows(rec, without).windows[0].segments.count(SignalName::BVP) == 0);

    PreprocessConfig with;
    with.signals.push_back(SignalName::BVP);
    const WindowExtraction ex = extract_meal_windows(rec, with);
    REQUIRE(ex.windows.size() == 1);
    CHECK(ex.windows[0].segments.at(SignalName::BVP).size() == 43200);
}
