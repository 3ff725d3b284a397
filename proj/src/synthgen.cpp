#include "mealmeter/synthgen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace mealmeter {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSessionSeconds = 10.0 * 3600.0; // 08:00 - 18:00
constexpr int kSessionStartHour = 8;

// dataset epoch anchor: 2026-01-05 00:00 UTC; subjects and days are laid out
// on distinct dates (days within a subject are non-consecutive)
constexpr int64_t kBaseEpochDay = 20458; // days since 1970-01-01
constexpr double kKcalPerGramCarb = 4.0;
constexpr double kKcalPerGramProtein = 4.0;
constexpr double kKcalPerGramFat = 9.0;

// smooth compactly supported pulse: 0 at t_rel<=0, 1 at t_rel==rise_s,
// back to 0 at t_rel>=total_s; C1 everywhere
double meal_pulse(double t_rel, double rise_s, double total_s) {
    if (t_rel <= 0.0 || t_rel >= total_s)
        return 0.0;
    if (t_rel <= rise_s) {
        const double u = std::sin(kPi * t_rel / (2.0 * rise_s));
        return u * u;
    }
    const double u = std::cos(kPi * (t_rel - rise_s) / (2.0 * (total_s - rise_s)));
    return u * u;
}

struct MealDraw {
    double t = 0.0; // epoch seconds
    MealLabel label = MealLabel::Meal;
    double carbs = 0.0, protein = 0.0, fat = 0.0, kcal = 0.0;
    double bgl_delay_s = 0.0;
    double bgl_width_s = 0.0; // shared across the subject-day
};

struct SubjectTraits {
    double bgl_baseline = 0.0;
    double hr_baseline = 0.0;
    double eda_tonic = 0.0;
    double eda_phase = 0.0;
    double temp_phase = 0.0;
};

// fixed response shapes for the secondary channels (seconds)
constexpr double kHrRise = 15.0 * 60.0, kHrTotal = 60.0 * 60.0;
constexpr double kEdaRise = 5.0 * 60.0, kEdaTotal = 30.0 * 60.0;
constexpr double kTempRise = 20.0 * 60.0, kTempTotal = 80.0 * 60.0;

double clean_bgl(const SynthConfig& cfg, const SubjectTraits& traits,
                 const std::vector<MealDraw>& meals, double t) {
    double v = traits.bgl_baseline;
    for (const MealDraw& m : meals)
        v += cfg.glucose_gain_mgdl_per_g * m.carbs * meal_pulse(t - m.t, m.bgl_delay_s, m.bgl_width_s);
    return v;
}

double clean_hr(const SynthConfig& cfg, const SubjectTraits& traits,
                const std::vector<MealDraw>& meals, double t) {
    double v = traits.hr_baseline;
    for (const MealDraw& m : meals)
        v += cfg.hr_gain_bpm_per_kcal * m.kcal * meal_pulse(t - m.t, kHrRise, kHrTotal);
    return v;
}

TimeSeries make_channel(ChannelKind kind, double start, double rate) {
    TimeSeries ts;
    ts.kind = kind;
    ts.start = start;
    ts.rate = rate;
    ts.values.resize(static_cast<std::size_t>(std::llround(kSessionSeconds * rate)) + 1);
    return ts;
}

} // namespace

std::vector<ScheduledMeal> default_meal_schedule() {
    return {{30, MealLabel::Meal},
            {150, MealLabel::Snack},
            {270, MealLabel::Meal},
            {390, MealLabel::Snack},
            {510, MealLabel::Meal}};
}

void SynthConfig::validate() const {
    if (n_subjects < 1)
        throw config_error("simulation needs at least 1 subject");
    if (days_per_subject < 1)
        throw config_error("simulation needs at least 1 day per subject");
    if (schedule.empty())
        throw config_error("meal schedule is empty");
    for (const ScheduledMeal& m : schedule)
        if (m.offset_min < 0 || m.offset_min * 60.0 >= kSessionSeconds)
            throw config_error("meal schedule exceeds the 10-hour session span");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i].offset_min <= schedule[i - 1].offset_min)
            throw config_error("meal schedule times must be strictly increasing");
    if (std::abs(carb_frac + protein_frac + fat_frac - 1.0) > 1e-9)
        throw config_error("macronutrient fractions must sum to 1");
    if (carb_frac < 0.0 || protein_frac < 0.0 || fat_frac < 0.0)
        throw config_error("macronutrient fractions must be non-negative");
    for (double g : {glucose_gain_mgdl_per_g, hr_gain_bpm_per_kcal, eda_gain_us_per_g,
                     temp_gain_c_per_kcal})
        if (!std::isfinite(g))
            throw config_error("response gains must be finite");
    for (double s : {noise_bgl, noise_hr, noise_eda, noise_temp, noise_acc, noise_bvp})
        if (!(s >= 0.0) || !std::isfinite(s))
            throw config_error("noise SDs must be non-negative");
    if (meal_kcal <= 0.0 || snack_kcal <= 0.0)
        throw config_error("meal/snack calories must be positive");
    if (mass_jitter < 0.0 || mass_jitter >= 1.0)
        throw config_error("mass jitter must be in [0, 1)");
    if (min_mass_g < 0.0)
        throw config_error("minimum mass must be non-negative");
}

namespace {

struct SubjectDayPlan {
    int subject_idx = 0;
    int day_idx = 0;
    std::string subject_id;
    std::string day_id;
    double session_start = 0.0;
    SubjectTraits traits;
    std::vector<MealDraw> meals;
    std::filesystem::path day_dir;
};

// Channel synthesis for one subject-day. Every random stream is seeded from
// (seed, subject, day, channel), so output bytes do not depend on whether
// plans run serially or on worker threads.
void synthesize_subject_day(const SynthConfig& cfg, const SubjectDayPlan& plan) {
    const auto s = static_cast<uint64_t>(plan.subject_idx);
    const auto d = static_cast<uint64_t>(plan.day_idx);
    const double session_start = plan.session_start;
    const SubjectTraits& traits = plan.traits;
    const std::vector<MealDraw>& meals = plan.meals;

    std::filesystem::create_directories(plan.day_dir);

    {
        Rng rng(mix_seed(cfg.seed, s, d, 10));
        TimeSeries bgl = make_channel(ChannelKind::BGL, session_start, 1.0 / 300.0);
        for (std::size_t i = 0; i < bgl.values.size(); ++i) {
            const double t = session_start + static_cast<double>(i) * 300.0;
            double v = clean_bgl(cfg, traits, meals, t);
            if (cfg.noise_bgl > 0.0)
                v += rng.normal(0.0, cfg.noise_bgl);
            bgl.values[i] = v;
        }
        write_cgm_csv(plan.day_dir / "BGL.csv", bgl, 3);
    }

    // clean per-second heart-rate profile, shared by HR and the BVP phase
    std::vector<double> hr_clean(static_cast<std::size_t>(kSessionSeconds) + 1);
    for (std::size_t i = 0; i < hr_clean.size(); ++i)
        hr_clean[i] = clean_hr(cfg, traits, meals, session_start + static_cast<double>(i));

    {
        Rng rng(mix_seed(cfg.seed, s, d, 11));
        TimeSeries hr = make_channel(ChannelKind::HR, session_start, 1.0);
        for (std::size_t i = 0; i < hr.values.size(); ++i) {
            double v = hr_clean[i];
            if (cfg.noise_hr > 0.0)
                v += rng.normal(0.0, cfg.noise_hr);
            hr.values[i] = v;
        }
        write_wristband_csv(plan.day_dir / "HR.csv", hr, 3);
    }
    {
        Rng rng(mix_seed(cfg.seed, s, d, 12));
        TimeSeries eda = make_channel(ChannelKind::EDA, session_start, 4.0);
        for (std::size_t i = 0; i < eda.values.size(); ++i) {
            const double trel = static_cast<double>(i) / 4.0;
            double v = traits.eda_tonic +
                       0.2 * std::sin(2.0 * kPi * trel / kSessionSeconds + traits.eda_phase);
            for (const MealDraw& m : meals)
                v += cfg.eda_gain_us_per_g * (m.carbs + m.protein) *
                     meal_pulse(session_start + trel - m.t, kEdaRise, kEdaTotal);
            if (cfg.noise_eda > 0.0)
                v += rng.normal(0.0, cfg.noise_eda);
            eda.values[i] = v;
        }
        write_wristband_csv(plan.day_dir / "EDA.csv", eda, 5);
    }
    {
        Rng rng(mix_seed(cfg.seed, s, d, 13));
        TimeSeries temp = make_channel(ChannelKind::TEMP, session_start, 4.0);
        for (std::size_t i = 0; i < temp.values.size(); ++i) {
            const double trel = static_cast<double>(i) / 4.0;
            double v = 33.5 + 0.2 * std::sin(1.5 * kPi * trel / kSessionSeconds + traits.temp_phase);
            for (const MealDraw& m : meals)
                v += cfg.temp_gain_c_per_kcal * m.kcal *
                     meal_pulse(session_start + trel - m.t, kTempRise, kTempTotal);
            if (cfg.noise_temp > 0.0)
                v += rng.normal(0.0, cfg.noise_temp);
            temp.values[i] = v;
        }
        write_wristband_csv(plan.day_dir / "TEMP.csv", temp, 4);
    }
    {
        // sedentary wrist: gravity mostly on z, small jitter everywhere
        Rng rng(mix_seed(cfg.seed, s, d, 14));
        TimeSeries ax = make_channel(ChannelKind::ACC_X, session_start, 32.0);
        TimeSeries ay = make_channel(ChannelKind::ACC_Y, session_start, 32.0);
        TimeSeries az = make_channel(ChannelKind::ACC_Z, session_start, 32.0);
        for (std::size_t i = 0; i < ax.values.size(); ++i) {
            ax.values[i] = 0.02 + (cfg.noise_acc > 0.0 ? rng.normal(0.0, cfg.noise_acc) : 0.0);
            ay.values[i] = -0.01 + (cfg.noise_acc > 0.0 ? rng.normal(0.0, cfg.noise_acc) : 0.0);
            az.values[i] = 0.98 + (cfg.noise_acc > 0.0 ? rng.normal(0.0, cfg.noise_acc) : 0.0);
        }
        write_wristband_csv(plan.day_dir / "ACC_X.csv", ax, 5);
        write_wristband_csv(plan.day_dir / "ACC_Y.csv", ay, 5);
        write_wristband_csv(plan.day_dir / "ACC_Z.csv", az, 5);
    }
    {
        // pulse waveform at the instantaneous (clean) heart rate
        Rng rng(mix_seed(cfg.seed, s, d, 15));
        TimeSeries bvp = make_channel(ChannelKind::BVP, session_start, 64.0);
        double phase = 0.0;
        const double dt = 1.0 / 64.0;
        for (std::size_t i = 0; i < bvp.values.size(); ++i) {
            const double tsec = static_cast<double>(i) * dt;
            const auto j = static_cast<std::size_t>(tsec);
            const double f = tsec - static_cast<double>(j);
            const double hr_t = j + 1 < hr_clean.size()
                                    ? hr_clean[j] + f * (hr_clean[j + 1] - hr_clean[j])
                                    : hr_clean.back();
            phase += hr_t / 60.0 * dt;
            double v = 50.0 * std::sin(2.0 * kPi * phase);
            if (cfg.noise_bvp > 0.0)
                v += rng.normal(0.0, cfg.noise_bvp);
            bvp.values[i] = v;
        }
        write_wristband_csv(plan.day_dir / "BVP.csv", bvp, 3);
    }
}

} // namespace

SimulationSummary simulate(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);

    SimulationSummary summary;
    std::vector<MealEvent> meal_log;
    std::vector<SubjectDayPlan> plans;

    for (int s = 0; s < cfg.n_subjects; ++s) {
        char sid[16];
        std::snprintf(sid, sizeof sid, "S%02d", s + 1);

        Rng subject_rng(mix_seed(cfg.seed, static_cast<uint64_t>(s), 0, 1));
        SubjectTraits traits;
        traits.bgl_baseline = subject_rng.uniform(85.0, 95.0);
        traits.hr_baseline = subject_rng.uniform(65.0, 75.0);
        traits.eda_tonic = subject_rng.uniform(1.5, 3.0);
        traits.eda_phase = subject_rng.uniform(0.0, 2.0 * kPi);
        traits.temp_phase = subject_rng.uniform(0.0, 2.0 * kPi);

        for (int d = 0; d < cfg.days_per_subject; ++d) {
            SubjectDayPlan plan;
            plan.subject_idx = s;
            plan.day_idx = d;
            plan.subject_id = sid;
            plan.day_id = "day" + std::to_string(d + 1);
            plan.traits = traits;
            plan.day_dir = out_dir / sid / plan.day_id;
            const int64_t day =
                kBaseEpochDay + static_cast<int64_t>(s) * 7 + static_cast<int64_t>(d) * 2;
            plan.session_start = static_cast<double>(day) * 86400.0 + kSessionStartHour * 3600.0;

            Rng meal_rng(mix_seed(cfg.seed, static_cast<uint64_t>(s), static_cast<uint64_t>(d), 2));
            // glycemic response width: one draw per subject-day, on the CGM grid
            const double width_s = 60.0 * (60.0 + 5.0 * static_cast<double>(meal_rng.bounded(7)));
            const double day_factor = 0.8 + 0.2 * static_cast<double>(d % 3);

            for (const ScheduledMeal& sched : cfg.schedule) {
                MealDraw m;
                m.t = plan.session_start + static_cast<double>(sched.offset_min) * 60.0;
                m.label = sched.label;
                const double kcal_target =
                    (sched.label == MealLabel::Meal ? cfg.meal_kcal : cfg.snack_kcal) * day_factor;
                const double j0 = meal_rng.uniform(1.0 - cfg.mass_jitter, 1.0 + cfg.mass_jitter);
                const double j1 = meal_rng.uniform(1.0 - cfg.mass_jitter, 1.0 + cfg.mass_jitter);
                const double j2 = meal_rng.uniform(1.0 - cfg.mass_jitter, 1.0 + cfg.mass_jitter);
                m.carbs = std::max(cfg.min_mass_g, cfg.carb_frac * kcal_target / kKcalPerGramCarb * j0);
                m.protein =
                    std::max(cfg.min_mass_g, cfg.protein_frac * kcal_target / kKcalPerGramProtein * j1);
                m.fat = std::max(cfg.min_mass_g, cfg.fat_frac * kcal_target / kKcalPerGramFat * j2);
                m.kcal = kKcalPerGramCarb * m.carbs + kKcalPerGramProtein * m.protein +
                         kKcalPerGramFat * m.fat;
                // peak delay in 5-min steps so the peak lands on the CGM grid
                m.bgl_delay_s = 60.0 * (30.0 + 5.0 * static_cast<double>(meal_rng.bounded(4)));
                m.bgl_width_s = width_s;
                plan.meals.push_back(m);

                MealEvent ev;
                ev.subject_id = sid;
                ev.timestamp = m.t;
                ev.carbs_g = m.carbs;
                ev.protein_g = m.protein;
                ev.fat_g = m.fat;
                ev.label = m.label;
                meal_log.push_back(std::move(ev));

                GroundTruthRow gt;
                gt.subject_id = sid;
                gt.day_id = plan.day_id;
                gt.timestamp = m.t;
                gt.label = m.label;
                gt.carbs_g = m.carbs;
                gt.protein_g = m.protein;
                gt.fat_g = m.fat;
                gt.kcal = m.kcal;
                gt.bgl_peak_delay_min = m.bgl_delay_s / 60.0;
                gt.bgl_width_min = m.bgl_width_s / 60.0;
                gt.bgl_baseline = traits.bgl_baseline;
                gt.hr_baseline = traits.hr_baseline;
                summary.ground_truth.push_back(std::move(gt));
                ++summary.n_meals;
            }
            plans.push_back(std::move(plan));
            ++summary.n_subject_days;
        }
    }

    const unsigned n_workers =
        std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                           static_cast<unsigned>(plans.size()));
    if (n_workers <= 1) {
        for (const SubjectDayPlan& plan : plans)
            synthesize_subject_day(cfg, plan);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        std::vector<std::thread> workers;
        for (unsigned w = 0; w < n_workers; ++w) {
            workers.emplace_back([&] {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= plans.size())
                        return;
                    try {
                        synthesize_subject_day(cfg, plans[i]);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!first_error)
                            first_error = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (std::thread& t : workers)
            t.join();
        if (first_error)
            std::rethrow_exception(first_error);
    }

    std::sort(meal_log.begin(), meal_log.end(), [](const MealEvent& a, const MealEvent& b) {
        if (a.subject_id != b.subject_id)
            return a.subject_id < b.subject_id;
        return a.timestamp < b.timestamp;
    });
    write_meal_log(out_dir / "meals.csv", meal_log);
    write_ground_truth_csv(out_dir / "ground_truth.csv", summary.ground_truth);
    return summary;
}

void write_ground_truth_csv(const std::filesystem::path& path, const std::vector<GroundTruthRow>& rows) {
    std::string out = "subject_id,day,timestamp,label,carbs_g,protein_g,fat_g,kcal,"
                      "bgl_peak_delay_min,bgl_width_min,bgl_baseline,hr_baseline\n";
    for (const GroundTruthRow& r : rows) {
        out += r.subject_id;
        out += ',';
        out += r.day_id;
        out += ',';
        out += format_iso8601_utc(r.timestamp);
        out += ',';
        out += to_string(r.label);
        for (double v : {r.carbs_g, r.protein_g, r.fat_g, r.kcal, r.bgl_peak_delay_min,
                         r.bgl_width_min, r.bgl_baseline, r.hr_baseline}) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    write_file(path, out);
}

} // namespace mealmeter
