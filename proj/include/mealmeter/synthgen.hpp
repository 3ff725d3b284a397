#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mealmeter/signal_model.hpp"

namespace mealmeter {

struct ScheduledMeal {
    int offset_min = 0; // minutes after the session start (08:00)
    MealLabel label = MealLabel::Meal;
};

std::vector<ScheduledMeal> default_meal_schedule(); // 08:30 10:30 12:30 14:30 16:30

/// Knobs of the synthetic subject-day simulator. Response gains tie channel
/// excursions to known macronutrient masses so the fitted pipeline can be
/// checked against ground truth.
struct SynthConfig {
    int n_subjects = 12;
    int days_per_subject = 3;
    std::vector<ScheduledMeal> schedule = default_meal_schedule();

    // caloric split of each meal, jittered per macro
    double carb_frac = 0.55;
    double protein_frac = 0.20;
    double fat_frac = 0.25;
    double meal_kcal = 700.0;
    double snack_kcal = 200.0;
    double mass_jitter = 0.20; // +/- fraction applied per macronutrient
    double min_mass_g = 5.0;

    // response gains
    double glucose_gain_mgdl_per_g = 0.9; // BGL excursion peak per carb gram
    double hr_gain_bpm_per_kcal = 0.025;
    double eda_gain_us_per_g = 0.015; // per (carb + protein) gram
    double temp_gain_c_per_kcal = 0.0008;

    // per-channel additive noise SDs
    double noise_bgl = 2.0;
    double noise_hr = 1.5;
    double noise_eda = 0.05;
    double noise_temp = 0.05;
    double noise_acc = 0.02;
    double noise_bvp = 5.0;

    uint64_t seed = 42;

    void validate() const; // throws config_error
};

/// Injected parameters per meal, enough to reconstruct every clean excursion.
struct GroundTruthRow {
    std::string subject_id;
    std::string day_id;
    double timestamp = 0.0;
    MealLabel label = MealLabel::Meal;
    double carbs_g = 0.0, protein_g = 0.0, fat_g = 0.0, kcal = 0.0;
    double bgl_peak_delay_min = 0.0; // per meal
    double bgl_width_min = 0.0;      // per subject-day
    double bgl_baseline = 0.0;
    double hr_baseline = 0.0;
};

struct SimulationSummary {
    int n_subject_days = 0;
    int n_meals = 0;
    std::vector<GroundTruthRow> ground_truth;
};

/// Writes `<out>/<subject>/<day>/{BGL,EDA,HR,TEMP,BVP,ACC_X,ACC_Y,ACC_Z}.csv`
/// plus `meals.csv` and `ground_truth.csv` at the root. Deterministic for a
/// given (config, seed); subject-days use independent seeded substreams.
SimulationSummary simulate(const SynthConfig& config, const std::filesystem::path& out_dir);

void write_ground_truth_csv(const std::filesystem::path& path, const std::vector<GroundTruthRow>& rows);

} // namespace mealmeter
