#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mealmeter/common.hpp"

namespace mealmeter {

enum class ChannelKind { BGL, EDA, HR, TEMP, BVP, ACC_X, ACC_Y, ACC_Z, ACC_MAG };

const char* to_string(ChannelKind k);
std::optional<ChannelKind> channel_kind_from_string(std::string_view s);

/// One uniformly sampled channel. Sample i lives at `start + i / rate`.
struct TimeSeries {
    ChannelKind kind = ChannelKind::BGL;
    double start = 0.0; // epoch seconds, UTC
    double rate = 0.0;  // Hz
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double duration() const { return values.empty() ? 0.0 : static_cast<double>(values.size() - 1) / rate; }
    double end() const { return start + duration(); }

    /// Enforces: non-empty, finite samples, rate > 0. Throws data_error.
    void validate() const;
};

enum class MealLabel { Meal, Snack };

const char* to_string(MealLabel l);
std::optional<MealLabel> meal_label_from_string(std::string_view s);

struct MealEvent {
    std::string subject_id;
    double timestamp = 0.0; // epoch seconds, UTC
    double carbs_g = 0.0;
    double protein_g = 0.0;
    double fat_g = 0.0;
    MealLabel label = MealLabel::Meal;
};

/// One subject-day of recordings plus that subject's meals falling in it.
struct SubjectRecord {
    std::string subject_id;
    std::string day_id;
    std::map<ChannelKind, TimeSeries> channels;
    std::vector<MealEvent> meals;
};

// ---- ingestion -------------------------------------------------------------

/// Wristband channel export: line 1 start epoch seconds, line 2 sample rate Hz,
/// then one sample per line. Parse errors carry the offending line number.
TimeSeries parse_wristband_csv(const std::filesystem::path& path, ChannelKind kind);

/// CGM export: `timestamp,glucose_mg_dl` rows on a nominal 300 s grid (optional
/// header). Gaps of at most two missing readings are linearly interpolated onto
/// the grid; anything longer is an error.
TimeSeries parse_cgm_csv(const std::filesystem::path& path);

/// Meal log: `subject_id,timestamp,carbs_g,protein_g,fat_g,label` (optional
/// header). Timestamps are ISO-8601 UTC or raw epoch seconds. Result is sorted
/// by (subject_id, timestamp).
std::vector<MealEvent> parse_meal_log(const std::filesystem::path& path);

// ---- serialization (synthetic data emission + round-trip checks) -----------

/// decimals < 0 writes the shortest round-trip representation.
void write_wristband_csv(const std::filesystem::path& path, const TimeSeries& ts, int decimals = -1);
void write_cgm_csv(const std::filesystem::path& path, const TimeSeries& ts, int decimals = -1);
void write_meal_log(const std::filesystem::path& path, const std::vector<MealEvent>& meals);

} // namespace mealmeter
