#include "mealmeter/signal_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace mealmeter {

const char* to_string(ChannelKind k) {
    switch (k) {
    case ChannelKind::BGL: return "BGL";
    case ChannelKind::EDA: return "EDA";
    case ChannelKind::HR: return "HR";
    case ChannelKind::TEMP: return "TEMP";
    case ChannelKind::BVP: return "BVP";
    case ChannelKind::ACC_X: return "ACC_X";
    case ChannelKind::ACC_Y: return "ACC_Y";
    case ChannelKind::ACC_Z: return "ACC_Z";
    case ChannelKind::ACC_MAG: return "ACC_MAG";
    }
    return "?";
}

std::optional<ChannelKind> channel_kind_from_string(std::string_view s) {
    for (ChannelKind k : {ChannelKind::BGL, ChannelKind::EDA, ChannelKind::HR, ChannelKind::TEMP,
                          ChannelKind::BVP, ChannelKind::ACC_X, ChannelKind::ACC_Y, ChannelKind::ACC_Z,
                          ChannelKind::ACC_MAG})
        if (s == to_string(k))
            return k;
    return std::nullopt;
}

const char* to_string(MealLabel l) { return l == MealLabel::Meal ? "meal" : "snack"; }

std::optional<MealLabel> meal_label_from_string(std::string_view s) {
    if (s == "meal")
        return MealLabel::Meal;
    if (s == "snack")
        return MealLabel::Snack;
    return std::nullopt;
}

void TimeSeries::validate() const {
    if (values.empty())
        throw data_error(std::string(to_string(kind)) + ": empty sample list");
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw data_error(std::string(to_string(kind)) + ": sample rate must be positive");
    if (!std::isfinite(start))
        throw data_error(std::string(to_string(kind)) + ": non-finite start time");
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw data_error(std::string(to_string(kind)) + ": non-finite sample at index " + std::to_string(i));
}

// ---- line iteration ---------------------------------------------------------

namespace {

struct LineCursor {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line_no = 0; // 1-based number of the line last returned

    bool next(std::string_view& line) {
        if (pos >= text.size())
            return false;
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            line = text.substr(pos);
            pos = text.size();
        } else {
            line = text.substr(pos, nl - pos);
            pos = nl + 1;
        }
        ++line_no;
        return true;
    }
};

bool blank(std::string_view s) { return trim(s).empty(); }

} // namespace

// ---- wristband format --------------------------------------------------------

TimeSeries parse_wristband_csv(const std::filesystem::path& path, ChannelKind kind) {
    if (kind == ChannelKind::ACC_MAG)
        throw data_error("ACC_MAG is derived from the axis channels, never ingested");
    const std::string text = read_file(path);
    LineCursor cur{text};
    const std::string fname = path.string();

    std::string_view line;
    if (!cur.next(line) || blank(line))
        throw parse_error(fname, 1, "missing start-time header row");
    TimeSeries ts;
    ts.kind = kind;
    if (!try_parse_double(line, ts.start))
        throw parse_error(fname, 1, "non-numeric start time: '" + std::string(trim(line)) + "'");

    if (!cur.next(line) || blank(line))
        throw parse_error(fname, 2, "missing sample-rate header row");
    if (!try_parse_double(line, ts.rate))
        throw parse_error(fname, 2, "non-numeric sample rate: '" + std::string(trim(line)) + "'");
    if (!(ts.rate > 0.0))
        throw parse_error(fname, 2, "sample rate must be positive");

    while (cur.next(line)) {
        if (blank(line)) {
            // only a trailing newline is tolerated
            std::string_view rest;
            while (cur.next(rest))
                if (!blank(rest))
                    throw parse_error(fname, cur.line_no, "blank line inside sample body");
            break;
        }
        double v = 0.0;
        if (!try_parse_double(line, v) || !std::isfinite(v))
            throw parse_error(fname, cur.line_no, "non-finite or non-numeric sample: '" + std::string(trim(line)) + "'");
        ts.values.push_back(v);
    }
    if (ts.values.empty())
        throw parse_error(fname, cur.line_no + 1, "empty sample body");
    return ts;
}

void write_wristband_csv(const std::filesystem::path& path, const TimeSeries& ts, int decimals) {
    std::string out;
    out.reserve(ts.values.size() * 12 + 32);
    out += format_double(ts.start);
    out += '\n';
    out += format_double(ts.rate);
    out += '\n';
    for (double v : ts.values) {
        append_double(out, v, decimals);
        out += '\n';
    }
    write_file(path, out);
}

// ---- CGM format ----------------------------------------------------------------

namespace {
constexpr double kCgmStepSeconds = 300.0;
constexpr int kCgmMaxMissing = 2;
} // namespace

TimeSeries parse_cgm_csv(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    LineCursor cur{text};
    const std::string fname = path.string();

    std::vector<std::pair<double, double>> readings; // (epoch s, mg/dL)
    std::string_view line;
    bool first_content_line = true;
    while (cur.next(line)) {
        if (blank(line))
            continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw parse_error(fname, cur.line_no, "expected 'timestamp,glucose_mg_dl'");
        if (first_content_line) {
            first_content_line = false;
            if (fields[0] == "timestamp") // header
                continue;
        }
        double t = 0.0;
        double numeric_ts = 0.0;
        if (try_parse_double(fields[0], numeric_ts)) {
            t = numeric_ts;
        } else {
            try {
                t = parse_iso8601_utc(fields[0]);
            } catch (const data_error& e) {
                throw parse_error(fname, cur.line_no, e.what());
            }
        }
        double g = 0.0;
        if (!try_parse_double(fields[1], g) || !std::isfinite(g))
            throw parse_error(fname, cur.line_no, "non-numeric glucose value: '" + std::string(fields[1]) + "'");
        readings.emplace_back(t, g);
    }
    if (readings.empty())
        throw parse_error(fname, cur.line_no + 1, "no CGM readings");

    TimeSeries ts;
    ts.kind = ChannelKind::BGL;
    ts.start = readings.front().first;
    ts.rate = 1.0 / kCgmStepSeconds;

    // Snap each reading to the nominal grid, interpolating short gaps.
    long prev_k = -1;
    double prev_v = 0.0;
    for (std::size_t i = 0; i < readings.size(); ++i) {
        const double dt = readings[i].first - ts.start;
        const long k = std::lround(dt / kCgmStepSeconds);
        if (k <= prev_k)
            throw data_error(path.string() + ": CGM timestamps not strictly increasing near " +
                             format_iso8601_utc(readings[i].first));
        const long missing = k - prev_k - 1;
        if (missing > kCgmMaxMissing)
            throw data_error(path.string() + ": CGM gap of " +
                             format_double(static_cast<double>(k - prev_k) * kCgmStepSeconds) +
                             " s before " + format_iso8601_utc(readings[i].first) +
                             " exceeds " + std::to_string(kCgmMaxMissing) + " missing readings");
        const double v = readings[i].second;
        for (long m = 1; m <= missing; ++m) {
            const double f = static_cast<double>(m) / static_cast<double>(missing + 1);
            ts.values.push_back(prev_v + f * (v - prev_v));
        }
        ts.values.push_back(v);
        prev_k = k;
        prev_v = v;
    }
    ts.validate();
    return ts;
}

void write_cgm_csv(const std::filesystem::path& path, const TimeSeries& ts, int decimals) {
    std::string out = "timestamp,glucose_mg_dl\n";
    out.reserve(ts.values.size() * 32 + 32);
    for (std::size_t i = 0; i < ts.values.size(); ++i) {
        out += format_iso8601_utc(ts.start + static_cast<double>(i) / ts.rate);
        out += ',';
        out += format_double_fixed(ts.values[i], decimals);
        out += '\n';
    }
    write_file(path, out);
}

// ---- meal log -------------------------------------------------------------------

std::vector<MealEvent> parse_meal_log(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    LineCursor cur{text};
    const std::string fname = path.string();

    std::vector<MealEvent> meals;
    std::string_view line;
    bool first_content_line = true;
    while (cur.next(line)) {
        if (blank(line))
            continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 6)
            throw parse_error(fname, cur.line_no,
                              "expected 'subject_id,timestamp,carbs_g,protein_g,fat_g,label'");
        if (first_content_line) {
            first_content_line = false;
            if (fields[0] == "subject_id")
                continue;
        }
        MealEvent m;
        m.subject_id = std::string(fields[0]);
        if (m.subject_id.empty())
            throw parse_error(fname, cur.line_no, "empty subject_id");
        double numeric_ts = 0.0;
        if (try_parse_double(fields[1], numeric_ts)) {
            m.timestamp = numeric_ts;
        } else {
            try {
                m.timestamp = parse_iso8601_utc(fields[1]);
            } catch (const data_error& e) {
                throw parse_error(fname, cur.line_no, e.what());
            }
        }
        const std::array<std::pair<std::string_view, double*>, 3> grams = {
            {{fields[2], &m.carbs_g}, {fields[3], &m.protein_g}, {fields[4], &m.fat_g}}};
        for (const auto& [field, dst] : grams) {
            if (!try_parse_double(field, *dst) || !std::isfinite(*dst))
                throw parse_error(fname, cur.line_no, "non-numeric gram value: '" + std::string(field) + "'");
            if (*dst < 0.0)
                throw parse_error(fname, cur.line_no, "negative gram value: '" + std::string(field) + "'");
        }
        if (m.carbs_g <= 0.0 && m.protein_g <= 0.0 && m.fat_g <= 0.0)
            throw parse_error(fname, cur.line_no, "meal must have at least one macronutrient > 0");
        const auto label = meal_label_from_string(fields[5]);
        if (!label)
            throw parse_error(fname, cur.line_no, "unknown label '" + std::string(fields[5]) + "' (want meal|snack)");
        m.label = *label;
        meals.push_back(std::move(m));
    }

    std::sort(meals.begin(), meals.end(), [](const MealEvent& a, const MealEvent& b) {
        if (a.subject_id != b.subject_id)
            return a.subject_id < b.subject_id;
        return a.timestamp < b.timestamp;
    });
    for (std::size_t i = 1; i < meals.size(); ++i)
        if (meals[i].subject_id == meals[i - 1].subject_id && meals[i].timestamp == meals[i - 1].timestamp)
            throw data_error(path.string() + ": duplicate meal for " + meals[i].subject_id + " at " +
                             format_iso8601_utc(meals[i].timestamp));
    return meals;
}

void write_meal_log(const std::filesystem::path& path, const std::vector<MealEvent>& meals) {
    std::string out = "subject_id,timestamp,carbs_g,protein_g,fat_g,label\n";
    for (const MealEvent& m : meals) {
        out += m.subject_id;
        out += ',';
        out += format_iso8601_utc(m.timestamp);
        out += ',';
        out += format_double(m.carbs_g);
        out += ',';
        out += format_double(m.protein_g);
        out += ',';
        out += format_double(m.fat_g);
        out += ',';
        out += to_string(m.label);
        out += '\n';
    }
    write_file(path, out);
}

} // namespace mealmeter
