#include "mealmeter/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mealmeter {

const char* to_string(Scope s) { return s == Scope::Pooled ? "pooled" : "per-subject"; }

const char* to_string(Method m) {
    switch (m) {
    case Method::MealMeter: return "mealmeter";
    case Method::Huo: return "huo";
    case Method::Both: return "both";
    }
    return "?";
}

void RunConfig::validate() const {
    if (signals.empty())
        throw config_error("signal set must be non-empty");
    if (!(horizon_min > 0.0) || !(resample_hz > 0.0))
        throw config_error("horizon_min and resample_hz must be positive");
    if (smooth_window < 1)
        throw config_error("smooth_window must be >= 1");
    if (pca_components < 1)
        throw config_error("pca_components must be >= 1");
    if (!(split_ratio > 0.0) || !(split_ratio < 1.0))
        throw config_error("split_ratio must be in (0, 1)");
    if (entropy_bins < 1)
        throw config_error("entropy_bins must be >= 1");
    synth.validate();
}

PreprocessConfig RunConfig::preprocess() const {
    PreprocessConfig p;
    p.signals = signals;
    p.horizon_min = horizon_min;
    p.resample_hz = resample_hz;
    p.smooth_window = smooth_window;
    p.smooth_all = smooth_all;
    return p;
}

std::string signals_to_string(const std::vector<SignalName>& signals) {
    std::string out;
    for (SignalName s : signals) {
        if (!out.empty())
            out += ',';
        out += to_string(s);
    }
    return out;
}

std::vector<SignalName> parse_signal_list(const std::string& csv) {
    std::vector<SignalName> out;
    for (std::string_view field : split_csv_line(csv)) {
        if (field.empty())
            continue;
        const auto s = signal_name_from_string(field);
        if (!s)
            throw config_error("unknown signal '" + std::string(field) + "'");
        if (std::find(out.begin(), out.end(), *s) != out.end())
            throw config_error("duplicate signal '" + std::string(field) + "'");
        out.push_back(*s);
    }
    if (out.empty())
        throw config_error("signal list is empty");
    return out;
}

namespace {

std::string schedule_to_string(const std::vector<ScheduledMeal>& schedule) {
    std::string out;
    for (const ScheduledMeal& m : schedule) {
        if (!out.empty())
            out += ',';
        const int clock_min = 8 * 60 + m.offset_min;
        char buf[24];
        std::snprintf(buf, sizeof buf, "%02d:%02d=%s", clock_min / 60, clock_min % 60,
                      to_string(m.label));
        out += buf;
    }
    return out;
}

std::vector<ScheduledMeal> parse_schedule(const std::string& value) {
    std::vector<ScheduledMeal> out;
    for (std::string_view item : split_csv_line(value)) {
        int h = 0, mi = 0;
        char label_buf[16] = {0};
        std::string item_s(item);
        if (std::sscanf(item_s.c_str(), "%2d:%2d=%15s", &h, &mi, label_buf) != 3)
            throw config_error("schedule entries must look like HH:MM=meal|snack, got '" + item_s + "'");
        const auto label = meal_label_from_string(label_buf);
        if (!label)
            throw config_error("unknown schedule label '" + std::string(label_buf) + "'");
        out.push_back({(h - 8) * 60 + mi, *label});
    }
    return out;
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const uint64_t v = std::stoull(value, &used);
        if (used != value.size())
            throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw config_error(key + ": expected a non-negative integer, got '" + value + "'");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size())
            throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw config_error(key + ": expected an integer, got '" + value + "'");
    }
}

double parse_num(const std::string& key, const std::string& value) {
    double v = 0.0;
    if (!try_parse_double(value, v))
        throw config_error(key + ": expected a number, got '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on")
        return true;
    if (value == "false" || value == "0" || value == "no" || value == "off")
        return false;
    throw config_error(key + ": expected true|false, got '" + value + "'");
}

} // namespace

void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "data_dir") cfg.data_dir = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "signals") cfg.signals = parse_signal_list(value);
    else if (key == "horizon_min") cfg.horizon_min = parse_num(key, value);
    else if (key == "resample_hz") cfg.resample_hz = parse_num(key, value);
    else if (key == "smooth_window") cfg.smooth_window = parse_int(key, value);
    else if (key == "smooth_all") cfg.smooth_all = parse_bool(key, value);
    else if (key == "pca_components") cfg.pca_components = parse_int(key, value);
    else if (key == "split_ratio") cfg.split_ratio = parse_num(key, value);
    else if (key == "seed") { cfg.seed = parse_u64(key, value); cfg.synth.seed = cfg.seed; }
    else if (key == "entropy_bins") cfg.entropy_bins = parse_int(key, value);
    else if (key == "huo_bandwidth_min") cfg.huo_bandwidth_min = parse_num(key, value);
    else if (key == "svg") cfg.svg = parse_bool(key, value);
    else if (key == "scope") {
        if (value == "pooled") cfg.scope = Scope::Pooled;
        else if (value == "per-subject") cfg.scope = Scope::PerSubject;
        else throw config_error("scope must be pooled|per-subject, got '" + value + "'");
    } else if (key == "method") {
        if (value == "mealmeter") cfg.method = Method::MealMeter;
        else if (value == "huo") cfg.method = Method::Huo;
        else if (value == "both") cfg.method = Method::Both;
        else throw config_error("method must be mealmeter|huo|both, got '" + value + "'");
    }
    else if (key == "synth_subjects") cfg.synth.n_subjects = parse_int(key, value);
    else if (key == "synth_days") cfg.synth.days_per_subject = parse_int(key, value);
    else if (key == "synth_schedule") cfg.synth.schedule = parse_schedule(value);
    else if (key == "synth_carb_frac") cfg.synth.carb_frac = parse_num(key, value);
    else if (key == "synth_protein_frac") cfg.synth.protein_frac = parse_num(key, value);
    else if (key == "synth_fat_frac") cfg.synth.fat_frac = parse_num(key, value);
    else if (key == "synth_meal_kcal") cfg.synth.meal_kcal = parse_num(key, value);
    else if (key == "synth_snack_kcal") cfg.synth.snack_kcal = parse_num(key, value);
    else if (key == "synth_mass_jitter") cfg.synth.mass_jitter = parse_num(key, value);
    else if (key == "synth_min_mass_g") cfg.synth.min_mass_g = parse_num(key, value);
    else if (key == "synth_glucose_gain") cfg.synth.glucose_gain_mgdl_per_g = parse_num(key, value);
    else if (key == "synth_hr_gain") cfg.synth.hr_gain_bpm_per_kcal = parse_num(key, value);
    else if (key == "synth_eda_gain") cfg.synth.eda_gain_us_per_g = parse_num(key, value);
    else if (key == "synth_temp_gain") cfg.synth.temp_gain_c_per_kcal = parse_num(key, value);
    else if (key == "synth_noise_bgl") cfg.synth.noise_bgl = parse_num(key, value);
    else if (key == "synth_noise_hr") cfg.synth.noise_hr = parse_num(key, value);
    else if (key == "synth_noise_eda") cfg.synth.noise_eda = parse_num(key, value);
    else if (key == "synth_noise_temp") cfg.synth.noise_temp = parse_num(key, value);
    else if (key == "synth_noise_acc") cfg.synth.noise_acc = parse_num(key, value);
    else if (key == "synth_noise_bvp") cfg.synth.noise_bvp = parse_num(key, value);
    else throw config_error("unknown config key '" + key + "'");
}

RunConfig load_run_config(const std::filesystem::path& path) {
    RunConfig cfg;
    cfg.synth.seed = cfg.seed;
    const std::string text = read_file(path);
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line(text.data() + pos, (nl == std::string::npos ? text.size() : nl) - pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#')
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw config_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected key = value");
        const std::string key{trim(line.substr(0, eq))};
        const std::string value{trim(line.substr(eq + 1))};
        set_config_key(cfg, key, value);
    }
    return cfg;
}

std::map<std::string, std::string> RunConfig::echo() const {
    std::map<std::string, std::string> m;
    m["data_dir"] = data_dir;
    m["out_dir"] = out_dir;
    m["signals"] = signals_to_string(signals);
    m["horizon_min"] = format_double(horizon_min);
    m["resample_hz"] = format_double(resample_hz);
    m["smooth_window"] = std::to_string(smooth_window);
    m["smooth_all"] = smooth_all ? "true" : "false";
    m["pca_components"] = std::to_string(pca_components);
    m["split_ratio"] = format_double(split_ratio);
    m["seed"] = std::to_string(seed);
    m["entropy_bins"] = std::to_string(entropy_bins);
    m["scope"] = to_string(scope);
    m["method"] = to_string(method);
    m["huo_bandwidth_min"] = format_double(huo_bandwidth_min);
    m["svg"] = svg ? "true" : "false";
    m["synth_subjects"] = std::to_string(synth.n_subjects);
    m["synth_days"] = std::to_string(synth.days_per_subject);
    m["synth_schedule"] = schedule_to_string(synth.schedule);
    m["synth_carb_frac"] = format_double(synth.carb_frac);
    m["synth_protein_frac"] = format_double(synth.protein_frac);
    m["synth_fat_frac"] = format_double(synth.fat_frac);
    m["synth_meal_kcal"] = format_double(synth.meal_kcal);
    m["synth_snack_kcal"] = format_double(synth.snack_kcal);
    m["synth_mass_jitter"] = format_double(synth.mass_jitter);
    m["synth_min_mass_g"] = format_double(synth.min_mass_g);
    m["synth_glucose_gain"] = format_double(synth.glucose_gain_mgdl_per_g);
    m["synth_hr_gain"] = format_double(synth.hr_gain_bpm_per_kcal);
    m["synth_eda_gain"] = format_double(synth.eda_gain_us_per_g);
    m["synth_temp_gain"] = format_double(synth.temp_gain_c_per_kcal);
    m["synth_noise_bgl"] = format_double(synth.noise_bgl);
    m["synth_noise_hr"] = format_double(synth.noise_hr);
    m["synth_noise_eda"] = format_double(synth.noise_eda);
    m["synth_noise_temp"] = format_double(synth.noise_temp);
    m["synth_noise_acc"] = format_double(synth.noise_acc);
    m["synth_noise_bvp"] = format_double(synth.noise_bvp);
    return m;
}

} // namespace mealmeter
