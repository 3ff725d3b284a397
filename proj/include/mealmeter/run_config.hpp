#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mealmeter/features.hpp"
#include "mealmeter/synthgen.hpp"

namespace mealmeter {

enum class Scope { Pooled, PerSubject };
enum class Method { MealMeter, Huo, Both };

const char* to_string(Scope s);
const char* to_string(Method m);

/// Resolved run settings. One config file is the source of truth; CLI flags
/// override individual keys afterwards.
struct RunConfig {
    std::string data_dir = "dataset";
    std::string out_dir = "out";

    std::vector<SignalName> signals = default_signal_set();
    double horizon_min = 90.0;
    double resample_hz = 8.0;
    int smooth_window = 20;
    bool smooth_all = false;
    int pca_components = 3;
    double split_ratio = 0.8;
    uint64_t seed = 42;
    int entropy_bins = kDefaultEntropyBins;
    Scope scope = Scope::Pooled;
    Method method = Method::MealMeter;
    double huo_bandwidth_min = -1.0; // <= 0: half the kernel spacing
    bool svg = false;

    SynthConfig synth; // simulate subcommand knobs (synth.seed tracks seed)

    void validate() const;

    /// Full resolved key=value view, embedded in every report for provenance.
    std::map<std::string, std::string> echo() const;

    PreprocessConfig preprocess() const;
};

/// Parse `key = value` lines ('#' comments). Unknown keys are errors.
RunConfig load_run_config(const std::filesystem::path& path);

/// Apply one key=value override (same keys as the config file).
void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value);

std::string signals_to_string(const std::vector<SignalName>& signals);
std::vector<SignalName> parse_signal_list(const std::string& csv);

} // namespace mealmeter
