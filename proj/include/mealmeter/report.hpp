#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mealmeter/analysis.hpp"

namespace mealmeter {

using ConfigEcho = std::map<std::string, std::string>;

struct ScatterPoint {
    std::string method;
    std::string subject_id;
    double timestamp = 0.0;
    double actual = 0.0;
    double predicted = 0.0;
};

// Every report file starts with the resolved config as '# key=value' comment
// lines, then a regular CSV header. Output is byte-deterministic.

void write_metrics_csv(const std::filesystem::path& path, const ConfigEcho& echo,
                       const std::vector<EvalReport>& reports);

void write_scatter_csv(const std::filesystem::path& path, const ConfigEcho& echo,
                       const std::vector<ScatterPoint>& points);

void write_contributions_csv(const std::filesystem::path& path, const ConfigEcho& echo,
                             const ContributionReport& report, Target target);

void write_feature_contributions_csv(const std::filesystem::path& path, const ConfigEcho& echo,
                                     const ContributionReport& report, Target target);

/// Table-3-shaped long format: one row per (method, target).
void write_comparison_csv(const std::filesystem::path& path, const ConfigEcho& echo,
                          const std::vector<EvalReport>& reports);

// ---- SVG convenience renderings (the CSVs stay the contract) -----------------

void write_scatter_svg(const std::filesystem::path& path, const std::vector<ScatterPoint>& points,
                       const std::string& title);

void write_bars_svg(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, double>>& bars, const std::string& title);

} // namespace mealmeter
