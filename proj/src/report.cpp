#include "mealmeter/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mealmeter {

namespace {

std::string echo_block(const ConfigEcho& echo) {
    std::string out;
    for (const auto& [k, v] : echo) { // std::map iterates sorted
        out += "# ";
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

std::string opt_field(const std::optional<double>& v) {
    return v ? format_double(*v) : "nan";
}

} // namespace

void write_metrics_csv(const std::filesystem::path& path, const ConfigEcho& echo,
                       const std::vector<EvalReport>& reports) {
    if (reports.empty())
        throw data_error("metrics export: no evaluation rows");
    std::string out = echo_block(echo);
    out += "method,scope,subject,n_train,n_test,skipped_windows,"
           "carbs_mae,carbs_rmsre,carbs_r,protein_mae,protein_rmsre,protein_r,"
           "fat_mae,fat_rmsre,fat_r,notes\n";
    for (const EvalReport& r : reports) {
        out += r.method;
        out += ',';
        out += r.scope;
        out += ',';
        out += r.scope_key;
        out += ',';
        out += std::to_string(r.n_train);
        out += ',';
        out += std::to_string(r.n_test);
        out += ',';
        out += std::to_string(r.skipped_windows);
        std::string notes;
        for (const TargetMetrics& m : r.per_target) {
            out += ',';
            out += format_double(m.mae);
            out += ',';
            out += opt_field(m.rmsre);
            out += ',';
            out += opt_field(m.pearson_r);
            if (!m.note.empty()) {
                if (!notes.empty())
                    notes += "; ";
                notes += m.note;
            }
        }
        out += ',';
        out += notes;
        out += '\n';
    }
    write_file(path, out);
}

void write_scatter_csv(const std::filesystem::path& path, const ConfigEcho& echo,
                       const std::vector<ScatterPoint>& points) {
    std::string out = echo_block(echo);
    out += "method,subject_id,timestamp,actual_g,predicted_g\n";
    for (const ScatterPoint& p : points) {
        out += p.method;
        out += ',';
        out += p.subject_id;
        out += ',';
        out += format_iso8601_utc(p.timestamp);
        out += ',';
        out += format_double(p.actual);
        out += ',';
        out += format_double(p.predicted);
        out += '\n';
    }
    write_file(path, out);
}

void write_contributions_csv(const std::filesystem::path& path, const ConfigEcho& echo,
                             const ContributionReport& report, Target target) {
    std::string out = echo_block(echo);
    out += "scope,signal,contribution\n";
    const auto& gamma = report.signal_gamma[static_cast<std::size_t>(target)];
    for (std::size_t s = 0; s < report.signals.size(); ++s) {
        out += report.scope_label;
        out += ',';
        out += to_string(report.signals[s]);
        out += ',';
        out += format_double(gamma[s]);
        out += '\n';
    }
    write_file(path, out);
}

void write_feature_contributions_csv(const std::filesystem::path& path, const ConfigEcho& echo,
                                     const ContributionReport& report, Target target) {
    std::string out = echo_block(echo);
    out += "scope,column,signal,gamma\n";
    const auto& gamma = report.gamma[static_cast<std::size_t>(target)];
    for (std::size_t c = 0; c < report.columns.size(); ++c) {
        out += report.scope_label;
        out += ',';
        out += report.columns[c];
        out += ',';
        out += to_string(report.signals[static_cast<std::size_t>(
            static_cast<int>(c) / kFeatureCount)]);
        out += ',';
        out += format_double(gamma(static_cast<Eigen::Index>(c)));
        out += '\n';
    }
    write_file(path, out);
}

void write_comparison_csv(const std::filesystem::path& path, const ConfigEcho& echo,
                          const std::vector<EvalReport>& reports) {
    std::string out = echo_block(echo);
    out += "method,target,mae,rmsre,pearson_r\n";
    for (const EvalReport& r : reports) {
        for (int t = 0; t < kTargetCount; ++t) {
            const TargetMetrics& m = r.per_target[static_cast<std::size_t>(t)];
            out += r.method;
            out += ',';
            out += to_string(static_cast<Target>(t));
            out += ',';
            out += format_double(m.mae);
            out += ',';
            out += opt_field(m.rmsre);
            out += ',';
            out += opt_field(m.pearson_r);
            out += '\n';
        }
    }
    write_file(path, out);
}

// ---- SVG --------------------------------------------------------------------

namespace {

constexpr int kW = 640, kH = 480;
constexpr int kMargin = 60;

std::string fmt(double v) { return format_double_fixed(v, 2); }

struct LinScale {
    double lo = 0.0, hi = 1.0;
    double px0 = 0.0, px1 = 1.0;
    double operator()(double v) const {
        const double f = (hi == lo) ? 0.5 : (v - lo) / (hi - lo);
        return px0 + f * (px1 - px0);
    }
};

void svg_header(std::string& out, const std::string& title) {
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kW) +
           "\" height=\"" + std::to_string(kH) + "\" viewBox=\"0 0 " + std::to_string(kW) + " " +
           std::to_string(kH) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + std::to_string(kW / 2) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" + title + "</text>\n";
}

} // namespace

void write_scatter_svg(const std::filesystem::path& path, const std::vector<ScatterPoint>& points,
                       const std::string& title) {
    double lo = 0.0, hi = 1.0;
    if (!points.empty()) {
        lo = std::numeric_limits<double>::infinity();
        hi = -lo;
        for (const ScatterPoint& p : points) {
            lo = std::min({lo, p.actual, p.predicted});
            hi = std::max({hi, p.actual, p.predicted});
        }
        if (lo == hi) {
            lo -= 1.0;
            hi += 1.0;
        }
    }
    const LinScale sx{lo, hi, kMargin, kW - kMargin};
    const LinScale sy{lo, hi, kH - kMargin, kMargin};

    std::string out;
    svg_header(out, title);
    out += "<line x1=\"" + fmt(sx(lo)) + "\" y1=\"" + fmt(sy(lo)) + "\" x2=\"" + fmt(sx(hi)) +
           "\" y2=\"" + fmt(sy(lo)) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + fmt(sx(lo)) + "\" y1=\"" + fmt(sy(lo)) + "\" x2=\"" + fmt(sx(lo)) +
           "\" y2=\"" + fmt(sy(hi)) + "\" stroke=\"black\"/>\n";
    // identity reference
    out += "<line x1=\"" + fmt(sx(lo)) + "\" y1=\"" + fmt(sy(lo)) + "\" x2=\"" + fmt(sx(hi)) +
           "\" y2=\"" + fmt(sy(hi)) + "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";
    out += "<text x=\"" + std::to_string(kW / 2) + "\" y=\"" + std::to_string(kH - 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">actual (g)</text>\n";
    out += "<text x=\"18\" y=\"" + std::to_string(kH / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 " +
           std::to_string(kH / 2) + ")\">predicted (g)</text>\n";
    for (double v : {lo, (lo + hi) / 2.0, hi}) {
        out += "<text x=\"" + fmt(sx(v)) + "\" y=\"" + std::to_string(kH - kMargin + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + fmt(v) +
               "</text>\n";
        out += "<text x=\"" + std::to_string(kMargin - 8) + "\" y=\"" + fmt(sy(v)) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + fmt(v) +
               "</text>\n";
    }
    for (const ScatterPoint& p : points)
        out += "<circle cx=\"" + fmt(sx(p.actual)) + "\" cy=\"" + fmt(sy(p.predicted)) +
               "\" r=\"3\" fill=\"#1f77b4\" fill-opacity=\"0.7\"/>\n";
    out += "</svg>\n";
    write_file(path, out);
}

void write_bars_svg(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, double>>& bars, const std::string& title) {
    double lo = 0.0, hi = 0.0;
    for (const auto& [_, v] : bars) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo == hi) {
        lo -= 1.0;
        hi += 1.0;
    }
    const LinScale sy{lo, hi, kH - kMargin, kMargin};

    std::string out;
    svg_header(out, title);
    const double span = static_cast<double>(kW - 2 * kMargin);
    const double slot = bars.empty() ? span : span / static_cast<double>(bars.size());
    const double bar_w = slot * 0.6;
    out += "<line x1=\"" + std::to_string(kMargin) + "\" y1=\"" + fmt(sy(0.0)) + "\" x2=\"" +
           std::to_string(kW - kMargin) + "\" y2=\"" + fmt(sy(0.0)) + "\" stroke=\"black\"/>\n";
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const double x = kMargin + slot * (static_cast<double>(i) + 0.2);
        const double v = bars[i].second;
        const double y_top = std::min(sy(v), sy(0.0));
        const double h = std::abs(sy(v) - sy(0.0));
        out += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y_top) + "\" width=\"" + fmt(bar_w) +
               "\" height=\"" + fmt(h) + "\" fill=\"" + (v >= 0.0 ? "#1f77b4" : "#d62728") + "\"/>\n";
        out += "<text x=\"" + fmt(x + bar_w / 2.0) + "\" y=\"" + std::to_string(kH - kMargin + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               bars[i].first + "</text>\n";
        out += "<text x=\"" + fmt(x + bar_w / 2.0) + "\" y=\"" + fmt(y_top - 4.0) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"9\">" +
               format_double_fixed(v, 3) + "</text>\n";
    }
    out += "</svg>\n";
    write_file(path, out);
}

} // namespace mealmeter
