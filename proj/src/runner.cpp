#include "mealmeter/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

namespace mealmeter {

StageLog stderr_log() {
    return [](const std::string& stage, const std::string& message) {
        std::cerr << "[" << stage << "] " << message << "\n";
    };
}

namespace {

template <typename Fn>
auto with_stage(const std::string& stage, Fn&& fn) {
    try {
        return fn();
    } catch (const config_error& e) {
        throw config_error(stage + ": " + e.what());
    } catch (const parse_error& e) {
        throw data_error(stage + ": " + std::string(e.what()));
    } catch (const data_error& e) {
        throw data_error(stage + ": " + e.what());
    } catch (const numeric_error& e) {
        throw numeric_error(stage + ": " + e.what());
    }
}

std::vector<ChannelKind> required_channels(const std::vector<SignalName>& signals) {
    std::vector<ChannelKind> kinds;
    auto add = [&](ChannelKind k) {
        if (std::find(kinds.begin(), kinds.end(), k) == kinds.end())
            kinds.push_back(k);
    };
    for (SignalName s : signals) {
        switch (s) {
        case SignalName::BGL_PRE:
        case SignalName::BGL_POST: add(ChannelKind::BGL); break;
        case SignalName::EDA: add(ChannelKind::EDA); break;
        case SignalName::HR: add(ChannelKind::HR); break;
        case SignalName::TEMP: add(ChannelKind::TEMP); break;
        case SignalName::BVP: add(ChannelKind::BVP); break;
        case SignalName::ACC_MAG:
            add(ChannelKind::ACC_X);
            add(ChannelKind::ACC_Y);
            add(ChannelKind::ACC_Z);
            break;
        }
    }
    return kinds;
}

} // namespace

Dataset load_dataset(const std::filesystem::path& data_dir, const RunConfig& cfg, const StageLog& log) {
    return with_stage("ingest", [&]() -> Dataset {
        if (!std::filesystem::is_directory(data_dir))
            throw data_error("dataset directory not found: " + data_dir.string());

        const std::vector<MealEvent> meals = parse_meal_log(data_dir / "meals.csv");
        const std::vector<ChannelKind> kinds = required_channels(cfg.signals);

        Dataset ds;
        ds.n_meals = static_cast<int>(meals.size());

        std::vector<std::filesystem::path> subject_dirs;
        for (const auto& entry : std::filesystem::directory_iterator(data_dir))
            if (entry.is_directory())
                subject_dirs.push_back(entry.path());
        std::sort(subject_dirs.begin(), subject_dirs.end());

        std::vector<std::pair<std::string, std::filesystem::path>> day_jobs; // (subject, day dir)
        for (const auto& sdir : subject_dirs) {
            std::vector<std::filesystem::path> day_dirs;
            for (const auto& entry : std::filesystem::directory_iterator(sdir))
                if (entry.is_directory())
                    day_dirs.push_back(entry.path());
            std::sort(day_dirs.begin(), day_dirs.end());
            for (const auto& ddir : day_dirs)
                day_jobs.emplace_back(sdir.filename().string(), ddir);
        }
        if (day_jobs.empty())
            throw data_error("no subject recordings under " + data_dir.string());

        ds.records.resize(day_jobs.size());
        const auto load_record = [&](std::size_t i) {
            SubjectRecord rec;
            rec.subject_id = day_jobs[i].first;
            rec.day_id = day_jobs[i].second.filename().string();
            for (ChannelKind k : kinds) {
                const std::filesystem::path file =
                    day_jobs[i].second / (std::string(to_string(k)) + ".csv");
                if (!std::filesystem::exists(file))
                    throw data_error("subject " + rec.subject_id + "/" + rec.day_id +
                                     ": missing channel " + to_string(k) + " (" + file.string() + ")");
                TimeSeries ts =
                    k == ChannelKind::BGL ? parse_cgm_csv(file) : parse_wristband_csv(file, k);
                rec.channels.emplace(k, std::move(ts));
            }
            ds.records[i] = std::move(rec);
        };

        const unsigned n_workers = std::min<unsigned>(
            std::max(1u, std::thread::hardware_concurrency()), static_cast<unsigned>(day_jobs.size()));
        if (n_workers <= 1) {
            for (std::size_t i = 0; i < day_jobs.size(); ++i)
                load_record(i);
        } else {
            std::atomic<std::size_t> next{0};
            std::exception_ptr first_error;
            std::mutex error_mutex;
            std::vector<std::thread> workers;
            for (unsigned w = 0; w < n_workers; ++w) {
                workers.emplace_back([&] {
                    while (true) {
                        const std::size_t i = next.fetch_add(1);
                        if (i >= day_jobs.size())
                            return;
                        try {
                            load_record(i);
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

        // hand each meal to the record whose channels cover it
        int assigned = 0;
        for (const MealEvent& m : meals) {
            bool placed = false;
            for (SubjectRecord& rec : ds.records) {
                if (rec.subject_id != m.subject_id)
                    continue;
                double lo = -std::numeric_limits<double>::infinity();
                double hi = std::numeric_limits<double>::infinity();
                for (const auto& [_, ts] : rec.channels) {
                    lo = std::max(lo, ts.start);
                    hi = std::min(hi, ts.end());
                }
                if (m.timestamp >= lo && m.timestamp <= hi) {
                    rec.meals.push_back(m);
                    placed = true;
                    break;
                }
            }
            if (placed)
                ++assigned;
            else
                log("ingest", "meal " + m.subject_id + " @ " + format_iso8601_utc(m.timestamp) +
                                  " is outside every recording");
        }
        ds.unassigned_meals = ds.n_meals - assigned;

        log("ingest", std::to_string(ds.records.size()) + " subject-days, " +
                          std::to_string(ds.n_meals) + " meals (" +
                          std::to_string(ds.unassigned_meals) + " uncovered)");
        return ds;
    });
}

WindowSet extract_all_windows(const Dataset& ds, const RunConfig& cfg, const StageLog& log) {
    return with_stage("preprocess", [&]() -> WindowSet {
        const PreprocessConfig pp = cfg.preprocess();
        WindowSet out;
        for (const SubjectRecord& rec : ds.records) {
            WindowExtraction ex = extract_meal_windows(rec, pp);
            for (const std::string& w : ex.warnings)
                log("preprocess", w);
            out.skipped += ex.skipped;
            out.skipped_by_subject[rec.subject_id] += ex.skipped;
            for (MealWindow& w : ex.windows)
                out.windows.push_back(std::move(w));
        }
        out.skipped += ds.unassigned_meals;
        log("preprocess", std::to_string(out.windows.size()) + " meal windows, " +
                              std::to_string(out.skipped) + " skipped");
        return out;
    });
}

// ---- evaluation ---------------------------------------------------------------

namespace {

struct MethodMatrices {
    FeatureMatrix mealmeter;
    FeatureMatrix huo;
    bool has_mealmeter = false;
    bool has_huo = false;
};

std::vector<std::pair<std::string, std::vector<int>>> rows_by_subject(const FeatureMatrix& m) {
    std::vector<std::pair<std::string, std::vector<int>>> groups;
    for (std::size_t r = 0; r < m.keys.size(); ++r) {
        if (groups.empty() || groups.back().first != m.keys[r].subject_id)
            groups.push_back({m.keys[r].subject_id, {}});
        groups.back().second.push_back(static_cast<int>(r));
    }
    return groups;
}

struct ScopedEval {
    EvalReport report;
    FittedPipeline pipeline; // mealmeter only
    bool has_pipeline = false;
};

void append_scatter(std::array<std::vector<ScatterPoint>, kTargetCount>& scatter,
                    const std::string& method, const FeatureMatrix& test,
                    const Eigen::MatrixXd& predicted) {
    for (int t = 0; t < kTargetCount; ++t)
        for (Eigen::Index r = 0; r < predicted.rows(); ++r)
            scatter[static_cast<std::size_t>(t)].push_back(
                {method, test.keys[static_cast<std::size_t>(r)].subject_id,
                 test.keys[static_cast<std::size_t>(r)].timestamp, test.targets(r, t),
                 predicted(r, t)});
}

ScopedEval eval_mealmeter(const RunConfig& cfg, const FeatureMatrix& rows, uint64_t split_seed,
                          const std::string& scope_key,
                          std::array<std::vector<ScatterPoint>, kTargetCount>& scatter) {
    auto [train, test] = split_train_test(rows, cfg.split_ratio, split_seed);
    ScopedEval out;
    out.pipeline = fit_pipeline(train, cfg.pca_components, split_seed, cfg.split_ratio,
                                to_string(cfg.scope), scope_key);
    out.pipeline.schema.entropy_bins = cfg.entropy_bins;
    out.pipeline.schema.resample_hz = cfg.resample_hz;
    out.pipeline.schema.horizon_min = cfg.horizon_min;
    out.pipeline.schema.smooth_window = cfg.smooth_window;
    out.pipeline.schema.smooth_all = cfg.smooth_all;
    out.pipeline.config_echo = cfg.echo();
    out.has_pipeline = true;

    const Predictions pred = predict(out.pipeline, test);
    out.report = evaluate_predictions(test.targets, pred.estimates);
    out.report.method = "mealmeter";
    out.report.scope = to_string(cfg.scope);
    out.report.scope_key = scope_key;
    out.report.n_train = static_cast<int>(train.rows());
    append_scatter(scatter, "mealmeter", test, pred.estimates);
    return out;
}

ScopedEval eval_huo(const RunConfig& cfg, const FeatureMatrix& rows, uint64_t split_seed,
                    const std::string& scope_key,
                    std::array<std::vector<ScatterPoint>, kTargetCount>& scatter) {
    auto [train, test] = split_train_test(rows, cfg.split_ratio, split_seed);
    const auto models = fit_baseline(train);
    const Eigen::MatrixXd pred = predict_baseline(models, test);

    ScopedEval out;
    out.report = evaluate_predictions(test.targets, pred);
    out.report.method = "huo";
    out.report.scope = to_string(cfg.scope);
    out.report.scope_key = scope_key;
    out.report.n_train = static_cast<int>(train.rows());
    append_scatter(scatter, "huo", test, pred);
    return out;
}

std::optional<double> mean_of_defined(const std::vector<std::optional<double>>& xs) {
    double sum = 0.0;
    int n = 0;
    for (const auto& x : xs)
        if (x) {
            sum += *x;
            ++n;
        }
    if (n == 0)
        return std::nullopt;
    return sum / n;
}

EvalReport average_report(const std::vector<EvalReport>& rows) {
    EvalReport avg;
    avg.method = rows.front().method;
    avg.scope = rows.front().scope;
    avg.scope_key = "average";
    for (int t = 0; t < kTargetCount; ++t) {
        std::vector<std::optional<double>> rmsres, rs;
        double mae_sum = 0.0;
        int excluded = 0;
        for (const EvalReport& r : rows) {
            const TargetMetrics& m = r.per_target[static_cast<std::size_t>(t)];
            mae_sum += m.mae;
            rmsres.push_back(m.rmsre);
            rs.push_back(m.pearson_r);
            excluded += m.rmsre_excluded;
        }
        TargetMetrics& m = avg.per_target[static_cast<std::size_t>(t)];
        m.mae = mae_sum / static_cast<double>(rows.size());
        m.rmsre = mean_of_defined(rmsres);
        m.pearson_r = mean_of_defined(rs);
        m.rmsre_excluded = excluded;
    }
    for (const EvalReport& r : rows) {
        avg.n_train += r.n_train;
        avg.n_test += r.n_test;
        avg.skipped_windows += r.skipped_windows;
    }
    return avg;
}

} // namespace

RunResult run_evaluation(const RunConfig& cfg, const StageLog& log) {
    cfg.validate();
    const Dataset ds = load_dataset(cfg.data_dir, cfg, log);
    const WindowSet ws = extract_all_windows(ds, cfg, log);

    MethodMatrices mats;
    const bool want_mealmeter = cfg.method == Method::MealMeter || cfg.method == Method::Both;
    const bool want_huo = cfg.method == Method::Huo || cfg.method == Method::Both;
    with_stage("featurize", [&] {
        if (want_mealmeter) {
            mats.mealmeter = build_feature_matrix(ws.windows, cfg.signals, cfg.entropy_bins);
            mats.has_mealmeter = true;
            log("featurize", std::to_string(mats.mealmeter.rows()) + " rows x " +
                                 std::to_string(mats.mealmeter.cols()) + " feature columns");
        }
        if (want_huo) {
            const bool has_post = std::find(cfg.signals.begin(), cfg.signals.end(),
                                            SignalName::BGL_POST) != cfg.signals.end();
            if (!has_post)
                throw config_error("huo baseline needs BGL_POST in the signal set");
            const auto seg_len =
                static_cast<std::size_t>(std::llround(cfg.horizon_min * 60.0 * cfg.resample_hz));
            mats.huo = build_baseline_matrix(
                ws.windows, make_kernel_bank(seg_len, cfg.resample_hz, cfg.huo_bandwidth_min));
            mats.has_huo = true;
            log("featurize", std::to_string(mats.huo.rows()) + " rows x " +
                                 std::to_string(mats.huo.cols()) + " kernel columns");
        }
    });

    RunResult res;
    res.n_windows = static_cast<int>(ws.windows.size());
    res.n_skipped = ws.skipped;

    auto run_method = [&](bool is_mealmeter) {
        const FeatureMatrix& fm = is_mealmeter ? mats.mealmeter : mats.huo;
        const char* method_name = is_mealmeter ? "mealmeter" : "huo";
        const std::string stage = std::string("fit/") + method_name;

        with_stage(stage, [&] {
            if (cfg.scope == Scope::Pooled) {
                ScopedEval ev = is_mealmeter
                                    ? eval_mealmeter(cfg, fm, cfg.seed, "pooled", res.scatter)
                                    : eval_huo(cfg, fm, cfg.seed, "pooled", res.scatter);
                ev.report.skipped_windows = ws.skipped;
                res.metrics.push_back(ev.report);
                res.comparison.push_back(ev.report);
                if (ev.has_pipeline) {
                    res.contributions.push_back(compute_contributions(ev.pipeline, "pooled"));
                    res.pipelines.push_back(std::move(ev.pipeline));
                }
                log(stage, "pooled: " + std::to_string(ev.report.n_train) + " train / " +
                               std::to_string(ev.report.n_test) + " test rows");
            } else {
                const auto groups = rows_by_subject(fm);
                std::vector<EvalReport> subject_rows;
                std::vector<ContributionReport> subject_contribs;
                for (std::size_t g = 0; g < groups.size(); ++g) {
                    const auto& [subject, idx] = groups[g];
                    const FeatureMatrix sub = fm.take_rows(idx);
                    const uint64_t sub_seed = mix_seed(cfg.seed, g, 7);
                    ScopedEval ev = is_mealmeter
                                        ? eval_mealmeter(cfg, sub, sub_seed, subject, res.scatter)
                                        : eval_huo(cfg, sub, sub_seed, subject, res.scatter);
                    const auto it = ws.skipped_by_subject.find(subject);
                    ev.report.skipped_windows = it == ws.skipped_by_subject.end() ? 0 : it->second;
                    subject_rows.push_back(ev.report);
                    if (ev.has_pipeline) {
                        subject_contribs.push_back(compute_contributions(ev.pipeline, subject));
                        res.pipelines.push_back(std::move(ev.pipeline));
                    }
                    log(stage, subject + ": " + std::to_string(ev.report.n_train) + " train / " +
                                   std::to_string(ev.report.n_test) + " test rows");
                }
                EvalReport avg = average_report(subject_rows);
                for (EvalReport& r : subject_rows)
                    res.metrics.push_back(std::move(r));
                res.comparison.push_back(avg);
                res.metrics.push_back(std::move(avg));

                if (!subject_contribs.empty()) {
                    // across-subject mean of each signal's contribution
                    ContributionReport mean_rep = subject_contribs.front();
                    mean_rep.scope_label = "per-subject-averaged";
                    for (int t = 0; t < kTargetCount; ++t) {
                        Eigen::VectorXd gsum =
                            Eigen::VectorXd::Zero(mean_rep.gamma[static_cast<std::size_t>(t)].size());
                        std::vector<double> ssum(mean_rep.signals.size(), 0.0);
                        for (const ContributionReport& cr : subject_contribs) {
                            gsum += cr.gamma[static_cast<std::size_t>(t)];
                            for (std::size_t s = 0; s < ssum.size(); ++s)
                                ssum[s] += cr.signal_gamma[static_cast<std::size_t>(t)][s];
                        }
                        const double n = static_cast<double>(subject_contribs.size());
                        mean_rep.gamma[static_cast<std::size_t>(t)] = gsum / n;
                        for (double& v : ssum)
                            v /= n;
                        mean_rep.signal_gamma[static_cast<std::size_t>(t)] = std::move(ssum);
                    }
                    res.contributions.push_back(std::move(mean_rep));
                }
            }
        });
    };

    if (want_mealmeter)
        run_method(true);
    if (want_huo)
        run_method(false);
    return res;
}

std::vector<std::filesystem::path> write_run_outputs(const RunConfig& cfg, const RunResult& result,
                                                     const StageLog& log) {
    return with_stage("export", [&]() -> std::vector<std::filesystem::path> {
        const std::filesystem::path out_dir = cfg.out_dir;
        std::filesystem::create_directories(out_dir);
        const ConfigEcho echo = cfg.echo();
        std::vector<std::filesystem::path> files;

        const std::filesystem::path metrics_path =
            out_dir / ("metrics_" + std::string(to_string(cfg.scope)) + ".csv");
        write_metrics_csv(metrics_path, echo, result.metrics);
        files.push_back(metrics_path);

        for (int t = 0; t < kTargetCount; ++t) {
            const std::string target = to_string(static_cast<Target>(t));
            const std::filesystem::path scatter_path = out_dir / ("scatter_" + target + ".csv");
            write_scatter_csv(scatter_path, echo, result.scatter[static_cast<std::size_t>(t)]);
            files.push_back(scatter_path);
            if (cfg.svg) {
                const std::filesystem::path svg_path = out_dir / ("scatter_" + target + ".svg");
                write_scatter_svg(svg_path, result.scatter[static_cast<std::size_t>(t)],
                                  "estimated vs. actual " + target + " (g)");
                files.push_back(svg_path);
            }
        }

        for (const ContributionReport& rep : result.contributions) {
            for (int t = 0; t < kTargetCount; ++t) {
                const std::string target = to_string(static_cast<Target>(t));
                const std::filesystem::path cpath = out_dir / ("contributions_" + target + ".csv");
                write_contributions_csv(cpath, echo, rep, static_cast<Target>(t));
                files.push_back(cpath);
                const std::filesystem::path fpath =
                    out_dir / ("feature_contributions_" + target + ".csv");
                write_feature_contributions_csv(fpath, echo, rep, static_cast<Target>(t));
                files.push_back(fpath);
                if (cfg.svg) {
                    std::vector<std::pair<std::string, double>> bars;
                    for (std::size_t s = 0; s < rep.signals.size(); ++s)
                        bars.emplace_back(to_string(rep.signals[s]),
                                          rep.signal_gamma[static_cast<std::size_t>(t)][s]);
                    const std::filesystem::path spath = out_dir / ("contributions_" + target + ".svg");
                    write_bars_svg(spath, bars, "signal contributions: " + target);
                    files.push_back(spath);
                }
            }
        }

        if (result.comparison.size() > 1) {
            const std::filesystem::path cmp_path = out_dir / "comparison.csv";
            write_comparison_csv(cmp_path, echo, result.comparison);
            files.push_back(cmp_path);
        }

        for (const FittedPipeline& p : result.pipelines) {
            const std::filesystem::path mpath = out_dir / ("model_" + p.scope_key + ".json");
            save_pipeline(p, mpath);
            files.push_back(mpath);
        }

        log("export", std::to_string(files.size()) + " files under " + out_dir.string());
        return files;
    });
}

// ---- featurize helpers ------------------------------------------------------------

FeatureMatrix featurize_dataset(const RunConfig& cfg, const StageLog& log) {
    const Dataset ds = load_dataset(cfg.data_dir, cfg, log);
    const WindowSet ws = extract_all_windows(ds, cfg, log);
    return with_stage("featurize",
                      [&] { return build_feature_matrix(ws.windows, cfg.signals, cfg.entropy_bins); });
}

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
    std::string out = "subject_id,timestamp";
    for (const std::string& c : m.column_names) {
        out += ',';
        out += c;
    }
    out += ",carbs_g,protein_g,fat_g\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out += m.keys[r].subject_id;
        out += ',';
        out += format_iso8601_utc(m.keys[r].timestamp);
        for (Eigen::Index c = 0; c < m.X.cols(); ++c) {
            out += ',';
            out += format_double(m.X(static_cast<Eigen::Index>(r), c));
        }
        for (int t = 0; t < kTargetCount; ++t) {
            out += ',';
            out += format_double(m.targets(static_cast<Eigen::Index>(r), t));
        }
        out += '\n';
    }
    write_file(path, out);
}

FeatureMatrix read_feature_csv(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    FeatureMatrix m;
    std::vector<std::vector<double>> rows;
    std::size_t pos = 0, line_no = 0;
    std::size_t n_cols = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line(text.data() + pos, (nl == std::string::npos ? text.size() : nl) - pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
        ++line_no;
        if (trim(line).empty() || line.front() == '#')
            continue;
        const auto fields = split_csv_line(line);
        if (m.column_names.empty()) {
            if (fields.size() < 6 || fields[0] != "subject_id")
                throw parse_error(path.string(), line_no, "not a feature matrix header");
            for (std::size_t i = 2; i + 3 < fields.size(); ++i)
                m.column_names.emplace_back(fields[i]);
            n_cols = fields.size();
            continue;
        }
        if (fields.size() != n_cols)
            throw parse_error(path.string(), line_no, "field count differs from header");
        RowKey key;
        key.subject_id = std::string(fields[0]);
        double numeric_ts = 0.0;
        key.timestamp = try_parse_double(fields[1], numeric_ts) ? numeric_ts
                                                                : parse_iso8601_utc(fields[1]);
        m.keys.push_back(std::move(key));
        std::vector<double> row;
        for (std::size_t i = 2; i < fields.size(); ++i) {
            double v = 0.0;
            if (!try_parse_double(fields[i], v))
                throw parse_error(path.string(), line_no, "non-numeric value '" + std::string(fields[i]) + "'");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    const std::size_t p = m.column_names.size();
    m.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
    m.targets.resize(static_cast<Eigen::Index>(rows.size()), kTargetCount);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < p; ++c)
            m.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        for (int t = 0; t < kTargetCount; ++t)
            m.targets(static_cast<Eigen::Index>(r), t) = rows[r][p + static_cast<std::size_t>(t)];
    }
    // column -> signal map from the "<SIGNAL>_<FEATURE>" naming
    for (const std::string& name : m.column_names) {
        int sig_idx = -1;
        for (SignalName s : {SignalName::BGL_PRE, SignalName::BGL_POST, SignalName::EDA, SignalName::HR,
                             SignalName::TEMP, SignalName::ACC_MAG, SignalName::BVP}) {
            const std::string prefix = std::string(to_string(s)) + "_";
            if (name.rfind(prefix, 0) == 0) {
                auto it = std::find(m.signals.begin(), m.signals.end(), s);
                if (it == m.signals.end()) {
                    m.signals.push_back(s);
                    sig_idx = static_cast<int>(m.signals.size()) - 1;
                } else {
                    sig_idx = static_cast<int>(it - m.signals.begin());
                }
                break;
            }
        }
        m.column_signal.push_back(sig_idx);
    }
    return m;
}

} // namespace mealmeter
