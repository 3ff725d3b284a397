#include <deque>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mealmeter/runner.hpp"

namespace {

using namespace mealmeter;

struct CommonFlags {
    CLI::Option* config = nullptr;
    CLI::Option* data = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* scope = nullptr;
    CLI::Option* method = nullptr;
    CLI::Option* signals = nullptr;
    CLI::Option* svg = nullptr;

    std::string config_path, data_dir, out_dir, scope_v, method_v, signals_v;
    uint64_t seed_v = 0;
    bool svg_v = false;
};

std::deque<CommonFlags>& flag_storage() {
    static std::deque<CommonFlags> storage; // stable addresses across subcommands
    return storage;
}

CommonFlags* add_common(CLI::App* cmd) {
    CommonFlags* f = &flag_storage().emplace_back();
    f->config = cmd->add_option("--config", f->config_path, "key = value config file");
    f->data = cmd->add_option("--data", f->data_dir, "dataset directory");
    f->out = cmd->add_option("--out", f->out_dir, "output directory");
    f->seed = cmd->add_option("--seed", f->seed_v, "random seed");
    f->scope = cmd->add_option("--scope", f->scope_v, "pooled|per-subject");
    f->method = cmd->add_option("--method", f->method_v, "mealmeter|huo|both");
    f->signals = cmd->add_option("--signals", f->signals_v, "comma-separated signal set");
    f->svg = cmd->add_flag("--svg", f->svg_v, "also render SVG plots");
    return f;
}

RunConfig resolve_config(const CommonFlags& f) {
    RunConfig cfg = f.config->count() ? load_run_config(f.config_path) : RunConfig{};
    if (f.data->count())
        set_config_key(cfg, "data_dir", f.data_dir);
    if (f.out->count())
        set_config_key(cfg, "out_dir", f.out_dir);
    if (f.seed->count())
        set_config_key(cfg, "seed", std::to_string(f.seed_v));
    if (f.scope->count())
        set_config_key(cfg, "scope", f.scope_v);
    if (f.method->count())
        set_config_key(cfg, "method", f.method_v);
    if (f.signals->count())
        set_config_key(cfg, "signals", f.signals_v);
    if (f.svg->count())
        set_config_key(cfg, "svg", "true");
    cfg.validate();
    return cfg;
}

void cmd_simulate(const RunConfig& cfg) {
    SynthConfig synth = cfg.synth;
    synth.seed = cfg.seed;
    const SimulationSummary s = simulate(synth, cfg.data_dir);
    std::cout << "simulated " << synth.n_subjects << " subjects, " << s.n_subject_days
              << " subject-days, " << s.n_meals << " meals -> " << cfg.data_dir << "\n";
}

void cmd_ingest(const RunConfig& cfg) {
    const Dataset ds = load_dataset(cfg.data_dir, cfg);
    const WindowSet ws = extract_all_windows(ds, cfg);
    std::cout << "subject-days: " << ds.records.size() << "\n"
              << "meals: " << ds.n_meals << "\n"
              << "windows: " << ws.windows.size() << "\n"
              << "skipped: " << ws.skipped << "\n";
}

void cmd_featurize(const RunConfig& cfg) {
    const FeatureMatrix m = featurize_dataset(cfg);
    const std::filesystem::path path = std::filesystem::path(cfg.out_dir) / "features.csv";
    std::filesystem::create_directories(cfg.out_dir);
    write_feature_csv(path, m);
    std::cout << "features: " << m.rows() << " rows x " << m.cols() << " columns -> " << path.string()
              << "\n";
}

void cmd_train(const RunConfig& cfg) {
    const RunResult res = run_evaluation(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    for (const FittedPipeline& p : res.pipelines) {
        const std::filesystem::path path =
            std::filesystem::path(cfg.out_dir) / ("model_" + p.scope_key + ".json");
        save_pipeline(p, path);
        std::cout << "model -> " << path.string() << "\n";
    }
    if (res.pipelines.empty())
        std::cout << "no pipeline artifacts (method=" << to_string(cfg.method)
                  << " fits no saved model)\n";
}

void cmd_predict(const RunConfig& cfg) {
    const FeatureMatrix m = featurize_dataset(cfg);

    std::string out = "subject_id,timestamp,carbs_actual_g,protein_actual_g,fat_actual_g,"
                      "carbs_pred_g,protein_pred_g,fat_pred_g,carbs_raw,protein_raw,fat_raw,clamped\n";
    auto predict_rows = [&](const FittedPipeline& p, const FeatureMatrix& rows) {
        const Predictions pred = predict(p, rows);
        for (std::size_t r = 0; r < rows.rows(); ++r) {
            out += rows.keys[r].subject_id;
            out += ',';
            out += format_iso8601_utc(rows.keys[r].timestamp);
            for (int t = 0; t < kTargetCount; ++t) {
                out += ',';
                out += format_double(rows.targets(static_cast<Eigen::Index>(r), t));
            }
            for (int t = 0; t < kTargetCount; ++t) {
                out += ',';
                out += format_double(pred.estimates(static_cast<Eigen::Index>(r), t));
            }
            std::string clamped;
            for (int t = 0; t < kTargetCount; ++t) {
                out += ',';
                out += format_double(pred.raw(static_cast<Eigen::Index>(r), t));
                if (pred.clamped[r][static_cast<std::size_t>(t)]) {
                    if (!clamped.empty())
                        clamped += '|';
                    clamped += to_string(static_cast<Target>(t));
                }
            }
            out += ',';
            out += clamped;
            out += '\n';
        }
    };

    if (cfg.scope == Scope::Pooled) {
        const std::filesystem::path mpath = std::filesystem::path(cfg.out_dir) / "model_pooled.json";
        predict_rows(load_pipeline(mpath), m);
    } else {
        std::map<std::string, std::vector<int>> by_subject;
        for (std::size_t r = 0; r < m.rows(); ++r)
            by_subject[m.keys[r].subject_id].push_back(static_cast<int>(r));
        for (const auto& [subject, idx] : by_subject) {
            const std::filesystem::path mpath =
                std::filesystem::path(cfg.out_dir) / ("model_" + subject + ".json");
            predict_rows(load_pipeline(mpath), m.take_rows(idx));
        }
    }

    const std::filesystem::path path = std::filesystem::path(cfg.out_dir) / "predictions.csv";
    write_file(path, out);
    std::cout << "predictions -> " << path.string() << "\n";
}

void print_summary(const RunConfig& cfg, const RunResult& res,
                   const std::vector<std::filesystem::path>& files) {
    std::cout << "windows: " << res.n_windows << " (skipped " << res.n_skipped << ")\n";
    for (const EvalReport& r : res.metrics) {
        std::cout << r.method << "/" << r.scope_key << ":";
        for (int t = 0; t < kTargetCount; ++t) {
            const TargetMetrics& m = r.per_target[static_cast<std::size_t>(t)];
            std::cout << " " << to_string(static_cast<Target>(t)) << " mae="
                      << format_double_fixed(m.mae, 2)
                      << " rmsre=" << (m.rmsre ? format_double_fixed(*m.rmsre, 3) : "nan")
                      << " r=" << (m.pearson_r ? format_double_fixed(*m.pearson_r, 3) : "nan");
        }
        std::cout << "\n";
    }
    for (const auto& f : files)
        std::cout << "wrote " << f.string() << "\n";
    (void)cfg;
}

void cmd_evaluate(const RunConfig& cfg) {
    const RunResult res = run_evaluation(cfg);
    const auto files = write_run_outputs(cfg, res);
    print_summary(cfg, res, files);
}

void cmd_contributions(const RunConfig& cfg) {
    if (cfg.method == Method::Huo)
        throw config_error("contributions require the mealmeter method");
    const RunResult res = run_evaluation(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    const ConfigEcho echo = cfg.echo();
    for (const ContributionReport& rep : res.contributions) {
        for (int t = 0; t < kTargetCount; ++t) {
            const std::string target = to_string(static_cast<Target>(t));
            const auto cpath = std::filesystem::path(cfg.out_dir) / ("contributions_" + target + ".csv");
            write_contributions_csv(cpath, echo, rep, static_cast<Target>(t));
            const auto fpath =
                std::filesystem::path(cfg.out_dir) / ("feature_contributions_" + target + ".csv");
            write_feature_contributions_csv(fpath, echo, rep, static_cast<Target>(t));
            std::cout << "wrote " << cpath.string() << "\n";
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wearable-to-macronutrient estimation pipeline"};
    app.require_subcommand(1);

    struct Cmd {
        const char* name;
        const char* help;
        void (*run)(const RunConfig&);
    };
    const Cmd cmds[] = {
        {"simulate", "generate a synthetic dataset with known ground truth", cmd_simulate},
        {"ingest", "load and validate a dataset, printing counts", cmd_ingest},
        {"featurize", "write the feature matrix CSV", cmd_featurize},
        {"train", "fit and save model artifacts", cmd_train},
        {"predict", "apply saved models to a dataset", cmd_predict},
        {"evaluate", "full pipeline run with metric/scatter/contribution reports", cmd_evaluate},
        {"contributions", "fit and export the signal contribution decomposition", cmd_contributions},
        {"report", "evaluate plus SVG renderings", cmd_evaluate},
    };

    std::vector<std::pair<const Cmd*, CommonFlags*>> wired;
    for (const Cmd& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        wired.emplace_back(&c, add_common(sub));
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (std::size_t i = 0; i < wired.size(); ++i) {
            CLI::App* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
            if (sub && sub->get_name() == cmds[i].name) {
                RunConfig cfg = resolve_config(*wired[i].second);
                if (std::string(cmds[i].name) == "report")
                    cfg.svg = true;
                cmds[i].run(cfg);
                return 0;
            }
        }
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const mealmeter::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mealmeter::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const mealmeter::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
