#include "stdc/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "stdc/csv.hpp"
#include "stdc/plot.hpp"

namespace stdc {

namespace fs = std::filesystem;

fs::path output_root(const RunConfig& cfg) {
    if (!cfg.get("out").empty()) return cfg.get("out");
    if (const char* env = std::getenv("STDC_OUT_ROOT"); env && *env) return env;
    return "runs";
}

fs::path make_run_dir(const RunConfig& cfg, const std::string& command) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    const fs::path root = output_root(cfg);
    fs::path dir = root / (command + "-" + stamp);
    for (int k = 1; fs::exists(dir); ++k) dir = root / (command + "-" + stamp + "-" + std::to_string(k));
    fs::create_directories(dir);
    cfg.save(dir / "run_config.txt");
    return dir;
}

CityData load_city(const RunConfig& cfg) {
    const std::string& ds = cfg.get("dataset");
    if (!ds.empty()) return load_archive(ds);
    return generate_synthetic(cfg.get_size("synth.regions"), cfg.get_size("synth.length"), cfg.get_u64("seed"),
                              cfg.synth_profile())
        .city;
}

void write_predictions_csv(const fs::path& path, const Predictions& p, const std::vector<std::string>& region_ids) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "window,step,region_id,feature,y_hat,y\n";
    const std::size_t W = p.y.dim(0), T = p.y.dim(1), n = p.y.dim(2), f = p.y.dim(3);
    for (std::size_t w = 0; w < W; ++w)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < f; ++c) {
                    const std::size_t idx = ((w * T + t) * n + i) * f + c;
                    out << w << ',' << t << ',' << region_ids[i] << ',' << (c == kInflow ? "inflow" : "outflow") << ','
                        << csv::format_double(p.y_hat[idx]) << ',' << csv::format_double(p.y[idx]) << '\n';
                }
}

namespace {

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

struct Fitted {
    ModelConfig model;
    TrainState state;
    EvalReport test;
    EvalReport persistence;
};

// Trains, checkpoints and evaluates one configuration inside `dir`.
Fitted fit_and_report(const RunConfig& cfg, ModelConfig model, const PreparedData& data, const fs::path& dir,
                      std::ostream& log) {
    bind_config_to_data(model, data);
    model.validate();
    const TrainConfig tc = cfg.train();
    std::ofstream jsonl(dir / "train_log.jsonl");
    if (!jsonl) throw std::runtime_error("cannot write " + (dir / "train_log.jsonl").string());

    Fitted f;
    f.model = model;
    f.state = train(model, init_params(model), data, tc, &jsonl);
    log << "trained " << f.state.history.size() << " epochs, best epoch " << f.state.best_epoch << ", best val MAE "
        << fmt(f.state.best_val_mae) << (f.state.early_stopped ? " (early stop)" : "") << '\n';
    save_checkpoint(dir / "model.ckpt", Checkpoint{model, f.state.best_params, data.scaler});

    const Predictions pred = predict_windows(model, f.state.best_params, data, data.splits.test);
    f.test = compute_metrics(pred.y_hat, pred.y);
    const Predictions base = persistence_windows(data, data.splits.test, model.future);
    f.persistence = compute_metrics(base.y_hat, base.y);
    write_predictions_csv(dir / "predictions.csv", pred, data.region_ids);
    write_json(dir / "report.json", {{"model", f.test.to_json()},
                                     {"persistence", f.persistence.to_json()},
                                     {"parameters", f.state.best_params.parameter_count()},
                                     {"best_epoch", f.state.best_epoch},
                                     {"early_stopped", f.state.early_stopped},
                                     {"splits", {data.splits.train.size(), data.splits.val.size(), data.splits.test.size()}}});
    log << "test IO MAE " << fmt(f.test.io.mae) << " RMSE " << fmt(f.test.io.rmse) << "; persistence MAE "
        << fmt(f.persistence.io.mae) << '\n';
    return f;
}

PreparedData prepare_for(const RunConfig& cfg, const ModelConfig& model, const CityData& city) {
    PrepareOptions opts = cfg.prepare();
    opts.past = model.past;
    opts.future = model.future;
    opts.d_lap = model.d_lap;
    return prepare(city, opts);
}

}  // namespace

fs::path cmd_synth(const RunConfig& cfg, std::ostream& log) {
    const fs::path dir = make_run_dir(cfg, "synth");
    const CityData city = generate_synthetic(cfg.get_size("synth.regions"), cfg.get_size("synth.length"),
                                             cfg.get_u64("seed"), cfg.synth_profile())
                              .city;
    save_archive(dir / "dataset", city);
    log << "wrote " << city.flow.regions() << " regions x " << city.flow.length() << " hours to "
        << (dir / "dataset").string() << '\n';
    return dir / "dataset";
}

fs::path cmd_ingest(const RunConfig& cfg, const IngestPaths& paths, std::ostream& log) {
    for (const fs::path& p : {paths.flow, paths.temporal, paths.spatial, paths.adjacency}) {
        if (!fs::exists(p)) throw std::runtime_error("input file not found: " + p.string());
    }
    const CityData city = ingest_csv(paths);
    const fs::path dir = make_run_dir(cfg, "ingest");
    save_archive(dir / "dataset", city);
    log << "ingested " << city.flow.regions() << " regions x " << city.flow.length() << " hours into "
        << (dir / "dataset").string() << '\n';
    return dir / "dataset";
}

TrainOutcome cmd_train(const RunConfig& cfg, std::ostream& log) {
    const ModelConfig model = cfg.model();
    cfg.train();  // validate before creating outputs
    const CityData city = load_city(cfg);
    const PreparedData data = prepare_for(cfg, model, city);
    const fs::path dir = make_run_dir(cfg, "train");
    Fitted f = fit_and_report(cfg, model, data, dir, log);
    return {dir, f.model, std::move(f.state), f.test, f.persistence};
}

EvalReport cmd_eval(const RunConfig& cfg, const fs::path& checkpoint, std::ostream& log, fs::path* run_dir) {
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const CityData city = load_city(cfg);
    const PreparedData data = prepare_for(cfg, ckpt.config, city);
    check_schema(ckpt.config.temporal_schema, data.temporal.schema, "temporal confounder");
    check_schema(ckpt.config.spatial_schema, data.spatial.schema, "spatial confounder");
    const fs::path dir = make_run_dir(cfg, "eval");
    const Predictions pred = predict_windows(ckpt.config, ckpt.params, data, data.splits.test);
    const EvalReport rep = compute_metrics(pred.y_hat, pred.y);
    write_predictions_csv(dir / "predictions.csv", pred, data.region_ids);
    write_json(dir / "report.json", rep.to_json());
    log << "test IO MAE " << fmt(rep.io.mae) << " RMSE " << fmt(rep.io.rmse) << '\n';
    if (run_dir) *run_dir = dir;
    return rep;
}

EvalReport cmd_transfer(const RunConfig& cfg, const fs::path& checkpoint, std::ostream& log, fs::path* run_dir) {
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const CityData city = load_city(cfg);
    const EvalReport rep = zero_shot_eval(ckpt, city, cfg.prepare());
    const fs::path dir = make_run_dir(cfg, "transfer");
    write_json(dir / "report.json", rep.to_json());
    log << "zero-shot IO MAE " << fmt(rep.io.mae) << " RMSE " << fmt(rep.io.rmse) << " on " << city.flow.regions()
        << " regions\n";
    if (run_dir) *run_dir = dir;
    return rep;
}

AblationOutcome cmd_ablate(const RunConfig& cfg, std::ostream& log) {
    const ModelConfig base = cfg.model();
    cfg.train();
    const CityData city = load_city(cfg);
    const PreparedData data = prepare_for(cfg, base, city);
    AblationOutcome out;
    out.run_dir = make_run_dir(cfg, "ablate");
    for (const Ablation& a : ablation_variants()) {
        ModelConfig m = base;
        m.ablation = a;
        const std::string name = ablation_name(a);
        std::string slug = name;
        for (char& c : slug)
            if (c == ' ' || c == '/') c = '_';
        const fs::path dir = out.run_dir / slug;
        fs::create_directories(dir);
        log << "[" << name << "] ";
        const Fitted f = fit_and_report(cfg, m, data, dir, log);
        out.rows.push_back({name, a, f.state.best_params.parameter_count(), f.test.io.mae, f.test.io.rmse});
    }
    std::ofstream table(out.run_dir / "ablation.csv");
    table << "variant,parameters,mae,rmse\n";
    for (const auto& r : out.rows) {
        table << r.variant << ',' << r.parameters << ',' << csv::format_double(r.mae) << ',' << csv::format_double(r.rmse)
              << '\n';
    }
    if (!table) throw std::runtime_error("failed writing ablation table");
    log << "variant      params      MAE      RMSE\n";
    for (const auto& r : out.rows) {
        char line[128];
        std::snprintf(line, sizeof line, "%-10s %8zu %8.4f %9.4f\n", r.variant.c_str(), r.parameters, r.mae, r.rmse);
        log << line;
    }
    return out;
}

fs::path cmd_export(const RunConfig& cfg, const fs::path& checkpoint, const std::string& kind, std::ostream& log) {
    if (kind != "gates" && kind != "attention") {
        throw std::invalid_argument("export kind must be 'gates' or 'attention', got '" + kind + "'");
    }
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const CityData city = load_city(cfg);
    const PreparedData data = prepare_for(cfg, ckpt.config, city);
    const fs::path dir = make_run_dir(cfg, "export-" + kind);
    if (kind == "gates") {
        std::vector<WindowSample> all;
        for (const auto* split : {&data.splits.train, &data.splits.val, &data.splits.test})
            all.insert(all.end(), split->begin(), split->end());
        const GateExport g = export_gate_weights(ckpt.config, ckpt.params, data, all);
        write_gate_csv(dir / "gates.csv", g);
        write_gate_region_csv(dir / "gates_region.csv", g);
        log << "wrote " << g.rows.size() << " gate rows to " << (dir / "gates.csv").string() << '\n';
        return dir / "gates.csv";
    }
    const std::size_t k = cfg.get_size("export.window");
    if (k >= data.splits.test.size()) {
        throw std::invalid_argument("export.window " + std::to_string(k) + " out of range (test split has " +
                                    std::to_string(data.splits.test.size()) + " windows)");
    }
    const AttentionExport a = export_cta_attention(ckpt.config, ckpt.params, data, data.splits.test[k]);
    write_json(dir / "attention.json", a.to_json());
    log << "wrote attention " << shape_str(a.attention.shape()) << " to " << (dir / "attention.json").string() << '\n';
    return dir / "attention.json";
}

fs::path cmd_plot(const RunConfig& cfg, const fs::path& input, const std::string& kind, std::ostream& log) {
    const std::size_t region = cfg.get_size("plot.region");
    std::string svg;
    if (kind == "prediction") {
        const csv::File f = csv::read(input);
        std::map<std::string, std::size_t> regions;
        Series pred{"predicted inflow", {}}, truth{"observed inflow", {}};
        for (const auto& r : f.rows) {
            if (r.fields.size() != 6) throw std::runtime_error(input.string() + ":" + std::to_string(r.line) + ": expected 6 fields");
            regions.emplace(r.fields[2], regions.size());
            if (r.fields[1] != "0" || r.fields[3] != "inflow" || regions[r.fields[2]] != region) continue;
            pred.values.push_back(csv::parse_double(r.fields[4], input, r.line, "y_hat"));
            truth.values.push_back(csv::parse_double(r.fields[5], input, r.line, "y"));
        }
        svg = line_chart_svg("one-step-ahead inflow, region " + std::to_string(region), {truth, pred});
    } else if (kind == "gates") {
        const csv::File f = csv::read(input);
        std::map<std::string, Series> by_region;
        for (const auto& r : f.rows) {
            auto& s = by_region[r.fields.at(0)];
            s.name = r.fields[0];
            s.values.push_back(csv::parse_double(r.fields.at(2), input, r.line, "p_cs"));
        }
        std::vector<Series> series;
        for (auto& [id, s] : by_region)
            if (series.size() < 8) series.push_back(std::move(s));
        svg = line_chart_svg("spatial confounder gate p_cs", series);
    } else if (kind == "attention") {
        std::ifstream in(input);
        if (!in) throw std::runtime_error("cannot open " + input.string());
        const auto j = nlohmann::json::parse(in);
        const auto& a = j.at("attention");
        if (region >= a.size()) throw std::invalid_argument("plot.region out of range");
        const auto rows = a[region].get<std::vector<std::vector<double>>>();
        Tensor m({rows.size(), rows.empty() ? 0 : rows[0].size()});
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < rows[r].size(); ++c) m.at(r, c) = rows[r][c];
        svg = heatmap_svg("cross-time attention, region " + j.at("region_ids")[region].get<std::string>(), m,
                          j.at("future_timestamps").get<std::vector<std::string>>(),
                          j.at("past_timestamps").get<std::vector<std::string>>());
    } else {
        throw std::invalid_argument("plot kind must be prediction, gates or attention, got '" + kind + "'");
    }
    const fs::path dir = make_run_dir(cfg, "plot-" + kind);
    write_text(dir / (kind + ".svg"), svg);
    log << "wrote " << (dir / (kind + ".svg")).string() << '\n';
    return dir / (kind + ".svg");
}

}  // namespace stdc
