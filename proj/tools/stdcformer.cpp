#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "stdc/commands.hpp"

namespace {

// Pulls `--section.key value` / `--section.key=value` overrides out of argv.
std::vector<std::pair<std::string, std::string>> take_overrides(std::vector<std::string>& args) {
    std::vector<std::pair<std::string, std::string>> out;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) != 0 || a.find('.') == std::string::npos || a.find('.') > a.find('=')) {
            rest.push_back(a);
            continue;
        }
        const auto eq = a.find('=');
        if (eq != std::string::npos) {
            out.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
        } else {
            if (i + 1 >= args.size()) throw std::invalid_argument("missing value for " + a);
            out.emplace_back(a.substr(2), args[++i]);
        }
    }
    args = std::move(rest);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::vector<std::pair<std::string, std::string>> overrides;
    try {
        overrides = take_overrides(args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    CLI::App app{"stdcformer: de-confounded spatio-temporal crowd flow forecasting"};
    app.require_subcommand(1);
    std::string config_path, out_dir, dataset, checkpoint;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "random seed");
    app.add_option("--out", out_dir, "output root (default $STDC_OUT_ROOT or ./runs)");
    app.add_option("--dataset", dataset, "dataset archive directory (default: synthesize)");
    app.footer("Any config key can be overridden as --<key> VALUE, e.g. --model.d 32 --train.max_epochs 10.");

    auto* synth = app.add_subcommand("synth", "generate a synthetic city archive");
    stdc::IngestPaths paths;
    auto* ingest = app.add_subcommand("ingest", "convert CSV files into an archive");
    ingest->add_option("--flow", paths.flow)->required();
    ingest->add_option("--temporal", paths.temporal)->required();
    ingest->add_option("--spatial", paths.spatial)->required();
    ingest->add_option("--adjacency", paths.adjacency)->required();
    auto* train = app.add_subcommand("train", "train a model and evaluate it on the test split");
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset's test split");
    auto* transfer = app.add_subcommand("transfer", "zero-shot evaluation of a checkpoint on another city");
    for (auto* sub : {eval, transfer}) sub->add_option("--checkpoint", checkpoint)->required();
    auto* ablate = app.add_subcommand("ablate", "train the full model and its five ablations");
    std::string kind;
    auto* exp = app.add_subcommand("export", "export gate weights or cross-time attention");
    exp->add_option("--checkpoint", checkpoint)->required();
    exp->add_option("kind", kind, "gates | attention")->required()->check(CLI::IsMember({"gates", "attention"}));
    std::string input;
    auto* plot = app.add_subcommand("plot", "render an SVG from an eval or export output");
    plot->add_option("kind", kind, "prediction | gates | attention")
        ->required()
        ->check(CLI::IsMember({"prediction", "gates", "attention"}));
    plot->add_option("input", input, "predictions.csv, gates.csv or attention.json")->required();

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        stdc::RunConfig cfg;
        if (!config_path.empty()) cfg.load_file(config_path);
        if (seed) cfg.set("seed", std::to_string(*seed));
        if (!out_dir.empty()) cfg.set("out", out_dir);
        if (!dataset.empty()) cfg.set("dataset", dataset);
        for (const auto& [k, v] : overrides) cfg.set(k, v);

        std::ostream& log = std::cout;
        if (synth->parsed()) {
            std::cout << stdc::cmd_synth(cfg, log).string() << '\n';
        } else if (ingest->parsed()) {
            std::cout << stdc::cmd_ingest(cfg, paths, log).string() << '\n';
        } else if (train->parsed()) {
            std::cout << stdc::cmd_train(cfg, log).run_dir.string() << '\n';
        } else if (eval->parsed()) {
            stdc::cmd_eval(cfg, checkpoint, log);
        } else if (transfer->parsed()) {
            stdc::cmd_transfer(cfg, checkpoint, log);
        } else if (ablate->parsed()) {
            std::cout << stdc::cmd_ablate(cfg, log).run_dir.string() << '\n';
        } else if (exp->parsed()) {
            stdc::cmd_export(cfg, checkpoint, kind, log);
        } else if (plot->parsed()) {
            stdc::cmd_plot(cfg, input, kind, log);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
