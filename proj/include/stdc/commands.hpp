#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "stdc/config.hpp"
#include "stdc/evaluation.hpp"

namespace stdc {

// Output root: `out` from the config, or $STDC_OUT_ROOT when `out` is unset.
std::filesystem::path output_root(const RunConfig& cfg);
// Creates <root>/<command>-<UTC timestamp>[-k] and writes run_config.txt into it.
std::filesystem::path make_run_dir(const RunConfig& cfg, const std::string& command);

// `dataset` names an archive directory; when empty a synthetic city is generated
// from the synth.* keys.
CityData load_city(const RunConfig& cfg);

struct TrainOutcome {
    std::filesystem::path run_dir;
    ModelConfig model;
    TrainState state;
    EvalReport test;
    EvalReport persistence;
};

struct AblationRow {
    std::string variant;
    Ablation ablation;
    std::size_t parameters = 0;
    double mae = 0.0;
    double rmse = 0.0;
};

struct AblationOutcome {
    std::filesystem::path run_dir;
    std::vector<AblationRow> rows;
};

std::filesystem::path cmd_synth(const RunConfig& cfg, std::ostream& log);
std::filesystem::path cmd_ingest(const RunConfig& cfg, const IngestPaths& paths, std::ostream& log);
TrainOutcome cmd_train(const RunConfig& cfg, std::ostream& log);
EvalReport cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint, std::ostream& log,
                    std::filesystem::path* run_dir = nullptr);
EvalReport cmd_transfer(const RunConfig& cfg, const std::filesystem::path& checkpoint, std::ostream& log,
                        std::filesystem::path* run_dir = nullptr);
AblationOutcome cmd_ablate(const RunConfig& cfg, std::ostream& log);
// kind is "gates" or "attention".
std::filesystem::path cmd_export(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                                 const std::string& kind, std::ostream& log);
// kind is "prediction" (predictions.csv), "gates" (gates.csv) or "attention" (attention.json).
std::filesystem::path cmd_plot(const RunConfig& cfg, const std::filesystem::path& input, const std::string& kind,
                               std::ostream& log);

void write_predictions_csv(const std::filesystem::path& path, const Predictions& p,
                           const std::vector<std::string>& region_ids);

}  // namespace stdc
