#include <cstring>
#include <fstream>
#include <stdexcept>

#include "stdc/model.hpp"

namespace stdc {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'D', 'C', 'C', 'K', 'P', 'T'};

const char* compose_name(StrCompose c) { return c == StrCompose::concat ? "concat" : "add"; }

}  // namespace

nlohmann::json to_json(const ModelConfig& cfg) {
    nlohmann::json j;
    j["d"] = cfg.d;
    j["d_lap"] = cfg.d_lap;
    j["encoder_layers"] = cfg.encoder_layers;
    j["decoder_layers"] = cfg.decoder_layers;
    j["heads"] = cfg.heads;
    j["past"] = cfg.past;
    j["future"] = cfg.future;
    j["features"] = cfg.features;
    j["s_dim"] = cfg.s_dim;
    j["t_dim"] = cfg.t_dim;
    j["ablation"] = {{"dc", cfg.ablation.dc},
                     {"map", cfg.ablation.map},
                     {"sc", cfg.ablation.sc},
                     {"tc", cfg.ablation.tc},
                     {"lap", cfg.ablation.lap}};
    j["str_compose"] = compose_name(cfg.str_compose);
    j["layer_norm"] = cfg.layer_norm;
    j["residual"] = cfg.residual;
    j["head_proj"] = cfg.head_proj;
    j["seed"] = cfg.seed;
    j["temporal_schema"] = cfg.temporal_schema.columns;
    j["spatial_schema"] = cfg.spatial_schema.columns;
    return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.d = j.at("d").get<std::size_t>();
    c.d_lap = j.at("d_lap").get<std::size_t>();
    c.encoder_layers = j.at("encoder_layers").get<std::size_t>();
    c.decoder_layers = j.at("decoder_layers").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.past = j.at("past").get<std::size_t>();
    c.future = j.at("future").get<std::size_t>();
    c.features = j.at("features").get<std::size_t>();
    c.s_dim = j.at("s_dim").get<std::size_t>();
    c.t_dim = j.at("t_dim").get<std::size_t>();
    const auto& a = j.at("ablation");
    c.ablation = Ablation{a.at("dc").get<bool>(), a.at("map").get<bool>(), a.at("sc").get<bool>(),
                          a.at("tc").get<bool>(), a.at("lap").get<bool>()};
    const auto compose = j.at("str_compose").get<std::string>();
    if (compose != "concat" && compose != "add") throw std::invalid_argument("unknown str_compose '" + compose + "'");
    c.str_compose = compose == "concat" ? StrCompose::concat : StrCompose::add;
    c.layer_norm = j.at("layer_norm").get<bool>();
    c.residual = j.at("residual").get<bool>();
    c.head_proj = j.at("head_proj").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.temporal_schema.columns = j.at("temporal_schema").get<std::vector<std::string>>();
    c.spatial_schema.columns = j.at("spatial_schema").get<std::vector<std::string>>();
    c.validate();
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    nlohmann::json header;
    header["config"] = to_json(ckpt.config);
    nlohmann::json manifest = nlohmann::json::array();
    const auto tensors = ckpt.params.named();
    for (const auto& nt : tensors) manifest.push_back({{"name", nt.name}, {"shape", nt.tensor->shape()}});
    header["tensors"] = manifest;
    if (ckpt.scaler) header["scaler"] = {{"mean", ckpt.scaler->mean()}, {"std", ckpt.scaler->std()}};
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof kMagic);
    const std::uint32_t version = kCheckpointVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& nt : tensors) {
        out.write(reinterpret_cast<const char*>(nt.tensor->data()),
                  static_cast<std::streamsize>(nt.tensor->size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    char magic[sizeof kMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw std::runtime_error(path.string() + " is not a checkpoint file");
    }
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    if (!in) throw std::runtime_error(path.string() + ": truncated checkpoint header");
    if (version != kCheckpointVersion) {
        throw std::runtime_error(path.string() + ": checkpoint format version " + std::to_string(version) +
                                 " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error(path.string() + ": truncated checkpoint header");
    const auto header = nlohmann::json::parse(text);

    Checkpoint ckpt;
    ckpt.config = model_config_from_json(header.at("config"));
    ckpt.params = init_params(ckpt.config);
    auto tensors = ckpt.params.named();
    const auto& manifest = header.at("tensors");
    if (manifest.size() != tensors.size()) {
        throw std::runtime_error(path.string() + ": tensor manifest has " + std::to_string(manifest.size()) +
                                 " entries, config implies " + std::to_string(tensors.size()));
    }
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto name = manifest[i].at("name").get<std::string>();
        const auto shape = manifest[i].at("shape").get<Shape>();
        if (name != tensors[i].name || shape != tensors[i].tensor->shape()) {
            throw std::runtime_error(path.string() + ": tensor " + std::to_string(i) + " is " + name +
                                     shape_str(shape) + ", expected " + tensors[i].name +
                                     shape_str(tensors[i].tensor->shape()));
        }
        in.read(reinterpret_cast<char*>(tensors[i].tensor->data()),
                static_cast<std::streamsize>(tensors[i].tensor->size() * sizeof(double)));
        if (!in) throw std::runtime_error(path.string() + ": truncated tensor data for " + name);
    }
    if (header.contains("scaler")) {
        ckpt.scaler = Scaler(header["scaler"].at("mean").get<std::vector<double>>(),
                             header["scaler"].at("std").get<std::vector<double>>());
    }
    return ckpt;
}

}  // namespace stdc
