#include "stdc/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stdc {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

RunConfig::RunConfig() {
    values_ = {
        {"seed", "0"},
        {"out", ""},
        {"dataset", ""},
        {"synth.regions", "8"},
        {"synth.length", "720"},
        {"data.past", "6"},
        {"data.future", "6"},
        {"data.stride", "1"},
        {"data.ratio.train", "7"},
        {"data.ratio.val", "1"},
        {"data.ratio.test", "2"},
        {"data.zone_onehot", "false"},
        {"data.future_weather", "teacher_forced"},
        {"model.d", "64"},
        {"model.d_lap", "8"},
        {"model.encoder_layers", "5"},
        {"model.decoder_layers", "5"},
        {"model.heads", "8"},
        {"model.str_compose", "concat"},
        {"model.layer_norm", "true"},
        {"model.residual", "true"},
        {"model.head_proj", "false"},
        {"model.ablation.dc", "true"},
        {"model.ablation.map", "true"},
        {"model.ablation.sc", "true"},
        {"model.ablation.tc", "true"},
        {"model.ablation.lap", "true"},
        {"train.lr", "0.001"},
        {"train.max_epochs", "120"},
        {"train.early_stop_patience", "50"},
        {"train.plateau.factor", "0.5"},
        {"train.plateau.patience", "10"},
        {"train.plateau.min_lr", "1e-05"},
        {"train.batch_size", "64"},
        {"train.grad_clip", "none"},
        {"export.window", "0"},
        {"plot.region", "0"},
    };
    for (const auto& [k, v] : SyntheticProfile{}.to_pairs()) values_["synth." + k] = v;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument("unknown config key '" + key + "'");
    it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument("unknown config key '" + key + "'");
    return it->second;
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(no) + ": expected key = value");
        }
        try {
            set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(no) + ": " + e.what());
        }
    }
}

std::string RunConfig::to_string() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
    return os.str();
}

void RunConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_string();
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& s = get(key);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw std::invalid_argument("config key '" + key + "' expects a number, got '" + s + "'");
    }
    return v;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    const std::string& s = get(key);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw std::invalid_argument("config key '" + key + "' expects a non-negative integer, got '" + s + "'");
    }
    return v;
}

std::size_t RunConfig::get_size(const std::string& key) const { return static_cast<std::size_t>(get_u64(key)); }

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& s = get(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::invalid_argument("config key '" + key + "' expects true/false, got '" + s + "'");
}

ModelConfig RunConfig::model() const {
    ModelConfig c;
    c.d = get_size("model.d");
    c.d_lap = get_size("model.d_lap");
    c.encoder_layers = get_size("model.encoder_layers");
    c.decoder_layers = get_size("model.decoder_layers");
    c.heads = get_size("model.heads");
    c.past = get_size("data.past");
    c.future = get_size("data.future");
    const std::string& compose = get("model.str_compose");
    if (compose != "concat" && compose != "add") {
        throw std::invalid_argument("model.str_compose must be concat or add, got '" + compose + "'");
    }
    c.str_compose = compose == "concat" ? StrCompose::concat : StrCompose::add;
    c.layer_norm = get_bool("model.layer_norm");
    c.residual = get_bool("model.residual");
    c.head_proj = get_bool("model.head_proj");
    c.ablation = Ablation{get_bool("model.ablation.dc"), get_bool("model.ablation.map"), get_bool("model.ablation.sc"),
                          get_bool("model.ablation.tc"), get_bool("model.ablation.lap")};
    c.seed = get_u64("seed");
    return c;
}

TrainConfig RunConfig::train() const {
    TrainConfig t;
    t.lr = get_double("train.lr");
    t.max_epochs = get_size("train.max_epochs");
    t.early_stop_patience = get_size("train.early_stop_patience");
    t.plateau.factor = get_double("train.plateau.factor");
    t.plateau.patience = get_size("train.plateau.patience");
    t.plateau.min_lr = get_double("train.plateau.min_lr");
    t.batch_size = get_size("train.batch_size");
    t.seed = get_u64("seed");
    if (get("train.grad_clip") != "none") t.grad_clip = get_double("train.grad_clip");
    t.validate();
    return t;
}

PrepareOptions RunConfig::prepare() const {
    PrepareOptions o;
    o.past = get_size("data.past");
    o.future = get_size("data.future");
    o.stride = get_size("data.stride");
    o.ratios = SplitRatios{get_double("data.ratio.train"), get_double("data.ratio.val"), get_double("data.ratio.test")};
    o.seed = get_u64("seed");
    o.d_lap = get_size("model.d_lap");
    o.zone_onehot = get_bool("data.zone_onehot");
    const std::string& fw = get("data.future_weather");
    if (fw != "teacher_forced" && fw != "persist") {
        throw std::invalid_argument("data.future_weather must be teacher_forced or persist, got '" + fw + "'");
    }
    o.future_weather = fw == "persist" ? FutureWeather::persist : FutureWeather::teacher_forced;
    return o;
}

SyntheticProfile RunConfig::synth_profile() const {
    std::map<std::string, std::string> kv;
    for (const auto& [k, v] : values_) {
        if (k.rfind("synth.", 0) == 0 && k != "synth.regions" && k != "synth.length") kv[k.substr(6)] = v;
    }
    return SyntheticProfile::from_pairs(kv);
}

}  // namespace stdc
