#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "stdc/dataset.hpp"
#include "stdc/model.hpp"
#include "stdc/training.hpp"

namespace stdc {

// Flat key = value configuration. Every key has a default; unknown keys are
// rejected. Files use one `key = value` per line, `#` starts a comment.
class RunConfig {
public:
    RunConfig();

    void set(const std::string& key, const std::string& value);
    const std::string& get(const std::string& key) const;
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

    void load_file(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    std::string to_string() const;

    double get_double(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    ModelConfig model() const;  // data-dependent fields are left for bind_config_to_data
    TrainConfig train() const;
    PrepareOptions prepare() const;
    SyntheticProfile synth_profile() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace stdc
