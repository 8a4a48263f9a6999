#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "urnflow/harness.hpp"
#include "urnflow/weights.hpp"

namespace urnflow {

// Invalid configuration; `field` is the dotted path of the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field_path, const std::string& message)
        : std::runtime_error(field_path + ": " + message),
          field(std::move(field_path)) {}
    std::string field;
};

// One experiment request as read from a JSON config: a model, a simulation
// mode, a ladder of n values sharing one grid, and run plumbing.
struct RunSpec {
    WeightModel model = WeightModel::power_law(0.5);
    SimMode mode = SimMode::Poissonized;
    std::vector<double> n_values{1.0e4};
    std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::size_t replicates = 1000;
    std::uint64_t seed = 1;
    int threads = 0;
    std::uint64_t head_size = std::uint64_t(1) << 20;
    bool plots = false;
    std::string out_dir = "out";
    nlohmann::json raw;  // parsed config with defaults applied

    ExperimentConfig experiment(double n) const;
};

// Parses and validates; throws ConfigError naming the field path.
RunSpec parse_run_spec(const nlohmann::json& j);
RunSpec load_config(const std::string& path);
WeightModel parse_model(const nlohmann::json& j, const std::string& prefix);

// FNV-1a over the canonical (sorted-key) serialization, so the hash is
// stable under key reordering in the source file.
std::uint64_t config_hash(const nlohmann::json& j);
std::uint64_t fnv1a(const std::string& bytes);

struct RunManifest {
    std::string tool_version;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string started;
    std::string finished;
    std::vector<std::string> outputs;
};

nlohmann::json manifest_json(const RunManifest& m);
std::string timestamp_utc();

inline constexpr const char* kToolVersion = "urnflow 1.0.0";

}  // namespace urnflow
