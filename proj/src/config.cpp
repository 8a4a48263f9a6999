#include "urnflow/config.hpp"

#include <cmath>
#include <ctime>
#include <fstream>

namespace urnflow {

namespace {

using nlohmann::json;

const json& need(const json& j, const char* key, const std::string& prefix) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(prefix + key, "required field missing");
    return *it;
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
}

std::uint64_t as_uint(const json& v, const std::string& path) {
    if (!v.is_number_integer() ||
        (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(path, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& prefix) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError(prefix + it.key(), "unknown field");
    }
}

}  // namespace

WeightModel parse_model(const json& j, const std::string& prefix) {
    if (!j.is_object()) throw ConfigError(prefix, "expected an object");
    reject_unknown(j, {"family", "theta", "gamma", "probs"}, prefix + ".");
    const json& fam = need(j, "family", prefix + ".");
    if (!fam.is_string()) throw ConfigError(prefix + ".family", "expected a string");
    std::string f = fam.get<std::string>();
    try {
        if (f == "power_law") {
            double theta = as_number(need(j, "theta", prefix + "."), prefix + ".theta");
            if (!(theta > 0.0) || !(theta < 1.0))
                throw ConfigError(prefix + ".theta", "must lie in (0, 1)");
            return WeightModel::power_law(theta);
        }
        if (f == "log_power_law") {
            double theta = as_number(need(j, "theta", prefix + "."), prefix + ".theta");
            double gamma = as_number(need(j, "gamma", prefix + "."), prefix + ".gamma");
            if (!(theta > 0.0) || !(theta < 1.0))
                throw ConfigError(prefix + ".theta", "must lie in (0, 1)");
            if (!(gamma >= 0.0))
                throw ConfigError(prefix + ".gamma", "must be >= 0");
            return WeightModel::log_power_law(theta, gamma);
        }
        if (f == "theta_one_log") {
            double gamma = as_number(need(j, "gamma", prefix + "."), prefix + ".gamma");
            if (!(gamma > 1.0)) throw ConfigError(prefix + ".gamma", "must be > 1");
            return WeightModel::theta_one_log(gamma);
        }
        if (f == "finite") {
            const json& pv = need(j, "probs", prefix + ".");
            if (!pv.is_array() || pv.empty())
                throw ConfigError(prefix + ".probs", "expected a nonempty array");
            std::vector<double> probs;
            probs.reserve(pv.size());
            for (std::size_t i = 0; i < pv.size(); ++i)
                probs.push_back(as_number(pv[i], prefix + ".probs[" +
                                                     std::to_string(i) + "]"));
            return WeightModel::finite(probs);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(prefix, e.what());
    }
    throw ConfigError(prefix + ".family",
                      "unknown family '" + f +
                          "' (power_law, log_power_law, theta_one_log, finite)");
}

RunSpec parse_run_spec(const json& j) {
    if (!j.is_object()) throw ConfigError("<root>", "expected an object");
    reject_unknown(j,
                   {"model", "mode", "n_values", "grid", "replicates", "seed",
                    "threads", "head_size", "plots", "out_dir"},
                   "");
    RunSpec spec;
    spec.model = parse_model(need(j, "model", ""), "model");

    if (auto it = j.find("mode"); it != j.end()) {
        if (!it->is_string()) throw ConfigError("mode", "expected a string");
        std::string m = it->get<std::string>();
        if (m == "discrete") spec.mode = SimMode::Discrete;
        else if (m == "poissonized") spec.mode = SimMode::Poissonized;
        else if (m == "coupled") spec.mode = SimMode::Coupled;
        else
            throw ConfigError("mode",
                              "unknown mode '" + m +
                                  "' (discrete, poissonized, coupled)");
    }
    if (auto it = j.find("n_values"); it != j.end()) {
        if (!it->is_array() || it->empty())
            throw ConfigError("n_values", "expected a nonempty array");
        spec.n_values.clear();
        double prev = 0.0;
        for (std::size_t i = 0; i < it->size(); ++i) {
            std::string path = "n_values[" + std::to_string(i) + "]";
            double n = as_number((*it)[i], path);
            if (!(n > 0.0) || !std::isfinite(n))
                throw ConfigError(path, "must be a positive finite number");
            if (n < prev) throw ConfigError("n_values", "must be ascending");
            prev = n;
            spec.n_values.push_back(n);
        }
    }
    if (auto it = j.find("grid"); it != j.end()) {
        if (!it->is_array() || it->empty())
            throw ConfigError("grid", "expected a nonempty array");
        spec.grid.clear();
        double prev = 0.0;
        for (std::size_t i = 0; i < it->size(); ++i) {
            std::string path = "grid[" + std::to_string(i) + "]";
            double t = as_number((*it)[i], path);
            if (!(t > 0.0) || !(t <= 1.0))
                throw ConfigError(path, "must lie in (0, 1]");
            if (t < prev) throw ConfigError("grid", "must be nondecreasing");
            prev = t;
            spec.grid.push_back(t);
        }
    }
    if (auto it = j.find("replicates"); it != j.end()) {
        spec.replicates = as_uint(*it, "replicates");
        if (spec.replicates < 2) throw ConfigError("replicates", "must be >= 2");
    }
    if (auto it = j.find("seed"); it != j.end()) spec.seed = as_uint(*it, "seed");
    if (auto it = j.find("threads"); it != j.end()) {
        if (!it->is_number_integer()) throw ConfigError("threads", "expected an integer");
        spec.threads = it->get<int>();
    }
    if (auto it = j.find("head_size"); it != j.end()) {
        spec.head_size = as_uint(*it, "head_size");
        if (spec.head_size < 8 || spec.head_size > (std::uint64_t(1) << 26))
            throw ConfigError("head_size", "must lie in [8, 2^26]");
    }
    if (auto it = j.find("plots"); it != j.end()) {
        if (!it->is_boolean()) throw ConfigError("plots", "expected a boolean");
        spec.plots = it->get<bool>();
    }
    if (auto it = j.find("out_dir"); it != j.end()) {
        if (!it->is_string()) throw ConfigError("out_dir", "expected a string");
        spec.out_dir = it->get<std::string>();
    }
    spec.raw = j;
    return spec;
}

RunSpec load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<config>", "cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("<config>", std::string("JSON parse error: ") + e.what());
    }
    return parse_run_spec(j);
}

ExperimentConfig RunSpec::experiment(double n) const {
    ExperimentConfig cfg{model, mode,    n,       grid,
                         replicates, seed, threads, head_size};
    return cfg;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t config_hash(const json& j) {
    // nlohmann::json keeps object keys sorted, so dump() is canonical
    return fnv1a(j.dump());
}

std::string timestamp_utc() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json manifest_json(const RunManifest& m) {
    json j;
    j["tool_version"] = m.tool_version;
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(m.config_hash));
    j["config_hash"] = hash;
    j["seed"] = m.seed;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["outputs"] = m.outputs;
    return j;
}

}  // namespace urnflow
