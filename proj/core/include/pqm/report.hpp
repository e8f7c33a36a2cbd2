#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pqm {

struct SystemRow {
    std::string system;
    double error_rate = 0.0;      // percent, [0, 100]
    uint64_t model_bytes = 0;
    double compression_ratio = 1.0;
    uint64_t adapted_params = 0;
};

/// Per-run evaluation summary: one row per system, per-speaker breakdown,
/// and an echo of the resolved config.
struct EvalReport {
    std::vector<SystemRow> rows;
    // system -> speaker -> error %
    std::map<std::string, std::map<std::string, double>> per_speaker;
    nlohmann::json config_echo;
    uint64_t seed = 0;

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);

    /// Fixed-width table with columns {System, Error%, Size, Ratio};
    /// byte-stable across reruns.
    std::string render_text() const;

    const SystemRow& row(const std::string& system) const;
};

}  // namespace pqm
