#include "pqm/report.hpp"

#include <cstdio>

#include "pqm/error.hpp"

namespace pqm {

using nlohmann::json;

json EvalReport::to_json() const {
    json j;
    j["seed"] = seed;
    j["config"] = config_echo;
    j["rows"] = json::array();
    for (const auto& r : rows) {
        j["rows"].push_back({{"system", r.system},
                             {"error_rate", r.error_rate},
                             {"model_bytes", r.model_bytes},
                             {"compression_ratio", r.compression_ratio},
                             {"adapted_params", r.adapted_params}});
    }
    j["per_speaker"] = per_speaker;
    return j;
}

EvalReport EvalReport::from_json(const json& j) {
    EvalReport r;
    try {
        r.seed = j.at("seed").get<uint64_t>();
        r.config_echo = j.at("config");
        for (const auto& row : j.at("rows")) {
            SystemRow s;
            s.system = row.at("system").get<std::string>();
            s.error_rate = row.at("error_rate").get<double>();
            s.model_bytes = row.at("model_bytes").get<uint64_t>();
            s.compression_ratio = row.at("compression_ratio").get<double>();
            s.adapted_params = row.at("adapted_params").get<uint64_t>();
            r.rows.push_back(std::move(s));
        }
        if (j.contains("per_speaker"))
            r.per_speaker =
                j.at("per_speaker")
                    .get<std::map<std::string, std::map<std::string, double>>>();
    } catch (const json::exception& e) {
        throw Error::corrupt(std::string("malformed report: ") + e.what());
    }
    for (const auto& row : r.rows)
        if (row.error_rate < 0.0 || row.error_rate > 100.0)
            throw Error::corrupt("report: error rate out of [0,100]");
    return r;
}

std::string EvalReport::render_text() const {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-24s %8s %12s %8s\n", "System", "Error%",
                  "Size", "Ratio");
    out += line;
    out += std::string(56, '-') + "\n";
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%-24s %8.2f %12llu %8.2f\n",
                      r.system.c_str(), r.error_rate,
                      static_cast<unsigned long long>(r.model_bytes),
                      r.compression_ratio);
        out += line;
    }
    return out;
}

const SystemRow& EvalReport::row(const std::string& system) const {
    for (const auto& r : rows)
        if (r.system == system) return r;
    throw Error::validation("report: no such system row: " + system);
}

}  // namespace pqm
