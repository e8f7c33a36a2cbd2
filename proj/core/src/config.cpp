#include "pqm/config.hpp"

#include <fstream>
#include <set>

#include "pqm/error.hpp"

namespace pqm {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw Error::validation("config: unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

void PipelineConfig::validate() const {
    if (d_model < 8) throw Error::validation("config: d_model must be >= 8");
    if (bits < 2 || bits > 8) throw Error::validation("config: bits must be in [2,8]");
    if (block_size < 1) throw Error::validation("config: block_size must be >= 1");
    if (rank < 1) throw Error::validation("config: rank must be >= 1");
    if (alpha <= 0.0f) throw Error::validation("config: alpha must be > 0");
    if (attach.empty()) throw Error::validation("config: attach list empty");
    if (base_steps < 0 || pretrain_steps < 0 || adapt_steps < 0)
        throw Error::validation("config: step budgets must be >= 0");
    if (lr <= 0.0) throw Error::validation("config: lr must be > 0");
    if (batch_size < 1) throw Error::validation("config: batch_size must be >= 1");
    if (pool_speakers < 1 || adapt_speakers < 1)
        throw Error::validation("config: speaker counts must be >= 1");
    if (pool_utts < 1) throw Error::validation("config: pool_utts must be >= 1");
    if (utterances < 5) throw Error::validation("config: utterances must be >= 5");
    if (label_source.empty()) throw Error::validation("config: label_source empty");
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    check_keys(j, {"model", "quant", "lora", "train", "data", "labels", "seed"}, "root");
    get_if(j, "seed", c.seed);
    if (j.contains("model")) {
        const auto& m = j.at("model");
        check_keys(m, {"d_model", "seed"}, "model");
        get_if(m, "d_model", c.d_model);
        get_if(m, "seed", c.model_seed);
    }
    if (j.contains("quant")) {
        const auto& q = j.at("quant");
        check_keys(q, {"bits", "block_size", "select"}, "quant");
        get_if(q, "bits", c.bits);
        get_if(q, "block_size", c.block_size);
        if (q.contains("select")) {
            c.select = {};
            for (const auto& s : q.at("select")) {
                const std::string v = s.get<std::string>();
                if (v == "linear") c.select.linear = true;
                else if (v == "conv") c.select.conv = true;
                else if (v == "embed") c.select.embed = true;
                else throw Error::validation("config: bad select entry '" + v + "'");
            }
        }
    }
    if (j.contains("lora")) {
        const auto& l = j.at("lora");
        check_keys(l, {"rank", "alpha", "attach"}, "lora");
        get_if(l, "rank", c.rank);
        if (l.contains("alpha")) c.alpha = l.at("alpha").get<float>();
        else c.alpha = static_cast<float>(c.rank);
        get_if(l, "attach", c.attach);
    } else {
        c.alpha = static_cast<float>(c.rank);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        check_keys(t, {"base_steps", "pretrain_steps", "adapt_steps", "lr",
                       "batch_size", "optimiser"}, "train");
        get_if(t, "base_steps", c.base_steps);
        get_if(t, "pretrain_steps", c.pretrain_steps);
        get_if(t, "adapt_steps", c.adapt_steps);
        get_if(t, "lr", c.lr);
        get_if(t, "batch_size", c.batch_size);
        if (t.contains("optimiser")) {
            const std::string o = t.at("optimiser").get<std::string>();
            if (o == "sgd") c.optimiser = OptimiserKind::sgd;
            else if (o == "adam") c.optimiser = OptimiserKind::adam;
            else throw Error::validation("config: unknown optimiser '" + o + "'");
        }
    }
    if (j.contains("data")) {
        const auto& d = j.at("data");
        check_keys(d, {"pool_speakers", "pool_utts", "adapt_speakers", "utterances"},
                   "data");
        get_if(d, "pool_speakers", c.pool_speakers);
        get_if(d, "pool_utts", c.pool_utts);
        get_if(d, "adapt_speakers", c.adapt_speakers);
        get_if(d, "utterances", c.utterances);
    }
    if (j.contains("labels")) {
        const auto& l = j.at("labels");
        check_keys(l, {"source"}, "labels");
        get_if(l, "source", c.label_source);
    }
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error::io("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error::validation("config parse error in " + path + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json PipelineConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["model"] = {{"d_model", d_model}, {"seed", model_seed}};
    std::vector<std::string> sel;
    if (select.linear) sel.push_back("linear");
    if (select.conv) sel.push_back("conv");
    if (select.embed) sel.push_back("embed");
    j["quant"] = {{"bits", bits}, {"block_size", block_size}, {"select", sel}};
    j["lora"] = {{"rank", rank}, {"alpha", alpha}, {"attach", attach}};
    j["train"] = {{"base_steps", base_steps},
                  {"pretrain_steps", pretrain_steps},
                  {"adapt_steps", adapt_steps},
                  {"lr", lr},
                  {"batch_size", batch_size},
                  {"optimiser", optimiser == OptimiserKind::sgd ? "sgd" : "adam"}};
    j["data"] = {{"pool_speakers", pool_speakers},
                 {"pool_utts", pool_utts},
                 {"adapt_speakers", adapt_speakers},
                 {"utterances", utterances}};
    j["labels"] = {{"source", label_source}};
    return j;
}

void PipelineConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error::io("cannot open for writing: " + path);
    out << to_json().dump(2) << "\n";
    if (!out) throw Error::io("write failed: " + path);
}

}  // namespace pqm
