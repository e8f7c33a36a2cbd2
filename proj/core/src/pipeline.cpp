#include "pqm/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <optional>

#include "pqm/error.hpp"

namespace pqm::pipeline {

namespace fs = std::filesystem;

namespace {

TrainConfig make_train_cfg(const PipelineConfig& cfg, TrainMode mode, int steps,
                           uint64_t seed) {
    TrainConfig t;
    t.lr = cfg.lr;
    t.steps = steps;
    t.batch_size = cfg.batch_size;
    t.optimiser = cfg.optimiser;
    t.seed = seed;
    t.mode = mode;
    return t;
}

struct MergedSplits {
    std::vector<Utterance> train, dev;
};

MergedSplits merge_splits(const std::vector<NamedDataset>& sets) {
    MergedSplits m;
    for (const auto& nd : sets) {
        auto tr = nd.data.subset(nd.data.train);
        auto dv = nd.data.subset(nd.data.dev);
        m.train.insert(m.train.end(), tr.begin(), tr.end());
        m.dev.insert(m.dev.end(), dv.begin(), dv.end());
    }
    return m;
}

/// test error pooled over all speakers' test utterances
double pooled_test_error(const ToyModel& model, const NormalFloatCodebook& cb,
                         const std::vector<NamedDataset>& speakers,
                         const std::map<std::string, const AdapterSet*>& per_speaker,
                         std::map<std::string, double>* breakdown) {
    size_t total = 0;
    double weighted = 0.0;
    for (const auto& nd : speakers) {
        auto test = nd.data.subset(nd.data.test);
        const AdapterSet* ad = nullptr;
        auto it = per_speaker.find(nd.speaker_id);
        if (it != per_speaker.end()) ad = it->second;
        double err = evaluate(model, test, cb, ad);
        if (breakdown) (*breakdown)[nd.speaker_id] = err;
        weighted += err * static_cast<double>(test.size());
        total += test.size();
    }
    return weighted / static_cast<double>(total);
}

uint64_t adapter_params(const AdapterSet& set) {
    uint64_t n = 0;
    for (const auto& [id, ad] : set.adapters) n += ad.a.size() + ad.b.size();
    return n;
}

void write_report(const EvalReport& report, const PipelineConfig& cfg,
                  const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream j(out_dir + "/report.json");
    if (!j) throw Error::io("cannot write report.json in " + out_dir);
    j << report.to_json().dump(2) << "\n";
    std::ofstream t(out_dir + "/report.txt");
    t << report.render_text();
    cfg.save(out_dir + "/config.json");
}

uint64_t speaker_stream(const PipelineConfig& cfg, size_t index, uint64_t salt) {
    return splitmix64(cfg.seed ^ splitmix64(salt + index));
}

}  // namespace

void apply_attach(ToyModel& model, const std::vector<std::string>& attach) {
    for (auto& l : model.layers) l.lora_attached = false;
    for (const auto& id : attach) {
        Layer& l = model.layer(id);
        if (l.kind != LayerKind::linear)
            throw Error::validation("adapters attach to linear layers only, got " + id);
        l.lora_attached = true;
    }
}

void cmd_gen_data(const PipelineConfig& cfg, const std::string& pool_path,
                  const std::string& speakers_path) {
    cfg.validate();
    auto pool = generate_pool(cfg.pool_speakers, cfg.pool_utts,
                              splitmix64(cfg.seed ^ 0x90071ULL));
    std::vector<NamedDataset> pool_sets;
    for (auto& [profile, ds] : pool) pool_sets.push_back({profile.id, std::move(ds)});
    save_datasets(pool_path, pool_sets);

    auto speakers = generate_adaptation_speakers(cfg.adapt_speakers, cfg.utterances,
                                                 splitmix64(cfg.seed ^ 0xADA97ULL));
    std::vector<NamedDataset> spk_sets;
    for (auto& [profile, ds] : speakers) spk_sets.push_back({profile.id, std::move(ds)});
    save_datasets(speakers_path, spk_sets);
}

void cmd_train_base(const PipelineConfig& cfg, const std::vector<NamedDataset>& pool,
                    const std::string& ckpt_out) {
    cfg.validate();
    if (pool.empty()) throw Error::validation("train-base: empty pool");
    ToyModel model = build_model(cfg.d_model, cfg.model_seed);
    apply_attach(model, cfg.attach);
    auto cb = build_codebook(cfg.bits);
    MergedSplits m = merge_splits(pool);
    auto tcfg = make_train_cfg(cfg, TrainMode::full_finetune, cfg.base_steps,
                               splitmix64(cfg.seed ^ 0xBA5EULL));
    train(model, nullptr, m.train, m.dev, tcfg, cb);
    save_checkpoint(ckpt_out, model);
}

QuantStats cmd_quantise(const PipelineConfig& cfg, const std::string& ckpt_in,
                        const std::string& ckpt_out) {
    cfg.validate();
    ToyModel model = load_checkpoint(ckpt_in);
    if (model.any_quantised())
        throw Error::validation("quantise: input checkpoint is already quantised");
    auto cb = build_codebook(cfg.bits);
    QuantStats stats;
    if (!cfg.select.any()) {
        save_checkpoint(ckpt_out, model);
        stats.raw_bytes = stats.quantised_bytes = model_file_bytes(model);
        stats.ratio = 1.0;
        return stats;
    }
    ToyModel q = quantise_model(model, cfg.select, cfg.block_size, cb, &stats);
    save_checkpoint(ckpt_out, q);
    return stats;
}

AdapterSet cmd_pretrain_lora(const PipelineConfig& cfg, const std::string& quant_ckpt,
                             const std::vector<NamedDataset>& pool,
                             const std::string& adapters_out) {
    cfg.validate();
    if (pool.size() < 2)
        throw Error::validation("pretrain-lora: pool must contain >= 2 speakers");
    ToyModel model = load_checkpoint(quant_ckpt);
    apply_attach(model, cfg.attach);
    auto cb = build_codebook(cfg.bits);
    AdapterSet adapters = init_adapters(model, cfg.rank, cfg.alpha,
                                        splitmix64(cfg.seed ^ 0x10AAULL), "pretrained");
    MergedSplits m = merge_splits(pool);
    auto tcfg = make_train_cfg(cfg, TrainMode::lora_only, cfg.pretrain_steps,
                               splitmix64(cfg.seed ^ 0x93E7ULL));
    train(model, &adapters, m.train, m.dev, tcfg, cb);
    if (!adapters_out.empty()) save_adapters(adapters_out, adapters);
    return adapters;
}

EvalReport cmd_adapt(const PipelineConfig& cfg, const std::string& quant_ckpt,
                     const std::string& pretrained_adapters,
                     const std::vector<NamedDataset>& speakers,
                     const std::string& out_dir) {
    cfg.validate();
    if (speakers.empty()) throw Error::validation("adapt: no speakers");
    for (const auto& nd : speakers)
        if (nd.data.train.empty())
            throw Error::validation("adapt: empty train split for " + nd.speaker_id);

    ToyModel model = load_checkpoint(quant_ckpt);
    apply_attach(model, cfg.attach);
    auto cb = build_codebook(cfg.bits);
    fs::create_directories(out_dir);

    EvalReport report;
    report.seed = cfg.seed;
    report.config_echo = cfg.to_json();

    const uint64_t bytes = model_file_bytes(model);
    const double ratio = static_cast<double>(model_file_bytes(dequantise_model(model, cb))) /
                         static_cast<double>(bytes);

    // baseline: no adaptation
    {
        std::map<std::string, double> breakdown;
        double err = pooled_test_error(model, cb, speakers, {}, &breakdown);
        report.rows.push_back({"baseline", err, bytes, ratio, 0});
        report.per_speaker["baseline"] = breakdown;
    }

    auto run_init = [&](const std::string& name, bool pretrained) {
        AdapterSet start;
        if (pretrained) start = load_adapters(pretrained_adapters);
        std::map<std::string, AdapterSet> adapted;
        std::map<std::string, const AdapterSet*> view;
        uint64_t params = 0;
        for (size_t i = 0; i < speakers.size(); ++i) {
            const auto& nd = speakers[i];
            AdapterSet ad =
                pretrained ? start
                           : init_adapters(model, cfg.rank, cfg.alpha,
                                           speaker_stream(cfg, i, 0xF2E5ULL),
                                           nd.speaker_id);
            ad.speaker_id = nd.speaker_id;
            auto tcfg = make_train_cfg(cfg, TrainMode::lora_only, cfg.adapt_steps,
                                       speaker_stream(cfg, i, 0xADA2ULL));
            train(model, &ad, nd.data.subset(nd.data.train),
                  nd.data.subset(nd.data.dev), tcfg, cb);
            params = adapter_params(ad);
            save_adapters(out_dir + "/adapters_" + name + "_" + nd.speaker_id + ".pqma",
                          ad);
            adapted.emplace(nd.speaker_id, std::move(ad));
        }
        for (const auto& [id, ad] : adapted) view[id] = &ad;
        std::map<std::string, double> breakdown;
        double err = pooled_test_error(model, cb, speakers, view, &breakdown);
        report.rows.push_back({"lora-" + name, err, bytes, ratio, params});
        report.per_speaker["lora-" + name] = breakdown;
    };

    run_init("scratch", false);
    if (!pretrained_adapters.empty()) run_init("pretrain", true);

    write_report(report, cfg, out_dir);
    return report;
}

EvalReport cmd_adapt_semisup(const PipelineConfig& cfg, const std::string& quant_ckpt,
                             const std::string& teacher,
                             const std::string& pretrained_adapters,
                             const std::vector<NamedDataset>& speakers,
                             const std::string& out_dir) {
    cfg.validate();
    if (speakers.empty()) throw Error::validation("adapt-semisup: no speakers");
    ToyModel model = load_checkpoint(quant_ckpt);
    apply_attach(model, cfg.attach);
    auto cb = build_codebook(cfg.bits);
    fs::create_directories(out_dir);

    std::optional<ToyModel> teacher_model;
    if (!teacher.empty() && teacher != "self") {
        teacher_model = load_checkpoint(teacher);
        if (teacher_model->vocab != model.vocab ||
            teacher_model->classes != model.classes)
            throw Error::validation("adapt-semisup: teacher/model vocab mismatch");
    }

    AdapterSet start;
    const bool have_pretrained = !pretrained_adapters.empty();
    if (have_pretrained) start = load_adapters(pretrained_adapters);

    EvalReport report;
    report.seed = cfg.seed;
    report.config_echo = cfg.to_json();
    const uint64_t bytes = model_file_bytes(model);
    const double ratio = model.any_quantised()
                             ? static_cast<double>(
                                   model_file_bytes(dequantise_model(model, cb))) /
                                   static_cast<double>(bytes)
                             : 1.0;

    // unadapted system (with pretrained adapters if available)
    std::map<std::string, const AdapterSet*> base_view;
    for (const auto& nd : speakers) {
        (void)nd;
        if (have_pretrained) base_view[nd.speaker_id] = &start;
    }
    {
        std::map<std::string, double> breakdown;
        double err = pooled_test_error(model, cb, speakers, base_view, &breakdown);
        report.rows.push_back({"no-adaptation", err, bytes, ratio, 0});
        report.per_speaker["no-adaptation"] = breakdown;
    }

    // labels(source): source supplies train/dev labels; ground truth is
    // never consulted for training when a pseudo source is active
    auto relabel = [&](const std::vector<Utterance>& utts,
                       const std::string& source) -> std::vector<Utterance> {
        if (source == "ground_truth") return utts;
        std::vector<int> labels;
        if (source == "teacher") {
            labels = pseudo_label(*teacher_model, utts, cb, nullptr);
        } else {  // self
            labels = pseudo_label(model, utts, cb, have_pretrained ? &start : nullptr);
        }
        std::vector<Utterance> out = utts;
        for (size_t i = 0; i < out.size(); ++i) out[i].label = labels[i];
        return out;
    };

    auto run_source = [&](const std::string& row_name, const std::string& source) {
        std::map<std::string, AdapterSet> adapted;
        uint64_t params = 0;
        for (size_t i = 0; i < speakers.size(); ++i) {
            const auto& nd = speakers[i];
            if (nd.data.train.empty())
                throw Error::validation("adapt-semisup: empty train split");
            AdapterSet ad = have_pretrained
                                ? start
                                : init_adapters(model, cfg.rank, cfg.alpha,
                                                speaker_stream(cfg, i, 0xF2E5ULL),
                                                nd.speaker_id);
            ad.speaker_id = nd.speaker_id;
            auto tcfg = make_train_cfg(cfg, TrainMode::lora_only, cfg.adapt_steps,
                                       speaker_stream(cfg, i, 0xADA2ULL));
            train(model, &ad, relabel(nd.data.subset(nd.data.train), source),
                  relabel(nd.data.subset(nd.data.dev), source), tcfg, cb);
            params = adapter_params(ad);
            save_adapters(out_dir + "/adapters_" + row_name + "_" + nd.speaker_id +
                              ".pqma",
                          ad);
            adapted.emplace(nd.speaker_id, std::move(ad));
        }
        std::map<std::string, const AdapterSet*> view;
        for (const auto& [id, ad] : adapted) view[id] = &ad;
        std::map<std::string, double> breakdown;
        double err = pooled_test_error(model, cb, speakers, view, &breakdown);
        report.rows.push_back({row_name, err, bytes, ratio, params});
        report.per_speaker[row_name] = breakdown;
    };

    run_source("ground-truth", "ground_truth");
    if (teacher_model) run_source("teacher", "teacher");
    run_source("self", "self");

    write_report(report, cfg, out_dir);
    return report;
}

std::vector<SweepPoint> cmd_sweep_utts(const PipelineConfig& cfg,
                                       const std::string& quant_ckpt,
                                       const std::string& pretrained_adapters,
                                       const std::vector<NamedDataset>& speakers,
                                       const std::vector<int>& counts,
                                       const std::string& out_dir) {
    cfg.validate();
    if (speakers.empty()) throw Error::validation("sweep-utts: no speakers");
    bool has_zero = false;
    for (int c : counts) {
        if (c == 0) has_zero = true;
        if (c < 0) throw Error::validation("sweep-utts: negative count");
        for (const auto& nd : speakers)
            if (c > static_cast<int>(nd.data.train.size()))
                throw Error::validation("sweep-utts: count " + std::to_string(c) +
                                        " exceeds train split of " + nd.speaker_id);
    }
    if (!has_zero) throw Error::validation("sweep-utts: counts must include 0");

    ToyModel model = load_checkpoint(quant_ckpt);
    apply_attach(model, cfg.attach);
    auto cb = build_codebook(cfg.bits);
    fs::create_directories(out_dir);

    AdapterSet start;
    const bool have_pretrained = !pretrained_adapters.empty();
    if (have_pretrained) start = load_adapters(pretrained_adapters);

    std::vector<SweepPoint> points;
    for (int count : counts) {
        if (count == 0) {
            std::map<std::string, const AdapterSet*> view;
            if (have_pretrained)
                for (const auto& nd : speakers) view[nd.speaker_id] = &start;
            points.push_back({0, pooled_test_error(model, cb, speakers, view, nullptr)});
            continue;
        }
        std::map<std::string, AdapterSet> adapted;
        for (size_t i = 0; i < speakers.size(); ++i) {
            const auto& nd = speakers[i];
            std::vector<int> sub(nd.data.train.begin(), nd.data.train.begin() + count);
            AdapterSet ad = have_pretrained
                                ? start
                                : init_adapters(model, cfg.rank, cfg.alpha,
                                                speaker_stream(cfg, i, 0xF2E5ULL),
                                                nd.speaker_id);
            ad.speaker_id = nd.speaker_id;
            auto tcfg = make_train_cfg(cfg, TrainMode::lora_only, cfg.adapt_steps,
                                       speaker_stream(cfg, i, 0xADA2ULL));
            train(model, &ad, nd.data.subset(sub), nd.data.subset(nd.data.dev), tcfg,
                  cb);
            adapted.emplace(nd.speaker_id, std::move(ad));
        }
        std::map<std::string, const AdapterSet*> view;
        for (const auto& [id, ad] : adapted) view[id] = &ad;
        points.push_back({count, pooled_test_error(model, cb, speakers, view, nullptr)});
    }

    std::ofstream out(out_dir + "/sweep.jsonl");
    if (!out) throw Error::io("cannot write sweep.jsonl in " + out_dir);
    for (const auto& p : points) {
        nlohmann::json rec{{"count", p.count}, {"error", p.error}};
        out << rec.dump() << "\n";
    }
    cfg.save(out_dir + "/config.json");
    return points;
}

double cmd_eval(const std::string& ckpt, const std::string& adapters_path,
                const std::vector<NamedDataset>& speakers) {
    if (speakers.empty()) throw Error::validation("eval: no speakers");
    ToyModel model = load_checkpoint(ckpt);
    int bits = 4;
    for (const auto& l : model.layers)
        if (l.quantised) bits = l.qweight.k;
    auto cb = build_codebook(bits);
    std::optional<AdapterSet> adapters;
    if (!adapters_path.empty()) adapters = load_adapters(adapters_path);
    std::map<std::string, const AdapterSet*> view;
    if (adapters)
        for (const auto& nd : speakers) view[nd.speaker_id] = &*adapters;
    return pooled_test_error(model, cb, speakers, view, nullptr);
}

EvalReport cmd_report(const std::string& run_dir, std::string* rendered_text) {
    std::vector<std::string> missing;
    const std::string report_path = run_dir + "/report.json";
    const std::string config_path = run_dir + "/config.json";
    if (!fs::exists(report_path)) missing.push_back("report.json");
    if (!fs::exists(config_path)) missing.push_back("config.json");
    if (!missing.empty()) {
        std::string msg = "run directory " + run_dir + " is missing:";
        for (const auto& m : missing) msg += " " + m;
        throw Error::io(msg);
    }
    std::ifstream in(report_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error::corrupt("report.json: " + std::string(e.what()));
    }
    EvalReport report = EvalReport::from_json(j);
    if (rendered_text) *rendered_text = report.render_text();
    return report;
}

}  // namespace pqm::pipeline
