// pqm: NF-quantisation + per-speaker LoRA adaptation pipeline driver.
//
// Subcommands follow the three pipeline stages: gen-data and train-base
// produce inputs, quantise compresses the base checkpoint, pretrain-lora
// trains the shared adapter start point, adapt / adapt-semisup /
// sweep-utts run per-speaker adaptation experiments, eval and report
// inspect artifacts.
//
// Exit codes: 0 success, 1 validation error, 2 I/O or corrupt data.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "pqm/error.hpp"
#include "pqm/pipeline.hpp"

using namespace pqm;
using namespace pqm::pipeline;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir = ".";
    int64_t seed = -1;
    int bits = -1;
    int block_size = -1;
    int rank = -1;
    std::string select;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "pipeline config JSON file");
    cmd->add_option("--out-dir", f.out_dir, "output directory");
    cmd->add_option("--seed", f.seed, "override config seed");
    cmd->add_option("--bits", f.bits, "override quantisation bit width");
    cmd->add_option("--block-size", f.block_size, "override quantisation block size");
    cmd->add_option("--rank", f.rank, "override LoRA rank");
    cmd->add_option("--select", f.select,
                    "comma-separated layer kinds to quantise (linear,conv,embed)");
}

PipelineConfig resolve_config(const CommonFlags& f) {
    PipelineConfig cfg =
        f.config_path.empty() ? PipelineConfig{} : PipelineConfig::load(f.config_path);
    if (f.seed >= 0) cfg.seed = static_cast<uint64_t>(f.seed);
    if (f.bits > 0) cfg.bits = f.bits;
    if (f.block_size > 0) cfg.block_size = f.block_size;
    if (f.rank > 0) {
        cfg.rank = f.rank;
        cfg.alpha = static_cast<float>(f.rank);
    }
    if (!f.select.empty()) {
        cfg.select = {};
        std::string rest = f.select;
        while (!rest.empty()) {
            auto pos = rest.find(',');
            std::string tok = rest.substr(0, pos);
            rest = pos == std::string::npos ? "" : rest.substr(pos + 1);
            if (tok == "linear") cfg.select.linear = true;
            else if (tok == "conv") cfg.select.conv = true;
            else if (tok == "embed") cfg.select.embed = true;
            else if (tok == "none") cfg.select = {};
            else throw Error::validation("bad --select entry: " + tok);
        }
    }
    cfg.validate();
    return cfg;
}

void print_stats(const QuantStats& s) {
    std::printf("%-12s %14s %14s %8s\n", "", "Raw bytes", "Quant bytes", "Ratio");
    std::printf("%-12s %14llu %14llu %8.2f\n", "model",
                static_cast<unsigned long long>(s.raw_bytes),
                static_cast<unsigned long long>(s.quantised_bytes), s.ratio);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"block-wise NormalFloat quantisation with per-speaker LoRA adaptation"};
    app.require_subcommand(1);

    CommonFlags flags;

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate pool and speaker datasets");
    add_common(gen, flags);

    // train-base
    std::string pool_path, ckpt_out;
    auto* base = app.add_subcommand("train-base", "train the FP32 base model on a pool");
    add_common(base, flags);
    base->add_option("pool", pool_path, "pool dataset (JSONL)")->required();
    base->add_option("output", ckpt_out, "output checkpoint")->required();

    // quantise
    std::string ckpt_in;
    auto* quant = app.add_subcommand("quantise", "NF-quantise a checkpoint");
    add_common(quant, flags);
    quant->add_option("input", ckpt_in, "FP32 checkpoint")->required();
    quant->add_option("output", ckpt_out, "quantised checkpoint")->required();

    // pretrain-lora
    std::string adapters_out;
    auto* pre = app.add_subcommand("pretrain-lora", "train shared adapters on a pool");
    add_common(pre, flags);
    pre->add_option("checkpoint", ckpt_in, "quantised checkpoint")->required();
    pre->add_option("pool", pool_path, "pool dataset (JSONL)")->required();
    pre->add_option("output", adapters_out, "output adapter file")->required();

    // adapt
    std::string speakers_path, pretrained_path;
    auto* adapt = app.add_subcommand("adapt", "per-speaker LoRA adaptation");
    add_common(adapt, flags);
    adapt->add_option("checkpoint", ckpt_in, "quantised checkpoint")->required();
    adapt->add_option("speakers", speakers_path, "speaker dataset (JSONL)")->required();
    adapt->add_option("--pretrained", pretrained_path,
                      "pretrained adapter file (adds the lora-pretrain row)");

    // adapt-semisup
    std::string teacher;
    auto* semi = app.add_subcommand("adapt-semisup", "adaptation on pseudo-labels");
    add_common(semi, flags);
    semi->add_option("checkpoint", ckpt_in, "quantised checkpoint")->required();
    semi->add_option("speakers", speakers_path, "speaker dataset (JSONL)")->required();
    semi->add_option("--teacher", teacher, "teacher checkpoint path or 'self'")
        ->default_val("self");
    semi->add_option("--pretrained", pretrained_path, "pretrained adapter file");

    // sweep-utts
    std::vector<int> counts;
    auto* sweep = app.add_subcommand("sweep-utts", "error vs train utterance count");
    add_common(sweep, flags);
    sweep->add_option("checkpoint", ckpt_in, "quantised checkpoint")->required();
    sweep->add_option("speakers", speakers_path, "speaker dataset (JSONL)")->required();
    sweep->add_option("--pretrained", pretrained_path, "pretrained adapter file");
    sweep->add_option("--counts", counts, "utterance counts (must include 0)")
        ->required();

    // eval
    std::string eval_adapters;
    auto* ev = app.add_subcommand("eval", "error rate of a checkpoint on test splits");
    add_common(ev, flags);
    ev->add_option("checkpoint", ckpt_in, "checkpoint")->required();
    ev->add_option("speakers", speakers_path, "speaker dataset (JSONL)")->required();
    ev->add_option("--adapters", eval_adapters, "adapter file");

    // report
    std::string run_dir;
    auto* rep = app.add_subcommand("report", "re-render a run directory's report");
    rep->add_option("run_dir", run_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            auto cfg = resolve_config(flags);
            std::filesystem::create_directories(flags.out_dir);
            cmd_gen_data(cfg, flags.out_dir + "/pool.jsonl",
                         flags.out_dir + "/speakers.jsonl");
            std::cout << "wrote " << flags.out_dir << "/pool.jsonl and speakers.jsonl\n";
        } else if (base->parsed()) {
            auto cfg = resolve_config(flags);
            cmd_train_base(cfg, load_datasets(pool_path), ckpt_out);
            std::cout << "wrote " << ckpt_out << "\n";
        } else if (quant->parsed()) {
            auto cfg = resolve_config(flags);
            QuantStats s = cmd_quantise(cfg, ckpt_in, ckpt_out);
            print_stats(s);
        } else if (pre->parsed()) {
            auto cfg = resolve_config(flags);
            cmd_pretrain_lora(cfg, ckpt_in, load_datasets(pool_path), adapters_out);
            std::cout << "wrote " << adapters_out << "\n";
        } else if (adapt->parsed()) {
            auto cfg = resolve_config(flags);
            EvalReport r = cmd_adapt(cfg, ckpt_in, pretrained_path,
                                     load_datasets(speakers_path), flags.out_dir);
            std::cout << r.render_text();
        } else if (semi->parsed()) {
            auto cfg = resolve_config(flags);
            EvalReport r = cmd_adapt_semisup(cfg, ckpt_in, teacher, pretrained_path,
                                             load_datasets(speakers_path),
                                             flags.out_dir);
            std::cout << r.render_text();
        } else if (sweep->parsed()) {
            auto cfg = resolve_config(flags);
            auto points = cmd_sweep_utts(cfg, ckpt_in, pretrained_path,
                                         load_datasets(speakers_path), counts,
                                         flags.out_dir);
            for (const auto& p : points)
                std::printf("%6d %8.2f\n", p.count, p.error);
        } else if (ev->parsed()) {
            double err = cmd_eval(ckpt_in, eval_adapters, load_datasets(speakers_path));
            std::printf("error %.2f%%\n", err);
        } else if (rep->parsed()) {
            std::string text;
            cmd_report(run_dir, &text);
            std::cout << text;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::validation ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
