#pragma once

#include <string>
#include <vector>

#include "pqm/checkpoint.hpp"
#include "pqm/config.hpp"
#include "pqm/report.hpp"

namespace pqm::pipeline {

/// Applies the config's adapter attach points to the model's linear
/// layers. Attaching to a non-linear layer is rejected.
void apply_attach(ToyModel& model, const std::vector<std::string>& attach);

/// Stage 0 (artifact plumbing): generate pool and adaptation speaker data.
void cmd_gen_data(const PipelineConfig& cfg, const std::string& pool_path,
                  const std::string& speakers_path);

/// Stage 0: full-precision base model trained on the multi-speaker pool.
void cmd_train_base(const PipelineConfig& cfg, const std::vector<NamedDataset>& pool,
                    const std::string& ckpt_out);

/// Stage 1: block-wise NF quantisation of the selected layer kinds.
QuantStats cmd_quantise(const PipelineConfig& cfg, const std::string& ckpt_in,
                        const std::string& ckpt_out);

/// Stage 2: one shared adapter set trained on the pool; base frozen.
AdapterSet cmd_pretrain_lora(const PipelineConfig& cfg, const std::string& quant_ckpt,
                             const std::vector<NamedDataset>& pool,
                             const std::string& adapters_out);

/// Stage 3: per-speaker adaptation. Writes one adapter file per speaker
/// per init kind under out_dir, plus report.json / report.txt / the
/// resolved config. pretrained_adapters may be empty (scratch only).
EvalReport cmd_adapt(const PipelineConfig& cfg, const std::string& quant_ckpt,
                     const std::string& pretrained_adapters,
                     const std::vector<NamedDataset>& speakers,
                     const std::string& out_dir);

/// Semi-supervised stage 3: adaptation on pseudo-labels. teacher is a
/// checkpoint path or "self". Ground-truth labels are used only for test
/// evaluation.
EvalReport cmd_adapt_semisup(const PipelineConfig& cfg, const std::string& quant_ckpt,
                             const std::string& teacher,
                             const std::string& pretrained_adapters,
                             const std::vector<NamedDataset>& speakers,
                             const std::string& out_dir);

struct SweepPoint {
    int count = 0;
    double error = 0.0;
};

/// Mean test error per train-utterance budget; counts must include 0 and
/// stay within the train split. Count 0 is the unadapted system.
std::vector<SweepPoint> cmd_sweep_utts(const PipelineConfig& cfg,
                                       const std::string& quant_ckpt,
                                       const std::string& pretrained_adapters,
                                       const std::vector<NamedDataset>& speakers,
                                       const std::vector<int>& counts,
                                       const std::string& out_dir);

/// Error rate of a checkpoint (with optional adapters) on a dataset file's
/// test split, pooled over speakers.
double cmd_eval(const std::string& ckpt, const std::string& adapters_path,
                const std::vector<NamedDataset>& speakers);

/// Re-renders a run directory's report. Missing artifacts are enumerated.
EvalReport cmd_report(const std::string& run_dir, std::string* rendered_text);

}  // namespace pqm::pipeline
