#pragma once

#include <filesystem>
#include <string>

#include "pcreg/config.hpp"
#include "pcreg/metrics.hpp"

namespace pcreg {

// Output directory resolution: the --out value wins over config output_dir;
// a relative result is anchored under $REG_OUT_ROOT when that is set.
std::filesystem::path resolve_out_dir(const ExperimentConfig& cfg, const std::string& cli_out);

// Stage entry points. Artifacts land under <out>:
//   data/          toy dataset + manifest.json        (synth)
//   checkpoints/   {student,teacher}_{pretrain,adapt}.ckpt
//   metrics_pretrain.csv / metrics_adapt.csv          (one row per step)
//   eval/report.json, eval/disp_<id>.txt              (eval)
//   eval/plot/<id>.tsv                                (plot-data)
void stage_synth(const ExperimentConfig& cfg, const std::filesystem::path& out);
void stage_pretrain(const ExperimentConfig& cfg, const std::filesystem::path& out);
void stage_adapt(const ExperimentConfig& cfg, const std::filesystem::path& out);
EvalReport stage_eval(const ExperimentConfig& cfg, const std::filesystem::path& out);
void stage_plot_data(const std::filesystem::path& out);

// Dispatches one stage by name (synth|pretrain|adapt|eval|plot-data).
// Returns a process exit status; errors are reported on stderr.
int run_experiment(const std::string& stage, const ExperimentConfig& cfg,
                   const std::filesystem::path& out);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<StepRecord>& records);

}  // namespace pcreg
