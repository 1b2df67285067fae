#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pcreg/model.hpp"
#include "pcreg/toydata.hpp"
#include "pcreg/train.hpp"

namespace pcreg {

// Toy-dataset generation stage.
struct SynthStageConfig {
    std::size_t train_cases = 40;
    std::size_t val_cases = 10;
    std::size_t test_cases = 10;
    std::size_t pool_points = 4096;
    std::size_t keypoints = 2048;
    std::size_t landmarks = 30;
    double box_mm = 120.0;
    double radius_mm = 1.2;
    double density_radius_mm = 4.0;
    double nms_radius_mm = 1.0;
    DeformationSpec target_def;  // defaults to the two-scale random field

    SynthStageConfig() { target_def.kind = DeformationSpec::Kind::kTwoScaleRandomField; }
};

struct EvalStageConfig {
    double tre_sigma_mm = 5.0;
    double sdlogj_spacing_mm = 4.0;
    double sdlogj_sigma_mm = 5.0;
    std::string model = "student";  // or "teacher"
    std::string checkpoint;         // empty: adapt checkpoint, then pretrain
    std::string split = "test";
    int threads = 0;
};

// One configuration file drives every stage. Unknown keys are rejected with
// the offending key named; `reg --print-config` documents all defaults.
struct ExperimentConfig {
    std::string manifest;  // empty: <out>/data/manifest.json
    ModelConfig model;
    AdaptationConfig train;
    SynthStageConfig synth;
    EvalStageConfig eval;
    std::string output_dir = "run_out";
    std::uint64_t seed = 1;

    // Master-seed-derived streams are filled in by finalize().
    void finalize();
};

ExperimentConfig load_config(const std::filesystem::path& path);

// The full configuration as pretty JSON (also the --print-config output).
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace pcreg
