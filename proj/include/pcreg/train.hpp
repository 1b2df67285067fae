#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pcreg/adam.hpp"
#include "pcreg/losses.hpp"
#include "pcreg/model.hpp"
#include "pcreg/synth.hpp"

namespace pcreg {

// All hyper-parameters of the teacher-student adaptation loop.
struct AdaptationConfig {
    double lambda_sup = 10.0;
    double lambda_con = 10.0;
    double lambda_syn = 10.0;
    double ema_alpha = 0.996;
    double lr = 1e-3;
    int pretrain_epochs = 160;
    int adapt_epochs = 140;
    int batch_source = 4;
    int batch_target = 4;
    int n_points = 2048;          // inference / training subset size
    int n_points_highres = 4096;  // sampling pool size (>= 2 * n_points)
    double interp_sigma_mm = 5.0;  // training-time Gaussian interpolation kernel
    std::vector<double> scale_loss_weights;  // empty -> equal
    std::uint64_t seed = 0;
    DeformationSpec source_def;  // deformation synthesizing labeled source pairs

    bool use_filter = true;       // Chamfer indicator on the consistency term
    double lambda_chamfer = 0.0;  // direct Chamfer loss (negative-result demo)
    int threads = 0;              // batch-item parallelism; 0 = hardware

    void validate() const;
};

// One train_step outcome; all loss values are unweighted per-term batch means.
struct StepRecord {
    std::int64_t step = 0;
    double loss_sup = 0.0;
    double loss_con = 0.0;
    double loss_syn = 0.0;
    double loss_chamfer = 0.0;
    double total = 0.0;           // lambda-weighted sum
    double indicator_rate = 0.0;  // accepted pseudo-labels / target items
    bool ok = true;
    std::string error;
};

struct TrainState {
    ModelParameters student;
    ModelParameters teacher;
    AdamState opt;
    std::int64_t step = 0;
    std::vector<StepRecord> metrics;
};

// Fresh state with teacher == student exactly.
TrainState init_train_state(const ModelConfig& cfg);

// One optimization step on mixed batches (lambda-weighted total). On any
// non-finite loss or gradient the step is aborted: the state is left
// untouched and the record carries ok=false. Target cases must provide a
// high-resolution pool when lambda_syn > 0.
StepRecord train_step(TrainState& state, const std::vector<SourceTriplet>& source_batch,
                      const std::vector<RegistrationCase>& target_batch, const ModelConfig& model_cfg,
                      const AdaptationConfig& cfg);

struct RunHooks {
    // Called after each completed epoch (checkpointing, logging).
    std::function<void(int epoch, const TrainState&)> on_epoch;
};

// Supervised pretraining on synthetic source triplets generated on the fly
// from the fixed clouds of the training cases. Ends with teacher = student.
TrainState run_pretraining(const std::vector<RegistrationCase>& train_cases,
                           const ModelConfig& model_cfg, const AdaptationConfig& cfg,
                           const RunHooks& hooks = {});

// Joint adaptation per the configured lambdas, starting from a pretrained
// state. Per epoch, training views are resampled from the case pools.
void run_adaptation(const std::vector<RegistrationCase>& train_cases, TrainState& state,
                    const ModelConfig& model_cfg, const AdaptationConfig& cfg,
                    const RunHooks& hooks = {});

// The per-epoch training view of a case: n_points sampled from the moving
// pool (falling back to the moving cloud) and from the fixed cloud; the full
// pool rides along for pair synthesis. Exposed for tests.
RegistrationCase make_training_view(const RegistrationCase& c, int n_points, Rng& rng);

}  // namespace pcreg
