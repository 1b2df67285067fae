#include "pcreg/train.hpp"

#include <cmath>
#include <stdexcept>

#include "pcreg/parallel.hpp"

namespace pcreg {

namespace {

// Stream tags keeping the derived RNG paths of the different sampling sites
// disjoint under one master seed.
enum Stream : std::uint64_t {
    kPretrainSample = 0x21,
    kPretrainDef = 0x22,
    kAdaptView = 0x31,
    kAdaptSourceDef = 0x32,
    kAdaptShuffle = 0x33,
    kSynthPair = 0x41,
};

struct ItemResult {
    double sup = 0.0;
    double con = 0.0;  // indicator-weighted consistency value
    double syn = 0.0;
    double chamfer = 0.0;
    int indicator = 0;
    std::vector<double> grad;
    bool ok = true;
    std::string error;
};

}  // namespace

void AdaptationConfig::validate() const {
    if (lambda_sup < 0.0 || lambda_con < 0.0 || lambda_syn < 0.0 || lambda_chamfer < 0.0)
        throw std::invalid_argument("AdaptationConfig: loss weights must be >= 0");
    if (ema_alpha < 0.0 || ema_alpha > 1.0)
        throw std::invalid_argument("AdaptationConfig: ema_alpha must lie in [0, 1]");
    if (lr <= 0.0) throw std::invalid_argument("AdaptationConfig: lr must be > 0");
    if (pretrain_epochs < 0 || adapt_epochs < 0)
        throw std::invalid_argument("AdaptationConfig: epoch counts must be >= 0");
    if (batch_source < 1 || batch_target < 1)
        throw std::invalid_argument("AdaptationConfig: batch sizes must be >= 1");
    if (n_points < 1) throw std::invalid_argument("AdaptationConfig: n_points must be >= 1");
    if (n_points_highres < 2 * n_points)
        throw std::invalid_argument("AdaptationConfig: n_points_highres must be >= 2 * n_points");
    if (interp_sigma_mm <= 0.0)
        throw std::invalid_argument("AdaptationConfig: interp_sigma_mm must be > 0");
    source_def.validate();
}

TrainState init_train_state(const ModelConfig& cfg) {
    TrainState state;
    state.student = ModelParameters::initialize(cfg);
    state.teacher = state.student;  // theta' = theta exactly
    state.opt = AdamState(state.student.size());
    return state;
}

StepRecord train_step(TrainState& state, const std::vector<SourceTriplet>& source_batch,
                      const std::vector<RegistrationCase>& target_batch, const ModelConfig& model_cfg,
                      const AdaptationConfig& cfg) {
    cfg.validate();
    StepRecord rec;
    rec.step = state.step;

    const auto weights = resolve_scale_weights(cfg.scale_loss_weights,
                                               static_cast<std::size_t>(model_cfg.scales));
    const bool need_targets = !target_batch.empty() &&
                              (cfg.lambda_con > 0.0 || cfg.lambda_syn > 0.0 || cfg.lambda_chamfer > 0.0);

    const std::size_t n_src = source_batch.size();
    const std::size_t n_tgt = need_targets ? target_batch.size() : 0;
    std::vector<ItemResult> results(n_src + n_tgt);

    // Per-item synthesis seeds are derived up front so the step is
    // deterministic regardless of the thread schedule.
    std::vector<std::uint64_t> synth_seeds(n_tgt);
    for (std::size_t j = 0; j < n_tgt; ++j) {
        synth_seeds[j] = Rng::derive(cfg.seed, {Stream::kSynthPair,
                                                static_cast<std::uint64_t>(state.step), j});
    }

    auto run_item = [&](std::size_t slot) {
        ItemResult& out = results[slot];
        out.grad.assign(state.student.size(), 0.0);
        try {
            if (slot < n_src) {
                const SourceTriplet& item = source_batch[slot];
                ForwardPass fwd = forward(state.student, item.moving, item.fixed, model_cfg);
                LossTerm loss = field_mse_loss(fwd, item.gt, weights);
                out.sup = loss.value;
                if (cfg.lambda_sup > 0.0 && n_src > 0) {
                    fwd.tape.backward(loss.node, cfg.lambda_sup / static_cast<double>(n_src),
                                      out.grad);
                }
                return;
            }
            const RegistrationCase& item = target_batch[slot - n_src];

            // Teacher prediction, computed once and treated as constant.
            const ForwardPass teacher_fwd =
                forward(state.teacher, item.moving, item.fixed, model_cfg);

            if (cfg.lambda_con > 0.0 || cfg.lambda_chamfer > 0.0) {
                ForwardPass student_fwd = forward(state.student, item.moving, item.fixed, model_cfg);
                const NeighborIndex fixed_index(item.fixed);
                out.indicator = cfg.use_filter
                                    ? filter_indicator(item.moving, item.fixed, fixed_index,
                                                       student_fwd.field(), teacher_fwd.field())
                                    : 1;

                std::vector<NodeRef> roots;
                std::vector<double> root_coeffs;
                if (cfg.lambda_con > 0.0) {
                    std::vector<DisplacementField> teacher_values;
                    for (const auto& s : teacher_fwd.scales) teacher_values.push_back(s.values);
                    LossTerm con = field_mse_loss_scales(student_fwd, teacher_values, weights);
                    out.con = static_cast<double>(out.indicator) * con.value;
                    if (out.indicator) {
                        roots.push_back(con.node);
                        root_coeffs.push_back(cfg.lambda_con / static_cast<double>(n_tgt));
                    }
                }
                if (cfg.lambda_chamfer > 0.0) {
                    LossTerm cd =
                        chamfer_direct_loss(student_fwd, item.moving, item.fixed, fixed_index);
                    out.chamfer = cd.value;
                    roots.push_back(cd.node);
                    root_coeffs.push_back(cfg.lambda_chamfer / static_cast<double>(n_tgt));
                }
                if (!roots.empty()) {
                    const NodeRef root = student_fwd.tape.lin_comb(root_coeffs, roots);
                    student_fwd.tape.backward(root, 1.0, out.grad);
                }
            }

            if (cfg.lambda_syn > 0.0) {
                Rng synth_rng(synth_seeds[slot - n_src]);
                const SynthesizedPair pair =
                    synthesize_pair(item, teacher_fwd.field(), static_cast<std::size_t>(cfg.n_points),
                                    cfg.interp_sigma_mm, synth_rng);
                ForwardPass syn_fwd =
                    forward(state.student, pair.triplet.moving, pair.triplet.fixed, model_cfg);
                LossTerm syn = field_mse_loss(syn_fwd, pair.triplet.gt, weights);
                out.syn = syn.value;
                syn_fwd.tape.backward(syn.node, cfg.lambda_syn / static_cast<double>(n_tgt),
                                      out.grad);
            }
        } catch (const std::exception& e) {
            out.ok = false;
            out.error = e.what();
        }
    };

    parallel_ordered(results.size(), cfg.threads, run_item);

    // Deterministic reduction in slot order.
    std::vector<double> grad(state.student.size(), 0.0);
    double sup_sum = 0.0, con_sum = 0.0, syn_sum = 0.0, cd_sum = 0.0;
    int indicator_sum = 0;
    for (std::size_t slot = 0; slot < results.size(); ++slot) {
        const ItemResult& r = results[slot];
        if (!r.ok) {
            rec.ok = false;
            rec.error = r.error;
            return rec;
        }
        sup_sum += r.sup;
        con_sum += r.con;
        syn_sum += r.syn;
        cd_sum += r.chamfer;
        indicator_sum += r.indicator;
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += r.grad[i];
    }

    rec.loss_sup = n_src ? sup_sum / static_cast<double>(n_src) : 0.0;
    rec.loss_con = n_tgt ? con_sum / static_cast<double>(n_tgt) : 0.0;
    rec.loss_syn = n_tgt ? syn_sum / static_cast<double>(n_tgt) : 0.0;
    rec.loss_chamfer = n_tgt ? cd_sum / static_cast<double>(n_tgt) : 0.0;
    rec.indicator_rate = n_tgt ? static_cast<double>(indicator_sum) / static_cast<double>(n_tgt) : 0.0;
    rec.total = cfg.lambda_sup * rec.loss_sup + cfg.lambda_con * rec.loss_con +
                cfg.lambda_syn * rec.loss_syn + cfg.lambda_chamfer * rec.loss_chamfer;

    if (!std::isfinite(rec.total)) {
        rec.ok = false;
        rec.error = "non-finite loss; step aborted";
        return rec;
    }
    if (!adam_step(state.student.values(), grad, state.opt, cfg.lr)) {
        rec.ok = false;
        rec.error = "non-finite gradient; step rejected";
        return rec;
    }
    ema_update(state.teacher, state.student, cfg.ema_alpha);
    state.step += 1;
    state.metrics.push_back(rec);
    return rec;
}

RegistrationCase make_training_view(const RegistrationCase& c, int n_points, Rng& rng) {
    const std::size_t n = static_cast<std::size_t>(n_points);
    const PointCloud& moving_pool = c.moving_highres ? *c.moving_highres : c.moving;

    RegistrationCase view(c.id, c.fixed.subset(rng.sample_indices(c.fixed.size(), n)),
                          moving_pool.subset(rng.sample_indices(moving_pool.size(), n)));
    view.moving_highres = c.moving_highres;
    return view;
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    return order;
}

SourceTriplet make_source_item(const RegistrationCase& c, const AdaptationConfig& cfg,
                               std::uint64_t sample_seed, std::uint64_t def_seed) {
    Rng sample_rng(sample_seed);
    const PointCloud base =
        c.fixed.subset(sample_rng.sample_indices(c.fixed.size(),
                                                 static_cast<std::size_t>(cfg.n_points)));
    Rng def_rng(def_seed);
    return make_source_triplet(base, cfg.source_def, def_rng);
}

}  // namespace

TrainState run_pretraining(const std::vector<RegistrationCase>& train_cases,
                           const ModelConfig& model_cfg, const AdaptationConfig& cfg,
                           const RunHooks& hooks) {
    cfg.validate();
    if (train_cases.empty()) throw std::invalid_argument("run_pretraining: no training cases");

    TrainState state = init_train_state(model_cfg);

    AdaptationConfig pre = cfg;
    pre.lambda_con = 0.0;
    pre.lambda_syn = 0.0;
    pre.lambda_chamfer = 0.0;

    for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
        Rng shuffle_rng(Rng::derive(cfg.seed, {Stream::kPretrainSample,
                                               static_cast<std::uint64_t>(epoch), 0xffff}));
        const auto order = shuffled_indices(train_cases.size(), shuffle_rng);
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_source)) {
            std::vector<SourceTriplet> batch;
            const std::size_t end =
                std::min(order.size(), at + static_cast<std::size_t>(cfg.batch_source));
            for (std::size_t b = at; b < end; ++b) {
                const std::uint64_t e = static_cast<std::uint64_t>(epoch);
                batch.push_back(make_source_item(
                    train_cases[order[b]], cfg,
                    Rng::derive(cfg.seed, {Stream::kPretrainSample, e, order[b]}),
                    Rng::derive(cfg.seed, {Stream::kPretrainDef, e, order[b]})));
            }
            train_step(state, batch, {}, model_cfg, pre);
        }
        if (hooks.on_epoch) hooks.on_epoch(epoch, state);
    }

    state.teacher = state.student;
    return state;
}

void run_adaptation(const std::vector<RegistrationCase>& train_cases, TrainState& state,
                    const ModelConfig& model_cfg, const AdaptationConfig& cfg,
                    const RunHooks& hooks) {
    cfg.validate();
    if (train_cases.empty()) throw std::invalid_argument("run_adaptation: no training cases");

    for (int epoch = 0; epoch < cfg.adapt_epochs; ++epoch) {
        const std::uint64_t e = static_cast<std::uint64_t>(epoch);

        std::vector<RegistrationCase> views;
        views.reserve(train_cases.size());
        for (std::size_t i = 0; i < train_cases.size(); ++i) {
            Rng view_rng(Rng::derive(cfg.seed, {Stream::kAdaptView, e, i}));
            views.push_back(make_training_view(train_cases[i], cfg.n_points, view_rng));
        }

        Rng shuffle_rng(Rng::derive(cfg.seed, {Stream::kAdaptShuffle, e, 0}));
        const auto target_order = shuffled_indices(views.size(), shuffle_rng);
        Rng source_shuffle_rng(Rng::derive(cfg.seed, {Stream::kAdaptShuffle, e, 1}));
        const auto source_order = shuffled_indices(views.size(), source_shuffle_rng);

        std::size_t source_cursor = 0;
        for (std::size_t at = 0; at < target_order.size();
             at += static_cast<std::size_t>(cfg.batch_target)) {
            const std::size_t end =
                std::min(target_order.size(), at + static_cast<std::size_t>(cfg.batch_target));
            std::vector<RegistrationCase> target_batch;
            for (std::size_t b = at; b < end; ++b) target_batch.push_back(views[target_order[b]]);

            std::vector<SourceTriplet> source_batch;
            for (int b = 0; b < cfg.batch_source; ++b) {
                const std::size_t idx = source_order[source_cursor % source_order.size()];
                ++source_cursor;
                source_batch.push_back(make_source_item(
                    views[idx], cfg, Rng::derive(cfg.seed, {Stream::kAdaptSourceDef, e, idx, 0}),
                    Rng::derive(cfg.seed, {Stream::kAdaptSourceDef, e, idx, 1})));
            }
            train_step(state, source_batch, target_batch, model_cfg, cfg);
        }
        if (hooks.on_epoch) hooks.on_epoch(epoch, state);
    }
}

}  // namespace pcreg
