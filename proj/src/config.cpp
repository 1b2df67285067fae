#include "pcreg/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "pcreg/manifest.hpp"

namespace pcreg {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& scope,
                std::initializer_list<const char*> known) {
    if (!j.is_object()) throw std::runtime_error("config: '" + scope + "' must be an object");
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& item : j.items()) {
        if (!allowed.count(item.key())) {
            throw std::runtime_error("config: unknown key '" +
                                     (scope.empty() ? item.key() : scope + "." + item.key()) + "'");
        }
    }
}

template <class T>
void opt(const json& j, const char* key, T& field) {
    if (j.contains(key)) j.at(key).get_to(field);
}

DeformationSpec::Kind parse_def_kind(const std::string& s) {
    if (s == "rigid") return DeformationSpec::Kind::kRigid;
    if (s == "two_scale_random_field") return DeformationSpec::Kind::kTwoScaleRandomField;
    throw std::runtime_error("config: unknown deformation kind '" + s +
                             "' (expected rigid|two_scale_random_field)");
}

std::string def_kind_name(DeformationSpec::Kind k) {
    return k == DeformationSpec::Kind::kRigid ? "rigid" : "two_scale_random_field";
}

void parse_def(const json& j, const std::string& scope, DeformationSpec& spec) {
    check_keys(j, scope,
               {"kind", "rotation_deg", "translation_mm", "coarse_spacing_mm", "fine_spacing_mm",
                "coarse_amplitude_mm", "fine_amplitude_mm"});
    if (j.contains("kind")) spec.kind = parse_def_kind(j.at("kind").get<std::string>());
    opt(j, "rotation_deg", spec.rotation_range_deg);
    opt(j, "translation_mm", spec.translation_range_mm);
    opt(j, "coarse_spacing_mm", spec.coarse_spacing_mm);
    opt(j, "fine_spacing_mm", spec.fine_spacing_mm);
    opt(j, "coarse_amplitude_mm", spec.coarse_amplitude_mm);
    opt(j, "fine_amplitude_mm", spec.fine_amplitude_mm);
}

json def_to_json(const DeformationSpec& spec) {
    return json{{"kind", def_kind_name(spec.kind)},
                {"rotation_deg", spec.rotation_range_deg},
                {"translation_mm", spec.translation_range_mm},
                {"coarse_spacing_mm", spec.coarse_spacing_mm},
                {"fine_spacing_mm", spec.fine_spacing_mm},
                {"coarse_amplitude_mm", spec.coarse_amplitude_mm},
                {"fine_amplitude_mm", spec.fine_amplitude_mm}};
}

}  // namespace

void ExperimentConfig::finalize() {
    train.seed = seed;
    if (model.init_seed == 0) model.init_seed = Rng::derive(seed, {0x1417ULL});
    model.validate();
    train.validate();
    if (eval.model != "student" && eval.model != "teacher")
        throw std::runtime_error("config: eval.model must be student|teacher");
    (void)parse_split(eval.split);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config " + path.string() + ": " + e.what());
    }

    ExperimentConfig cfg;
    check_keys(j, "", {"data", "model", "train", "synth", "eval", "output_dir", "seed"});
    opt(j, "output_dir", cfg.output_dir);
    opt(j, "seed", cfg.seed);

    if (j.contains("data")) {
        const json& d = j.at("data");
        check_keys(d, "data", {"manifest"});
        opt(d, "manifest", cfg.manifest);
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, "model",
                   {"k", "feature_width", "scales", "coarse_points", "activation",
                    "corr_length_mm", "upsample_sigma_mm", "init_seed"});
        opt(m, "k", cfg.model.k);
        opt(m, "feature_width", cfg.model.feature_width);
        opt(m, "scales", cfg.model.scales);
        opt(m, "coarse_points", cfg.model.coarse_points);
        if (m.contains("activation")) {
            const std::string act = m.at("activation").get<std::string>();
            if (act != "tanh" && act != "relu")
                throw std::runtime_error("config: model.activation must be tanh|relu");
            cfg.model.tanh_activation = act == "tanh";
        }
        opt(m, "corr_length_mm", cfg.model.corr_length_mm);
        opt(m, "upsample_sigma_mm", cfg.model.upsample_sigma_mm);
        opt(m, "init_seed", cfg.model.init_seed);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        check_keys(t, "train",
                   {"lambda_sup", "lambda_con", "lambda_syn", "lambda_chamfer", "ema_alpha", "lr",
                    "pretrain_epochs", "adapt_epochs", "batch_source", "batch_target", "n_points",
                    "n_points_highres", "interp_sigma_mm", "scale_loss_weights", "use_filter",
                    "source_def", "threads"});
        opt(t, "lambda_sup", cfg.train.lambda_sup);
        opt(t, "lambda_con", cfg.train.lambda_con);
        opt(t, "lambda_syn", cfg.train.lambda_syn);
        opt(t, "lambda_chamfer", cfg.train.lambda_chamfer);
        opt(t, "ema_alpha", cfg.train.ema_alpha);
        opt(t, "lr", cfg.train.lr);
        opt(t, "pretrain_epochs", cfg.train.pretrain_epochs);
        opt(t, "adapt_epochs", cfg.train.adapt_epochs);
        opt(t, "batch_source", cfg.train.batch_source);
        opt(t, "batch_target", cfg.train.batch_target);
        opt(t, "n_points", cfg.train.n_points);
        opt(t, "n_points_highres", cfg.train.n_points_highres);
        opt(t, "interp_sigma_mm", cfg.train.interp_sigma_mm);
        opt(t, "scale_loss_weights", cfg.train.scale_loss_weights);
        opt(t, "use_filter", cfg.train.use_filter);
        opt(t, "threads", cfg.train.threads);
        if (t.contains("source_def")) parse_def(t.at("source_def"), "train.source_def",
                                                cfg.train.source_def);
    }
    if (j.contains("synth")) {
        const json& s = j.at("synth");
        check_keys(s, "synth",
                   {"train_cases", "val_cases", "test_cases", "pool_points", "keypoints",
                    "landmarks", "box_mm", "radius_mm", "density_radius_mm", "nms_radius_mm",
                    "target_def"});
        opt(s, "train_cases", cfg.synth.train_cases);
        opt(s, "val_cases", cfg.synth.val_cases);
        opt(s, "test_cases", cfg.synth.test_cases);
        opt(s, "pool_points", cfg.synth.pool_points);
        opt(s, "keypoints", cfg.synth.keypoints);
        opt(s, "landmarks", cfg.synth.landmarks);
        opt(s, "box_mm", cfg.synth.box_mm);
        opt(s, "radius_mm", cfg.synth.radius_mm);
        opt(s, "density_radius_mm", cfg.synth.density_radius_mm);
        opt(s, "nms_radius_mm", cfg.synth.nms_radius_mm);
        if (s.contains("target_def")) parse_def(s.at("target_def"), "synth.target_def",
                                                cfg.synth.target_def);
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        check_keys(e, "eval",
                   {"tre_sigma_mm", "sdlogj_spacing_mm", "sdlogj_sigma_mm", "model", "checkpoint",
                    "split", "threads"});
        opt(e, "tre_sigma_mm", cfg.eval.tre_sigma_mm);
        opt(e, "sdlogj_spacing_mm", cfg.eval.sdlogj_spacing_mm);
        opt(e, "sdlogj_sigma_mm", cfg.eval.sdlogj_sigma_mm);
        opt(e, "model", cfg.eval.model);
        opt(e, "checkpoint", cfg.eval.checkpoint);
        opt(e, "split", cfg.eval.split);
        opt(e, "threads", cfg.eval.threads);
    }

    cfg.finalize();
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["data"] = {{"manifest", cfg.manifest}};
    j["model"] = {{"k", cfg.model.k},
                  {"feature_width", cfg.model.feature_width},
                  {"scales", cfg.model.scales},
                  {"coarse_points", cfg.model.coarse_points},
                  {"activation", cfg.model.tanh_activation ? "tanh" : "relu"},
                  {"corr_length_mm", cfg.model.corr_length_mm},
                  {"upsample_sigma_mm", cfg.model.upsample_sigma_mm},
                  {"init_seed", cfg.model.init_seed}};
    j["train"] = {{"lambda_sup", cfg.train.lambda_sup},
                  {"lambda_con", cfg.train.lambda_con},
                  {"lambda_syn", cfg.train.lambda_syn},
                  {"lambda_chamfer", cfg.train.lambda_chamfer},
                  {"ema_alpha", cfg.train.ema_alpha},
                  {"lr", cfg.train.lr},
                  {"pretrain_epochs", cfg.train.pretrain_epochs},
                  {"adapt_epochs", cfg.train.adapt_epochs},
                  {"batch_source", cfg.train.batch_source},
                  {"batch_target", cfg.train.batch_target},
                  {"n_points", cfg.train.n_points},
                  {"n_points_highres", cfg.train.n_points_highres},
                  {"interp_sigma_mm", cfg.train.interp_sigma_mm},
                  {"scale_loss_weights", cfg.train.scale_loss_weights},
                  {"use_filter", cfg.train.use_filter},
                  {"source_def", def_to_json(cfg.train.source_def)},
                  {"threads", cfg.train.threads}};
    j["synth"] = {{"train_cases", cfg.synth.train_cases},
                  {"val_cases", cfg.synth.val_cases},
                  {"test_cases", cfg.synth.test_cases},
                  {"pool_points", cfg.synth.pool_points},
                  {"keypoints", cfg.synth.keypoints},
                  {"landmarks", cfg.synth.landmarks},
                  {"box_mm", cfg.synth.box_mm},
                  {"radius_mm", cfg.synth.radius_mm},
                  {"density_radius_mm", cfg.synth.density_radius_mm},
                  {"nms_radius_mm", cfg.synth.nms_radius_mm},
                  {"target_def", def_to_json(cfg.synth.target_def)}};
    j["eval"] = {{"tre_sigma_mm", cfg.eval.tre_sigma_mm},
                 {"sdlogj_spacing_mm", cfg.eval.sdlogj_spacing_mm},
                 {"sdlogj_sigma_mm", cfg.eval.sdlogj_sigma_mm},
                 {"model", cfg.eval.model},
                 {"checkpoint", cfg.eval.checkpoint},
                 {"split", cfg.eval.split},
                 {"threads", cfg.eval.threads}};
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    return j.dump(2) + "\n";
}

}  // namespace pcreg
