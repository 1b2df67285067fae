#include "pcreg/experiment.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "json.hpp"

#include "pcreg/checkpoint.hpp"
#include "pcreg/cloud_io.hpp"
#include "pcreg/manifest.hpp"
#include "pcreg/parallel.hpp"
#include "pcreg/toydata.hpp"

namespace pcreg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

fs::path manifest_path(const ExperimentConfig& cfg, const fs::path& out) {
    return cfg.manifest.empty() ? out / "data" / "manifest.json" : fs::path(cfg.manifest);
}

DatasetManifest open_manifest(const ExperimentConfig& cfg, const fs::path& out,
                              const std::string& stage) {
    const fs::path path = manifest_path(cfg, out);
    if (!fs::exists(path)) {
        throw std::runtime_error(stage + ": manifest " + path.string() +
                                 " not found (run the synth stage or point data.manifest at a dataset)");
    }
    return load_manifest(path);
}

void save_state(const fs::path& dir, const std::string& suffix, const TrainState& state,
                std::uint64_t config_hash) {
    fs::create_directories(dir);
    save_checkpoint(dir / ("student_" + suffix + ".ckpt"), state.student, state.opt, state.step,
                    config_hash);
    // The teacher carries no optimizer state; zeros keep the layout uniform.
    save_checkpoint(dir / ("teacher_" + suffix + ".ckpt"), state.teacher,
                    AdamState(state.teacher.size()), state.step, config_hash);
}

}  // namespace

fs::path resolve_out_dir(const ExperimentConfig& cfg, const std::string& cli_out) {
    fs::path out = cli_out.empty() ? fs::path(cfg.output_dir) : fs::path(cli_out);
    if (out.is_relative()) {
        if (const char* root = std::getenv("REG_OUT_ROOT")) out = fs::path(root) / out;
    }
    return out;
}

void write_metrics_csv(const fs::path& path, const std::vector<StepRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "step,loss_sup,loss_con,loss_syn,indicator_rate,total\n";
    for (const StepRecord& r : records) {
        out << r.step << ',' << fmt17(r.loss_sup) << ',' << fmt17(r.loss_con) << ','
            << fmt17(r.loss_syn) << ',' << fmt17(r.indicator_rate) << ',' << fmt17(r.total)
            << '\n';
    }
}

void stage_synth(const ExperimentConfig& cfg, const fs::path& out) {
    const fs::path data_dir = out / "data";
    fs::create_directories(data_dir);

    ToyDatasetParams params;
    params.n_cases = cfg.synth.train_cases + cfg.synth.val_cases + cfg.synth.test_cases;
    params.tree.n_points = cfg.synth.pool_points;
    params.tree.box_mm = cfg.synth.box_mm;
    params.tree.radius_mm = cfg.synth.radius_mm;
    params.target_def = cfg.synth.target_def;
    params.keypoints = cfg.synth.keypoints;
    params.n_landmarks = cfg.synth.landmarks;
    params.density_radius_mm = cfg.synth.density_radius_mm;
    params.nms_radius_mm = cfg.synth.nms_radius_mm;
    params.seed = cfg.seed;

    const std::vector<RegistrationCase> cases = build_toy_dataset(params);

    DatasetManifest manifest;
    manifest.root = data_dir;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const RegistrationCase& c = cases[i];
        ManifestEntry e;
        e.id = c.id;
        e.split = i < cfg.synth.train_cases
                      ? Split::kTrain
                      : (i < cfg.synth.train_cases + cfg.synth.val_cases ? Split::kVal : Split::kTest);
        e.fixed = c.id + "_fixed.txt";
        e.moving = c.id + "_moving.txt";
        e.moving_highres = c.id + "_pool.txt";
        e.landmarks_moving = c.id + "_lm_moving.txt";
        e.landmarks_fixed = c.id + "_lm_fixed.txt";

        save_cloud(data_dir / e.fixed, c.fixed);
        save_cloud(data_dir / e.moving, c.moving);
        save_cloud(data_dir / *e.moving_highres, *c.moving_highres);
        save_cloud(data_dir / *e.landmarks_moving, *c.landmarks_moving);
        save_cloud(data_dir / *e.landmarks_fixed, *c.landmarks_fixed);
        manifest.entries.push_back(std::move(e));
    }
    save_manifest(data_dir / "manifest.json", manifest);
    std::cout << "synth: wrote " << cases.size() << " cases to " << data_dir.string() << "\n";
}

void stage_pretrain(const ExperimentConfig& cfg, const fs::path& out) {
    const DatasetManifest manifest = open_manifest(cfg, out, "pretrain");
    const std::vector<RegistrationCase> train_cases = load_cases(manifest, Split::kTrain);
    fs::create_directories(out);

    RunHooks hooks;
    hooks.on_epoch = [&](int epoch, const TrainState& state) {
        save_state(out / "checkpoints", "pretrain", state, cfg.model.hash());
        write_metrics_csv(out / "metrics_pretrain.csv", state.metrics);
        std::cout << "pretrain epoch " << epoch << " loss_sup "
                  << (state.metrics.empty() ? 0.0 : state.metrics.back().loss_sup) << "\n";
    };
    const TrainState state = run_pretraining(train_cases, cfg.model, cfg.train, hooks);
    save_state(out / "checkpoints", "pretrain", state, cfg.model.hash());
    write_metrics_csv(out / "metrics_pretrain.csv", state.metrics);
}

void stage_adapt(const ExperimentConfig& cfg, const fs::path& out) {
    const fs::path student_ck = out / "checkpoints" / "student_pretrain.ckpt";
    const fs::path teacher_ck = out / "checkpoints" / "teacher_pretrain.ckpt";
    if (!fs::exists(student_ck)) {
        throw std::runtime_error("adapt: " + student_ck.string() +
                                 " not found; run the pretrain stage first");
    }
    const DatasetManifest manifest = open_manifest(cfg, out, "adapt");
    const std::vector<RegistrationCase> train_cases = load_cases(manifest, Split::kTrain);

    Checkpoint student = load_checkpoint(student_ck, cfg.model.hash());
    TrainState state;
    state.student = student.params;
    state.teacher = fs::exists(teacher_ck) ? load_checkpoint(teacher_ck, cfg.model.hash()).params
                                           : student.params;
    state.opt = std::move(student.opt);
    state.step = student.step;

    RunHooks hooks;
    hooks.on_epoch = [&](int epoch, const TrainState& s) {
        save_state(out / "checkpoints", "adapt", s, cfg.model.hash());
        write_metrics_csv(out / "metrics_adapt.csv", s.metrics);
        std::cout << "adapt epoch " << epoch << " total "
                  << (s.metrics.empty() ? 0.0 : s.metrics.back().total) << " indicator_rate "
                  << (s.metrics.empty() ? 0.0 : s.metrics.back().indicator_rate) << "\n";
    };
    run_adaptation(train_cases, state, cfg.model, cfg.train, hooks);
    save_state(out / "checkpoints", "adapt", state, cfg.model.hash());
    write_metrics_csv(out / "metrics_adapt.csv", state.metrics);
}

EvalReport stage_eval(const ExperimentConfig& cfg, const fs::path& out) {
    fs::path ck_path;
    if (!cfg.eval.checkpoint.empty()) {
        ck_path = cfg.eval.checkpoint;
        if (ck_path.is_relative() && !fs::exists(ck_path) && fs::exists(out / ck_path))
            ck_path = out / ck_path;
    } else {
        const fs::path adapt_ck = out / "checkpoints" / (cfg.eval.model + "_adapt.ckpt");
        const fs::path pre_ck = out / "checkpoints" / (cfg.eval.model + "_pretrain.ckpt");
        ck_path = fs::exists(adapt_ck) ? adapt_ck : pre_ck;
    }
    if (!fs::exists(ck_path)) {
        throw std::runtime_error("eval: no checkpoint at " + ck_path.string() +
                                 "; run pretrain/adapt first or set eval.checkpoint");
    }
    const Checkpoint ck = load_checkpoint(ck_path, cfg.model.hash());

    const DatasetManifest manifest = open_manifest(cfg, out, "eval");
    const std::vector<RegistrationCase> cases = load_cases(manifest, parse_split(cfg.eval.split));
    if (cases.empty()) throw std::runtime_error("eval: no cases in split " + cfg.eval.split);

    const fs::path eval_dir = out / "eval";
    fs::create_directories(eval_dir);

    std::vector<CaseEval> evals(cases.size());
    std::vector<DisplacementField> fields(cases.size());
    std::vector<std::string> errors(cases.size());
    parallel_ordered(cases.size(), cfg.eval.threads, [&](std::size_t i) {
        try {
            const RegistrationCase& c = cases[i];
            ForwardPass fwd = forward(ck.params, c.moving, c.fixed, cfg.model);
            fields[i] = fwd.field();

            CaseEval ce;
            ce.case_id = c.id;
            const TreResult t = tre(c, fields[i], cfg.eval.tre_sigma_mm);
            ce.landmark_errors_mm = t.errors_mm;
            ce.landmark_flow = t.landmark_flow;
            ce.landmark_points = c.landmarks_moving->points();
            ce.tre_mean_mm = t.mean_mm;
            const SdLogJResult s =
                sdlogj(c, fields[i], cfg.eval.sdlogj_spacing_mm, cfg.eval.sdlogj_sigma_mm);
            ce.sdlogj = s.sdlogj;
            ce.folding_fraction = s.folding_fraction();
            evals[i] = std::move(ce);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i].empty())
            throw std::runtime_error("eval: case " + cases[i].id + ": " + errors[i]);
    }

    for (std::size_t i = 0; i < cases.size(); ++i) {
        save_field(eval_dir / ("disp_" + cases[i].id + ".txt"), fields[i]);
    }

    EvalReport report = summarize(std::move(evals));

    json per_case = json::array();
    for (const CaseEval& c : report.per_case) {
        json landmarks = json::array();
        for (std::size_t i = 0; i < c.landmark_errors_mm.size(); ++i) {
            landmarks.push_back({{"x", c.landmark_points[i].x},
                                 {"y", c.landmark_points[i].y},
                                 {"z", c.landmark_points[i].z},
                                 {"dx", c.landmark_flow[i].x},
                                 {"dy", c.landmark_flow[i].y},
                                 {"dz", c.landmark_flow[i].z},
                                 {"tre_mm", c.landmark_errors_mm[i]}});
        }
        per_case.push_back({{"id", c.case_id},
                            {"tre_mean_mm", c.tre_mean_mm},
                            {"sdlogj", c.sdlogj},
                            {"folding_fraction", c.folding_fraction},
                            {"landmarks", std::move(landmarks)}});
    }
    const json j{{"tre_mean_mm", report.tre_mean_mm},   {"tre_p25_mm", report.tre_p25_mm},
                 {"tre_p75_mm", report.tre_p75_mm},     {"sdlogj", report.sdlogj},
                 {"folding_fraction", report.folding_fraction}, {"per_case", std::move(per_case)}};
    std::ofstream rf(eval_dir / "report.json");
    if (!rf) throw std::runtime_error("cannot write " + (eval_dir / "report.json").string());
    rf << j.dump(2) << "\n";

    std::cout << "eval: TRE " << report.tre_mean_mm << " mm (p25 " << report.tre_p25_mm << ", p75 "
              << report.tre_p75_mm << "), SDlogJ " << report.sdlogj << "\n";
    return report;
}

void stage_plot_data(const fs::path& out) {
    const fs::path report_path = out / "eval" / "report.json";
    if (!fs::exists(report_path)) {
        throw std::runtime_error("plot-data: " + report_path.string() +
                                 " not found; run the eval stage first");
    }
    std::ifstream rf(report_path);
    json j;
    rf >> j;

    const fs::path plot_dir = out / "eval" / "plot";
    fs::create_directories(plot_dir);
    std::size_t n = 0;
    for (const json& c : j.at("per_case")) {
        const std::string id = c.at("id").get<std::string>();
        std::ofstream f(plot_dir / (id + ".tsv"));
        if (!f) throw std::runtime_error("cannot write plot file for case " + id);
        f << "x\ty\tz\tdx\tdy\tdz\ttre_mm\n";
        for (const json& lm : c.at("landmarks")) {
            f << fmt17(lm.at("x").get<double>()) << '\t' << fmt17(lm.at("y").get<double>()) << '\t'
              << fmt17(lm.at("z").get<double>()) << '\t' << fmt17(lm.at("dx").get<double>()) << '\t'
              << fmt17(lm.at("dy").get<double>()) << '\t' << fmt17(lm.at("dz").get<double>()) << '\t'
              << fmt17(lm.at("tre_mm").get<double>()) << '\n';
        }
        ++n;
    }
    std::cout << "plot-data: wrote " << n << " files to " << plot_dir.string() << "\n";
}

int run_experiment(const std::string& stage, const ExperimentConfig& cfg, const fs::path& out) {
    try {
        if (stage == "synth") {
            stage_synth(cfg, out);
        } else if (stage == "pretrain") {
            stage_pretrain(cfg, out);
        } else if (stage == "adapt") {
            stage_adapt(cfg, out);
        } else if (stage == "eval") {
            stage_eval(cfg, out);
        } else if (stage == "plot-data") {
            stage_plot_data(out);
        } else {
            std::cerr << "error: unknown stage '" << stage
                      << "' (expected synth|pretrain|adapt|eval|plot-data)\n";
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace pcreg
