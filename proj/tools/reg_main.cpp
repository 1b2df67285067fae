// reg - point cloud registration adaptation toolkit CLI.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "pcreg/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Teacher-student domain adaptation for deformable point cloud registration"};
    app.require_subcommand(0, 1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    bool print_config = false;

    app.add_flag("--print-config", print_config,
                 "Print the full configuration (defaults merged with --config) and exit");

    std::vector<CLI::App*> stages;
    for (const char* name : {"synth", "pretrain", "adapt", "eval", "plot-data"}) {
        CLI::App* sub = app.add_subcommand(name, "");
        sub->add_option("--config", config_path, "Experiment configuration file (JSON)");
        sub->add_option("--out", out_dir, "Output directory (overrides config output_dir)");
        sub->add_option("--seed", seed_override, "Master seed override")
            ->each([&](const std::string&) { seed_given = true; });
        stages.push_back(sub);
    }
    app.add_option("--config", config_path, "Experiment configuration file (JSON)");

    CLI11_PARSE(app, argc, argv);

    try {
        pcreg::ExperimentConfig cfg;
        if (!config_path.empty()) {
            cfg = pcreg::load_config(config_path);
        } else {
            cfg.finalize();
        }
        if (seed_given) {
            cfg.seed = seed_override;
            cfg.model.init_seed = 0;  // re-derive from the new master seed
            cfg.finalize();
        }

        if (print_config) {
            std::cout << pcreg::config_to_json(cfg);
            return 0;
        }

        for (CLI::App* sub : stages) {
            if (sub->parsed()) {
                return pcreg::run_experiment(sub->get_name(), cfg,
                                             pcreg::resolve_out_dir(cfg, out_dir));
            }
        }
        std::cerr << "error: no stage given (synth|pretrain|adapt|eval|plot-data); see --help\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
