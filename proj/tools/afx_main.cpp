#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>

#include "afx/commands.hpp"
#include "afx/runtime.hpp"

int main(int argc, char** argv) {
    afx::init_compute(argc, argv);

    CLI::App app{"alterfactual/counterfactual explanation toolkit for binary image classifiers"};
    app.require_subcommand(1);

    std::string config_path, run_dir;
    uint64_t seed = 0;
    afx::RenderOptions ropts;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config file")->required();
        sub->add_option("--seed", seed, "override the seed of every stage");
        sub->add_option("--run-dir", run_dir, "override run_dir from the config");
        return sub;
    };
    add_common(app.add_subcommand("train-classifier", "train and freeze the binary classifier"));
    add_common(app.add_subcommand("fit-svm",
                                  "fit the decision-boundary surrogate on classifier features"));
    add_common(app.add_subcommand("train-explainer", "train the explanation GAN"));
    add_common(app.add_subcommand("evaluate", "generate explanations and write reports"));
    CLI::App* render =
        add_common(app.add_subcommand("render", "write explanation grids and interpolation strips"));
    render->add_option("--steps", ropts.steps, "frames per interpolation strip (>= 2)");
    render->add_option("--count", ropts.count, "number of inputs to render");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? afx::kExitOk : afx::kExitConfigError;
    }

    CLI::App* sub = app.get_subcommands().front();
    try {
        afx::ExperimentConfig cfg = afx::parse_config(config_path);
        std::optional<uint64_t> seed_opt;
        std::optional<std::filesystem::path> run_dir_opt;
        if (sub->count("--seed")) seed_opt = seed;
        if (sub->count("--run-dir")) run_dir_opt = run_dir;
        afx::apply_overrides(cfg, seed_opt, run_dir_opt);

        const std::string name = sub->get_name();
        if (name == "train-classifier") return afx::cmd_train_classifier(cfg);
        if (name == "fit-svm") return afx::cmd_fit_svm(cfg);
        if (name == "train-explainer") return afx::cmd_train_explainer(cfg);
        if (name == "evaluate") return afx::cmd_evaluate(cfg);
        return afx::cmd_render(cfg, ropts);
    } catch (const afx::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return afx::kExitConfigError;
    } catch (const afx::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return afx::kExitConfigError;
    } catch (const afx::TrainingFailure& e) {
        std::fprintf(stderr, "training failure: %s\n", e.what());
        return afx::kExitTrainingFailure;
    } catch (const afx::MissingArtifact& e) {
        std::fprintf(stderr, "missing artifact: %s\n", e.what());
        return afx::kExitMissingArtifact;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
