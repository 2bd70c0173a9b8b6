// Command-line runner for continuous-measurement experiments.
//
// Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O error.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "contmeas/config.hpp"
#include "contmeas/runner.hpp"

using namespace contmeas;

namespace {

int execute(const ExperimentConfig& cfg) {
    try {
        const RunOutcome out = run_experiment(cfg);
        if (out.exit_code == 0) {
            std::printf("ok: %zu files in %s\n", out.files.size(), cfg.out_dir.c_str());
        } else {
            std::printf("numeric failure: %s (partial outputs in %s)\n", out.message.c_str(),
                        cfg.out_dir.c_str());
        }
        return out.exit_code;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const Error& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"contmeas: continuous position-momentum measurement simulator"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "run an experiment from a config file");
    run_cmd->add_option("config", config_path, "path to key = value config")->required();

    std::string preset_name, preset_out, validate_path;
    std::uint64_t preset_seed = 0;
    bool preset_seed_set = false;
    auto* preset_cmd = app.add_subcommand("preset", "run a built-in scenario");
    preset_cmd->add_option("name", preset_name, "preset name (see list-presets)")->required();
    preset_cmd->add_option("--out", preset_out, "output directory");
    preset_cmd->add_option("--seed", preset_seed, "override the preset seed")
        ->each([&](const std::string&) { preset_seed_set = true; });

    auto* list_cmd = app.add_subcommand("list-presets", "list built-in scenarios");

    auto* validate_cmd = app.add_subcommand("validate", "check a config file");
    validate_cmd->add_option("config", validate_path, "path to config")->required();

    CLI11_PARSE(app, argc, argv);

    if (list_cmd->parsed()) {
        for (const auto& name : preset_names()) std::printf("%s\n", name.c_str());
        return 0;
    }
    if (validate_cmd->parsed()) {
        try {
            load_config(validate_path);
            std::printf("ok\n");
            return 0;
        } catch (const ConfigError& e) {
            std::fprintf(stderr, "config error: %s\n", e.what());
            return 2;
        }
    }
    if (preset_cmd->parsed()) {
        try {
            ExperimentConfig cfg = preset(preset_name);
            if (!preset_out.empty()) cfg.out_dir = preset_out;
            if (preset_seed_set) cfg.seed = preset_seed;
            return execute(cfg);
        } catch (const ConfigError& e) {
            std::fprintf(stderr, "config error: %s\n", e.what());
            return 2;
        }
    }
    // run
    try {
        return execute(load_config(config_path));
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
}
