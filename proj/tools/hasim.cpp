#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include <hasim/hasim.hpp>

namespace {

void print_advisories(const hasim::ScenarioConfig& config) {
    for (const std::string& msg : hasim::config_advisories(config))
        std::cerr << "advisory: " << msg << '\n';
}

int run_config(const hasim::ScenarioConfig& config) {
    print_advisories(config);
    hasim::run_scenario(config);
    std::cout << "wrote " << config.out_dir << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic multi-client adaptive-streaming simulator"};
    app.require_subcommand(1);

    std::string config_path;
    CLI::App* cmd_run = app.add_subcommand("run", "Run a scenario from a config file");
    cmd_run->add_option("config", config_path, "Scenario config file")->required();

    std::string preset_name;
    std::string preset_out;
    std::uint64_t preset_seed = 0;
    bool list_presets = false;
    CLI::App* cmd_preset = app.add_subcommand("preset", "Run a built-in experiment");
    CLI::Option* name_opt = cmd_preset->add_option("name", preset_name, "Preset name");
    CLI::Option* seed_opt =
        cmd_preset->add_option("--seed", preset_seed, "Override the random seed");
    CLI::Option* out_opt =
        cmd_preset->add_option("--out", preset_out, "Override the output directory");
    cmd_preset->add_flag("--list", list_presets, "List preset names and exit");

    std::string trace_dir;
    CLI::App* cmd_metrics =
        app.add_subcommand("metrics", "Recompute metric files for a finished run");
    cmd_metrics->add_option("dir", trace_dir, "Run directory with manifest and traces")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (cmd_run->parsed())
            return run_config(hasim::load_config_file(config_path));

        if (cmd_preset->parsed()) {
            if (list_presets) {
                for (const std::string& name : hasim::preset_names())
                    std::cout << name << '\n';
                return 0;
            }
            if (name_opt->count() == 0) {
                std::cerr << "error: preset: name required (or --list)\n";
                return 1;
            }
            hasim::ScenarioConfig config = hasim::preset(preset_name);
            if (seed_opt->count() > 0)
                config.seed = preset_seed;
            if (out_opt->count() > 0)
                config.out_dir = preset_out;
            return run_config(config);
        }

        if (cmd_metrics->parsed()) {
            hasim::MetricsReport report = hasim::recompute_metrics(trace_dir);
            std::printf("mean_instability %.6f\n", report.mean_instability);
            std::printf("mean_inefficiency %.6f\n", report.mean_inefficiency);
            std::printf("mean_unfairness %.6f\n", report.mean_unfairness);
            std::printf("mean_undershoot %.6f\n", report.mean_undershoot);
            return 0;
        }
    } catch (const hasim::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const hasim::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
