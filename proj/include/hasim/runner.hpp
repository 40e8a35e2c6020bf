#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>

#include "metrics.hpp"
#include "scenario.hpp"
#include "trace.hpp"
#include "version.hpp"

namespace hasim {

inline MetricsOptions metrics_options_for(const ScenarioConfig& config) {
    MetricsOptions opts;
    opts.b_ref = config.undershoot_ref;
    opts.window = config.metrics_window;
    opts.undershoot_window = config.undershoot_window;
    return opts;
}

/// The manifest echoes every number needed to re-run the scenario: version,
/// the full config, and (for information) the start offsets actually drawn.
inline void write_manifest(const std::filesystem::path& dir, const ScenarioConfig& config,
                           const SimulationResult* result) {
    std::ofstream out(dir / "manifest.txt", std::ios::binary);
    if (!out)
        throw ConfigError("out", "cannot write " + (dir / "manifest.txt").string());
    out << "# hasim " << version << " run manifest\n";
    if (result) {
        out << "# offsets:";
        char buf[32];
        for (const ClientTrace& trace : result->clients) {
            std::snprintf(buf, sizeof(buf), " %.6f", trace.offset);
            out << buf;
        }
        out << '\n';
    }
    out << serialize(config);
}

/// Executes a validated scenario and writes every artifact of the run into
/// its output directory: per-client traces, the gap and stall logs, metric
/// files, and the manifest. Sweep configs write a cliff curve instead.
inline void run_scenario(const ScenarioConfig& config) {
    validate(config);
    std::filesystem::path dir = config.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec); // a failure surfaces at the first write

    if (!config.sweep.empty()) {
        auto points = cliff_curve(config.sweep, total_clients(config),
                                  config.bandwidth->capacity_at(0.0), config.tau,
                                  config.duration, config.seed);
        write_cliff_file(dir / "cliff.csv", points);
        write_manifest(dir, config, nullptr);
        return;
    }

    auto population = expand_population(config);
    SimulationResult result = run_clients(population, config.ladder, config.tau,
                                          *config.bandwidth, config.duration, config.seed);
    for (const ClientTrace& trace : result.clients)
        write_trace_file(dir / trace_file_name(trace.client), trace);
    write_gaps_file(dir / "gaps.csv", result.gaps);
    write_stalls_file(dir / "stalls.csv", result);
    MetricsReport report =
        compute_metrics(result, *config.bandwidth, metrics_options_for(config));
    write_metrics_files(dir, report);
    write_manifest(dir, config, &result);
}

/// Recomputes metric files for an existing run directory from its manifest
/// and trace files.
inline MetricsReport recompute_metrics(const std::string& trace_dir) {
    std::filesystem::path dir = trace_dir;
    ScenarioConfig config = load_config_file((dir / "manifest.txt").string());
    if (!config.sweep.empty())
        throw ConfigError("metrics", "sweep runs have no traces to recompute from");

    auto population = expand_population(config);
    SimulationResult result;
    result.duration = config.duration;
    result.tau = config.tau;
    for (std::size_t i = 0; i < population.size(); ++i) {
        ClientTrace trace = read_trace_file(dir / trace_file_name(static_cast<int>(i)));
        trace.client = static_cast<int>(i);
        trace.algorithm = population[i].algorithm;
        result.clients.push_back(std::move(trace));
    }
    MetricsReport report =
        compute_metrics(result, *config.bandwidth, metrics_options_for(config));
    write_metrics_files(dir, report);
    return report;
}

} // namespace hasim
