#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "client_engine.hpp"
#include "errors.hpp"
#include "metrics.hpp"

namespace hasim {

inline constexpr const char* trace_header =
    "client,n,t_request,r,t_tilde,t_hat,t_actual,x_tilde,x_hat,y_hat,buffer,x";

/// One trace row. Times and buffer levels carry six decimals; rates are
/// rounded to whole bits per second. The formatting is fixed so identical
/// runs serialize to identical bytes.
inline std::string format_step(const StepRecord& s) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%d,%ld,%.6f,%lld,%.6f,%.6f,%.6f,%lld,%lld,%lld,%.6f,%lld",
                  s.client, s.n, s.t_request, std::llround(s.r), s.t_tilde, s.t_hat,
                  s.t_actual, std::llround(s.x_tilde), std::llround(s.x_hat),
                  std::llround(s.y_hat), s.buffer, std::llround(s.x));
    return buf;
}

inline std::string trace_file_name(int client) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "trace_c%03d.csv", client);
    return buf;
}

inline void write_trace_file(const std::filesystem::path& path, const ClientTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("out", "cannot write " + path.string());
    out << trace_header << '\n';
    for (const StepRecord& s : trace.steps)
        out << format_step(s) << '\n';
}

inline ClientTrace read_trace_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("trace", "cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != trace_header)
        throw ConfigError("trace", path.string() + " is not a trace file");

    ClientTrace trace;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<double> fields;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ','))
            fields.push_back(std::strtod(cell.c_str(), nullptr));
        if (fields.size() != 12)
            throw ConfigError("trace", path.string() + ": malformed row '" + line + "'");
        StepRecord s;
        s.client = static_cast<int>(fields[0]);
        s.n = static_cast<long>(fields[1]);
        s.t_request = fields[2];
        s.r = fields[3];
        s.t_tilde = fields[4];
        s.t_hat = fields[5];
        s.t_actual = fields[6];
        s.x_tilde = fields[7];
        s.x_hat = fields[8];
        s.y_hat = fields[9];
        s.buffer = fields[10];
        s.x = fields[11];
        if (first) {
            trace.client = s.client;
            first = false;
        }
        trace.steps.push_back(s);
    }
    return trace;
}

inline void write_gaps_file(const std::filesystem::path& path,
                            const std::vector<GapInterval>& gaps) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("out", "cannot write " + path.string());
    out << "start,end\n";
    char buf[128];
    for (const GapInterval& g : gaps) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", g.start, g.end);
        out << buf;
    }
}

inline void write_stalls_file(const std::filesystem::path& path,
                              const SimulationResult& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("out", "cannot write " + path.string());
    out << "client,start,end\n";
    char buf[160];
    for (const ClientTrace& trace : result.clients) {
        for (const StallInterval& s : trace.stalls) {
            std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f\n", trace.client, s.start, s.end);
            out << buf;
        }
    }
}

inline void write_metrics_files(const std::filesystem::path& dir, const MetricsReport& report) {
    {
        std::ofstream out(dir / "metrics.csv", std::ios::binary);
        if (!out)
            throw ConfigError("out", "cannot write " + (dir / "metrics.csv").string());
        out << "t,instability,inefficiency,unfairness\n";
        char buf[256];
        for (std::size_t i = 0; i < report.time.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%ld,%.6f,%.6f,%.6f\n", report.time[i],
                          report.instability[i], report.inefficiency[i],
                          report.unfairness[i]);
            out << buf;
        }
    }
    {
        std::ofstream out(dir / "summary.txt", std::ios::binary);
        if (!out)
            throw ConfigError("out", "cannot write " + (dir / "summary.txt").string());
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "mean_instability %.6f\nmean_inefficiency %.6f\n"
                      "mean_unfairness %.6f\nmean_undershoot %.6f\n",
                      report.mean_instability, report.mean_inefficiency,
                      report.mean_unfairness, report.mean_undershoot);
        out << buf;
        for (std::size_t i = 0; i < report.undershoot.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "undershoot_c%03zu %.6f\n", i,
                          report.undershoot[i]);
            out << buf;
        }
    }
}

inline void write_cliff_file(const std::filesystem::path& path,
                             const std::vector<CliffPoint>& points) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("out", "cannot write " + path.string());
    out << "subscription,ratio\n";
    char buf[128];
    for (const CliffPoint& p : points) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", p.subscription, p.ratio);
        out << buf;
    }
}

} // namespace hasim
