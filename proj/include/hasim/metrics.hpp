#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "bandwidth_schedule.hpp"
#include "client_engine.hpp"
#include "errors.hpp"

namespace hasim {

inline constexpr double undefined_sample = std::numeric_limits<double>::quiet_NaN();

inline bool sample_defined(double v) { return !std::isnan(v); }

/// Weighted bitrate-switching measure at one instant. `series` holds one
/// value per second; the window covers samples t-k..t with linearly decaying
/// weight k-d on the difference (and on the rate) at lag d, so a switch just
/// now counts k times as much as one k-1 seconds ago.
inline double instability(const std::vector<double>& series, std::size_t t, int k = 20) {
    if (k <= 0)
        throw InputError("instability: window must be positive");
    if (t >= series.size() || t < static_cast<std::size_t>(k))
        throw InputError("instability: series does not cover the window");
    double num = 0.0;
    double den = 0.0;
    for (int d = 0; d < k; ++d) {
        double weight = static_cast<double>(k - d);
        double r_now = series[t - static_cast<std::size_t>(d)];
        double r_before = series[t - static_cast<std::size_t>(d) - 1];
        num += std::abs(r_now - r_before) * weight;
        den += r_now * weight;
    }
    if (den <= 0.0)
        throw InputError("instability: window has no positive rates");
    return num / den;
}

/// Fraction of capacity left unclaimed by the population at one instant.
/// Oversubscription is not penalized.
inline double inefficiency(const std::vector<double>& rates, double capacity) {
    if (capacity <= 0.0)
        throw InputError("inefficiency: capacity must be positive");
    double sum = 0.0;
    for (double r : rates)
        sum += r;
    return std::max(0.0, capacity - sum) / capacity;
}

/// sqrt(1 - Jain index) of the instantaneous rates: 0 when everyone is
/// equal, approaching 1 as one client dominates.
inline double unfairness(const std::vector<double>& rates) {
    if (rates.size() < 2)
        throw InputError("unfairness: needs at least two clients");
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double r : rates) {
        if (r <= 0.0)
            throw InputError("unfairness: rates must be positive");
        sum += r;
        sum_sq += r * r;
    }
    double jain = (sum * sum) / (static_cast<double>(rates.size()) * sum_sq);
    return std::sqrt(std::max(0.0, 1.0 - jain));
}

/// Nearest-rank percentile of sorted samples: the smallest value with at
/// least p of the distribution at or below it.
inline double percentile_nearest_rank(std::vector<double> samples, double p) {
    if (samples.empty())
        throw InputError("percentile: no samples");
    std::sort(samples.begin(), samples.end());
    auto rank = static_cast<std::size_t>(
        std::ceil(p * static_cast<double>(samples.size())));
    rank = std::max<std::size_t>(rank, 1);
    return samples[rank - 1];
}

/// 90th-percentile normalized dip of the buffer below b_ref across the given
/// samples (one per second over the interval of interest).
inline double buffer_undershoot(const std::vector<double>& buffers, double b_ref = 30.0) {
    if (b_ref <= 0.0)
        throw InputError("buffer_undershoot: reference must be positive");
    if (buffers.empty())
        throw InputError("buffer_undershoot: empty interval");
    std::vector<double> shortfall;
    shortfall.reserve(buffers.size());
    for (double b : buffers)
        shortfall.push_back(std::max(0.0, b_ref - b) / b_ref);
    return percentile_nearest_rank(std::move(shortfall), 0.9);
}

/// Per-second view of a client's requested bitrate over integer seconds
/// t0..t1 inclusive: the bitrate of the most recent request at or before
/// each second, NaN before the first request.
inline std::vector<double> sample_bitrate_1hz(const ClientTrace& trace, long t0, long t1) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max<long>(0, t1 - t0 + 1)));
    std::size_t i = 0;
    double current = undefined_sample;
    for (long t = t0; t <= t1; ++t) {
        while (i < trace.steps.size() && trace.steps[i].t_request <= static_cast<double>(t)) {
            current = trace.steps[i].r;
            ++i;
        }
        out.push_back(current);
    }
    return out;
}

/// Per-second view of a client's buffer level: the level after the most
/// recent completed step (a step ends at its next-request instant), NaN
/// before the first step ends.
inline std::vector<double> sample_buffer_1hz(const ClientTrace& trace, long t0, long t1) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max<long>(0, t1 - t0 + 1)));
    std::size_t i = 0;
    double current = undefined_sample;
    for (long t = t0; t <= t1; ++t) {
        while (i < trace.steps.size() &&
               trace.steps[i].t_request + trace.steps[i].t_actual <= static_cast<double>(t)) {
            current = trace.steps[i].buffer;
            ++i;
        }
        out.push_back(current);
    }
    return out;
}

struct MetricsOptions {
    int instability_window = 20; // seconds
    double b_ref = 30.0;         // undershoot reference, seconds
    // Closed interval of integer seconds the time-series metrics cover;
    // defaults to the whole run.
    std::optional<std::pair<double, double>> window{};
    // Interval for the undershoot percentile; defaults to `window`.
    std::optional<std::pair<double, double>> undershoot_window{};
};

struct MetricsReport {
    std::vector<long> time; // 1 Hz grid, integer seconds
    // Population aggregates per grid point; NaN where undefined.
    std::vector<double> instability;  // mean over clients with enough history
    std::vector<double> inefficiency; // undefined clients count as zero rate
    std::vector<double> unfairness;   // defined only when every client has a rate
    std::vector<double> undershoot;   // per client, NaN if no samples in window
    double mean_instability = 0.0;
    double mean_inefficiency = 0.0;
    double mean_unfairness = 0.0;
    double mean_undershoot = 0.0;
};

namespace detail {

inline double mean_of_defined(const std::vector<double>& values) {
    double sum = 0.0;
    std::size_t count = 0;
    for (double v : values) {
        if (sample_defined(v)) {
            sum += v;
            ++count;
        }
    }
    return count == 0 ? undefined_sample : sum / static_cast<double>(count);
}

} // namespace detail

/// Computes all four metrics over a finished run. Time-series metrics are
/// evaluated on a shared 1 Hz grid; instants where a metric is undefined
/// (not enough history, or a client without samples where the metric needs
/// all of them) are left as NaN and excluded from the means.
inline MetricsReport compute_metrics(const SimulationResult& result,
                                     const BandwidthSchedule& schedule,
                                     const MetricsOptions& options = {}) {
    const int k = options.instability_window;
    double w0 = options.window ? options.window->first : 0.0;
    double w1 = options.window ? options.window->second : result.duration;
    if (w1 > result.duration)
        w1 = result.duration;
    if (w0 < 0.0 || w1 < w0)
        throw InputError("compute_metrics: bad metrics window");

    long t_begin = static_cast<long>(std::ceil(w0));
    long t_end = static_cast<long>(std::floor(w1));
    std::size_t n_clients = result.clients.size();

    // Full-history bitrate series per client (instability needs k seconds of
    // lead-in before the window).
    std::vector<std::vector<double>> rate_series;
    rate_series.reserve(n_clients);
    for (const ClientTrace& trace : result.clients)
        rate_series.push_back(sample_bitrate_1hz(trace, 0, t_end));

    MetricsReport report;
    for (long t = t_begin; t <= t_end; ++t) {
        report.time.push_back(t);
        auto ti = static_cast<std::size_t>(t);

        // Instability: mean over clients whose window is fully defined.
        double stab_sum = 0.0;
        std::size_t stab_count = 0;
        if (t >= k) {
            for (const auto& series : rate_series) {
                bool covered = true;
                for (long d = t - k; d <= t; ++d)
                    if (!sample_defined(series[static_cast<std::size_t>(d)])) {
                        covered = false;
                        break;
                    }
                if (covered) {
                    stab_sum += instability(series, ti, k);
                    ++stab_count;
                }
            }
        }
        report.instability.push_back(
            stab_count == 0 ? undefined_sample
                            : stab_sum / static_cast<double>(stab_count));

        // Inefficiency: clients without a rate yet consume nothing.
        std::vector<double> rates;
        rates.reserve(n_clients);
        bool all_defined = true;
        for (const auto& series : rate_series) {
            double r = series[ti];
            if (sample_defined(r))
                rates.push_back(r);
            else
                all_defined = false;
        }
        report.inefficiency.push_back(
            inefficiency(rates, schedule.capacity_at(static_cast<double>(t))));

        report.unfairness.push_back(all_defined && rates.size() >= 2
                                        ? unfairness(rates)
                                        : undefined_sample);
    }

    double u0 = options.undershoot_window ? options.undershoot_window->first : w0;
    double u1 = options.undershoot_window ? options.undershoot_window->second : w1;
    if (u1 > result.duration)
        u1 = result.duration;
    long ut0 = static_cast<long>(std::ceil(u0));
    long ut1 = static_cast<long>(std::floor(u1));
    for (const ClientTrace& trace : result.clients) {
        std::vector<double> buffers;
        if (trace.algorithm != Algorithm::thin && ut1 >= ut0) {
            for (double b : sample_buffer_1hz(trace, ut0, ut1))
                if (sample_defined(b))
                    buffers.push_back(b);
        }
        report.undershoot.push_back(buffers.empty()
                                        ? undefined_sample
                                        : buffer_undershoot(buffers, options.b_ref));
    }

    report.mean_instability = detail::mean_of_defined(report.instability);
    report.mean_inefficiency = detail::mean_of_defined(report.inefficiency);
    report.mean_unfairness = detail::mean_of_defined(report.unfairness);
    report.mean_undershoot = detail::mean_of_defined(report.undershoot);
    return report;
}

struct CliffPoint {
    double subscription = 0.0;
    double ratio = 0.0; // mean measured throughput / fair share
};

/// Sweeps link subscription with a population of fixed-rate clients and
/// reports how far their measured throughput sits above the fair share
/// C/K. Undersubscribed populations overestimate badly (idle time between
/// their downloads hides the competition); oversubscribed ones measure the
/// fair share exactly. Throughputs are averaged over downloads requested in
/// the second half of each run, past the convergence transient.
inline std::vector<CliffPoint> cliff_curve(const std::vector<double>& levels, int n_clients,
                                           double capacity, double tau,
                                           double duration = 300.0, std::uint64_t seed = 1) {
    if (n_clients < 2)
        throw InputError("cliff_curve: needs at least two clients");
    if (capacity <= 0.0 || tau <= 0.0 || duration <= 0.0)
        throw InputError("cliff_curve: capacity, tau and duration must be positive");

    double fair_share = capacity / n_clients;
    BandwidthSchedule schedule = BandwidthSchedule::constant(capacity);
    BitrateLadder ladder({fair_share}); // unused by thin clients, but required

    std::vector<CliffPoint> out;
    out.reserve(levels.size());
    for (double level : levels) {
        if (level <= 0.0)
            throw InputError("cliff_curve: subscription levels must be positive");
        std::vector<ClientConfig> population(static_cast<std::size_t>(n_clients));
        for (ClientConfig& c : population) {
            c.algorithm = Algorithm::thin;
            c.thin_rate = level * fair_share;
        }
        SimulationResult result =
            run_clients(population, ladder, tau, schedule, duration, seed);

        double warmup = 0.5 * duration;
        double sum = 0.0;
        std::size_t count = 0;
        for (const ClientTrace& trace : result.clients) {
            for (const StepRecord& step : trace.steps) {
                if (step.t_request >= warmup) {
                    sum += step.x_tilde;
                    ++count;
                }
            }
        }
        if (count == 0)
            throw InternalError("cliff_curve: no downloads past the warmup window");
        out.push_back({level, sum / static_cast<double>(count) / fair_share});
    }
    return out;
}

} // namespace hasim
