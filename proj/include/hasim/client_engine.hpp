#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "adaptation.hpp"
#include "bandwidth_schedule.hpp"
#include "bitrate_ladder.hpp"
#include "errors.hpp"
#include "fluid_link.hpp"

namespace hasim {

enum class Algorithm { conventional, panda, thin };

inline const char* to_string(Algorithm a) {
    switch (a) {
    case Algorithm::conventional: return "conventional";
    case Algorithm::panda: return "panda";
    case Algorithm::thin: return "thin";
    }
    return "?";
}

/// When a client issues its first request: either a fixed time or a seeded
/// uniform draw from [0, tau) to break synchronization.
struct OffsetPolicy {
    bool random = true;
    double fixed = 0.0;

    bool operator==(const OffsetPolicy&) const = default;
};

struct ClientConfig {
    Algorithm algorithm = Algorithm::panda;
    PandaParams panda{};
    ConventionalParams conventional{};
    double thin_rate = 0.0; // bits/s, required for thin clients
    OffsetPolicy offset{};
    bool startup = true;          // probe-based clients begin in startup mode
    bool startup_reentry = false; // re-enter startup mode after a stall
    double playout_start = -1.0;  // buffer (s) needed to start playout; <0 picks a default
    double stall_resume = -1.0;   // buffer (s) needed to resume after a stall; <0 picks 2*tau

    bool operator==(const ClientConfig&) const = default;
};

/// Everything recorded about one completed segment download.
struct StepRecord {
    int client = 0;
    long n = 0;             // 1-based step index
    double t_request = 0.0; // when the request was issued
    double r = 0.0;         // requested bitrate, bits/s
    double t_tilde = 0.0;   // download duration, seconds
    double t_hat = 0.0;     // scheduled inter-request target, seconds
    double t_actual = 0.0;  // actual inter-request time max(t_hat, t_tilde)
    double x_tilde = 0.0;   // measured throughput r*tau/t_tilde, bits/s
    double x_hat = 0.0;     // estimate behind this step's bitrate choice
    double y_hat = 0.0;     // smoothed estimate behind this step's choice
    double buffer = 0.0;    // buffer level after this step, seconds
    double x = 0.0;         // average fetch rate r*tau/t_actual, bits/s
};

struct StallInterval {
    double start = 0.0;
    double end = 0.0;
};

struct ClientTrace {
    int client = 0;
    Algorithm algorithm = Algorithm::panda;
    double offset = 0.0; // first request time actually used
    std::vector<StepRecord> steps;
    std::vector<StallInterval> stalls;
};

struct SimulationResult {
    std::vector<ClientTrace> clients;
    std::vector<GapInterval> gaps;
    double duration = 0.0;
    double tau = 0.0;
};

/// Pure buffer bookkeeping for one completed download. The buffer gains one
/// segment of content and loses the full inter-request time, floored at
/// empty; this mirrors a player that freezes the picture while the buffer is
/// exhausted rather than going negative.
struct DownloadOutcome {
    StepRecord record;
    double buffer = 0.0;
};

inline DownloadOutcome on_download_complete(int client, long n, double request_time,
                                            double r, double t_hat, double completion_time,
                                            double size_bits, double buffer_prev, double tau,
                                            double x_hat, double y_hat) {
    if (completion_time <= request_time)
        throw InternalError("download completed at or before its request time");
    DownloadOutcome out;
    StepRecord& rec = out.record;
    rec.client = client;
    rec.n = n;
    rec.t_request = request_time;
    rec.r = r;
    rec.t_tilde = completion_time - request_time;
    rec.t_hat = t_hat;
    rec.t_actual = std::max(t_hat, rec.t_tilde);
    rec.x_tilde = size_bits / rec.t_tilde;
    rec.x_hat = x_hat;
    rec.y_hat = y_hat;
    rec.x = size_bits / rec.t_actual;
    out.buffer = std::max(0.0, buffer_prev + tau - rec.t_actual);
    rec.buffer = out.buffer;
    return out;
}

/// Playout gating: playback starts once the buffer first reaches the start
/// threshold, freezes when the buffer empties, and resumes once it climbs
/// back above the resume threshold. Pure bookkeeping; it feeds the stall
/// metric and does not influence rate decisions.
struct PlayoutStatus {
    bool playing = false;
    bool stalled = false;
};

inline PlayoutStatus playout_stall_policy(PlayoutStatus s, double buffer,
                                          double start_threshold, double resume_threshold) {
    if (!s.playing) {
        if (buffer >= start_threshold)
            s.playing = true;
        return s;
    }
    if (!s.stalled) {
        if (buffer <= 0.0)
            s.stalled = true;
    } else if (buffer >= resume_threshold) {
        s.stalled = false;
    }
    return s;
}

namespace detail {

/// Deterministic mapping of raw engine output to [0, 1). Spelled out (rather
/// than std::uniform_real_distribution, whose algorithm is implementation
/// defined) so traces are byte-identical across standard libraries.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct ClientRuntime {
    ClientConfig cfg;
    AlgoParams algo = ConventionalParams{};
    AdaptState state{};
    double buffer = 0.0;
    long completed = 0;
    // Decision for the next request.
    double pending_r = 0.0;
    double pending_t_hat = 0.0;
    double next_request = 0.0;
    // In-flight request, valid while in_flight.
    bool in_flight = false;
    double request_time = 0.0;
    double flight_r = 0.0;
    double flight_t_hat = 0.0;
    double flight_x_hat = 0.0;
    double flight_y_hat = 0.0;
    // Playout bookkeeping.
    PlayoutStatus playout{};
    double playout_start = 0.0;
    double stall_resume = 0.0;
    double stall_began = 0.0;
    ClientTrace trace;
};

} // namespace detail

/// Runs the whole population against one shared bottleneck until `duration`.
/// Requests are issued from each client's offset onward; downloads completing
/// after the end of the run are dropped. Simultaneous events resolve in a
/// fixed order (link events, then new requests by ascending client index), so
/// a given (population, schedule, seed) always yields the same result.
inline SimulationResult run_clients(const std::vector<ClientConfig>& population,
                                    const BitrateLadder& ladder, double tau,
                                    const BandwidthSchedule& schedule, double duration,
                                    std::uint64_t seed) {
    if (population.empty())
        throw InputError("run_clients: population must not be empty");
    if (tau <= 0.0)
        throw InputError("run_clients: tau must be positive");
    if (duration <= 0.0)
        throw InputError("run_clients: duration must be positive");

    const double inf = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    FluidLink link(schedule);

    std::vector<detail::ClientRuntime> clients(population.size());
    for (std::size_t i = 0; i < population.size(); ++i) {
        detail::ClientRuntime& rt = clients[i];
        rt.cfg = population[i];
        rt.trace.client = static_cast<int>(i);
        rt.trace.algorithm = rt.cfg.algorithm;

        switch (rt.cfg.algorithm) {
        case Algorithm::panda:
            if (rt.cfg.panda.tau != tau)
                throw InputError("run_clients: client tau differs from the run tau");
            rt.algo = rt.cfg.panda;
            rt.playout_start = rt.cfg.playout_start >= 0.0 ? rt.cfg.playout_start
                                                           : rt.cfg.panda.b_min;
            break;
        case Algorithm::conventional:
            if (rt.cfg.conventional.tau != tau)
                throw InputError("run_clients: client tau differs from the run tau");
            rt.algo = rt.cfg.conventional;
            rt.playout_start = rt.cfg.playout_start >= 0.0 ? rt.cfg.playout_start
                                                           : 0.5 * rt.cfg.conventional.b_max;
            break;
        case Algorithm::thin:
            if (rt.cfg.thin_rate <= 0.0)
                throw InputError("run_clients: thin client needs a positive rate");
            rt.playout_start = inf; // thin clients do not play out
            break;
        }
        rt.stall_resume = rt.cfg.stall_resume >= 0.0 ? rt.cfg.stall_resume : 2.0 * tau;

        // Offsets are drawn in client order from one generator, so the draw
        // sequence is a pure function of the seed.
        double offset = rt.cfg.offset.random ? detail::uniform_unit(rng) * tau
                                             : rt.cfg.offset.fixed;
        if (offset < 0.0)
            throw InputError("run_clients: start offset must be non-negative");
        rt.trace.offset = offset;
        rt.next_request = offset;

        if (rt.cfg.algorithm == Algorithm::thin) {
            rt.pending_r = rt.cfg.thin_rate;
            rt.pending_t_hat = tau;
        } else {
            // First download: lowest rate, no estimate yet, no pacing.
            rt.pending_r = ladder.min_rate();
            rt.pending_t_hat = 0.0;
            rt.state.mode = (rt.cfg.algorithm == Algorithm::panda && rt.cfg.startup)
                                ? AdaptMode::startup
                                : AdaptMode::steady;
            rt.state.r = rt.pending_r;
        }
    }

    auto handle_completion = [&](int owner, double tc) {
        detail::ClientRuntime& rt = clients[static_cast<std::size_t>(owner)];
        rt.in_flight = false;
        rt.completed += 1;

        double size = rt.flight_r * tau;
        bool bootstrap = rt.cfg.algorithm != Algorithm::thin && rt.completed == 1;

        double buffer_at_request = rt.buffer;
        DownloadOutcome done = on_download_complete(
            owner, rt.completed, rt.request_time, rt.flight_r, rt.flight_t_hat, tc, size,
            rt.buffer, tau, rt.flight_x_hat, rt.flight_y_hat);
        rt.buffer = done.buffer;

        if (bootstrap) {
            // The first measurement seeds both estimator stages directly.
            rt.state.x_hat = done.record.x_tilde;
            rt.state.y_hat = done.record.x_tilde;
            done.record.x_hat = rt.state.x_hat;
            done.record.y_hat = rt.state.y_hat;
        }
        rt.trace.steps.push_back(done.record);

        PlayoutStatus before = rt.playout;
        rt.playout = playout_stall_policy(rt.playout, rt.buffer, rt.playout_start,
                                          rt.stall_resume);
        if (!before.stalled && rt.playout.stalled) {
            // The drain is linear, so the emptying instant is known exactly:
            // during the download when the balance ran out before the segment
            // landed, otherwise during the pacing idle after the tau credit.
            rt.stall_began = rt.request_time + buffer_at_request +
                             (buffer_at_request > done.record.t_tilde ? tau : 0.0);
        } else if (before.stalled && !rt.playout.stalled) {
            rt.trace.stalls.push_back({rt.stall_began, tc});
            if (rt.cfg.algorithm == Algorithm::panda && rt.cfg.startup_reentry)
                rt.state.mode = AdaptMode::startup;
        }

        if (rt.cfg.algorithm == Algorithm::thin) {
            rt.next_request = thin_client_next(rt.request_time, tau, done.record.t_tilde);
        } else {
            StepDecision d = adaptation_step(rt.state, done.record.x_tilde,
                                             done.record.t_actual, rt.buffer, ladder,
                                             rt.algo);
            rt.state = d.state;
            rt.pending_r = d.r;
            rt.pending_t_hat = d.t_hat;
            rt.next_request = rt.request_time + done.record.t_actual;
        }
    };

    auto fire_request = [&](std::size_t i) {
        detail::ClientRuntime& rt = clients[i];
        // Coalesced link events can leave the link a hair past the nominal
        // request time; issue at the link clock in that case.
        double t = std::max(rt.next_request, link.now());
        rt.request_time = t;
        rt.flight_r = rt.pending_r;
        rt.flight_t_hat = rt.pending_t_hat;
        if (rt.cfg.algorithm == Algorithm::thin) {
            rt.flight_x_hat = rt.cfg.thin_rate;
            rt.flight_y_hat = rt.cfg.thin_rate;
        } else {
            rt.flight_x_hat = rt.state.x_hat;
            rt.flight_y_hat = rt.state.y_hat;
        }
        link.admit_flow(static_cast<int>(i), rt.flight_r * tau, t);
        rt.in_flight = true;
    };

    while (true) {
        double next_request = inf;
        for (const detail::ClientRuntime& rt : clients)
            if (!rt.in_flight)
                next_request = std::min(next_request, rt.next_request);
        double t_next = std::min(next_request, link.next_event_time());
        if (!(t_next < duration))
            break;

        for (const FlowCompletion& c : link.advance_to(t_next))
            handle_completion(c.owner, c.time);
        for (std::size_t i = 0; i < clients.size(); ++i)
            if (!clients[i].in_flight && clients[i].next_request <= t_next)
                fire_request(i);
    }

    // Run the link out to the end of the observation window: completions
    // landing exactly at `duration` still count, and trailing idle time
    // shows up in the gap log.
    for (const FlowCompletion& c : link.advance_to(duration))
        handle_completion(c.owner, c.time);

    SimulationResult result;
    result.duration = duration;
    result.tau = tau;
    result.gaps = link.gaps();
    result.clients.reserve(clients.size());
    for (detail::ClientRuntime& rt : clients) {
        if (rt.playout.stalled)
            rt.trace.stalls.push_back({rt.stall_began, duration});
        result.clients.push_back(std::move(rt.trace));
    }
    return result;
}

} // namespace hasim
