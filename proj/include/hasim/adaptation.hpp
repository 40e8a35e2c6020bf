#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bitrate_ladder.hpp"
#include "errors.hpp"
#include "units.hpp"

namespace hasim {

/// Tuning for the probe-based adapter. Rates are bits per second, times
/// seconds, alpha and beta inverse seconds.
struct PandaParams {
    double kappa = 0.14;   // probe convergence rate, 1/s
    double w = 300e3;      // additive probe increment, bits/s
    double alpha = 0.2;    // EWMA smoothing gain
    double beta = 0.2;     // buffer convergence rate
    double epsilon = 0.15; // multiplicative safety factor in the up-shift margin
    double b_min = 26.0;   // buffer set point, seconds of content
    double tau = 2.0;      // segment duration, seconds
    double x_hat_floor = 0.0; // lower clamp on the probe target, bits/s
    // Down-shift margin. Unset means "same as w", which cancels the probe
    // overshoot and keeps the quantizer output steady at equilibrium.
    std::optional<double> margin_w{};

    double margin() const { return margin_w ? *margin_w : w; }

    bool operator==(const PandaParams&) const = default;
};

/// Tuning for the classic reactive adapter that requests the previously
/// measured throughput.
struct ConventionalParams {
    double alpha = 0.2;    // EWMA smoothing gain
    double epsilon = 0.15; // multiplicative down-shift safety factor
    double b_max = 30.0;   // buffer level at which downloads go periodic, seconds
    double tau = 2.0;      // segment duration, seconds

    bool operator==(const ConventionalParams&) const = default;
};

using AlgoParams = std::variant<ConventionalParams, PandaParams>;

enum class AdaptMode { startup, steady };

/// Adapter state carried from one segment decision to the next.
struct AdaptState {
    double x_hat = 0.0; // bandwidth estimate / probe target, bits/s
    double y_hat = 0.0; // smoothed version of x_hat, bits/s
    double r = 0.0;     // bitrate requested for the current segment, bits/s
    AdaptMode mode = AdaptMode::steady;

    bool operator==(const AdaptState&) const = default;
};

/// Reactive estimate: the next target is exactly the last measured
/// throughput.
inline double conventional_estimate(double x_tilde_prev) {
    return x_tilde_prev;
}

/// Probe update. The target grows additively by w per unit time and backs
/// off in proportion to how far it exceeds the measured throughput, so it
/// settles where the excess equals w instead of chasing the measurement.
inline double panda_estimate(double x_hat_prev, double x_tilde_prev, double t_prev,
                             const PandaParams& p) {
    double excess = std::max(0.0, x_hat_prev - x_tilde_prev);
    double x_hat = x_hat_prev + t_prev * p.kappa * (p.w - excess);
    return std::max(x_hat, p.x_hat_floor);
}

/// Discrete smoother step toward x_hat. The effective gain t_prev*alpha is
/// clamped at 1 so an abnormally long step (a download stretched by an
/// outage) lands on the estimate instead of overshooting past it; below the
/// clamp this is the plain explicit-Euler update.
inline double ewma_smooth(double y_hat_prev, double x_hat, double t_prev, double alpha) {
    double gain = std::min(1.0, t_prev * alpha);
    return y_hat_prev - gain * (y_hat_prev - x_hat);
}

struct Margins {
    double up = 0.0;   // subtracted from y_hat before testing an up-shift
    double down = 0.0; // subtracted from y_hat before testing a down-shift
};

inline Margins panda_margins(double y_hat, const PandaParams& p) {
    return {p.margin() + p.epsilon * y_hat, p.margin()};
}

inline Margins conventional_margins(double y_hat, double epsilon) {
    return {epsilon * y_hat, 0.0};
}

/// Dead-zone quantizer: an up-shift must clear the larger margin, a
/// down-shift the smaller one, and anything in between holds the current
/// rate. Both candidates floor at the lowest ladder rate.
inline double deadzone_quantize(double y_hat, double r_prev, const BitrateLadder& ladder,
                                double delta_up, double delta_down) {
    double r_up = ladder.highest_not_above(y_hat - delta_up).value_or(ladder.min_rate());
    double r_down = ladder.highest_not_above(y_hat - delta_down).value_or(ladder.min_rate());
    if (r_prev < r_up)
        return r_up;
    if (r_prev <= r_down)
        return r_prev;
    return r_down;
}

/// Inter-request target of the reactive adapter: download back to back until
/// the buffer reaches b_max, then once per segment duration.
inline double conventional_schedule(double b_prev, const ConventionalParams& c) {
    return b_prev < c.b_max ? 0.0 : c.tau;
}

/// Inter-request target of the probe-based adapter: pace requests so the
/// average sending rate tracks y_hat, plus a correction that steers the
/// buffer toward b_min. Never negative.
inline double panda_schedule(double r, double y_hat, double b_prev, const PandaParams& p) {
    if (y_hat <= 0.0)
        throw InputError("panda_schedule: smoothed estimate must be positive");
    double t_hat = r * p.tau / y_hat + p.beta * (b_prev - p.b_min);
    return std::max(0.0, t_hat);
}

/// Next request time of a fixed-rate client that never buffers: one segment
/// per tau when the link keeps up, back to back otherwise.
inline double thin_client_next(double request_time, double tau, double t_tilde) {
    return request_time + std::max(tau, t_tilde);
}

struct StepDecision {
    AdaptState state;   // state after the decision (state.r == r)
    double r = 0.0;     // bitrate to request next, bits/s
    double t_hat = 0.0; // target inter-request time, seconds
};

/// One full decision: update the estimate from the previous download
/// (throughput x_tilde_prev over actual inter-request time t_prev), smooth
/// it, quantize against the ladder, and schedule the next request given the
/// buffer level b_prev.
///
/// The probe-based adapter starts in a startup mode that borrows the
/// reactive estimate and back-to-back scheduling to fill the buffer quickly.
/// Once the buffer has reached b_min it switches, permanently, to its own
/// rules; the switching step itself already runs them.
inline StepDecision adaptation_step(const AdaptState& state, double x_tilde_prev,
                                    double t_prev, double b_prev, const BitrateLadder& ladder,
                                    const AlgoParams& algo) {
    if (t_prev <= 0.0)
        throw InputError("adaptation_step: previous inter-request time must be positive");
    if (x_tilde_prev <= 0.0)
        throw InputError("adaptation_step: previous throughput must be positive");

    StepDecision d;
    if (const auto* c = std::get_if<ConventionalParams>(&algo)) {
        d.state.mode = AdaptMode::steady;
        d.state.x_hat = conventional_estimate(x_tilde_prev);
        d.state.y_hat = ewma_smooth(state.y_hat, d.state.x_hat, t_prev, c->alpha);
        Margins m = conventional_margins(d.state.y_hat, c->epsilon);
        d.r = deadzone_quantize(d.state.y_hat, state.r, ladder, m.up, m.down);
        d.t_hat = conventional_schedule(b_prev, *c);
    } else {
        const PandaParams& p = std::get<PandaParams>(algo);
        bool startup = state.mode == AdaptMode::startup && b_prev < p.b_min;
        d.state.mode = startup ? AdaptMode::startup : AdaptMode::steady;
        d.state.x_hat = startup
                            ? std::max(conventional_estimate(x_tilde_prev), p.x_hat_floor)
                            : panda_estimate(state.x_hat, x_tilde_prev, t_prev, p);
        d.state.y_hat = ewma_smooth(state.y_hat, d.state.x_hat, t_prev, p.alpha);
        Margins m = panda_margins(d.state.y_hat, p);
        d.r = deadzone_quantize(d.state.y_hat, state.r, ladder, m.up, m.down);
        d.t_hat = startup ? 0.0 : panda_schedule(d.r, d.state.y_hat, b_prev, p);
    }
    d.state.r = d.r;
    return d;
}

/// Non-fatal sanity checks on parameter choices known to cause trouble.
inline std::vector<std::string> advisories(const PandaParams& p) {
    std::vector<std::string> out;
    if (p.kappa * p.tau >= 2.0)
        out.push_back("kappa = " + format_exact(p.kappa) +
                      " is at or past the stability bound 2/tau = " +
                      format_exact(2.0 / p.tau) + "; the probe target will oscillate");
    if (p.margin() < p.w)
        out.push_back("down-shift margin " + format_exact(p.margin()) +
                      " is below the probe increment w = " + format_exact(p.w) +
                      "; the requested bitrate will not settle");
    if (p.tau * p.alpha > 1.0)
        out.push_back("tau*alpha = " + format_exact(p.tau * p.alpha) +
                      " exceeds 1; the smoother degenerates to tracking the raw estimate");
    return out;
}

inline std::vector<std::string> advisories(const ConventionalParams& c) {
    std::vector<std::string> out;
    if (c.tau * c.alpha > 1.0)
        out.push_back("tau*alpha = " + format_exact(c.tau * c.alpha) +
                      " exceeds 1; the smoother degenerates to tracking the raw estimate");
    return out;
}

} // namespace hasim
