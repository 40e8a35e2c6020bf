#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "bandwidth_schedule.hpp"
#include "errors.hpp"

namespace hasim {

/// Interval during which the link carried no flow.
struct GapInterval {
    double start = 0.0;
    double end = 0.0;

    bool operator==(const GapInterval&) const = default;
};

struct FlowCompletion {
    std::int64_t flow = 0;
    int owner = -1;
    double time = 0.0;
};

/// One constant-rate piece of a flow's service, for conservation checks.
struct AllocationSpan {
    double start = 0.0;
    double end = 0.0;
    std::int64_t flow = 0;
    int owner = -1;
    double rate = 0.0; // bits per second
};

inline double measured_throughput(double size_bits, double start, double completion) {
    if (size_bits <= 0.0)
        throw InputError("measured_throughput: size must be positive");
    if (completion <= start)
        throw InputError("measured_throughput: completion must be after start");
    return size_bits / (completion - start);
}

/// Idealized bottleneck: every active flow receives an equal share C(t)/A(t)
/// of the instantaneous capacity, with no queuing, loss, or ramp-up. Flow
/// progress is integrated piecewise between capacity breakpoints and flow
/// completions, so completion times are solved in closed form rather than
/// stepped. Completion times within kCoalesce of an event boundary are
/// treated as simultaneous with it; simultaneous completions are reported in
/// ascending flow id order, after any capacity change at the same instant.
class FluidLink {
public:
    /// Tolerance for treating nearby event times as simultaneous.
    static constexpr double kCoalesce = 1e-12; // seconds

    explicit FluidLink(BandwidthSchedule schedule) : schedule_(std::move(schedule)) {}

    double now() const { return now_; }
    std::size_t active_flows() const { return flows_.size(); }
    const std::vector<GapInterval>& gaps() const { return gaps_; }

    void record_allocations(bool on) { record_allocations_ = on; }
    const std::vector<AllocationSpan>& allocations() const { return allocations_; }

    /// Admits a flow of size_bits at time `now`, which must not lie in the
    /// past. The link first advances to `now`; completions crossed on the way
    /// are held and returned by the next advance_to call.
    std::int64_t admit_flow(int owner, double size_bits, double now) {
        if (size_bits <= 0.0)
            throw InputError("admit_flow: size must be positive");
        if (now < now_)
            throw InputError("admit_flow: admission time precedes link time");
        advance_internal(now, pending_);
        flows_.push_back(Flow{next_id_++, owner, size_bits});
        return flows_.back().id;
    }

    /// Advances the link to t_target (which must not precede the current
    /// time) and returns every completion in (previous time, t_target], in
    /// event order.
    std::vector<FlowCompletion> advance_to(double t_target) {
        if (t_target < now_)
            throw InputError("advance_to: target precedes link time");
        std::vector<FlowCompletion> out = std::move(pending_);
        pending_.clear();
        advance_internal(t_target, out);
        return out;
    }

    /// Earliest upcoming link event: a flow completion or a capacity
    /// breakpoint. Returns the current time if completions are already
    /// waiting to be collected, +inf if nothing is pending at all.
    double next_event_time() const {
        if (!pending_.empty())
            return now_;
        double next = schedule_.next_change_after(now_);
        if (!flows_.empty()) {
            double cap = schedule_.capacity_at(now_);
            double min_residual = std::numeric_limits<double>::infinity();
            for (const Flow& f : flows_)
                min_residual = std::min(min_residual, f.residual);
            double completes = now_ + min_residual * static_cast<double>(flows_.size()) / cap;
            // If a breakpoint intervenes, the estimate is invalid but the
            // breakpoint itself is still the earlier event.
            next = std::min(next, completes);
        }
        return next;
    }

private:
    struct Flow {
        std::int64_t id = 0;
        int owner = -1;
        double residual = 0.0; // bits left to deliver
    };

    void advance_internal(double t_target, std::vector<FlowCompletion>& out) {
        while (now_ < t_target) {
            double piece_end = std::min(t_target, schedule_.next_change_after(now_));

            if (flows_.empty()) {
                extend_gap(now_, piece_end);
                now_ = piece_end;
                continue;
            }

            double cap = schedule_.capacity_at(now_);
            double active = static_cast<double>(flows_.size());
            double share = cap / active;

            double min_residual = std::numeric_limits<double>::infinity();
            for (const Flow& f : flows_)
                min_residual = std::min(min_residual, f.residual);
            double first_completion = now_ + min_residual / share;
            piece_end = std::min(piece_end, first_completion);

            double drained = share * (piece_end - now_);
            for (std::size_t i = 0; i < flows_.size();) {
                Flow& f = flows_[i];
                double completes_at = now_ + f.residual / share;
                if (completes_at <= piece_end + kCoalesce) {
                    if (record_allocations_)
                        allocations_.push_back({now_, completes_at, f.id, f.owner, share});
                    // Flows are kept in admission (= id) order, so erasing in
                    // place preserves the ascending-id completion order.
                    out.push_back({f.id, f.owner, completes_at});
                    flows_.erase(flows_.begin() + static_cast<std::ptrdiff_t>(i));
                } else {
                    if (record_allocations_)
                        allocations_.push_back({now_, piece_end, f.id, f.owner, share});
                    f.residual -= drained;
                    ++i;
                }
            }
            now_ = piece_end;
        }
    }

    void extend_gap(double start, double end) {
        if (end <= start)
            return;
        if (!gaps_.empty() && start <= gaps_.back().end + kCoalesce)
            gaps_.back().end = end;
        else
            gaps_.push_back({start, end});
    }

    BandwidthSchedule schedule_;
    std::vector<Flow> flows_;
    std::vector<FlowCompletion> pending_;
    std::vector<GapInterval> gaps_;
    std::vector<AllocationSpan> allocations_;
    bool record_allocations_ = false;
    std::int64_t next_id_ = 1;
    double now_ = 0.0;
};

} // namespace hasim
