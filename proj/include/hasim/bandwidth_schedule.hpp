#pragma once

#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace hasim {

/// Piecewise-constant link capacity over time. The schedule is a sorted list
/// of (time, capacity) breakpoints; capacity_at(t) is the value of the latest
/// breakpoint at or before t. The first breakpoint must sit at t = 0 so the
/// capacity is defined from the start of the run.
class BandwidthSchedule {
public:
    struct Breakpoint {
        double time = 0.0;     // seconds
        double capacity = 0.0; // bits per second

        bool operator==(const Breakpoint&) const = default;
    };

    explicit BandwidthSchedule(std::vector<Breakpoint> points)
        : points_(std::move(points)) {
        if (points_.empty())
            throw InputError("bandwidth schedule must have at least one breakpoint");
        if (points_.front().time != 0.0)
            throw InputError("bandwidth schedule must start at t = 0");
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (points_[i].capacity <= 0.0)
                throw InputError("bandwidth schedule capacities must be positive");
            if (i > 0 && points_[i].time <= points_[i - 1].time)
                throw InputError("bandwidth schedule breakpoints must be strictly increasing in time");
        }
    }

    static BandwidthSchedule constant(double capacity) {
        return BandwidthSchedule({{0.0, capacity}});
    }

    double capacity_at(double t) const {
        // Last breakpoint with time <= t. Times before 0 clamp to the first.
        auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                   [](double value, const Breakpoint& bp) { return value < bp.time; });
        if (it == points_.begin())
            return points_.front().capacity;
        return (it - 1)->capacity;
    }

    /// Time of the first breakpoint strictly after t, or +inf if none.
    double next_change_after(double t) const {
        auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                   [](double value, const Breakpoint& bp) { return value < bp.time; });
        if (it == points_.end())
            return std::numeric_limits<double>::infinity();
        return it->time;
    }

    const std::vector<Breakpoint>& breakpoints() const { return points_; }

    bool operator==(const BandwidthSchedule&) const = default;

private:
    std::vector<Breakpoint> points_;
};

} // namespace hasim
