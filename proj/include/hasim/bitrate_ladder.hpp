#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace hasim {

/// The discrete set of encoded bitrates a client can request, sorted
/// ascending. Rates are in bits per second.
class BitrateLadder {
public:
    explicit BitrateLadder(std::vector<double> rates) : rates_(std::move(rates)) {
        if (rates_.empty())
            throw InputError("bitrate ladder must not be empty");
        for (std::size_t i = 0; i < rates_.size(); ++i) {
            if (rates_[i] <= 0.0)
                throw InputError("bitrate ladder rates must be positive");
            if (i > 0 && rates_[i] <= rates_[i - 1])
                throw InputError("bitrate ladder must be strictly increasing");
        }
    }

    std::size_t size() const { return rates_.size(); }
    double rate(std::size_t i) const { return rates_.at(i); }
    double min_rate() const { return rates_.front(); }
    double max_rate() const { return rates_.back(); }
    const std::vector<double>& rates() const { return rates_; }

    bool contains(double r) const {
        return std::binary_search(rates_.begin(), rates_.end(), r);
    }

    /// Highest ladder rate not above the threshold, if any.
    std::optional<double> highest_not_above(double threshold) const {
        auto it = std::upper_bound(rates_.begin(), rates_.end(), threshold);
        if (it == rates_.begin())
            return std::nullopt;
        return *(it - 1);
    }

    bool operator==(const BitrateLadder&) const = default;

private:
    std::vector<double> rates_;
};

} // namespace hasim
