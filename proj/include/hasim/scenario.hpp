#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bandwidth_schedule.hpp"
#include "bitrate_ladder.hpp"
#include "client_engine.hpp"
#include "errors.hpp"
#include "units.hpp"

namespace hasim {

/// The ten-rung ladder used by all built-in presets, 459 kbps to 11.3 Mbps.
inline BitrateLadder default_ladder() {
    return BitrateLadder({459e3, 693e3, 937e3, 1270e3, 1745e3, 2536e3, 3758e3, 5379e3,
                          7861e3, 11321e3});
}

/// A block of identically configured clients.
struct ClientGroup {
    int count = 1;
    ClientConfig client{};
    // Thin clients may be sized as a fraction of the fair share instead of an
    // absolute rate: rate = subscription * C(0) / total client count.
    double thin_subscription = 0.0;

    bool operator==(const ClientGroup&) const = default;
};

struct ScenarioConfig {
    double tau = 2.0;
    double duration = 500.0;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    BitrateLadder ladder = default_ladder();
    std::optional<BandwidthSchedule> bandwidth{};
    std::vector<ClientGroup> groups;
    // Non-empty turns the run into a subscription sweep over an all-thin
    // population, producing a cliff curve instead of traces.
    std::vector<double> sweep;
    std::optional<std::pair<double, double>> metrics_window{};
    std::optional<std::pair<double, double>> undershoot_window{};
    double undershoot_ref = 30.0;

    bool operator==(const ScenarioConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return s.substr(a, b - a);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream stream(s);
    std::string item;
    while (std::getline(stream, item, sep))
        out.push_back(trim(item));
    if (!s.empty() && s.back() == sep)
        out.push_back("");
    return out;
}

inline double parse_number(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || !trim(end).empty())
        throw ConfigError(key, "expected a number, got '" + value + "'");
    return v;
}

inline double parse_rate_checked(const std::string& key, const std::string& value) {
    try {
        return parse_rate(value);
    } catch (const InputError& e) {
        throw ConfigError(key, e.what());
    }
}

inline std::uint64_t parse_seed(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    unsigned long long v = std::strtoull(begin, &end, 10);
    if (end == begin || !trim(end).empty() || value.find('-') != std::string::npos)
        throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
    return v;
}

inline int parse_count(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    long v = std::strtol(begin, &end, 10);
    if (end == begin || !trim(end).empty())
        throw ConfigError(key, "expected an integer, got '" + value + "'");
    if (v < 1)
        throw ConfigError(key, "must be at least 1");
    return static_cast<int>(v);
}

inline bool parse_onoff(const std::string& key, const std::string& value) {
    if (value == "on")
        return true;
    if (value == "off")
        return false;
    throw ConfigError(key, "expected on or off, got '" + value + "'");
}

inline std::pair<double, double> parse_window(const std::string& key,
                                              const std::string& value) {
    auto parts = split(value, ',');
    if (parts.size() != 2)
        throw ConfigError(key, "expected 'start, end', got '" + value + "'");
    double a = parse_number(key, parts[0]);
    double b = parse_number(key, parts[1]);
    if (a < 0.0 || b < a)
        throw ConfigError(key, "window must satisfy 0 <= start <= end");
    return {a, b};
}

inline BandwidthSchedule parse_bandwidth(const std::string& key, const std::string& value) {
    std::vector<BandwidthSchedule::Breakpoint> points;
    for (const std::string& item : split(value, ',')) {
        auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError(key, "expected 'time: rate' entries, got '" + item + "'");
        double t = parse_number(key, trim(item.substr(0, colon)));
        double c = parse_rate_checked(key, trim(item.substr(colon + 1)));
        points.push_back({t, c});
    }
    try {
        return BandwidthSchedule(std::move(points));
    } catch (const InputError& e) {
        throw ConfigError(key, e.what());
    }
}

inline BitrateLadder parse_ladder(const std::string& key, const std::string& value) {
    std::vector<double> rates;
    for (const std::string& item : split(value, ','))
        rates.push_back(parse_rate_checked(key, item));
    try {
        return BitrateLadder(std::move(rates));
    } catch (const InputError& e) {
        throw ConfigError(key, e.what());
    }
}

inline std::vector<double> parse_number_list(const std::string& key,
                                             const std::string& value) {
    std::vector<double> out;
    for (const std::string& item : split(value, ','))
        out.push_back(parse_number(key, item));
    return out;
}

} // namespace detail

/// Checks cross-field consistency; load_config calls this after parsing, and
/// direct builders of ScenarioConfig should call it before running.
inline void validate(const ScenarioConfig& config) {
    if (config.tau <= 0.0)
        throw ConfigError("tau", "must be positive");
    if (config.duration <= 0.0)
        throw ConfigError("duration", "must be positive");
    if (!config.bandwidth)
        throw ConfigError("bandwidth", "missing required key");
    if (config.groups.empty())
        throw ConfigError("clients", "at least one [clients] section is required");
    if (config.undershoot_ref <= 0.0)
        throw ConfigError("undershoot_ref", "must be positive");
    for (const ClientGroup& g : config.groups) {
        if (g.count < 1)
            throw ConfigError("count", "must be at least 1");
        if (g.client.algorithm == Algorithm::thin) {
            if (config.sweep.empty() && g.client.thin_rate <= 0.0 &&
                g.thin_subscription <= 0.0)
                throw ConfigError("rate", "thin clients need a rate or a subscription");
        } else if (!config.sweep.empty()) {
            throw ConfigError("sweep", "subscription sweeps take an all-thin population");
        }
    }
    for (double level : config.sweep)
        if (level <= 0.0)
            throw ConfigError("sweep", "subscription levels must be positive");
}

namespace detail {

/// Fields derived from the rest of the config rather than set by the user:
/// per-group tau mirrors the global one, and the probe floor follows the
/// ladder. Applied by load_config and preset so configs from either source
/// satisfy the same equalities.
inline void sync_derived_fields(ScenarioConfig& config) {
    for (ClientGroup& g : config.groups) {
        g.client.panda.tau = config.tau;
        g.client.conventional.tau = config.tau;
        g.client.panda.x_hat_floor = 0.05 * config.ladder.min_rate();
    }
}

} // namespace detail

/// Parses the key-value scenario format. Lines hold `key = value` pairs;
/// `#` starts a comment; each `[clients]` line opens a client group whose
/// first key must be `algorithm`. Unknown keys and invariant violations are
/// reported with the offending key. Missing keys keep their defaults.
inline ScenarioConfig load_config(const std::string& text) {
    ScenarioConfig config;
    config.groups.clear();

    bool in_group = false;
    bool group_algo_set = false;
    std::istringstream stream(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        auto hash = raw.find('#');
        if (hash != std::string::npos)
            raw = raw.substr(0, hash);
        std::string line = detail::trim(raw);
        if (line.empty())
            continue;

        if (line.front() == '[') {
            if (line != "[clients]")
                throw ConfigError("section", "unknown section '" + line + "'");
            config.groups.emplace_back();
            in_group = true;
            group_algo_set = false;
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no),
                              "expected 'key = value', got '" + line + "'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(line_no),
                              "expected 'key = value', got '" + line + "'");

        if (!in_group) {
            if (key == "tau")
                config.tau = detail::parse_number(key, value);
            else if (key == "duration")
                config.duration = detail::parse_number(key, value);
            else if (key == "seed")
                config.seed = detail::parse_seed(key, value);
            else if (key == "out")
                config.out_dir = value;
            else if (key == "ladder")
                config.ladder = detail::parse_ladder(key, value);
            else if (key == "bandwidth")
                config.bandwidth = detail::parse_bandwidth(key, value);
            else if (key == "sweep")
                config.sweep = detail::parse_number_list(key, value);
            else if (key == "metrics_window")
                config.metrics_window = detail::parse_window(key, value);
            else if (key == "undershoot_window")
                config.undershoot_window = detail::parse_window(key, value);
            else if (key == "undershoot_ref")
                config.undershoot_ref = detail::parse_number(key, value);
            else
                throw ConfigError(key, "unknown key");
            continue;
        }

        ClientGroup& g = config.groups.back();
        if (key == "algorithm") {
            if (group_algo_set)
                throw ConfigError(key, "set twice in one [clients] section");
            if (value == "panda")
                g.client.algorithm = Algorithm::panda;
            else if (value == "conventional")
                g.client.algorithm = Algorithm::conventional;
            else if (value == "thin")
                g.client.algorithm = Algorithm::thin;
            else
                throw ConfigError(key, "expected panda, conventional or thin");
            group_algo_set = true;
            continue;
        }
        // Remaining keys are interpreted against the group's algorithm, so
        // the algorithm has to be stated before them.
        if (!group_algo_set)
            throw ConfigError(key, "algorithm must be the first key in a [clients] section");

        Algorithm algo = g.client.algorithm;
        if (key == "count") {
            g.count = detail::parse_count(key, value);
        } else if (key == "offset") {
            if (value == "random") {
                g.client.offset = {true, 0.0};
            } else {
                double fixed = detail::parse_number(key, value);
                if (fixed < 0.0)
                    throw ConfigError(key, "must be non-negative");
                g.client.offset = {false, fixed};
            }
        } else if (key == "rate" && algo == Algorithm::thin) {
            g.client.thin_rate = detail::parse_rate_checked(key, value);
        } else if (key == "subscription" && algo == Algorithm::thin) {
            g.thin_subscription = detail::parse_number(key, value);
        } else if (key == "kappa" && algo == Algorithm::panda) {
            g.client.panda.kappa = detail::parse_number(key, value);
        } else if (key == "w" && algo == Algorithm::panda) {
            g.client.panda.w = detail::parse_rate_checked(key, value);
        } else if (key == "alpha" && algo == Algorithm::panda) {
            g.client.panda.alpha = detail::parse_number(key, value);
        } else if (key == "beta" && algo == Algorithm::panda) {
            g.client.panda.beta = detail::parse_number(key, value);
        } else if (key == "epsilon" && algo == Algorithm::panda) {
            g.client.panda.epsilon = detail::parse_number(key, value);
        } else if (key == "b_min" && algo == Algorithm::panda) {
            g.client.panda.b_min = detail::parse_number(key, value);
        } else if (key == "margin" && algo == Algorithm::panda) {
            if (value == "w")
                g.client.panda.margin_w.reset();
            else
                g.client.panda.margin_w = detail::parse_rate_checked(key, value);
        } else if (key == "startup" && algo == Algorithm::panda) {
            g.client.startup = detail::parse_onoff(key, value);
        } else if (key == "startup_reentry" && algo == Algorithm::panda) {
            g.client.startup_reentry = detail::parse_onoff(key, value);
        } else if (key == "alpha" && algo == Algorithm::conventional) {
            g.client.conventional.alpha = detail::parse_number(key, value);
        } else if (key == "epsilon" && algo == Algorithm::conventional) {
            g.client.conventional.epsilon = detail::parse_number(key, value);
        } else if (key == "b_max" && algo == Algorithm::conventional) {
            g.client.conventional.b_max = detail::parse_number(key, value);
        } else if ((key == "playout_start" || key == "stall_resume") &&
                   algo != Algorithm::thin) {
            double v = value == "default" ? -1.0 : detail::parse_number(key, value);
            if (key == "playout_start")
                g.client.playout_start = v;
            else
                g.client.stall_resume = v;
        } else {
            throw ConfigError(key, "unknown key for a " + std::string(to_string(algo)) +
                                       " client group");
        }
    }

    detail::sync_derived_fields(config);
    validate(config);
    return config;
}

inline ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config", "cannot read " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return load_config(text.str());
}

/// Canonical text form; load_config(serialize(c)) == c for any config built
/// by load_config or preset.
inline std::string serialize(const ScenarioConfig& config) {
    std::ostringstream out;
    out << "tau = " << format_exact(config.tau) << '\n';
    out << "duration = " << format_exact(config.duration) << '\n';
    out << "seed = " << config.seed << '\n';
    out << "out = " << config.out_dir << '\n';

    out << "ladder = ";
    for (std::size_t i = 0; i < config.ladder.size(); ++i)
        out << (i ? ", " : "") << format_exact(config.ladder.rate(i));
    out << '\n';

    if (config.bandwidth) {
        out << "bandwidth = ";
        const auto& points = config.bandwidth->breakpoints();
        for (std::size_t i = 0; i < points.size(); ++i)
            out << (i ? ", " : "") << format_exact(points[i].time) << ": "
                << format_exact(points[i].capacity);
        out << '\n';
    }

    if (!config.sweep.empty()) {
        out << "sweep = ";
        for (std::size_t i = 0; i < config.sweep.size(); ++i)
            out << (i ? ", " : "") << format_exact(config.sweep[i]);
        out << '\n';
    }
    if (config.metrics_window)
        out << "metrics_window = " << format_exact(config.metrics_window->first) << ", "
            << format_exact(config.metrics_window->second) << '\n';
    if (config.undershoot_window)
        out << "undershoot_window = " << format_exact(config.undershoot_window->first)
            << ", " << format_exact(config.undershoot_window->second) << '\n';
    out << "undershoot_ref = " << format_exact(config.undershoot_ref) << '\n';

    for (const ClientGroup& g : config.groups) {
        out << "\n[clients]\n";
        out << "algorithm = " << to_string(g.client.algorithm) << '\n';
        out << "count = " << g.count << '\n';
        out << "offset = "
            << (g.client.offset.random ? std::string("random")
                                       : format_exact(g.client.offset.fixed))
            << '\n';
        switch (g.client.algorithm) {
        case Algorithm::panda: {
            const PandaParams& p = g.client.panda;
            out << "kappa = " << format_exact(p.kappa) << '\n';
            out << "w = " << format_exact(p.w) << '\n';
            out << "alpha = " << format_exact(p.alpha) << '\n';
            out << "beta = " << format_exact(p.beta) << '\n';
            out << "epsilon = " << format_exact(p.epsilon) << '\n';
            out << "b_min = " << format_exact(p.b_min) << '\n';
            out << "margin = " << (p.margin_w ? format_exact(*p.margin_w) : std::string("w"))
                << '\n';
            out << "startup = " << (g.client.startup ? "on" : "off") << '\n';
            out << "startup_reentry = " << (g.client.startup_reentry ? "on" : "off")
                << '\n';
            break;
        }
        case Algorithm::conventional: {
            const ConventionalParams& c = g.client.conventional;
            out << "alpha = " << format_exact(c.alpha) << '\n';
            out << "epsilon = " << format_exact(c.epsilon) << '\n';
            out << "b_max = " << format_exact(c.b_max) << '\n';
            break;
        }
        case Algorithm::thin:
            if (g.client.thin_rate > 0.0)
                out << "rate = " << format_exact(g.client.thin_rate) << '\n';
            if (g.thin_subscription > 0.0)
                out << "subscription = " << format_exact(g.thin_subscription) << '\n';
            break;
        }
        if (g.client.algorithm != Algorithm::thin) {
            out << "playout_start = "
                << (g.client.playout_start < 0.0 ? std::string("default")
                                                 : format_exact(g.client.playout_start))
                << '\n';
            out << "stall_resume = "
                << (g.client.stall_resume < 0.0 ? std::string("default")
                                                : format_exact(g.client.stall_resume))
                << '\n';
        }
    }
    return out.str();
}

/// Parameter advisories across all groups, prefixed with the group index.
inline std::vector<std::string> config_advisories(const ScenarioConfig& config) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < config.groups.size(); ++i) {
        const ClientGroup& g = config.groups[i];
        std::vector<std::string> local;
        if (g.client.algorithm == Algorithm::panda)
            local = advisories(g.client.panda);
        else if (g.client.algorithm == Algorithm::conventional)
            local = advisories(g.client.conventional);
        for (const std::string& msg : local)
            out.push_back("clients[" + std::to_string(i) + "]: " + msg);
    }
    return out;
}

inline int total_clients(const ScenarioConfig& config) {
    int total = 0;
    for (const ClientGroup& g : config.groups)
        total += g.count;
    return total;
}

/// Expands groups into the per-client population, resolving thin
/// subscriptions against the initial capacity and the total client count.
inline std::vector<ClientConfig> expand_population(const ScenarioConfig& config) {
    validate(config);
    int total = total_clients(config);
    double c0 = config.bandwidth->capacity_at(0.0);
    std::vector<ClientConfig> population;
    population.reserve(static_cast<std::size_t>(total));
    for (const ClientGroup& g : config.groups) {
        ClientConfig base = g.client;
        if (base.algorithm == Algorithm::thin && g.thin_subscription > 0.0)
            base.thin_rate = g.thin_subscription * c0 / total;
        for (int i = 0; i < g.count; ++i)
            population.push_back(base);
    }
    return population;
}

inline std::vector<std::string> preset_names() {
    return {"fig1", "fig4", "fig7", "fig8", "fig9", "fig12a", "fig12b", "tradeoff",
            "scale_fixed", "scale_ratio"};
}

/// Built-in experiment configurations. Each writes to out/<name> by default.
inline ScenarioConfig preset(const std::string& name) {
    ScenarioConfig c;
    c.groups.clear();
    c.out_dir = "out/" + name;

    auto panda_group = [](int count) {
        ClientGroup g;
        g.count = count;
        g.client.algorithm = Algorithm::panda;
        return g;
    };
    auto conventional_group = [](int count) {
        ClientGroup g;
        g.count = count;
        g.client.algorithm = Algorithm::conventional;
        return g;
    };
    auto thin_group = [](int count) {
        ClientGroup g;
        g.count = count;
        g.client.algorithm = Algorithm::thin;
        return g;
    };

    if (name == "fig1") {
        // Bitrate oscillation: a crowd of reactive clients on a shared link.
        c.bandwidth = BandwidthSchedule::constant(100e6);
        c.groups.push_back(conventional_group(36));
    } else if (name == "fig4") {
        // Bandwidth cliff: sweep link subscription with fixed-rate clients.
        c.bandwidth = BandwidthSchedule::constant(100e6);
        c.duration = 300.0;
        c.groups.push_back(thin_group(100));
        c.sweep = {0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 1.0, 1.05, 1.1, 1.2, 1.4};
    } else if (name == "fig7") {
        // Single probe-based client riding a bandwidth drop and recovery.
        c.bandwidth = BandwidthSchedule({{0.0, 5e6}, {200.0, 2e6}, {300.0, 5e6}});
        c.groups.push_back(panda_group(1));
    } else if (name == "fig8") {
        // Startup behavior of a single probe-based client.
        c.bandwidth = BandwidthSchedule::constant(5e6);
        c.duration = 200.0;
        c.groups.push_back(panda_group(1));
    } else if (name == "fig9") {
        // The fig1 crowd, probe-based: oscillation disappears.
        c.bandwidth = BandwidthSchedule::constant(100e6);
        c.groups.push_back(panda_group(36));
    } else if (name == "fig12a") {
        // Probe gain past the stability bound: the target oscillates.
        c.bandwidth = BandwidthSchedule::constant(5e6);
        c.groups.push_back(panda_group(1));
        c.groups.back().client.panda.kappa = 1.1;
    } else if (name == "fig12b") {
        // Zero down-shift margin: the buffer cannot hold its reference level.
        c.bandwidth = BandwidthSchedule::constant(10e6);
        c.groups.push_back(panda_group(10));
        c.groups.back().client.panda.margin_w = 0.0;
    } else if (name == "tradeoff") {
        // Stability/responsiveness tradeoff run: drop to a quarter capacity
        // late in the run, judge smoothness before and undershoot after.
        c.bandwidth = BandwidthSchedule({{0.0, 10e6}, {400.0, 2.5e6}});
        c.groups.push_back(panda_group(5));
        c.metrics_window = {{0.0, 400.0}};
        c.undershoot_window = {{400.0, 500.0}};
    } else if (name == "scale_fixed") {
        // Many clients on a fixed link: per-client share shrinks.
        c.bandwidth = BandwidthSchedule::constant(10e6);
        c.groups.push_back(panda_group(20));
    } else if (name == "scale_ratio") {
        // Link scaled with the population at 1 Mbps per client.
        c.bandwidth = BandwidthSchedule::constant(20e6);
        c.groups.push_back(panda_group(20));
    } else {
        throw ConfigError("preset", "unknown preset '" + name + "'");
    }

    detail::sync_derived_fields(c);
    validate(c);
    return c;
}

} // namespace hasim
