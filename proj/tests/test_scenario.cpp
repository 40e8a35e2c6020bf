#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <hasim/hasim.hpp>

using Catch::Approx;
using hasim::Algorithm;
using hasim::ConfigError;
using hasim::ScenarioConfig;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

const char* minimal_config = "bandwidth = 0: 10 mbps\n"
                             "[clients]\n"
                             "algorithm = panda\n";

} // namespace

TEST_CASE("rate strings carry optional unit suffixes", "[scenario][units]") {
    CHECK(hasim::parse_rate("1500") == 1500.0);
    CHECK(hasim::parse_rate("5 bps") == 5.0);
    CHECK(hasim::parse_rate("800 kbps") == Approx(800e3));
    CHECK(hasim::parse_rate("0.3 mbps") == Approx(300e3));
    CHECK(hasim::parse_rate("100mbps") == Approx(100e6));
    CHECK(hasim::parse_rate("2 Gbps") == Approx(2e9));
    CHECK(hasim::parse_rate("11321 KBPS") == Approx(11321e3));
    CHECK_THROWS_AS(hasim::parse_rate("abc"), hasim::InputError);
    CHECK_THROWS_AS(hasim::parse_rate("5 furlongs"), hasim::InputError);
    CHECK_THROWS_AS(hasim::parse_rate(""), hasim::InputError);
}

TEST_CASE("minimal config takes the documented defaults", "[scenario][config]") {
    ScenarioConfig c = hasim::load_config(minimal_config);
    CHECK(c.tau == 2.0);
    CHECK(c.duration == 500.0);
    CHECK(c.seed == 1);
    CHECK(c.out_dir == "out");
    CHECK(c.undershoot_ref == 30.0);
    CHECK(c.ladder == hasim::default_ladder());
    CHECK(c.ladder.min_rate() == 459e3);
    CHECK(c.ladder.max_rate() == 11321e3);
    REQUIRE(c.bandwidth.has_value());
    CHECK(c.bandwidth->capacity_at(0.0) == Approx(10e6));
    CHECK_FALSE(c.metrics_window.has_value());

    REQUIRE(c.groups.size() == 1);
    const hasim::ClientGroup& g = c.groups[0];
    CHECK(g.count == 1);
    CHECK(g.client.algorithm == Algorithm::panda);
    CHECK(g.client.offset.random);
    CHECK(g.client.startup);
    CHECK_FALSE(g.client.startup_reentry);
    CHECK(g.client.playout_start == -1.0);
    CHECK(g.client.stall_resume == -1.0);

    const hasim::PandaParams& p = g.client.panda;
    CHECK(p.kappa == 0.14);
    CHECK(p.w == 300e3);
    CHECK(p.alpha == 0.2);
    CHECK(p.beta == 0.2);
    CHECK(p.epsilon == 0.15);
    CHECK(p.b_min == 26.0);
    CHECK(p.tau == 2.0);                  // mirrored from the run tau
    CHECK(p.x_hat_floor == Approx(22950.0)); // 5% of the lowest ladder rate
    CHECK(p.margin() == p.w);
}

TEST_CASE("every key parses and survives a round trip", "[scenario][config]") {
    const char* text = "tau = 2\n"
                       "duration = 120\n"
                       "seed = 42\n"
                       "out = runs/demo\n"
                       "ladder = 459 kbps, 693 kbps, 937 kbps, 1270 kbps\n"
                       "bandwidth = 0: 10 mbps, 60: 2.5 mbps\n"
                       "metrics_window = 0, 60\n"
                       "undershoot_window = 60, 120\n"
                       "undershoot_ref = 26\n"
                       "\n"
                       "[clients]\n"
                       "algorithm = panda\n"
                       "count = 3\n"
                       "offset = 0.5\n"
                       "kappa = 0.28\n"
                       "w = 0.6 mbps\n"
                       "alpha = 0.1\n"
                       "beta = 0.3\n"
                       "epsilon = 0.2\n"
                       "b_min = 20\n"
                       "margin = 0\n"
                       "startup = off\n"
                       "startup_reentry = on\n"
                       "playout_start = 10\n"
                       "stall_resume = default\n"
                       "\n"
                       "[clients]\n"
                       "algorithm = conventional\n"
                       "count = 2\n"
                       "offset = random\n"
                       "alpha = 0.25\n"
                       "epsilon = 0.1\n"
                       "b_max = 24\n"
                       "\n"
                       "[clients]\n"
                       "algorithm = thin\n"
                       "rate = 1.5 mbps\n";

    ScenarioConfig c = hasim::load_config(text);
    CHECK(c.seed == 42);
    CHECK(c.out_dir == "runs/demo");
    CHECK(c.ladder.size() == 4);
    CHECK(c.bandwidth->capacity_at(100.0) == Approx(2.5e6));
    REQUIRE(c.metrics_window.has_value());
    CHECK(c.metrics_window->second == 60.0);
    CHECK(c.undershoot_ref == 26.0);

    REQUIRE(c.groups.size() == 3);
    CHECK(c.groups[0].count == 3);
    CHECK(c.groups[0].client.panda.kappa == 0.28);
    CHECK(c.groups[0].client.panda.w == Approx(600e3));
    CHECK(c.groups[0].client.panda.margin_w.has_value());
    CHECK(c.groups[0].client.panda.margin() == 0.0);
    CHECK_FALSE(c.groups[0].client.startup);
    CHECK(c.groups[0].client.startup_reentry);
    CHECK(c.groups[0].client.playout_start == 10.0);
    CHECK(c.groups[0].client.stall_resume == -1.0);
    CHECK(c.groups[0].client.offset == hasim::OffsetPolicy{false, 0.5});
    CHECK(c.groups[0].client.panda.x_hat_floor == Approx(0.05 * 459e3));
    CHECK(c.groups[1].client.conventional.b_max == 24.0);
    CHECK(c.groups[1].client.offset.random);
    CHECK(c.groups[2].client.thin_rate == Approx(1.5e6));

    ScenarioConfig again = hasim::load_config(hasim::serialize(c));
    CHECK(again == c);
}

TEST_CASE("config errors name the offending key", "[scenario][errors]") {
    auto key_of = [](const char* text) {
        try {
            hasim::load_config(text);
        } catch (const ConfigError& e) {
            return std::string(e.key());
        }
        return std::string("(no error)");
    };

    CHECK(key_of("tau = abc\n") == "tau");
    CHECK(key_of("mystery = 1\n") == "mystery");
    CHECK(key_of("[server]\n") == "section");
    CHECK(key_of("bandwidth = 10 mbps\n") == "bandwidth"); // missing 'time:' pair
    CHECK(key_of("seed = -5\nbandwidth = 0: 1 mbps\n") == "seed");
    CHECK(key_of("metrics_window = 5\nbandwidth = 0: 1 mbps\n") == "metrics_window");
    CHECK(key_of("bandwidth = 0: 1 mbps\n[clients]\ncount = 2\nalgorithm = panda\n") ==
          "count");
    CHECK(key_of("bandwidth = 0: 1 mbps\n[clients]\nalgorithm = panda\nalgorithm = thin\n") ==
          "algorithm");
    CHECK(key_of("bandwidth = 0: 1 mbps\n[clients]\nalgorithm = conventional\nkappa = 1\n") ==
          "kappa");
    CHECK(key_of("bandwidth = 0: 1 mbps\n[clients]\nalgorithm = thin\nplayout_start = 5\n") ==
          "playout_start");
    CHECK(key_of("bandwidth = 0: 1 mbps\n[clients]\nalgorithm = panda\ncount = 0\n") ==
          "count");
    CHECK(key_of("bandwidth = 0: 1 mbps\n[clients]\nalgorithm = panda\noffset = -1\n") ==
          "offset");
    CHECK(key_of("[clients]\nalgorithm = panda\n") == "bandwidth");
    CHECK(key_of("bandwidth = 0: 1 mbps\n") == "clients");
    CHECK(key_of("bandwidth = 0: 1 mbps\n[clients]\nalgorithm = thin\n") == "rate");
    CHECK(key_of("bandwidth = 0: 1 mbps\nsweep = 0.5, 1.0\n[clients]\nalgorithm = panda\n") ==
          "sweep");

    SECTION("group keys before the algorithm are rejected with an explanation") {
        try {
            hasim::load_config("bandwidth = 0: 1 mbps\n[clients]\ncount = 2\n");
            FAIL("expected a ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("algorithm must be the first key") !=
                  std::string::npos);
        }
    }
    SECTION("missing files are reported under the config key") {
        CHECK_THROWS_AS(hasim::load_config_file("/nonexistent/scenario.conf"), ConfigError);
    }
}

TEST_CASE("advisories carry the group index", "[scenario][advisories]") {
    ScenarioConfig c = hasim::load_config("bandwidth = 0: 10 mbps\n"
                                          "[clients]\n"
                                          "algorithm = panda\n"
                                          "[clients]\n"
                                          "algorithm = panda\n"
                                          "kappa = 1.1\n"
                                          "margin = 0\n");
    auto notes = hasim::config_advisories(c);
    REQUIRE(notes.size() == 2);
    CHECK(notes[0].find("clients[1]: ") == 0);
    CHECK(notes[1].find("clients[1]: ") == 0);
    CHECK(hasim::config_advisories(hasim::load_config(minimal_config)).empty());
}

TEST_CASE("population expansion resolves subscriptions", "[scenario][population]") {
    ScenarioConfig c = hasim::load_config("bandwidth = 0: 100 mbps\n"
                                          "[clients]\n"
                                          "algorithm = panda\n"
                                          "count = 2\n"
                                          "[clients]\n"
                                          "algorithm = thin\n"
                                          "count = 3\n"
                                          "subscription = 1.2\n");
    CHECK(hasim::total_clients(c) == 5);
    auto population = hasim::expand_population(c);
    REQUIRE(population.size() == 5);
    CHECK(population[0].algorithm == Algorithm::panda);
    CHECK(population[1].algorithm == Algorithm::panda);
    for (std::size_t i = 2; i < 5; ++i) {
        CHECK(population[i].algorithm == Algorithm::thin);
        // 1.2 * 100 Mbps / 5 clients
        CHECK(population[i].thin_rate == Approx(24e6));
    }

    SECTION("an absolute rate wins over no subscription") {
        ScenarioConfig c2 = hasim::load_config("bandwidth = 0: 100 mbps\n"
                                               "[clients]\n"
                                               "algorithm = thin\n"
                                               "count = 2\n"
                                               "rate = 3 mbps\n");
        auto pop2 = hasim::expand_population(c2);
        CHECK(pop2[0].thin_rate == Approx(3e6));
    }
}

TEST_CASE("built-in presets are valid and round-trip", "[scenario][presets]") {
    auto names = hasim::preset_names();
    REQUIRE(names.size() == 10);
    for (const std::string& name : names) {
        INFO("preset " << name);
        ScenarioConfig c = hasim::preset(name);
        CHECK(c.out_dir == "out/" + name);
        ScenarioConfig again = hasim::load_config(hasim::serialize(c));
        CHECK(again == c);
    }
    CHECK_THROWS_AS(hasim::preset("fig99"), ConfigError);

    SECTION("spot checks") {
        ScenarioConfig fig1 = hasim::preset("fig1");
        CHECK(fig1.groups[0].client.algorithm == Algorithm::conventional);
        CHECK(fig1.groups[0].count == 36);
        CHECK(fig1.bandwidth->capacity_at(0.0) == Approx(100e6));

        ScenarioConfig fig4 = hasim::preset("fig4");
        CHECK(fig4.groups[0].client.algorithm == Algorithm::thin);
        CHECK(fig4.groups[0].count == 100);
        CHECK(fig4.sweep.size() == 11);
        CHECK(fig4.duration == 300.0);

        ScenarioConfig fig7 = hasim::preset("fig7");
        REQUIRE(fig7.bandwidth->breakpoints().size() == 3);
        CHECK(fig7.bandwidth->capacity_at(250.0) == Approx(2e6));

        ScenarioConfig fig12a = hasim::preset("fig12a");
        CHECK(fig12a.groups[0].client.panda.kappa == 1.1);
        CHECK_FALSE(hasim::config_advisories(fig12a).empty());

        ScenarioConfig fig12b = hasim::preset("fig12b");
        CHECK(fig12b.groups[0].client.panda.margin() == 0.0);
        CHECK(fig12b.groups[0].count == 10);

        ScenarioConfig tradeoff = hasim::preset("tradeoff");
        REQUIRE(tradeoff.metrics_window.has_value());
        CHECK(tradeoff.metrics_window->second == 400.0);
        REQUIRE(tradeoff.undershoot_window.has_value());
        CHECK(tradeoff.undershoot_window->first == 400.0);
    }
}

TEST_CASE("trace rows serialize with fixed formatting", "[scenario][trace]") {
    hasim::StepRecord s;
    s.client = 3;
    s.n = 7;
    s.t_request = 12.345678;
    s.r = 2536e3;
    s.t_tilde = 1.25;
    s.t_hat = 2.0;
    s.t_actual = 2.0;
    s.x_tilde = 4057600.4;
    s.x_hat = 2.8e6;
    s.y_hat = 2.9e6;
    s.buffer = 27.5;
    s.x = 2536000.49;
    CHECK(hasim::format_step(s) ==
          "3,7,12.345678,2536000,1.250000,2.000000,2.000000,4057600,2800000,2900000,"
          "27.500000,2536000");
    CHECK(hasim::trace_file_name(0) == "trace_c000.csv");
    CHECK(hasim::trace_file_name(35) == "trace_c035.csv");
}

TEST_CASE("run_scenario writes the full artifact set", "[scenario][runner]") {
    namespace fs = std::filesystem;
    fs::path base = fs::temp_directory_path() / "hasim_scenario_test";
    fs::remove_all(base);

    ScenarioConfig c = hasim::load_config("duration = 30\n"
                                          "bandwidth = 0: 10 mbps\n"
                                          "out = unused\n"
                                          "[clients]\n"
                                          "algorithm = panda\n"
                                          "count = 2\n");
    c.out_dir = (base / "run1").string();
    hasim::run_scenario(c);

    for (const char* name : {"trace_c000.csv", "trace_c001.csv", "gaps.csv", "stalls.csv",
                             "metrics.csv", "summary.txt", "manifest.txt"}) {
        INFO(name);
        CHECK(fs::exists(base / "run1" / name));
    }

    hasim::ClientTrace trace = hasim::read_trace_file(base / "run1" / "trace_c000.csv");
    CHECK_FALSE(trace.steps.empty());
    CHECK(trace.steps[0].n == 1);
    CHECK(trace.steps[0].r == 459e3);

    SECTION("manifest reloads to the exact config") {
        ScenarioConfig reloaded =
            hasim::load_config_file((base / "run1" / "manifest.txt").string());
        CHECK(reloaded == c);
    }
    SECTION("identical seeds produce byte-identical traces") {
        ScenarioConfig c2 = c;
        c2.out_dir = (base / "run2").string();
        hasim::run_scenario(c2);
        CHECK(slurp(base / "run1" / "trace_c000.csv") ==
              slurp(base / "run2" / "trace_c000.csv"));
        CHECK(slurp(base / "run1" / "trace_c001.csv") ==
              slurp(base / "run2" / "trace_c001.csv"));
        CHECK(slurp(base / "run1" / "metrics.csv") == slurp(base / "run2" / "metrics.csv"));
    }
    SECTION("a different seed changes the trace") {
        ScenarioConfig c3 = c;
        c3.seed = 2;
        c3.out_dir = (base / "run3").string();
        hasim::run_scenario(c3);
        CHECK(slurp(base / "run1" / "trace_c000.csv") !=
              slurp(base / "run3" / "trace_c000.csv"));
    }
    SECTION("metrics recompute from the written traces") {
        hasim::MetricsReport direct = hasim::recompute_metrics((base / "run1").string());
        auto population = hasim::expand_population(c);
        hasim::SimulationResult rerun = hasim::run_clients(
            population, c.ladder, c.tau, *c.bandwidth, c.duration, c.seed);
        hasim::MetricsReport expected =
            hasim::compute_metrics(rerun, *c.bandwidth, hasim::metrics_options_for(c));
        CHECK(direct.mean_inefficiency ==
              Approx(expected.mean_inefficiency).margin(1e-4));
        CHECK(direct.mean_undershoot == Approx(expected.mean_undershoot).margin(1e-4));
        CHECK(direct.time.size() == expected.time.size());
    }
}

TEST_CASE("sweep scenarios write a cliff curve instead of traces", "[scenario][runner]") {
    namespace fs = std::filesystem;
    fs::path base = fs::temp_directory_path() / "hasim_sweep_test";
    fs::remove_all(base);

    ScenarioConfig c = hasim::load_config("duration = 40\n"
                                          "bandwidth = 0: 8 mbps\n"
                                          "sweep = 0.8, 1.2\n"
                                          "[clients]\n"
                                          "algorithm = thin\n"
                                          "count = 4\n");
    c.out_dir = base.string();
    hasim::run_scenario(c);

    CHECK(fs::exists(base / "cliff.csv"));
    CHECK(fs::exists(base / "manifest.txt"));
    CHECK_FALSE(fs::exists(base / "trace_c000.csv"));

    std::string cliff = slurp(base / "cliff.csv");
    CHECK(cliff.find("subscription,ratio") == 0);
    CHECK(std::count(cliff.begin(), cliff.end(), '\n') == 3);

    CHECK_THROWS_AS(hasim::recompute_metrics(base.string()), ConfigError);
}
