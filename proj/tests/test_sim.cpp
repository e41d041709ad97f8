#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "skyspec/cli.hpp"
#include "skyspec/config.hpp"
#include "skyspec/sim.hpp"

using namespace skyspec;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("skyspec_test_sim_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> config_errors(const std::string& text)
{
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.errors();
    }
    return {};
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle)
{
    for (const auto& e : errors) {
        if (e.find(needle) != std::string::npos) {
            return true;
        }
    }
    return false;
}

// Small, fast end-to-end config on the two-channel layout.
SimConfig quick_config(const std::string& detector = "energy")
{
    auto c = parse_config_text(R"({
        "preset": "two-channel", "seed": 11,
        "sensing": {"detector": ")" + detector + R"(", "epochs": 3, "training_count_per_sinr": 40},
        "agent": {"train_episodes": 20, "train_slots": 50},
        "run": {"episodes": 2, "slots_per_episode": 60}
    })");
    return c;
}

struct Proc {
    int code = -1;
    std::string output;
};

Proc run_cli(const std::string& args)
{
    const std::string cmd = std::string(SKYSPEC_CLI_PATH) + " " + args + " 2>&1";
    Proc p;
    FILE* f = popen(cmd.c_str(), "r");
    if (!f) {
        return p;
    }
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, f)) > 0) {
        p.output.append(buf, n);
    }
    const int status = pclose(f);
    p.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return p;
}

} // namespace

// ---------------------------------------------------------------------------
// config

TEST(Config, PresetsParse)
{
    for (const auto& name : preset_names()) {
        const auto c = parse_config_text(R"({"preset": ")" + name + R"(", "seed": 3})");
        EXPECT_EQ(c.preset, name);
        EXPECT_EQ(c.seed, 3U);
        EXPECT_EQ(c.sensing.per_uav.size(), c.num_uavs());
        EXPECT_EQ(c.request_probability.size(), c.num_uavs());
    }
    const auto wide = parse_config_text(R"({"preset": "three-uav-wideband", "seed": 1})");
    EXPECT_EQ(wide.num_channels(), 16U);
    EXPECT_EQ(wide.num_uavs(), 3U);
    EXPECT_EQ(wide.fusion.n, 2U);
}

TEST(Config, SeedOverrideWins)
{
    EXPECT_EQ(parse_config_text(R"({"seed": 3})", 9).seed, 9U);
    EXPECT_EQ(parse_config_text(R"({})", 9).seed, 9U);
}

TEST(Config, MissingSeed)
{
    EXPECT_TRUE(mentions(config_errors(R"({"preset": "four-channel"})"), "seed: required"));
    EXPECT_TRUE(mentions(config_errors(R"({"seed": -4})"), "seed"));
}

TEST(Config, UnknownKeysArePathQualified)
{
    const auto e = config_errors(R"({"seed": 1, "radio": {"p_tx": 1, "ptx": 2}, "colour": 3})");
    EXPECT_TRUE(mentions(e, "radio.ptx: unknown key"));
    EXPECT_TRUE(mentions(e, "colour: unknown key"));
}

TEST(Config, WrongLengthsAreReported)
{
    const auto e = config_errors(R"({"seed": 1, "uavs": {"sensing_sinr_db": [20, 20, 10],
        "access_sinr_db": [[1, 2, 3, 4], [1, 2, 3]]}})");
    EXPECT_TRUE(mentions(e, "uavs.access_sinr_db: expected 3 rows"));
    EXPECT_TRUE(mentions(e, "uavs.access_sinr_db[1]: expected 4 entries"));
}

TEST(Config, EveryErrorIsCollected)
{
    const auto e = config_errors(R"({"radio": {"p_tx": "high"}, "fusion": {"n": 0}, "run": {"slots_per_episode": 0}})");
    EXPECT_TRUE(mentions(e, "seed"));
    EXPECT_TRUE(mentions(e, "radio.p_tx"));
    EXPECT_TRUE(mentions(e, "fusion.n"));
    EXPECT_TRUE(mentions(e, "run.slots_per_episode"));
}

TEST(Config, TabularRefusesWideBand)
{
    const auto e = config_errors(R"({"preset": "three-uav-wideband", "seed": 1, "agent": {"variant": "qtable"}})");
    EXPECT_TRUE(mentions(e, "agent.variant: qtable refuses M = 16"));
    EXPECT_TRUE(config_errors(R"({"preset": "two-channel", "seed": 1, "agent": {"variant": "qtable"}})").empty());
}

TEST(Config, MalformedJson)
{
    EXPECT_TRUE(mentions(config_errors("{\"seed\": 1,"), "<document>"));
}

TEST(Config, ExplicitMatrices)
{
    const auto c = parse_config_text(R"({"seed": 1, "channels": {"matrices": [{"p01": 0.1, "p10": 0.5},
        {"p01": 0.2, "p10": 0.3}]}, "uavs": {"sensing_sinr_db": [20], "access_sinr_db": [[10, 20]]}})");
    ASSERT_EQ(c.num_channels(), 2U);
    EXPECT_DOUBLE_EQ(c.matrices[0].p01, 0.1);
    EXPECT_DOUBLE_EQ(c.matrices[1].p10, 0.3);
    EXPECT_EQ(c.sensing.per_uav.size(), 1U);
}

// ---------------------------------------------------------------------------
// run_slot

TEST(RunSlot, NoRequestersStillPaysForSensing)
{
    auto c = parse_config_text(R"({"preset": "four-channel", "seed": 2, "sensing": {"detector": "perfect"},
        "uavs": {"request_probability": 0}})");
    SensingSuite sensing;
    auto trained = train_allocator(c, "random", c.num_uavs());
    SimContext ctx{c, sensing, trained.allocator};
    auto state = initial_sim_state(c, 0);
    const double sc = sensing_cost(c.timing, c.radio);
    for (int t = 0; t < 20; ++t) {
        const auto l = run_slot(state, ctx);
        EXPECT_TRUE(l.assignment.pairs.empty());
        EXPECT_TRUE(l.outcomes.empty());
        EXPECT_EQ(l.utility, 0.0);
        ASSERT_EQ(l.sensing_costs.size(), c.num_uavs());
        for (double x : l.sensing_costs) {
            EXPECT_DOUBLE_EQ(x, sc);
        }
        // sensing energy with no transmissions: EE is zero, not undefined
        EXPECT_EQ(l.ee, 0.0);
    }
}

TEST(RunSlot, PerfectSensingOnStaticChannelsNeverCollides)
{
    // channel 0 always vacant, channel 1 always busy
    auto c = parse_config_text(R"({"preset": "two-channel", "seed": 4, "sensing": {"detector": "perfect"},
        "channels": {"matrices": [{"p01": 0.0, "p10": 1.0}, {"p01": 1.0, "p10": 0.0}]},
        "agent": {"train_episodes": 100, "train_slots": 50},
        "run": {"episodes": 3, "slots_per_episode": 40}})");
    const auto report = run_simulation(c);
    EXPECT_EQ(report.aggregates.collisions, 0U);
    EXPECT_EQ(report.aggregates.collision_rate, 0.0);
    // every slot after the first of each episode transmits on channel 0
    EXPECT_EQ(report.aggregates.transmissions, 3U * 39U);
    for (const auto& l : report.ledgers) {
        for (const auto& p : l.assignment.pairs) {
            EXPECT_EQ(p.channel, 0U);
        }
    }
}

TEST(RunSlot, LedgerUtilityMatchesItsOwnFields)
{
    const auto c = quick_config();
    const auto report = run_simulation(c);
    ASSERT_EQ(report.ledgers.size(), 120U);
    for (const auto& l : report.ledgers) {
        double u = 0.0;
        for (const auto& o : l.outcomes) {
            u += o.collision * o.throughput;
        }
        EXPECT_NEAR(l.utility, u, 1e-9 * (1.0 + std::abs(u)));
        EXPECT_EQ(l.utility, slot_utility(l.outcomes));
        EXPECT_EQ(l.outcomes.size(), l.assignment.pairs.size());
    }
}

// ---------------------------------------------------------------------------
// run_simulation

TEST(Simulation, ReportPassesAudit)
{
    const auto c = quick_config();
    const auto report = run_simulation(c);
    EXPECT_TRUE(audit_report(report, c.num_uavs()).empty());
    EXPECT_EQ(report.aggregates.slots, 120U);
    ASSERT_TRUE(report.training.has_value());
    EXPECT_EQ(report.training->episodes.size(), 20U);
}

TEST(Simulation, AuditCatchesTampering)
{
    const auto c = quick_config();
    auto report = run_simulation(c);
    auto bad = report;
    bad.aggregates.total_utility += 1.0;
    EXPECT_FALSE(audit_report(bad, c.num_uavs()).empty());
    bad = report;
    bad.ledgers.front().utility += 0.5;
    EXPECT_FALSE(audit_report(bad, c.num_uavs()).empty());
    EXPECT_THROW(write_report(bad, c, fresh_dir("tampered")), std::logic_error);
}

TEST(Simulation, NoSlotViolatesTheConstraints)
{
    auto c = parse_config_text(R"({"preset": "four-channel", "seed": 8, "sensing": {"detector": "energy",
        "training_count_per_sinr": 60}, "agent": {"train_episodes": 30},
        "run": {"episodes": 5, "slots_per_episode": 200}})");
    const auto report = run_simulation(c);
    ASSERT_EQ(report.ledgers.size(), report.sensing.size());
    for (std::size_t i = 0; i < report.ledgers.size(); ++i) {
        // the assignment transmitting in slot i was made on the previous slot's fused vector
        if (i == 0 || report.sensing[i - 1].episode != report.sensing[i].episode) {
            EXPECT_TRUE(report.ledgers[i].assignment.pairs.empty());
            continue;
        }
        EXPECT_TRUE(validate_assignment(report.ledgers[i].assignment, report.sensing[i - 1].fused).empty());
    }
}

TEST(Simulation, SameSeedSameBytes)
{
    const auto c = quick_config("classifier");
    const auto a = fresh_dir("det_a");
    const auto b = fresh_dir("det_b");
    write_report(run_simulation(c), c, a);
    write_report(run_simulation(c), c, b);
    for (const char* f : {"ledger.csv", "assignments.csv", "sensing_metrics.csv", "summary.csv", "training_log.csv"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }

    auto other = c;
    apply_seed(other, 12);
    const auto d = fresh_dir("det_c");
    write_report(run_simulation(other), other, d);
    EXPECT_NE(slurp(a / "ledger.csv"), slurp(d / "ledger.csv"));
}

TEST(Simulation, ZeroEpisodesGivesEmptyValidReport)
{
    auto c = quick_config();
    c.episodes = 0;
    const auto report = run_simulation(c);
    EXPECT_TRUE(report.ledgers.empty());
    EXPECT_EQ(report.aggregates.slots, 0U);
    EXPECT_TRUE(audit_report(report, c.num_uavs()).empty());
    const auto dir = fresh_dir("zero");
    write_report(report, c, dir);
    const auto ledger = csv::read(dir / "ledger.csv");
    EXPECT_TRUE(ledger.rows.empty());
    for (const char* col : {"slot", "utility", "ee", "collisions", "holes_detected", "holes_true"}) {
        EXPECT_NO_THROW(ledger.column(col)) << col;
    }
    EXPECT_NO_THROW(csv::read(dir / "summary.csv"));
}

TEST(Simulation, TrainedDdqnSoftBeatsRandom)
{
    auto c = parse_config_text(R"({"preset": "four-channel", "seed": 21})");
    auto env = make_training_env(c);
    auto trained = train_allocator(c, "ddqn-soft", 1);
    auto& agent = std::get<DqnAgent>(trained.allocator.impl());
    RandomAllocator random(c.num_channels(), 99);
    const double u_agent = evaluate_policy(agent, env, 200, c.agent.train_slots, 1, 555);
    const double u_random = evaluate_policy(random, env, 200, c.agent.train_slots, 1, 555);
    EXPECT_GT(u_random, 0.0);
    EXPECT_GE(u_agent, 1.5 * u_random) << "agent " << u_agent << " random " << u_random;
}

TEST(Simulation, SensingGridHasFusedRows)
{
    auto c = quick_config();
    const auto suite = build_sensing(c);
    const auto rows = evaluate_sensing_grid(c, suite, 30, 5, {20.0});
    ASSERT_EQ(rows.size(), c.num_uavs() + 1);
    EXPECT_TRUE(rows.back().fused);
    const auto w = sensing_rows_csv(rows).str();
    EXPECT_EQ(w.substr(0, w.find('\n')).find("uav"), 0U);
}

// ---------------------------------------------------------------------------
// cli

TEST(Cli, NoArgumentsIsUsageError)
{
    const auto p = run_cli("");
    EXPECT_EQ(p.code, 1);
    EXPECT_NE(p.output.find("gen-dataset"), std::string::npos);
}

TEST(Cli, UnknownFlagOrSubcommand)
{
    EXPECT_EQ(run_cli("simulate --bogus").code, 1);
    EXPECT_EQ(run_cli("frobnicate").code, 1);
    EXPECT_EQ(run_cli("--preset nine-channel simulate").code, 1);
}

TEST(Cli, Help)
{
    const auto p = run_cli("--help");
    EXPECT_EQ(p.code, 0);
    EXPECT_NE(p.output.find("train-agent"), std::string::npos);
}

TEST(Cli, MalformedConfigReportsFieldPath)
{
    const auto dir = fresh_dir("cli_bad");
    std::ofstream(dir / "bad.json") << R"({"seed": 1, "uavs": {"access_sinr_db": [[20, 15, 10]]}})";
    const auto p = run_cli("--config " + (dir / "bad.json").string() + " --out " + (dir / "out").string() + " simulate");
    EXPECT_EQ(p.code, 1);
    EXPECT_NE(p.output.find("uavs.access_sinr_db"), std::string::npos) << p.output;
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, RuntimeFailureIsTwo)
{
    const auto dir = fresh_dir("cli_rt");
    EXPECT_EQ(run_cli("--seed 1 --out " + dir.string() + " train-sensor --dataset " + (dir / "missing.skiq").string()).code,
              2);
    EXPECT_EQ(run_cli("--preset two-channel --seed 1 --out " + dir.string() + " train-agent --uavs 2").code, 2);
}

TEST(Cli, TwoUavTrainingCurve)
{
    const auto dir = fresh_dir("cli_two");
    const auto p = run_cli("--seed 3 --out " + dir.string() + " train-agent --variant ddqn-soft --uavs 2 --episodes 4");
    ASSERT_EQ(p.code, 0) << p.output;
    const auto t = csv::read(dir / "training_log.csv");
    EXPECT_EQ(t.rows.size(), 4U);
    for (const char* col : {"episode", "cumulative_utility", "collisions", "epsilon", "mean_q", "wall_ms"}) {
        EXPECT_NO_THROW(t.column(col)) << col;
    }
    EXPECT_TRUE(fs::exists(dir / "agent.skag"));
    EXPECT_TRUE(fs::exists(dir / "agent_summary.csv"));
}

TEST(Cli, SimulateWritesReport)
{
    const auto dir = fresh_dir("cli_sim");
    std::ofstream(dir / "c.json") << R"({"preset": "two-channel", "seed": 6, "sensing": {"detector": "energy",
        "training_count_per_sinr": 40}, "agent": {"train_episodes": 10}})";
    const auto p = run_cli("--config " + (dir / "c.json").string() + " --out " + (dir / "run").string() +
                           " simulate --episodes 2 --slots 30");
    ASSERT_EQ(p.code, 0) << p.output;
    EXPECT_EQ(csv::read(dir / "run" / "ledger.csv").rows.size(), 60U);
    const auto r = run_cli("--out " + (dir / "rep").string() + " report " + (dir / "run").string());
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_TRUE(fs::exists(dir / "rep" / "comparison.csv"));
    EXPECT_TRUE(fs::exists(dir / "rep" / "curves.csv"));
}
