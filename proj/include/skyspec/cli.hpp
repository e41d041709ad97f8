#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skyspec/config.hpp"
#include "skyspec/csv.hpp"
#include "skyspec/dataset_io.hpp"
#include "skyspec/sim.hpp"
#include "skyspec/value_iteration.hpp"

namespace skyspec::cli {

enum ExitCode : int { Ok = 0, Usage = 1, Runtime = 2 };

struct GlobalOptions {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::string preset = "four-channel";
};

/// Config from --config, or the named preset when no file is given. The seed
/// comes from the file or --seed (which wins).
inline SimConfig resolve_config(const GlobalOptions& g)
{
    SimConfig c;
    if (g.config) {
        c = load_config(*g.config, g.seed);
    } else {
        nlohmann::json j = {{"preset", g.preset}};
        c = parse_config(j, g.seed);
    }
    if (g.out) {
        c.output_dir = *g.out;
    }
    return c;
}

namespace detail {

inline void print_metrics(std::ostream& out, const std::vector<SensingRow>& rows)
{
    for (const auto& r : rows) {
        out << (r.fused ? "fused" : "uav " + std::to_string(r.uav)) << "  sinr " << csv::format(r.sinr_db)
            << " dB  " << r.detector << "  P " << csv::format(r.metrics.micro_precision) << "  R "
            << csv::format(r.metrics.micro_recall) << "  F1 " << csv::format(r.metrics.micro_f1) << '\n';
    }
}

inline std::string run_name(const std::filesystem::path& dir)
{
    auto p = dir;
    if (p.filename().empty()) {
        p = p.parent_path();
    }
    return p.filename().string();
}

inline std::map<std::string, std::string> read_summary(const std::filesystem::path& path)
{
    std::map<std::string, std::string> out;
    const auto t = csv::read(path);
    const auto key = t.column("metric");
    const auto value = t.column("value");
    for (const auto& row : t.rows) {
        out[row[key]] = row[value];
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Subcommands. Each returns an exit code and writes only under the output dir.

inline int gen_dataset(const SimConfig& c, std::optional<std::size_t> count, std::ostream& out)
{
    const auto per = count.value_or(c.dataset.count_per_sinr);
    const auto ds = make_dataset(c, per);
    const std::filesystem::path dir = c.output_dir;
    std::filesystem::create_directories(dir);
    save_dataset(dir / "dataset.skiq", ds, c.synth());

    csv::Writer w({"sinr_db", "observations", "busy_fraction", "train", "validation", "test"});
    std::map<double, std::array<std::uint64_t, 5>> by; // count, busy bits, train, val, test
    for (const auto& o : ds.observations) {
        auto& e = by[o.sinr_db];
        e[0] += 1;
        e[1] += o.label.popcount();
    }
    auto tally = [&](const std::vector<std::size_t>& idx, std::size_t slot) {
        for (auto i : idx) {
            by[ds.observations[i].sinr_db][slot] += 1;
        }
    };
    tally(ds.split.train, 2);
    tally(ds.split.validation, 3);
    tally(ds.split.test, 4);
    for (const auto& [sinr, e] : by) {
        w.row(sinr, e[0], static_cast<double>(e[1]) / static_cast<double>(e[0] * c.num_channels()), e[2], e[3], e[4]);
    }
    w.save(dir / "dataset_summary.csv");
    out << "wrote " << ds.observations.size() << " observations to " << (dir / "dataset.skiq").string() << '\n';
    return Ok;
}

inline int train_sensor(const SimConfig& c, const std::optional<std::string>& dataset_path,
                        const std::string& detector, std::ostream& out)
{
    SynthConfig layout = c.synth();
    Dataset ds;
    if (dataset_path) {
        auto loaded = load_dataset(*dataset_path);
        layout = loaded.config;
        ds = std::move(loaded.dataset);
    } else {
        ds = make_dataset(c, c.sensing.training_count_per_sinr);
    }
    const std::filesystem::path dir = c.output_dir;
    SensingModel model;
    std::vector<std::string> warnings;
    if (detector == "energy") {
        model = train_energy_detector(ds, layout, &warnings);
    } else {
        model = train_classifier(ds, layout, c.sensing.classifier);
        csv::Writer curve({"epoch", "loss"});
        for (std::size_t e = 0; e < model.training_curve.size(); ++e) {
            curve.row(static_cast<std::uint64_t>(e), model.training_curve[e]);
        }
        curve.save(dir / "sensor_training.csv");
    }
    save_sensing_model(dir / "sensor.sksm", model);

    csv::Writer test({"sinr_db", "detector", "precision", "recall", "f1"});
    for (const auto& [sinr, m] : evaluate_by_sinr(model, ds, ds.split.test)) {
        test.row(sinr, detector, m.micro_precision, m.micro_recall, m.micro_f1);
        out << "test  sinr " << csv::format(sinr) << " dB  P " << csv::format(m.micro_precision) << "  R "
            << csv::format(m.micro_recall) << "  F1 " << csv::format(m.micro_f1) << '\n';
    }
    test.save(dir / "sensor_test_metrics.csv");
    for (const auto& w : warnings) {
        out << "warning: " << w << '\n';
    }
    return Ok;
}

inline int eval_sensing(SimConfig c, const std::optional<std::string>& model_path, std::size_t count,
                        const std::vector<double>& levels, std::ostream& out)
{
    if (model_path) {
        c.sensing.model_path = *model_path;
    }
    const auto suite = build_sensing(c);
    const auto rows = evaluate_sensing_grid(c, suite, count, derive_seed(c.seed, 0xe7a1ULL), levels);
    sensing_rows_csv(rows).save(std::filesystem::path(c.output_dir) / "sensing_metrics.csv");
    detail::print_metrics(out, rows);
    return Ok;
}

inline int train_agent_cmd(const SimConfig& c, const std::string& variant, std::size_t uavs, bool wall_time,
                           std::ostream& out)
{
    if (uavs < 1 || uavs > c.num_uavs()) {
        throw std::invalid_argument("--uavs " + std::to_string(uavs) + " exceeds the configured " +
                                    std::to_string(c.num_uavs()) + " UAVs");
    }
    auto cfg = c;
    cfg.agent.checkpoint.reset();
    auto trained = train_allocator(cfg, variant, uavs, wall_time);
    const std::filesystem::path dir = c.output_dir;
    std::filesystem::create_directories(dir);
    if (trained.log) {
        training_csv(*trained.log).save(dir / "training_log.csv");
    }
    if (auto* agent = std::get_if<DqnAgent>(&trained.allocator.impl())) {
        std::ofstream f(dir / "agent.skag", std::ios::binary);
        write_agent(f, *agent);
    }
    if (auto* tab = std::get_if<TabularAgent>(&trained.allocator.impl())) {
        const auto& t = tab->table();
        std::vector<std::string> header{"state"};
        for (std::size_t a = 0; a < t.actions(); ++a) {
            header.push_back(a == 0 ? "idle" : "ch" + std::to_string(a));
        }
        csv::Writer w(header);
        for (std::size_t s = 0; s < t.states(); ++s) {
            std::vector<std::string> row{std::to_string(s)};
            for (std::size_t a = 0; a < t.actions(); ++a) {
                row.push_back(csv::format(t.at(s, a)));
            }
            w.row_strings(row);
        }
        w.save(dir / "qtable.csv");
    }

    csv::Writer summary({"metric", "value"});
    summary.row("variant", variant);
    summary.row("uavs", static_cast<std::uint64_t>(uavs));
    if (trained.log) {
        const double tail = trained.log->tail_mean_utility(100, c.agent.train_slots);
        summary.row("final100_mean_slot_utility", tail);
        summary.row("violations", static_cast<std::uint64_t>(trained.log->violations));
        out << variant << " uavs " << uavs << ": final-100-episode mean slot utility " << csv::format(tail) << '\n';
    }
    if (c.num_channels() <= kMaxEnumeratedSubchannels) {
        auto env = make_training_env(c);
        const auto rewards = reward_model_for(env);
        const auto vi = value_iteration(c.matrices, rewards, c.agent.dqn.gamma);
        const double g = policy_slot_utility(c.matrices, rewards, vi.policy);
        summary.row("oracle_single_uav_slot_utility", g);
        out << "value-iteration single-UAV slot utility " << csv::format(g) << '\n';
    }
    summary.save(dir / "agent_summary.csv");
    return Ok;
}

inline int simulate_cmd(const SimConfig& c, std::ostream& out)
{
    const auto report = run_simulation(c);
    write_report(report, c, c.output_dir);
    const auto& a = report.aggregates;
    out << "slots " << a.slots << "  mean utility " << csv::format(a.mean_utility) << "  mean EE "
        << csv::format(a.mean_ee) << "  collision rate " << csv::format(a.collision_rate) << "  fused F1 "
        << csv::format(a.fused.micro_f1) << '\n';
    return Ok;
}

/// Merges run directories: training curves side by side, final-window and
/// simulation summaries in one table, sensing rows tagged by run.
inline int report_cmd(const std::vector<std::string>& runs, const std::filesystem::path& dir, std::size_t window,
                      std::ostream& out)
{
    if (runs.empty()) {
        throw std::invalid_argument("report: no run directories given");
    }
    csv::Writer comparison({"run", "episodes", "final_window_mean_episode_utility", "final_epsilon", "total_collisions",
                            "sim_mean_utility", "sim_collision_rate", "sim_mean_ee"});
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> curves;
    csv::Writer sensing({"run", "uav", "sinr_db", "detector", "fused", "precision", "recall", "f1"});
    bool any_sensing = false;
    for (const auto& r : runs) {
        const std::filesystem::path run(r);
        if (!std::filesystem::is_directory(run)) {
            throw std::invalid_argument("report: not a directory: " + r);
        }
        const auto name = detail::run_name(run);
        std::string episodes = "", tail = "nan", eps = "nan", collisions = "";
        if (std::filesystem::exists(run / "training_log.csv")) {
            const auto t = csv::read(run / "training_log.csv");
            const auto cu = t.column("cumulative_utility");
            const auto ce = t.column("epsilon");
            const auto cc = t.column("collisions");
            std::vector<std::string> curve;
            double sum = 0.0;
            std::uint64_t coll = 0;
            const auto n = std::min(window, t.rows.size());
            for (std::size_t i = 0; i < t.rows.size(); ++i) {
                curve.push_back(t.rows[i][cu]);
                coll += static_cast<std::uint64_t>(csv::parse_double(t.rows[i][cc]));
                if (i + n >= t.rows.size()) {
                    sum += csv::parse_double(t.rows[i][cu]);
                }
            }
            episodes = std::to_string(t.rows.size());
            tail = n ? csv::format(sum / static_cast<double>(n)) : "nan";
            eps = t.rows.empty() ? "nan" : t.rows.back()[ce];
            collisions = std::to_string(coll);
            names.push_back(name);
            curves.push_back(std::move(curve));
        }
        std::string sim_u = "nan", sim_c = "nan", sim_ee = "nan";
        if (std::filesystem::exists(run / "summary.csv")) {
            auto s = detail::read_summary(run / "summary.csv");
            sim_u = s.count("mean_utility") ? s["mean_utility"] : "nan";
            sim_c = s.count("collision_rate") ? s["collision_rate"] : "nan";
            sim_ee = s.count("mean_ee") ? s["mean_ee"] : "nan";
        }
        if (std::filesystem::exists(run / "sensing_metrics.csv")) {
            const auto t = csv::read(run / "sensing_metrics.csv");
            for (const auto& row : t.rows) {
                std::vector<std::string> cells{name};
                cells.insert(cells.end(), row.begin(), row.end());
                sensing.row_strings(cells);
                any_sensing = true;
            }
        }
        comparison.row_strings({name, episodes, tail, eps, collisions, sim_u, sim_c, sim_ee});
    }
    comparison.save(dir / "comparison.csv");
    if (!curves.empty()) {
        std::vector<std::string> header{"episode"};
        header.insert(header.end(), names.begin(), names.end());
        csv::Writer w(header);
        std::size_t longest = 0;
        for (const auto& c : curves) {
            longest = std::max(longest, c.size());
        }
        for (std::size_t e = 0; e < longest; ++e) {
            std::vector<std::string> row{std::to_string(e)};
            for (const auto& c : curves) {
                row.push_back(e < c.size() ? c[e] : "");
            }
            w.row_strings(row);
        }
        w.save(dir / "curves.csv");
    }
    if (any_sensing) {
        sensing.save(dir / "sensing_comparison.csv");
    }
    out << comparison.str();
    return Ok;
}

// ---------------------------------------------------------------------------

/// Parses argv and runs one subcommand. 0 success, 1 usage or config error,
/// 2 runtime failure.
inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr)
{
    CLI::App app{"UAV collaborative spectrum sensing and access simulator", "skyspec"};
    app.require_subcommand(1, 1);
    GlobalOptions g;
    app.add_option("--config", g.config, "JSON config file");
    app.add_option("--seed", g.seed, "Run seed (overrides the config)");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--preset", g.preset, "Preset used when no --config is given")
        ->check(CLI::IsMember(preset_names()));

    auto* gen = app.add_subcommand("gen-dataset", "Synthesize a labelled I/Q dataset");
    std::optional<std::size_t> gen_count;
    gen->add_option("--count", gen_count, "Observations per SINR grid point")->check(CLI::PositiveNumber);

    auto* ts = app.add_subcommand("train-sensor", "Train a wideband occupancy detector");
    std::optional<std::string> ts_dataset;
    std::string ts_detector = "classifier";
    ts->add_option("--dataset", ts_dataset, "Dataset file from gen-dataset");
    ts->add_option("--detector", ts_detector, "classifier or energy")
        ->check(CLI::IsMember({"classifier", "energy"}));

    auto* es = app.add_subcommand("eval-sensing", "Per-UAV and fused sensing metrics across the SINR grid");
    std::optional<std::string> es_model;
    std::size_t es_count = 500;
    std::vector<double> es_levels;
    es->add_option("--model", es_model, "Sensing checkpoint from train-sensor");
    es->add_option("--count", es_count, "Labels per grid point")->check(CLI::PositiveNumber);
    es->add_option("--sinr", es_levels, "Grid points to evaluate (default: the configured grid)");

    auto* ta = app.add_subcommand("train-agent", "Train a channel allocator on the allocation MDP");
    std::optional<std::string> ta_variant;
    std::size_t ta_uavs = 1;
    std::optional<std::size_t> ta_episodes;
    bool ta_wall = false;
    ta->add_option("--variant", ta_variant, "qtable, dqn, ddqn or ddqn-soft (default: the config's)")
        ->check(CLI::IsMember({"qtable", "dqn", "ddqn", "ddqn-soft"}));
    ta->add_option("--uavs", ta_uavs, "UAVs served per slot")->check(CLI::Range(1, 2));
    ta->add_option("--episodes", ta_episodes, "Training episodes (overrides the config)");
    ta->add_flag("--wall-time", ta_wall, "Record wall_ms (makes the log run-dependent)");

    auto* sim = app.add_subcommand("simulate", "Run the end-to-end sense, fuse, allocate, access loop");
    std::optional<std::size_t> sim_episodes;
    std::optional<std::size_t> sim_slots;
    sim->add_option("--episodes", sim_episodes, "Episodes (overrides the config)");
    sim->add_option("--slots", sim_slots, "Slots per episode (overrides the config)")->check(CLI::PositiveNumber);

    auto* rep = app.add_subcommand("report", "Merge run directories into comparison tables");
    std::vector<std::string> rep_runs;
    std::size_t rep_window = 100;
    rep->add_option("runs", rep_runs, "Run directories")->required();
    rep->add_option("--window", rep_window, "Final-episode window for the comparison")->check(CLI::PositiveNumber);

    for (auto* sub : {gen, ts, es, ta, sim, rep}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return Ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return Usage;
    }

    try {
        if (rep->parsed()) {
            return report_cmd(rep_runs, g.out.value_or("report"), rep_window, out);
        }
        auto c = resolve_config(g);
        if (gen->parsed()) {
            return gen_dataset(c, gen_count, out);
        }
        if (ts->parsed()) {
            return train_sensor(c, ts_dataset, ts_detector, out);
        }
        if (es->parsed()) {
            return eval_sensing(c, es_model, es_count, es_levels, out);
        }
        if (ta->parsed()) {
            if (ta_episodes) {
                c.agent.train_episodes = *ta_episodes;
            }
            return train_agent_cmd(c, ta_variant.value_or(c.agent.variant), ta_uavs, ta_wall, out);
        }
        if (sim->parsed()) {
            if (sim_episodes) {
                c.episodes = *sim_episodes;
            }
            if (sim_slots) {
                c.slots_per_episode = *sim_slots;
            }
            return simulate_cmd(c, out);
        }
    } catch (const ConfigError& e) {
        err << "config error:\n";
        for (const auto& line : e.errors()) {
            err << "  " << line << '\n';
        }
        return Usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return Runtime;
    }
    err << app.help();
    return Usage;
}

} // namespace skyspec::cli
