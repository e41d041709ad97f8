#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "skyspec/allocation.hpp"
#include "skyspec/channel_env.hpp"
#include "skyspec/config.hpp"
#include "skyspec/csv.hpp"
#include "skyspec/dataset_io.hpp"
#include "skyspec/fusion.hpp"
#include "skyspec/iq_synth.hpp"
#include "skyspec/scheduler.hpp"
#include "skyspec/sensing.hpp"
#include "skyspec/spectrum_core.hpp"

namespace skyspec {

// ---------------------------------------------------------------------------
// Datasets and sensing models from a config.

inline Dataset make_dataset(const SimConfig& c, std::size_t count_per_sinr)
{
    const auto synth = c.synth();
    const auto label_seed = derive_seed(c.seed, 0x1abe1ULL);
    const OccupancySource source = c.dataset.source == "uniform" ? uniform_source(c.num_channels(), label_seed)
                                                                 : markov_source(c.matrices, label_seed);
    return generate_dataset(synth, source, count_per_sinr);
}

struct SensingSuite {
    std::optional<SensingModel> classifier;
    std::optional<SensingModel> energy;
    std::vector<std::string> warnings;

    const SensingModel* model_for(SensorKind kind) const
    {
        if (kind == SensorKind::Classifier) {
            return classifier ? &*classifier : nullptr;
        }
        if (kind == SensorKind::Energy) {
            return energy ? &*energy : nullptr;
        }
        return nullptr;
    }
};

inline SensingModel load_sensing_model(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open sensing model " + path.string());
    }
    return read_sensing_model(in);
}

inline void save_sensing_model(const std::filesystem::path& path, const SensingModel& model)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    write_sensing_model(out, model);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

/// Detectors the configured UAVs need: a pretrained checkpoint when given,
/// otherwise trained on a freshly generated dataset.
inline SensingSuite build_sensing(const SimConfig& c)
{
    SensingSuite suite;
    bool need_classifier = false;
    bool need_energy = false;
    for (auto k : c.sensing.per_uav) {
        need_classifier = need_classifier || k == SensorKind::Classifier;
        need_energy = need_energy || k == SensorKind::Energy;
    }
    if (c.sensing.model_path) {
        auto model = load_sensing_model(*c.sensing.model_path);
        if (model.layout.num_subchannels != c.num_channels() ||
            model.layout.samples_per_observation != c.sensing.fft_size ||
            model.layout.subcarriers_per_subchannel != c.sensing.subcarriers_per_subchannel) {
            throw DimensionError("sensing model " + *c.sensing.model_path + " does not match the configured layout");
        }
        if (model.kind == SensingModel::Kind::DenseClassifier) {
            suite.classifier = std::move(model);
            need_classifier = false;
        } else {
            suite.energy = std::move(model);
            need_energy = false;
        }
    }
    if (need_classifier || need_energy) {
        const auto ds = make_dataset(c, c.sensing.training_count_per_sinr);
        if (need_classifier) {
            suite.classifier = train_classifier(ds, c.synth(), c.sensing.classifier);
        }
        if (need_energy) {
            suite.energy = train_energy_detector(ds, c.synth(), &suite.warnings);
        }
    }
    return suite;
}

// ---------------------------------------------------------------------------
// Allocators.

class Allocator {
public:
    using Impl = std::variant<DqnAgent, TabularAgent, RandomAllocator>;

    Allocator(std::string name, Impl impl) : name_(std::move(name)), impl_(std::move(impl)) {}

    const std::string& name() const { return name_; }
    Impl& impl() { return impl_; }
    const Impl& impl() const { return impl_; }

    /// Greedy (exploration off) actions for k requesting UAVs.
    std::vector<Action> select(const AgentState& s, std::size_t k)
    {
        return std::visit([&](auto& a) { return a.select_actions(s, k, false); }, impl_);
    }

private:
    std::string name_;
    Impl impl_;
};

inline MarkovAllocationEnv make_training_env(const SimConfig& c)
{
    return MarkovAllocationEnv(c.matrices, c.link, c.timing, c.radio);
}

inline DqnVariant parse_variant(const std::string& v)
{
    if (v == "dqn") {
        return DqnVariant::Dqn;
    }
    if (v == "ddqn") {
        return DqnVariant::Ddqn;
    }
    if (v == "ddqn-soft") {
        return DqnVariant::DdqnSoft;
    }
    throw std::invalid_argument("unknown DQN variant '" + v + "'");
}

struct TrainedAllocator {
    Allocator allocator;
    std::optional<TrainingLog> log;
};

/// Trains (or loads) the configured allocator on the allocation MDP.
inline TrainedAllocator train_allocator(const SimConfig& c, const std::string& variant, std::size_t num_uavs,
                                        bool record_wall_time = false)
{
    TrainConfig tc;
    tc.episodes = c.agent.train_episodes;
    tc.slots_per_episode = c.agent.train_slots;
    tc.num_uavs = num_uavs;
    tc.seed = derive_seed(c.seed, 0x7a1aULL);
    tc.record_wall_time = record_wall_time;
    auto env = make_training_env(c);
    if (variant == "random") {
        return {Allocator("random", RandomAllocator(c.num_channels(), derive_seed(c.seed, 0x7a4dULL))), std::nullopt};
    }
    if (variant == "qtable") {
        TabularAgent agent(c.num_channels(), c.agent.dqn.gamma, c.agent.schedule, c.agent.alpha, c.agent.dqn);
        auto log = train_agent(agent, env, tc);
        return {Allocator("qtable", std::move(agent)), std::move(log)};
    }
    DqnConfig dc = c.agent.dqn;
    dc.variant = parse_variant(variant);
    dc.num_subchannels = c.num_channels();
    if (c.agent.checkpoint) {
        std::ifstream in(*c.agent.checkpoint, std::ios::binary);
        if (!in) {
            throw FormatError("cannot open agent checkpoint " + *c.agent.checkpoint);
        }
        auto agent = read_agent(in);
        if (agent.num_subchannels() != c.num_channels()) {
            throw DimensionError("agent checkpoint M differs from the configured M");
        }
        return {Allocator(variant_name(agent.config().variant), std::move(agent)), std::nullopt};
    }
    DqnAgent agent(dc);
    auto log = train_agent(agent, env, tc);
    return {Allocator(variant, std::move(agent)), std::move(log)};
}

// ---------------------------------------------------------------------------
// Slot loop.

/// What the sensing phase saw in one slot; kept beside the ledger so the
/// report's sensing metrics and constraint audit can be recomputed.
struct SlotSensing {
    std::size_t episode = 0;
    std::vector<OccupancyVector> reports; // per UAV
    OccupancyVector fused;                // f(t)
    OccupancyVector truth;                // f-bar(t)
    std::vector<bool> requested;
};

struct SimState {
    OccupancyVector truth;
    Rng channel_rng;
    Rng sensing_rng;
    Rng request_rng;
    Assignment pending;                         // allocated last slot, transmits now
    std::optional<OccupancyVector> pending_basis; // the f(t-1) it was allocated on
    std::uint64_t slot = 0;
    std::size_t episode = 0;
};

inline SimState initial_sim_state(const SimConfig& c, std::size_t episode, std::uint64_t first_slot = 0)
{
    const auto base = derive_seed(derive_seed(c.seed, 0x51a7ULL), episode);
    SimState s;
    s.channel_rng = Rng(derive_seed(base, 1));
    s.sensing_rng = Rng(derive_seed(base, 2));
    s.request_rng = Rng(derive_seed(base, 3));
    s.truth = draw_stationary(c.matrices, s.channel_rng);
    s.slot = first_slot;
    s.episode = episode;
    return s;
}

struct SimContext {
    const SimConfig& config;
    const SensingSuite& sensing;
    Allocator& allocator;
};

/// One slot: requests, per-UAV sensing, fusion, transmission of last slot's
/// allocation against the current truth, allocation for the next slot, then
/// the channels evolve. An invalid allocation is a bug and throws logic_error.
inline SlotLedger run_slot(SimState& s, SimContext& ctx, SlotSensing* record = nullptr)
{
    const auto& c = ctx.config;
    const auto k_count = c.num_uavs();
    const auto layout = c.synth();

    // (1) requests
    std::vector<bool> requested(k_count);
    std::vector<std::size_t> requesters;
    for (std::size_t k = 0; k < k_count; ++k) {
        requested[k] = s.request_rng.bernoulli(c.request_probability[k]);
        if (requested[k]) {
            requesters.push_back(k);
        }
    }

    // (2) sensing and (3) fusion
    std::vector<OccupancyVector> reports;
    reports.reserve(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        const auto kind = c.sensing.per_uav[k];
        if (kind == SensorKind::Perfect) {
            reports.push_back(s.truth);
            continue;
        }
        const auto* model = ctx.sensing.model_for(kind);
        if (!model) {
            throw std::logic_error("run_slot: no trained model for detector '" + std::string(sensor_name(kind)) + "'");
        }
        const auto obs = synthesize_observation(s.truth, c.link.sensing_sinr_db[k], layout, s.sensing_rng, k);
        reports.push_back(predict_occupancy(*model, obs));
    }
    const auto fused = fuse(reports, c.fusion);

    // (5) access on last slot's allocation
    SlotLedger ledger;
    ledger.slot = s.slot;
    ledger.assignment = s.pending;
    for (const auto& pair : s.pending.pairs) {
        PairOutcome o;
        o.uav = pair.uav;
        o.channel = pair.channel;
        o.collision = collision_indicator(s.truth[pair.channel], (*s.pending_basis)[pair.channel]);
        o.throughput = throughput(c.timing, c.radio, db_to_linear(sinr_for(c.link, pair.uav, pair.channel)));
        o.access_cost = access_cost(c.timing, c.radio);
        ledger.outcomes.push_back(o);
    }
    // sensing happens every slot for every UAV, requester or not
    ledger.sensing_costs.assign(k_count, sensing_cost(c.timing, c.radio));
    ledger.utility = slot_utility(ledger.outcomes);
    try {
        ledger.ee = energy_efficiency(ledger.outcomes, ledger.sensing_costs);
    } catch (const UndefinedEnergyEfficiency&) {
        ledger.ee = std::numeric_limits<double>::quiet_NaN();
    }
    ledger.holes_detected = fused.holes();
    ledger.holes_true = s.truth.holes();

    // (4) allocation for the next slot
    Assignment next;
    if (!requesters.empty()) {
        const auto actions = ctx.allocator.select(AgentState::of(fused), requesters.size());
        for (std::size_t i = 0; i < actions.size() && i < requesters.size(); ++i) {
            if (auto ch = actions[i].channel()) {
                next.pairs.push_back({requesters[i], *ch});
            }
        }
    }
    const auto violations = validate_assignment(next, fused);
    if (!violations.empty()) {
        throw std::logic_error("allocator '" + ctx.allocator.name() + "' broke the constraints at slot " +
                               std::to_string(s.slot) + ": " + violations.front().describe());
    }

    if (record) {
        // copy-assign so a pre-sized record is reused without allocating
        record->episode = s.episode;
        record->reports = reports;
        record->fused = fused;
        record->truth = s.truth;
        record->requested = requested;
    }

    // (6) environment step
    s.pending = std::move(next);
    s.pending_basis = fused;
    EnvState es{std::move(s.truth), s.slot, s.channel_rng};
    es = step(std::move(es), c.matrices);
    s.truth = std::move(es.true_occupancy);
    s.channel_rng = es.rng;
    ++s.slot;
    return ledger;
}

// ---------------------------------------------------------------------------
// Reports.

struct RunAggregates {
    std::uint64_t slots = 0;
    std::uint64_t transmissions = 0;
    std::uint64_t collisions = 0;
    double total_utility = 0.0;
    double mean_utility = 0.0;
    double collision_rate = 0.0; // collisions per transmission, 0 without transmissions
    double mean_ee = std::numeric_limits<double>::quiet_NaN(); // over slots with defined EE
    std::uint64_t ee_slots = 0;
    std::vector<SensingMetrics> per_uav;
    SensingMetrics fused;
};

struct RunReport {
    std::string allocator;
    std::vector<SlotLedger> ledgers;
    std::vector<SlotSensing> sensing;
    RunAggregates aggregates;
    std::vector<std::string> warnings;
    std::optional<TrainingLog> training;
};

inline RunAggregates compute_aggregates(const std::vector<SlotLedger>& ledgers, const std::vector<SlotSensing>& sensing,
                                        std::size_t num_uavs)
{
    RunAggregates a;
    a.per_uav.resize(num_uavs);
    double ee_sum = 0.0;
    for (const auto& l : ledgers) {
        ++a.slots;
        a.total_utility += l.utility;
        for (const auto& o : l.outcomes) {
            ++a.transmissions;
            a.collisions += o.collision < 0 ? 1 : 0;
        }
        if (!std::isnan(l.ee)) {
            ee_sum += l.ee;
            ++a.ee_slots;
        }
    }
    a.mean_utility = a.slots ? a.total_utility / static_cast<double>(a.slots) : 0.0;
    a.collision_rate = a.transmissions ? static_cast<double>(a.collisions) / static_cast<double>(a.transmissions) : 0.0;
    if (a.ee_slots) {
        a.mean_ee = ee_sum / static_cast<double>(a.ee_slots);
    }
    for (const auto& s : sensing) {
        for (std::size_t k = 0; k < s.reports.size() && k < num_uavs; ++k) {
            a.per_uav[k].add(s.reports[k], s.truth);
        }
        a.fused.add(s.fused, s.truth);
    }
    for (auto& m : a.per_uav) {
        m.finalize();
    }
    a.fused.finalize();
    return a;
}

namespace detail {

inline bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

inline bool same(const SensingMetrics& a, const SensingMetrics& b)
{
    return a.tp == b.tp && a.fp == b.fp && a.fn == b.fn && a.tn == b.tn;
}

} // namespace detail

/// Recomputes every aggregate and per-slot derived field from the ledgers and
/// checks each assignment against the fused vector it was allocated on.
/// Returns the discrepancies; empty means the report is consistent.
inline std::vector<std::string> audit_report(const RunReport& r, std::size_t num_uavs)
{
    std::vector<std::string> problems;
    if (!r.sensing.empty() && r.sensing.size() != r.ledgers.size()) {
        problems.push_back("sensing record count differs from ledger count");
        return problems;
    }
    for (std::size_t i = 0; i < r.ledgers.size(); ++i) {
        const auto& l = r.ledgers[i];
        const auto tag = "slot " + std::to_string(l.slot) + ": ";
        if (l.outcomes.size() != l.assignment.pairs.size()) {
            problems.push_back(tag + "outcome count differs from assignment size");
            continue;
        }
        if (!detail::same(slot_utility(l.outcomes), l.utility)) {
            problems.push_back(tag + "utility differs from recomputation");
        }
        double ee = std::numeric_limits<double>::quiet_NaN();
        try {
            ee = energy_efficiency(l.outcomes, l.sensing_costs);
        } catch (const UndefinedEnergyEfficiency&) {
        }
        if (!detail::same(ee, l.ee)) {
            problems.push_back(tag + "EE differs from recomputation");
        }
        if (!r.sensing.empty()) {
            const auto& s = r.sensing[i];
            if (l.holes_detected != s.fused.holes() || l.holes_true != s.truth.holes()) {
                problems.push_back(tag + "hole counts differ from the sensing record");
            }
            const bool first_of_episode = i == 0 || r.sensing[i - 1].episode != s.episode;
            if (first_of_episode) {
                if (!l.assignment.empty()) {
                    problems.push_back(tag + "transmission in the first slot of an episode");
                }
            } else {
                for (const auto& v : validate_assignment(l.assignment, r.sensing[i - 1].fused)) {
                    problems.push_back(tag + v.describe());
                }
                for (const auto& o : l.outcomes) {
                    if (o.collision != collision_indicator(s.truth[o.channel], r.sensing[i - 1].fused[o.channel])) {
                        problems.push_back(tag + "collision indicator differs from recomputation");
                    }
                }
            }
        }
    }
    const auto again = compute_aggregates(r.ledgers, r.sensing, num_uavs);
    const auto& a = r.aggregates;
    if (again.slots != a.slots || again.transmissions != a.transmissions || again.collisions != a.collisions ||
        again.ee_slots != a.ee_slots || !detail::same(again.total_utility, a.total_utility) ||
        !detail::same(again.mean_utility, a.mean_utility) || !detail::same(again.collision_rate, a.collision_rate) ||
        !detail::same(again.mean_ee, a.mean_ee) || !detail::same(again.fused, a.fused) ||
        again.per_uav.size() != a.per_uav.size()) {
        problems.push_back("aggregates differ from recomputation");
    } else {
        for (std::size_t k = 0; k < a.per_uav.size(); ++k) {
            if (!detail::same(again.per_uav[k], a.per_uav[k])) {
                problems.push_back("sensing metrics of uav " + std::to_string(k + 1) + " differ from recomputation");
            }
        }
    }
    return problems;
}

struct SimulationHooks {
    std::function<void(const SlotLedger&)> on_slot;
    bool keep_sensing = true; // needed for the audit and sensing metrics
};

/// Runs every configured episode with an already trained allocator.
inline RunReport simulate(const SimConfig& c, const SensingSuite& sensing, Allocator& allocator,
                          const SimulationHooks& hooks = {})
{
    RunReport report;
    report.allocator = allocator.name();
    report.warnings = sensing.warnings;
    SimContext ctx{c, sensing, allocator};
    std::uint64_t slot = 0;
    const auto total = c.episodes * c.slots_per_episode;
    report.ledgers.reserve(total);
    if (hooks.keep_sensing) {
        // Sized up front: small records allocated between each slot's large
        // temporaries fragment the heap badly over long runs.
        SlotSensing blank;
        blank.reports.assign(c.num_uavs(), OccupancyVector(c.num_channels()));
        blank.fused = OccupancyVector(c.num_channels());
        blank.truth = blank.fused;
        blank.requested.assign(c.num_uavs(), false);
        report.sensing.assign(total, blank);
    }
    for (std::size_t e = 0; e < c.episodes; ++e) {
        auto state = initial_sim_state(c, e, slot);
        for (std::size_t t = 0; t < c.slots_per_episode; ++t) {
            const auto i = report.ledgers.size();
            report.ledgers.push_back(run_slot(state, ctx, hooks.keep_sensing ? &report.sensing[i] : nullptr));
            if (hooks.on_slot) {
                hooks.on_slot(report.ledgers.back());
            }
        }
        slot = state.slot;
    }
    report.aggregates = compute_aggregates(report.ledgers, report.sensing, c.num_uavs());
    return report;
}

/// Config in, report out: sensing models and allocator are built first.
inline RunReport run_simulation(const SimConfig& c, const SimulationHooks& hooks = {})
{
    auto sensing = build_sensing(c);
    auto trained = train_allocator(c, c.agent.variant, c.num_uavs());
    auto report = simulate(c, sensing, trained.allocator, hooks);
    report.training = std::move(trained.log);
    return report;
}

// ---------------------------------------------------------------------------
// CSV output.

inline csv::Writer ledger_csv(const RunReport& r)
{
    csv::Writer w({"slot", "utility", "ee", "collisions", "holes_detected", "holes_true"});
    for (const auto& l : r.ledgers) {
        std::uint64_t collisions = 0;
        for (const auto& o : l.outcomes) {
            collisions += o.collision < 0 ? 1 : 0;
        }
        w.row(static_cast<std::uint64_t>(l.slot), l.utility, l.ee, collisions,
              static_cast<std::uint64_t>(l.holes_detected), static_cast<std::uint64_t>(l.holes_true));
    }
    return w;
}

/// UAVs and channels are 1-based in every CSV.
inline csv::Writer assignments_csv(const RunReport& r)
{
    csv::Writer w({"slot", "uav", "channel", "collision", "throughput", "access_cost"});
    for (const auto& l : r.ledgers) {
        for (const auto& o : l.outcomes) {
            w.row(static_cast<std::uint64_t>(l.slot), static_cast<std::uint64_t>(o.uav + 1),
                  static_cast<std::uint64_t>(o.channel + 1), o.collision, o.throughput, o.access_cost);
        }
    }
    return w;
}

inline const std::vector<std::string>& sensing_csv_header()
{
    static const std::vector<std::string> h{"uav", "sinr_db", "detector", "fused", "precision", "recall", "f1"};
    return h;
}

/// Fused rows carry uav 0 and fused 1.
inline csv::Writer sensing_csv(const RunReport& r, const SimConfig& c)
{
    csv::Writer w(sensing_csv_header());
    for (std::size_t k = 0; k < r.aggregates.per_uav.size(); ++k) {
        const auto& m = r.aggregates.per_uav[k];
        w.row(static_cast<std::uint64_t>(k + 1), c.link.sensing_sinr_db[k], sensor_name(c.sensing.per_uav[k]), 0,
              m.micro_precision, m.micro_recall, m.micro_f1);
    }
    const auto& f = r.aggregates.fused;
    w.row(static_cast<std::uint64_t>(0), std::numeric_limits<double>::quiet_NaN(),
          "fusion-n" + std::to_string(c.fusion.n), 1, f.micro_precision, f.micro_recall, f.micro_f1);
    return w;
}

inline csv::Writer summary_csv(const RunReport& r)
{
    const auto& a = r.aggregates;
    csv::Writer w({"metric", "value"});
    w.row("allocator", r.allocator);
    w.row("slots", a.slots);
    w.row("transmissions", a.transmissions);
    w.row("collisions", a.collisions);
    w.row("collision_rate", a.collision_rate);
    w.row("total_utility", a.total_utility);
    w.row("mean_utility", a.mean_utility);
    w.row("mean_ee", a.mean_ee);
    w.row("fused_f1", a.fused.micro_f1);
    return w;
}

inline csv::Writer training_csv(const TrainingLog& log)
{
    csv::Writer w({"episode", "cumulative_utility", "collisions", "epsilon", "mean_q", "wall_ms"});
    for (const auto& e : log.episodes) {
        w.row(static_cast<std::uint64_t>(e.episode), e.cumulative_utility, static_cast<std::uint64_t>(e.collisions),
              e.epsilon, e.mean_q, e.wall_ms);
    }
    return w;
}

/// Audits, then writes ledger.csv, assignments.csv, sensing_metrics.csv,
/// summary.csv and (when the allocator was trained) training_log.csv.
inline void write_report(const RunReport& r, const SimConfig& c, const std::filesystem::path& dir)
{
    const auto problems = audit_report(r, c.num_uavs());
    if (!problems.empty()) {
        throw std::logic_error("run report failed its self-audit: " + problems.front());
    }
    std::filesystem::create_directories(dir);
    ledger_csv(r).save(dir / "ledger.csv");
    assignments_csv(r).save(dir / "assignments.csv");
    sensing_csv(r, c).save(dir / "sensing_metrics.csv");
    summary_csv(r).save(dir / "summary.csv");
    if (r.training) {
        training_csv(*r.training).save(dir / "training_log.csv");
    }
}

// ---------------------------------------------------------------------------
// Sensing evaluation over the SINR grid.

struct SensingRow {
    std::size_t uav = 0; // 0 = fused
    double sinr_db = 0.0;
    std::string detector;
    bool fused = false;
    SensingMetrics metrics;
};

/// For each grid point g, UAV k senses at g + (its SINR - the best UAV's SINR),
/// so relative shadowing is kept while the grid sweeps the absolute level.
/// count_per_point labels per grid point; every UAV sees the same label.
/// levels defaults to the configured training grid.
inline std::vector<SensingRow> evaluate_sensing_grid(const SimConfig& c, const SensingSuite& suite,
                                                     std::size_t count_per_point, std::uint64_t seed,
                                                     std::vector<double> levels = {})
{
    if (levels.empty()) {
        levels = c.sensing.training_sinr_db;
    }
    const auto k_count = c.num_uavs();
    double best = -std::numeric_limits<double>::infinity();
    for (double s : c.link.sensing_sinr_db) {
        best = std::max(best, s);
    }
    const auto layout = c.synth();
    std::vector<SensingRow> rows;
    for (std::size_t g = 0; g < levels.size(); ++g) {
        const double level = levels[g];
        auto labels = markov_source(c.matrices, derive_seed(seed, 2 * g));
        Rng rng(derive_seed(seed, 2 * g + 1));
        std::vector<SensingMetrics> per(k_count);
        SensingMetrics fused_m;
        for (std::size_t i = 0; i < count_per_point; ++i) {
            const auto truth = labels();
            std::vector<OccupancyVector> reports;
            for (std::size_t k = 0; k < k_count; ++k) {
                const auto kind = c.sensing.per_uav[k];
                if (kind == SensorKind::Perfect) {
                    reports.push_back(truth);
                } else {
                    const double sinr = level + (c.link.sensing_sinr_db[k] - best);
                    const auto obs = synthesize_observation(truth, sinr, layout, rng, k);
                    reports.push_back(predict_occupancy(*suite.model_for(kind), obs));
                }
                per[k].add(reports.back(), truth);
            }
            fused_m.add(fuse(reports, c.fusion), truth);
        }
        for (std::size_t k = 0; k < k_count; ++k) {
            per[k].finalize();
            rows.push_back({k + 1, level + (c.link.sensing_sinr_db[k] - best), sensor_name(c.sensing.per_uav[k]), false,
                            per[k]});
        }
        fused_m.finalize();
        rows.push_back({0, level, "fusion-n" + std::to_string(c.fusion.n), true, fused_m});
    }
    return rows;
}

inline csv::Writer sensing_rows_csv(const std::vector<SensingRow>& rows)
{
    csv::Writer w(sensing_csv_header());
    for (const auto& r : rows) {
        w.row(static_cast<std::uint64_t>(r.uav), r.sinr_db, r.detector, r.fused ? 1 : 0, r.metrics.micro_precision,
              r.metrics.micro_recall, r.metrics.micro_f1);
    }
    return w;
}

} // namespace skyspec
