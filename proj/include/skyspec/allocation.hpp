#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skyspec/channel_env.hpp"
#include "skyspec/rng.hpp"
#include "skyspec/scheduler.hpp"
#include "skyspec/spectrum_core.hpp"

namespace skyspec {

/// Reward scale: utility is divided by t_a * B_m * log2(1 + SINR_max) so that
/// the best link's clean transmission is worth exactly 1.
struct RewardScale {
    SlotTiming timing;
    RadioParams radio;
    double sinr_max_db = 0.0;

    double normalizer() const
    {
        return throughput(timing, radio, db_to_linear(sinr_max_db));
    }
    double normalized_throughput(double sinr_db) const
    {
        const double z = normalizer();
        if (!(z > 0.0)) {
            throw std::invalid_argument("reward scale: SINR_max gives zero throughput");
        }
        return throughput(timing, radio, db_to_linear(sinr_db)) / z;
    }
};

struct StepResult {
    std::vector<double> rewards; // normalized r_km R_km per UAV, 0 when idle
    double reward = 0.0;         // sum over UAVs
    std::size_t collisions = 0;
    AgentState next_state;
    OccupancyVector truth;       // f-bar(t), the slot the actions transmitted in
    std::vector<AssignmentViolation> violations;
};

/// Allocation MDP over independent occupancy chains. Actions chosen on
/// f(t-1) transmit in slot t and are scored against f-bar(t); the next state
/// is the fused observation f(t) of that same slot.
///
/// Sensing is abstracted as an independent per-channel flip with probability
/// sensing_error (0 = perfect). Actions on channels the state marks busy are
/// never executed; they are reported as violations and treated as idle.
class MarkovAllocationEnv {
public:
    MarkovAllocationEnv(std::vector<TransitionMatrix> matrices, LinkModel link, SlotTiming timing, RadioParams radio,
                        double sensing_error = 0.0)
        : matrices_(std::move(matrices)), link_(std::move(link)), sensing_error_(sensing_error)
    {
        if (matrices_.empty()) {
            throw DimensionError("allocation env: no channels");
        }
        for (const auto& p : matrices_) {
            p.validate();
        }
        link_.validate(link_.num_uavs(), matrices_.size());
        if (link_.num_uavs() < 1) {
            throw DimensionError("allocation env: no UAVs");
        }
        if (!(sensing_error >= 0.0 && sensing_error <= 1.0)) {
            throw std::invalid_argument("allocation env: sensing_error must lie in [0, 1]");
        }
        scale_ = RewardScale{timing, radio, link_.max_access_sinr_db()};
        rewards_.resize(link_.num_uavs());
        for (std::size_t k = 0; k < link_.num_uavs(); ++k) {
            for (std::size_t m = 0; m < matrices_.size(); ++m) {
                rewards_[k].push_back(scale_.normalized_throughput(sinr_for(link_, k, m)));
            }
        }
        truth_ = OccupancyVector(matrices_.size());
    }

    std::size_t num_channels() const { return matrices_.size(); }
    std::size_t num_uavs() const { return link_.num_uavs(); }
    const std::vector<TransitionMatrix>& matrices() const { return matrices_; }
    const RewardScale& scale() const { return scale_; }

    /// Normalized R_km for UAV k on channel m.
    double channel_reward(std::size_t k, std::size_t m) const { return rewards_.at(k).at(m); }

    AgentState reset(std::uint64_t seed)
    {
        rng_ = Rng(seed);
        truth_ = draw_stationary(matrices_, rng_);
        state_ = AgentState::initial();
        return state_;
    }

    const AgentState& state() const { return state_; }

    /// actions[k] is UAV k's action; fewer entries than UAVs leave the rest idle.
    StepResult step(std::span<const Action> actions)
    {
        if (actions.size() > num_uavs()) {
            throw DimensionError("allocation env: more actions than UAVs");
        }
        StepResult out;
        out.rewards.assign(num_uavs(), 0.0);
        out.truth = truth_;

        Assignment requested = to_assignment(actions);
        const OccupancyVector prev =
            state_.is_initial() ? OccupancyVector(num_channels(), 1) : *state_.fused_prev;
        out.violations = validate_assignment(requested, prev);
        for (const auto& pair : requested.pairs) {
            if (pair.channel >= num_channels() || prev.busy(pair.channel)) {
                continue;
            }
            const int r = collision_indicator(truth_[pair.channel], prev[pair.channel]);
            out.rewards[pair.uav] = r * rewards_[pair.uav][pair.channel];
            out.collisions += r < 0 ? 1 : 0;
        }
        for (double r : out.rewards) {
            out.reward += r;
        }

        OccupancyVector observed = truth_;
        if (sensing_error_ > 0.0) {
            for (std::size_t m = 0; m < num_channels(); ++m) {
                if (rng_.uniform() < sensing_error_) {
                    observed.set(m, observed[m] ^ 1);
                }
            }
        }
        state_ = AgentState::of(std::move(observed));
        out.next_state = state_;

        EnvState es{truth_, 0, rng_};
        es = skyspec::step(std::move(es), matrices_);
        truth_ = std::move(es.true_occupancy);
        rng_ = es.rng;
        return out;
    }

private:
    std::vector<TransitionMatrix> matrices_;
    LinkModel link_;
    double sensing_error_;
    RewardScale scale_;
    std::vector<std::vector<double>> rewards_;
    OccupancyVector truth_;
    AgentState state_;
    Rng rng_;
};

// ---------------------------------------------------------------------------
// Training loop.

struct TrainConfig {
    std::size_t episodes = 300;
    std::size_t slots_per_episode = 100;
    std::size_t num_uavs = 1;
    std::uint64_t seed = 0;
    bool record_wall_time = false; // off keeps logs byte-reproducible
};

struct EpisodeRecord {
    std::size_t episode = 0;
    double cumulative_utility = 0.0; // normalized reward summed over the episode
    std::size_t collisions = 0;
    double epsilon = 0.0;
    double mean_q = 0.0; // mean greedy value of the visited states
    double wall_ms = 0.0;
};

struct TrainingLog {
    std::vector<EpisodeRecord> episodes;
    std::size_t violations = 0; // executed actions that broke the constraints
    std::size_t slots = 0;

    /// Mean per-slot utility over the last n episodes.
    double tail_mean_utility(std::size_t n, std::size_t slots_per_episode) const
    {
        if (episodes.empty() || slots_per_episode == 0) {
            return 0.0;
        }
        n = std::min(n, episodes.size());
        double total = 0.0;
        for (std::size_t i = episodes.size() - n; i < episodes.size(); ++i) {
            total += episodes[i].cumulative_utility;
        }
        return total / static_cast<double>(n * slots_per_episode);
    }
};

/// Drives any agent with select_actions / remember / learn / begin_episode /
/// q_values through an environment with reset / step. One experience per UAV
/// enters the shared memory each slot, then one learning step runs.
template <class Agent, class Env>
TrainingLog train_agent(Agent& agent, Env& env, const TrainConfig& config)
{
    if (config.slots_per_episode < 1) {
        throw std::invalid_argument("train_agent: slots_per_episode must be >= 1");
    }
    if (config.num_uavs < 1 || config.num_uavs > env.num_uavs()) {
        throw DimensionError("train_agent: num_uavs must lie in [1, " + std::to_string(env.num_uavs()) + "]");
    }
    if (agent.num_subchannels() != env.num_channels()) {
        throw DimensionError("train_agent: agent and environment disagree on M");
    }
    TrainingLog log;
    for (std::size_t e = 0; e < config.episodes; ++e) {
        const auto start = std::chrono::steady_clock::now();
        agent.begin_episode(e, config.episodes);
        EpisodeRecord rec;
        rec.episode = e;
        rec.epsilon = agent.epsilon();
        AgentState state = env.reset(derive_seed(config.seed, e));
        double q_sum = 0.0;
        for (std::size_t t = 0; t < config.slots_per_episode; ++t) {
            const auto q = agent.q_values(state);
            q_sum += q[greedy_action(q, valid_actions(state, env.num_channels())).value];
            const auto actions = agent.select_actions(state, config.num_uavs);
            auto result = env.step(actions);
            log.violations += result.violations.size();
            for (std::size_t k = 0; k < actions.size(); ++k) {
                agent.remember(Experience{state, actions[k], result.rewards[k], result.next_state});
            }
            agent.learn();
            rec.cumulative_utility += result.reward;
            rec.collisions += result.collisions;
            state = std::move(result.next_state);
            ++log.slots;
        }
        rec.mean_q = q_sum / static_cast<double>(config.slots_per_episode);
        if (config.record_wall_time) {
            rec.wall_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
        log.episodes.push_back(rec);
    }
    return log;
}

/// Greedy rollouts with exploration off. Returns mean per-slot utility.
template <class Agent, class Env>
double evaluate_policy(Agent& agent, Env& env, std::size_t episodes, std::size_t slots, std::size_t num_uavs,
                       std::uint64_t seed)
{
    double total = 0.0;
    for (std::size_t e = 0; e < episodes; ++e) {
        AgentState state = env.reset(derive_seed(seed, e));
        for (std::size_t t = 0; t < slots; ++t) {
            auto result = env.step(agent.select_actions(state, num_uavs, false));
            total += result.reward;
            state = std::move(result.next_state);
        }
    }
    return episodes * slots == 0 ? 0.0 : total / static_cast<double>(episodes * slots);
}

/// Uniform choice among valid actions for each UAV, distinct channels.
class RandomAllocator {
public:
    RandomAllocator(std::size_t num_subchannels, std::uint64_t seed) : m_(num_subchannels), rng_(seed) {}

    std::size_t num_subchannels() const { return m_; }
    double epsilon() const { return 1.0; }
    std::vector<double> q_values(const AgentState&) const { return std::vector<double>(m_ + 1, 0.0); }
    void remember(const Experience&) {}
    bool learn() { return false; }
    void begin_episode(std::size_t, std::size_t) {}

    std::vector<Action> select_actions(const AgentState& s, std::size_t k, bool = true)
    {
        const auto mask = valid_actions(s, m_);
        std::vector<std::size_t> valid;
        for (std::size_t a = 0; a < mask.size(); ++a) {
            if (mask[a]) {
                valid.push_back(a);
            }
        }
        shuffle(valid.begin(), valid.end(), rng_);
        std::vector<Action> out;
        for (std::size_t i = 0; i < k; ++i) {
            out.push_back(i < valid.size() ? Action{valid[i]} : Action{0});
        }
        return out;
    }

private:
    std::size_t m_;
    Rng rng_;
};

} // namespace skyspec
