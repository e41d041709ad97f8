#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skyspec/channel_env.hpp"
#include "skyspec/error.hpp"
#include "skyspec/scheduler.hpp"

namespace skyspec {

inline constexpr std::size_t kMaxEnumeratedSubchannels = 10;

/// Value of transmitting on channel m: reward[m] on success, -reward[m] on
/// collision (normalized R_km of the single allocated UAV).
struct RewardModel {
    std::vector<double> channel_reward;
};

struct ValueIterationResult {
    std::size_t num_subchannels = 0;
    std::vector<double> values;            // 2^M + 1, INITIAL last
    std::vector<std::vector<double>> q;    // per state, M + 1 actions, NaN when invalid
    std::vector<Action> policy;
    std::size_t iterations = 0;
};

namespace detail {

/// out[s] = E[v(s') | s] under the product kernel, one channel at a time.
inline std::vector<double> expect_next(std::span<const TransitionMatrix> matrices, std::vector<double> v)
{
    const auto states = v.size();
    for (std::size_t m = 0; m < matrices.size(); ++m) {
        const std::size_t bit = std::size_t{1} << m;
        for (std::size_t s = 0; s < states; ++s) {
            if (s & bit) {
                continue;
            }
            const double v0 = v[s];
            const double v1 = v[s | bit];
            v[s] = (1.0 - matrices[m].p01) * v0 + matrices[m].p01 * v1;
            v[s | bit] = matrices[m].p10 * v0 + (1.0 - matrices[m].p10) * v1;
        }
    }
    return v;
}

inline void check_enumerable(std::span<const TransitionMatrix> matrices, const RewardModel& rewards)
{
    if (matrices.empty() || matrices.size() > kMaxEnumeratedSubchannels) {
        throw ComplexityError("value iteration enumerates 2^M states; M must lie in [1, " +
                              std::to_string(kMaxEnumeratedSubchannels) + "]");
    }
    if (rewards.channel_reward.size() != matrices.size()) {
        throw DimensionError("value iteration: reward model length differs from M");
    }
    for (const auto& p : matrices) {
        p.validate();
    }
}

} // namespace detail

/// E[r R | s, a] for a vacant-marked channel under perfect sensing:
/// R (P(stays vacant) - P(turns busy)) = R (1 - 2 p01).
inline double expected_reward(std::span<const TransitionMatrix> matrices, const RewardModel& rewards,
                              std::size_t state_index, Action a)
{
    const auto m_count = matrices.size();
    if (a.idle() || state_index == (std::size_t{1} << m_count)) {
        return 0.0;
    }
    const auto m = *a.channel();
    if ((state_index >> m) & 1U) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return rewards.channel_reward[m] * (1.0 - 2.0 * matrices[m].p01);
}

inline std::vector<double> stationary_state_distribution(std::span<const TransitionMatrix> matrices)
{
    const std::size_t states = std::size_t{1} << matrices.size();
    std::vector<double> pi(states, 1.0);
    for (std::size_t m = 0; m < matrices.size(); ++m) {
        const auto [vacant, busy] = stationary_distribution(matrices[m]);
        for (std::size_t s = 0; s < states; ++s) {
            pi[s] *= ((s >> m) & 1U) ? busy : vacant;
        }
    }
    return pi;
}

/// Bellman iteration over the exact joint kernel with valid actions only.
/// INITIAL moves to the stationary distribution with reward 0.
inline ValueIterationResult value_iteration(std::span<const TransitionMatrix> matrices, const RewardModel& rewards,
                                            double gamma, double tol = 1e-10, std::size_t max_iterations = 100000)
{
    detail::check_enumerable(matrices, rewards);
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw std::invalid_argument("value iteration: gamma must lie in [0, 1)");
    }
    if (!(tol > 0.0)) {
        throw std::invalid_argument("value iteration: tol must be positive");
    }
    const auto m_count = matrices.size();
    const std::size_t states = std::size_t{1} << m_count;
    const auto pi = stationary_state_distribution(matrices);

    // immediate rewards; actions never change the kernel
    std::vector<std::vector<double>> reward(states + 1, std::vector<double>(m_count + 1));
    for (std::size_t s = 0; s <= states; ++s) {
        for (std::size_t a = 0; a <= m_count; ++a) {
            reward[s][a] = expected_reward(matrices, rewards, s, Action{a});
        }
    }

    ValueIterationResult out;
    out.num_subchannels = m_count;
    out.values.assign(states + 1, 0.0);
    std::vector<double> next(states + 1, 0.0);
    auto bootstrap = [&](const std::vector<double>& v) {
        std::vector<double> ev = detail::expect_next(matrices, std::vector<double>(v.begin(), v.end() - 1));
        double from_initial = 0.0;
        for (std::size_t s = 0; s < states; ++s) {
            from_initial += pi[s] * v[s];
        }
        ev.push_back(from_initial);
        return ev;
    };
    for (out.iterations = 1; out.iterations <= max_iterations; ++out.iterations) {
        const auto ev = bootstrap(out.values);
        double change = 0.0;
        for (std::size_t s = 0; s <= states; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a <= m_count; ++a) {
                if (!std::isnan(reward[s][a])) {
                    best = std::max(best, reward[s][a] + gamma * ev[s]);
                }
            }
            next[s] = best;
            change = std::max(change, std::abs(next[s] - out.values[s]));
        }
        out.values.swap(next);
        if (change < tol) {
            break;
        }
    }

    const auto ev = bootstrap(out.values);
    out.q.assign(states + 1, std::vector<double>(m_count + 1));
    out.policy.resize(states + 1);
    for (std::size_t s = 0; s <= states; ++s) {
        ActionMask mask(m_count + 1);
        for (std::size_t a = 0; a <= m_count; ++a) {
            mask[a] = !std::isnan(reward[s][a]);
            out.q[s][a] = mask[a] ? reward[s][a] + gamma * ev[s] : std::numeric_limits<double>::quiet_NaN();
        }
        std::vector<double> filled(m_count + 1);
        for (std::size_t a = 0; a <= m_count; ++a) {
            filled[a] = mask[a] ? out.q[s][a] : 0.0;
        }
        out.policy[s] = greedy_action(filled, mask);
    }
    return out;
}

/// Long-run expected per-slot normalized utility of a stationary policy,
/// sum_s pi(s) E[r R | s, policy(s)] (INITIAL has measure zero).
inline double policy_slot_utility(std::span<const TransitionMatrix> matrices, const RewardModel& rewards,
                                  std::span<const Action> policy)
{
    detail::check_enumerable(matrices, rewards);
    const auto pi = stationary_state_distribution(matrices);
    if (policy.size() < pi.size()) {
        throw DimensionError("policy_slot_utility: policy shorter than the state space");
    }
    double g = 0.0;
    for (std::size_t s = 0; s < pi.size(); ++s) {
        const double r = expected_reward(matrices, rewards, s, policy[s]);
        if (std::isnan(r)) {
            throw std::invalid_argument("policy_slot_utility: policy picks a busy channel");
        }
        g += pi[s] * r;
    }
    return g;
}

/// Rewards for UAV k of an environment-like link description.
template <class Env>
RewardModel reward_model_for(const Env& env, std::size_t uav = 0)
{
    RewardModel r;
    for (std::size_t m = 0; m < env.num_channels(); ++m) {
        r.channel_reward.push_back(env.channel_reward(uav, m));
    }
    return r;
}

} // namespace skyspec
