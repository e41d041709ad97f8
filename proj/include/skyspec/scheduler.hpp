#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "skyspec/binary_io.hpp"
#include "skyspec/checkpoint.hpp"
#include "skyspec/error.hpp"
#include "skyspec/neuralnet.hpp"
#include "skyspec/rng.hpp"
#include "skyspec/spectrum_core.hpp"

namespace skyspec {

// ---------------------------------------------------------------------------
// MDP state and action.

/// The fused vector f(t-1) the allocator decides on, or INITIAL before the
/// first fusion of an episode.
struct AgentState {
    std::optional<OccupancyVector> fused_prev;

    static AgentState initial() { return {}; }
    static AgentState of(OccupancyVector v) { return {std::move(v)}; }
    bool is_initial() const { return !fused_prev.has_value(); }

    bool operator==(const AgentState&) const = default;
};

/// 0 = idle, m >= 1 = transmit on sub-channel m (0-based channel m - 1).
struct Action {
    std::size_t value = 0;

    bool idle() const { return value == 0; }
    std::optional<std::size_t> channel() const
    {
        return value == 0 ? std::nullopt : std::optional<std::size_t>(value - 1);
    }

    bool operator==(const Action&) const = default;
};

/// 2^M + 1 states: every occupancy vector plus INITIAL.
constexpr std::size_t state_space_size(std::size_t num_subchannels) { return (std::size_t{1} << num_subchannels) + 1; }
constexpr std::size_t action_space_size(std::size_t num_subchannels) { return num_subchannels + 1; }

/// sum_m bit_m 2^(m-1) over 1-based channels; INITIAL maps to 2^M.
inline std::size_t encode_state_index(const AgentState& s, std::size_t num_subchannels)
{
    if (s.is_initial()) {
        return std::size_t{1} << num_subchannels;
    }
    if (s.fused_prev->size() != num_subchannels) {
        throw DimensionError("encode_state: vector length differs from M");
    }
    return static_cast<std::size_t>(s.fused_prev->to_mask());
}

/// Bits as reals; INITIAL becomes the all-0.5 vector.
inline nn::Vector encode_state_input(const AgentState& s, std::size_t num_subchannels)
{
    nn::Vector x(static_cast<Eigen::Index>(num_subchannels));
    if (s.is_initial()) {
        x.setConstant(0.5);
        return x;
    }
    if (s.fused_prev->size() != num_subchannels) {
        throw DimensionError("encode_state: vector length differs from M");
    }
    for (std::size_t m = 0; m < num_subchannels; ++m) {
        x(static_cast<Eigen::Index>(m)) = (*s.fused_prev)[m];
    }
    return x;
}

using ActionMask = std::vector<bool>;

/// Idle is always valid; channel m only when the state marks it vacant.
/// INITIAL offers no detected holes.
inline ActionMask valid_actions(const AgentState& s, std::size_t num_subchannels)
{
    std::vector<bool> mask(num_subchannels + 1, false);
    mask[0] = true;
    if (!s.is_initial()) {
        for (std::size_t m = 0; m < num_subchannels; ++m) {
            mask[m + 1] = s.fused_prev->vacant(m);
        }
    }
    return mask;
}

/// Argmax with lowest-index tie-break, optionally restricted to a mask.
inline Action greedy_action(std::span<const double> q, const ActionMask& mask = {})
{
    std::optional<std::size_t> best;
    for (std::size_t a = 0; a < q.size(); ++a) {
        if (!mask.empty() && !mask[a]) {
            continue;
        }
        if (!best || q[a] > q[*best]) {
            best = a;
        }
    }
    if (!best) {
        throw std::invalid_argument("greedy_action: no valid action");
    }
    return Action{*best};
}

/// Uniform over all (or all valid) actions with probability epsilon, else greedy.
inline Action epsilon_greedy(std::span<const double> q, double epsilon, Rng& rng, const ActionMask& mask = {})
{
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("epsilon_greedy: epsilon must lie in [0, 1]");
    }
    if (rng.uniform() < epsilon) {
        if (mask.empty()) {
            return Action{static_cast<std::size_t>(rng.below(q.size()))};
        }
        std::vector<std::size_t> valid;
        for (std::size_t a = 0; a < mask.size(); ++a) {
            if (mask[a]) {
                valid.push_back(a);
            }
        }
        return Action{valid[rng.below(valid.size())]};
    }
    return greedy_action(q, mask);
}

namespace detail {

inline std::vector<std::size_t> ranked_actions(std::span<const double> q, const ActionMask& mask)
{
    std::vector<std::size_t> order;
    for (std::size_t a = 0; a < q.size(); ++a) {
        if (mask.empty() || mask[a]) {
            order.push_back(a);
        }
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return q[a] > q[b]; });
    return order;
}

} // namespace detail

/// k highest-Q actions, distinct, descending, lowest index first on ties.
inline std::vector<Action> top_k_actions(std::span<const double> q, std::size_t k)
{
    if (k < 1 || k > q.size()) {
        throw std::out_of_range("top_k_actions: k must lie in [1, M+1]");
    }
    const auto order = detail::ranked_actions(q, {});
    std::vector<Action> out;
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back(Action{order[i]});
    }
    return out;
}

/// Up to k distinct valid actions, best first. Fewer than k come back when
/// fewer actions are valid; callers leave the remaining UAVs idle.
inline std::vector<Action> top_k_valid_actions(std::span<const double> q, std::size_t k, const ActionMask& mask)
{
    const auto order = detail::ranked_actions(q, mask);
    std::vector<Action> out;
    for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
        out.push_back(Action{order[i]});
    }
    return out;
}

/// Actions for k UAVs, UAV order = rank order. Idle consumes a UAV without a
/// channel; UAVs beyond the valid actions are idle too.
inline std::vector<Action> actions_for_uavs(std::span<const double> q, std::size_t k, const ActionMask& mask)
{
    auto ranked = top_k_valid_actions(q, k, mask);
    ranked.resize(k, Action{0});
    return ranked;
}

/// Assignment implied by per-UAV actions (idle UAVs are absent).
inline Assignment to_assignment(std::span<const Action> actions)
{
    Assignment a;
    for (std::size_t k = 0; k < actions.size(); ++k) {
        if (auto ch = actions[k].channel()) {
            a.pairs.push_back({k, *ch});
        }
    }
    return a;
}

// ---------------------------------------------------------------------------
// Tabular Q-learning.

enum class LearningRateSchedule {
    Constant,       // alpha
    InverseVisits,  // 1 / n(s, a)
    RescaledLinear, // 1 / (1 + (1 - gamma) n(s, a))
};

inline constexpr std::size_t kMaxTabularSubchannels = 12;

class QTable {
public:
    QTable(std::size_t num_subchannels, double alpha, double gamma,
           LearningRateSchedule schedule = LearningRateSchedule::Constant)
        : m_(num_subchannels), alpha_(alpha), gamma_(gamma), schedule_(schedule)
    {
        if (num_subchannels > kMaxTabularSubchannels) {
            throw ComplexityError("tabular Q-learning refuses M = " + std::to_string(num_subchannels) + ": table of " +
                                  std::to_string(state_space_size(num_subchannels)) + " x " +
                                  std::to_string(action_space_size(num_subchannels)) + " exceeds the M <= " +
                                  std::to_string(kMaxTabularSubchannels) + " limit");
        }
        if (!(gamma >= 0.0 && gamma < 1.0)) {
            throw std::invalid_argument("q-table: gamma must lie in [0, 1)");
        }
        q_.assign(states() * actions(), 0.0);
        visits_.assign(states() * actions(), 0);
    }

    std::size_t num_subchannels() const { return m_; }
    std::size_t states() const { return state_space_size(m_); }
    std::size_t actions() const { return action_space_size(m_); }
    double gamma() const { return gamma_; }

    double& at(std::size_t s, std::size_t a) { return q_.at(s * actions() + a); }
    double at(std::size_t s, std::size_t a) const { return q_.at(s * actions() + a); }
    std::uint64_t visits(std::size_t s, std::size_t a) const { return visits_.at(s * actions() + a); }

    std::span<const double> row(std::size_t s) const { return std::span<const double>(q_).subspan(s * actions(), actions()); }

    /// Q(s,a) += alpha (r + gamma max_a' Q(s',a') - Q(s,a)). The max runs over
    /// next_mask when given.
    void update(std::size_t s, std::size_t a, double r, std::size_t s_next, const ActionMask& next_mask = {})
    {
        if (s >= states() || s_next >= states() || a >= actions()) {
            throw std::out_of_range("q_update: index out of range");
        }
        auto& n = visits_[s * actions() + a];
        ++n;
        double alpha = alpha_;
        if (schedule_ == LearningRateSchedule::InverseVisits) {
            alpha = 1.0 / static_cast<double>(n);
        } else if (schedule_ == LearningRateSchedule::RescaledLinear) {
            alpha = 1.0 / (1.0 + (1.0 - gamma_) * static_cast<double>(n));
        }
        const double next = row(s_next)[greedy_action(row(s_next), next_mask).value];
        double& q = at(s, a);
        q += alpha * (r + gamma_ * next - q);
    }

private:
    std::size_t m_;
    double alpha_;
    double gamma_;
    LearningRateSchedule schedule_;
    std::vector<double> q_;
    std::vector<std::uint64_t> visits_;
};

inline void q_update(QTable& table, std::size_t s, std::size_t a, double r, std::size_t s_next)
{
    table.update(s, a, r, s_next);
}

// ---------------------------------------------------------------------------
// Experience replay.

struct Experience {
    AgentState state;
    Action action;
    double reward = 0.0;
    AgentState next_state;
};

/// Bounded FIFO; the oldest experience is evicted first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity)
    {
        if (capacity < 1) {
            throw std::invalid_argument("replay buffer: capacity must be >= 1");
        }
        data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
    }

    void push(Experience e)
    {
        if (!std::isfinite(e.reward)) {
            throw std::invalid_argument("replay buffer: non-finite reward");
        }
        if (data_.size() < capacity_) {
            data_.push_back(std::move(e));
        } else {
            data_[head_] = std::move(e);
            head_ = (head_ + 1) % capacity_;
        }
        ++inserted_;
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t inserted() const { return inserted_; }

    /// i-th oldest experience.
    const Experience& at(std::size_t i) const { return data_.at((head_ + i) % data_.size()); }

    /// Uniform sample without replacement; nullopt while size < batch_size.
    std::optional<std::vector<Experience>> sample(std::size_t batch_size, Rng& rng) const
    {
        if (batch_size < 1 || data_.size() < batch_size) {
            return std::nullopt;
        }
        // sparse Fisher-Yates: only displaced positions are recorded
        std::vector<std::pair<std::size_t, std::size_t>> displaced;
        auto lookup = [&](std::size_t i) {
            for (const auto& [k, v] : displaced) {
                if (k == i) {
                    return v;
                }
            }
            return i;
        };
        auto assign = [&](std::size_t i, std::size_t v) {
            for (auto& [k, val] : displaced) {
                if (k == i) {
                    val = v;
                    return;
                }
            }
            displaced.emplace_back(i, v);
        };
        const auto n = data_.size();
        std::vector<Experience> out;
        out.reserve(batch_size);
        for (std::size_t i = 0; i < batch_size; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(n - i));
            const auto vi = lookup(i);
            const auto vj = lookup(j);
            assign(j, vi);
            assign(i, vj);
            out.push_back(data_[vj]);
        }
        return out;
    }

private:
    std::size_t capacity_;
    std::vector<Experience> data_;
    std::size_t head_ = 0;
    std::uint64_t inserted_ = 0;
};

inline void replay_push(ReplayBuffer& buffer, Experience e) { buffer.push(std::move(e)); }

inline std::optional<std::vector<Experience>> replay_sample(const ReplayBuffer& buffer, std::size_t batch_size, Rng& rng)
{
    return buffer.sample(batch_size, rng);
}

// ---------------------------------------------------------------------------
// DQN family.

enum class DqnVariant : std::uint32_t { Dqn = 0, Ddqn = 1, DdqnSoft = 2 };

inline const char* variant_name(DqnVariant v)
{
    switch (v) {
    case DqnVariant::Dqn: return "dqn";
    case DqnVariant::Ddqn: return "ddqn";
    case DqnVariant::DdqnSoft: return "ddqn-soft";
    }
    return "?";
}

struct DqnConfig {
    DqnVariant variant = DqnVariant::DdqnSoft;
    std::size_t num_subchannels = 4;
    double gamma = 0.9;
    double epsilon_start = 1.0;
    double epsilon_min = 0.05;
    double epsilon_decay_fraction = 0.6; // of the episode budget
    std::size_t replay_capacity = 10000;
    std::size_t batch_size = 32;
    std::size_t target_update_period = 100; // hard-update modes, in learning steps
    double tau = 0.01;                      // soft mode
    std::vector<std::size_t> hidden{64, 64};
    double learning_rate = 1e-3;
    nn::LossSpec loss = nn::LossSpec::mse();
    double divergence_limit = 1e6;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (num_subchannels < 1 || num_subchannels > 32) {
            throw std::invalid_argument("dqn config: num_subchannels must lie in [1, 32]");
        }
        if (!(gamma >= 0.0 && gamma < 1.0)) {
            throw std::invalid_argument("dqn config: gamma must lie in [0, 1)");
        }
        if (!(epsilon_min >= 0.0 && epsilon_min <= epsilon_start && epsilon_start <= 1.0)) {
            throw std::invalid_argument("dqn config: need 0 <= epsilon_min <= epsilon_start <= 1");
        }
        if (!(epsilon_decay_fraction > 0.0 && epsilon_decay_fraction <= 1.0)) {
            throw std::invalid_argument("dqn config: epsilon_decay_fraction must lie in (0, 1]");
        }
        if (batch_size < 1 || replay_capacity < batch_size) {
            throw std::invalid_argument("dqn config: need 1 <= batch_size <= replay_capacity");
        }
        if (target_update_period < 1) {
            throw std::invalid_argument("dqn config: target_update_period must be >= 1");
        }
        if (!(tau >= 0.0 && tau <= 1.0)) {
            throw std::invalid_argument("dqn config: tau must lie in [0, 1]");
        }
        if (!(learning_rate > 0.0)) {
            throw std::invalid_argument("dqn config: learning_rate must be positive");
        }
    }
};

/// Exponential decay from epsilon_start to epsilon_min over the first
/// decay_fraction of the episodes, then flat at epsilon_min.
inline double epsilon_at(const DqnConfig& c, std::size_t episode, std::size_t total_episodes)
{
    const double horizon = std::max(1.0, c.epsilon_decay_fraction * static_cast<double>(total_episodes));
    const double progress = std::min(1.0, static_cast<double>(episode) / horizon);
    if (c.epsilon_start <= 0.0) {
        return 0.0;
    }
    const double floor = std::max(c.epsilon_min, 1e-12);
    return std::max(c.epsilon_min, c.epsilon_start * std::pow(floor / c.epsilon_start, progress));
}

/// One regression target. Double modes pick the action with the primary
/// net and evaluate it with the target net; vanilla DQN takes the target
/// net's max. The argmax is restricted to mask when one is given.
inline double bootstrap_target(DqnVariant variant, double reward, double gamma, std::span<const double> q_primary_next,
                               std::span<const double> q_target_next, const ActionMask& mask = {})
{
    if (variant == DqnVariant::Dqn) {
        return reward + gamma * q_target_next[greedy_action(q_target_next, mask).value];
    }
    if (q_primary_next.size() != q_target_next.size()) {
        throw DimensionError("ddqn target: primary and target widths differ");
    }
    return reward + gamma * q_target_next[greedy_action(q_primary_next, mask).value];
}

inline void soft_update(nn::Network& target, const nn::Network& primary, double tau)
{
    nn::polyak_update(target, primary, tau);
}

class DqnAgent {
public:
    explicit DqnAgent(DqnConfig config) : config_(std::move(config)), buffer_(config_.replay_capacity)
    {
        config_.validate();
        Rng init(derive_seed(config_.seed, 0x1417ULL));
        std::vector<std::size_t> dims{config_.num_subchannels};
        dims.insert(dims.end(), config_.hidden.begin(), config_.hidden.end());
        dims.push_back(action_space_size(config_.num_subchannels));
        primary_ = nn::Network::make(dims, nn::Activation::Relu, nn::Activation::Identity, init);
        target_ = nn::clone_weights(primary_);
        optimizer_ = nn::OptimizerState::adam(config_.learning_rate);
        rng_ = Rng(derive_seed(config_.seed, 0xac7ULL));
    }

    const DqnConfig& config() const { return config_; }
    const nn::Network& primary() const { return primary_; }
    const nn::Network& target() const { return target_; }
    nn::Network& primary() { return primary_; }
    nn::Network& target() { return target_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    double epsilon() const { return epsilon_; }
    void set_epsilon(double e) { epsilon_ = e; }
    std::uint64_t learning_steps() const { return learn_steps_; }
    std::size_t num_subchannels() const { return config_.num_subchannels; }

    std::vector<double> q_values(const AgentState& s) const
    {
        const nn::Vector out = nn::forward(primary_, encode_state_input(s, config_.num_subchannels));
        return {out.data(), out.data() + out.size()};
    }

    /// Actions for k UAVs. With probability epsilon the slot explores: k
    /// distinct valid actions drawn uniformly; otherwise the valid top-k.
    std::vector<Action> select_actions(const AgentState& s, std::size_t k, bool explore = true)
    {
        const auto mask = valid_actions(s, config_.num_subchannels);
        const auto q = q_values(s);
        if (explore && rng_.uniform() < epsilon_) {
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
        return actions_for_uavs(q, k, mask);
    }

    void remember(Experience e) { buffer_.push(std::move(e)); }

    /// Regression targets. Double mode: r + gamma Q'(s', argmax_a Q(s', a));
    /// vanilla mode: r + gamma max_a Q'(s', a). Both maximise over the valid
    /// actions of s'. Continuing task, no terminal masking.
    std::vector<double> targets(std::span<const Experience> batch) const
    {
        if (batch.empty()) {
            throw std::invalid_argument("ddqn_targets: empty batch");
        }
        const auto m = config_.num_subchannels;
        nn::Matrix next(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(batch.size()));
        for (std::size_t i = 0; i < batch.size(); ++i) {
            next.col(static_cast<Eigen::Index>(i)) = encode_state_input(batch[i].next_state, m);
        }
        const nn::Matrix q_target = nn::forward_batch(target_, next);
        nn::Matrix q_primary;
        if (config_.variant != DqnVariant::Dqn) {
            q_primary = nn::forward_batch(primary_, next);
        }
        std::vector<double> y(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto mask = valid_actions(batch[i].next_state, m);
            const auto col = static_cast<Eigen::Index>(i);
            std::vector<double> qt(q_target.col(col).data(), q_target.col(col).data() + q_target.rows());
            std::vector<double> qp;
            if (config_.variant != DqnVariant::Dqn) {
                qp.assign(q_primary.col(col).data(), q_primary.col(col).data() + q_primary.rows());
            }
            y[i] = bootstrap_target(config_.variant, batch[i].reward, config_.gamma, qp, qt, mask);
        }
        return y;
    }

    /// One gradient step on a replay mini-batch followed by the target update.
    /// Returns false while the buffer holds fewer than batch_size experiences.
    bool learn()
    {
        auto batch = buffer_.sample(config_.batch_size, rng_);
        if (!batch) {
            return false;
        }
        const auto m = config_.num_subchannels;
        const auto b = static_cast<Eigen::Index>(batch->size());
        const auto y = targets(*batch);
        nn::Matrix x(static_cast<Eigen::Index>(m), b);
        for (Eigen::Index i = 0; i < b; ++i) {
            x.col(i) = encode_state_input((*batch)[static_cast<std::size_t>(i)].state, m);
        }
        const auto cache = nn::forward_cached(primary_, x);
        if (cache.output.cwiseAbs().maxCoeff() > config_.divergence_limit) {
            throw DivergenceError("dqn: |Q| exceeded " + std::to_string(config_.divergence_limit));
        }
        nn::Matrix grad = nn::Matrix::Zero(cache.output.rows(), b);
        for (Eigen::Index i = 0; i < b; ++i) {
            const auto a = static_cast<Eigen::Index>((*batch)[static_cast<std::size_t>(i)].action.value);
            const double err = cache.output(a, i) - y[static_cast<std::size_t>(i)];
            switch (config_.loss.kind) {
            case nn::LossSpec::Kind::Huber:
                grad(a, i) = std::clamp(err, -config_.loss.delta, config_.loss.delta) / static_cast<double>(b);
                break;
            default: grad(a, i) = 2.0 * err / static_cast<double>(b); break;
            }
        }
        nn::optimizer_step(primary_, nn::backward_from_output_grad(primary_, cache, grad), optimizer_);
        ++learn_steps_;
        if (config_.variant == DqnVariant::DdqnSoft) {
            soft_update(target_, primary_, config_.tau);
        } else if (learn_steps_ % config_.target_update_period == 0) {
            target_ = nn::clone_weights(primary_);
        }
        return true;
    }

    void begin_episode(std::size_t episode, std::size_t total_episodes)
    {
        epsilon_ = epsilon_at(config_, episode, total_episodes);
    }

private:
    DqnConfig config_;
    nn::Network primary_;
    nn::Network target_;
    nn::OptimizerState optimizer_;
    ReplayBuffer buffer_;
    Rng rng_;
    double epsilon_ = 1.0;
    std::uint64_t learn_steps_ = 0;
};

inline std::vector<double> ddqn_targets(const DqnAgent& agent, std::span<const Experience> batch)
{
    return agent.targets(batch);
}

/// Tabular agent with the same driving interface as DqnAgent.
class TabularAgent {
public:
    TabularAgent(std::size_t num_subchannels, double gamma, LearningRateSchedule schedule, double alpha,
                 DqnConfig exploration)
        : table_(num_subchannels, alpha, gamma, schedule), exploration_(std::move(exploration)),
          rng_(derive_seed(exploration_.seed, 0x7ab1eULL))
    {
    }

    const QTable& table() const { return table_; }
    double epsilon() const { return epsilon_; }
    void set_epsilon(double e) { epsilon_ = e; }
    std::size_t num_subchannels() const { return table_.num_subchannels(); }

    std::vector<double> q_values(const AgentState& s) const
    {
        const auto row = table_.row(encode_state_index(s, table_.num_subchannels()));
        return {row.begin(), row.end()};
    }

    std::vector<Action> select_actions(const AgentState& s, std::size_t k, bool explore = true)
    {
        const auto m = table_.num_subchannels();
        const auto mask = valid_actions(s, m);
        if (k == 1) {
            return {epsilon_greedy(q_values(s), explore ? epsilon_ : 0.0, rng_, mask)};
        }
        if (explore && rng_.uniform() < epsilon_) {
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
        return actions_for_uavs(q_values(s), k, mask);
    }

    void remember(const Experience& e)
    {
        const auto m = table_.num_subchannels();
        table_.update(encode_state_index(e.state, m), e.action.value, e.reward, encode_state_index(e.next_state, m),
                      valid_actions(e.next_state, m));
    }

    bool learn() { return false; }

    void begin_episode(std::size_t episode, std::size_t total_episodes)
    {
        epsilon_ = epsilon_at(exploration_, episode, total_episodes);
    }

private:
    QTable table_;
    DqnConfig exploration_;
    Rng rng_;
    double epsilon_ = 1.0;
};

// ---------------------------------------------------------------------------
// Agent checkpoint: hyperparameter header then primary and target networks.
//
//   "SKAG", u32 version (1), u32 variant, u32 M,
//   f32 gamma, f32 epsilon_start, f32 epsilon_min, f32 epsilon_decay_fraction,
//   u32 replay_capacity, u32 batch_size, u32 target_update_period, f32 tau,
//   f32 learning_rate, u64 seed,
//   primary network block, target network block

inline void write_agent(std::ostream& os, const DqnAgent& agent)
{
    const auto& c = agent.config();
    io::put_magic(os, "SKAG");
    io::put_u32(os, 1);
    io::put_u32(os, static_cast<std::uint32_t>(c.variant));
    io::put_u32(os, static_cast<std::uint32_t>(c.num_subchannels));
    io::put_f32(os, static_cast<float>(c.gamma));
    io::put_f32(os, static_cast<float>(c.epsilon_start));
    io::put_f32(os, static_cast<float>(c.epsilon_min));
    io::put_f32(os, static_cast<float>(c.epsilon_decay_fraction));
    io::put_u32(os, static_cast<std::uint32_t>(c.replay_capacity));
    io::put_u32(os, static_cast<std::uint32_t>(c.batch_size));
    io::put_u32(os, static_cast<std::uint32_t>(c.target_update_period));
    io::put_f32(os, static_cast<float>(c.tau));
    io::put_f32(os, static_cast<float>(c.learning_rate));
    io::put_u64(os, c.seed);
    nn::write_network(os, agent.primary());
    nn::write_network(os, agent.target());
}

inline DqnAgent read_agent(std::istream& is)
{
    io::expect_magic(is, "SKAG", "agent checkpoint");
    if (io::get_u32(is) != 1) {
        throw FormatError("agent checkpoint: unsupported version");
    }
    DqnConfig c;
    const auto variant = io::get_u32(is);
    if (variant > 2) {
        throw FormatError("agent checkpoint: bad variant");
    }
    c.variant = static_cast<DqnVariant>(variant);
    c.num_subchannels = io::get_u32(is);
    c.gamma = io::get_f32(is);
    c.epsilon_start = io::get_f32(is);
    c.epsilon_min = io::get_f32(is);
    c.epsilon_decay_fraction = io::get_f32(is);
    c.replay_capacity = io::get_u32(is);
    c.batch_size = io::get_u32(is);
    c.target_update_period = io::get_u32(is);
    c.tau = io::get_f32(is);
    c.learning_rate = io::get_f32(is);
    c.seed = io::get_u64(is);
    auto primary = nn::read_network(is);
    auto target = nn::read_network(is);
    c.hidden.clear();
    for (std::size_t l = 0; l + 1 < primary.layers().size(); ++l) {
        c.hidden.push_back(primary.layers()[l].out_dim());
    }
    DqnAgent agent(c);
    if (!agent.primary().same_shape(primary) || !agent.target().same_shape(target)) {
        throw FormatError("agent checkpoint: network dims disagree with header");
    }
    agent.primary() = std::move(primary);
    agent.target() = std::move(target);
    return agent;
}

} // namespace skyspec
