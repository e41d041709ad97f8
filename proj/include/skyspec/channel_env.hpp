#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "skyspec/error.hpp"
#include "skyspec/rng.hpp"
#include "skyspec/spectrum_core.hpp"

namespace skyspec {

/// Two-state occupancy chain of one sub-channel. Rows are [1-p01, p01] and
/// [p10, 1-p10], stochastic by construction.
struct TransitionMatrix {
    double p01 = 0.2; // vacant -> busy
    double p10 = 0.3; // busy -> vacant

    void validate() const
    {
        if (!(p01 >= 0.0 && p01 <= 1.0) || !(p10 >= 0.0 && p10 <= 1.0)) {
            throw std::invalid_argument("transition matrix: probabilities must lie in [0, 1]");
        }
    }

    std::array<double, 2> row(int from) const
    {
        return from == 0 ? std::array<double, 2>{1.0 - p01, p01} : std::array<double, 2>{p10, 1.0 - p10};
    }

    double probability(int from, int to) const { return row(from)[static_cast<std::size_t>(to)]; }

    bool operator==(const TransitionMatrix&) const = default;
};

struct EnvState {
    OccupancyVector true_occupancy;
    std::uint64_t slot = 0;
    Rng rng;
};

/// Per-UAV sensing SINR and per-(UAV, channel) access SINR, both in dB.
struct LinkModel {
    std::vector<double> sensing_sinr_db;             // K
    std::vector<std::vector<double>> access_sinr_db; // K x M

    std::size_t num_uavs() const { return sensing_sinr_db.size(); }
    std::size_t num_channels() const { return access_sinr_db.empty() ? 0 : access_sinr_db.front().size(); }

    void validate(std::size_t k, std::size_t m) const
    {
        if (sensing_sinr_db.size() != k || access_sinr_db.size() != k) {
            throw DimensionError("link model: expected " + std::to_string(k) + " UAV rows");
        }
        for (double v : sensing_sinr_db) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("link model: sensing SINR must be finite");
            }
        }
        for (const auto& row : access_sinr_db) {
            if (row.size() != m) {
                throw DimensionError("link model: expected " + std::to_string(m) + " access SINR columns");
            }
            for (double v : row) {
                if (!std::isfinite(v)) {
                    throw std::invalid_argument("link model: access SINR must be finite");
                }
            }
        }
    }

    double max_access_sinr_db() const
    {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& row : access_sinr_db) {
            for (double v : row) {
                best = std::max(best, v);
            }
        }
        return best;
    }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

/// Access-link SINR of UAV k on channel m, dB.
inline double sinr_for(const LinkModel& link, std::size_t k, std::size_t m)
{
    if (k >= link.access_sinr_db.size() || m >= link.access_sinr_db[k].size()) {
        throw std::out_of_range("sinr_for: uav or channel index out of range");
    }
    return link.access_sinr_db[k][m];
}

/// (P(vacant), P(busy)) in the long run.
inline std::pair<double, double> stationary_distribution(const TransitionMatrix& p)
{
    const double s = p.p01 + p.p10;
    if (!(s > 0.0)) {
        throw NonUniqueStationary();
    }
    return {p.p10 / s, p.p01 / s};
}

/// Advance every channel one slot. One uniform draw per channel, always.
inline EnvState step(EnvState state, std::span<const TransitionMatrix> matrices)
{
    const auto m_count = state.true_occupancy.size();
    if (matrices.size() != m_count) {
        throw DimensionError("step: expected " + std::to_string(m_count) + " transition matrices");
    }
    for (std::size_t m = 0; m < m_count; ++m) {
        const double u = state.rng.uniform();
        if (state.true_occupancy.vacant(m)) {
            state.true_occupancy.set(m, u < matrices[m].p01 ? 1 : 0);
        } else {
            state.true_occupancy.set(m, u < matrices[m].p10 ? 0 : 1);
        }
    }
    ++state.slot;
    return state;
}

/// Occupancy drawn independently per channel from its stationary distribution.
inline OccupancyVector draw_stationary(std::span<const TransitionMatrix> matrices, Rng& rng)
{
    OccupancyVector v(matrices.size());
    for (std::size_t m = 0; m < matrices.size(); ++m) {
        const auto [vacant, busy] = stationary_distribution(matrices[m]);
        (void)vacant;
        v.set(m, rng.uniform() < busy ? 1 : 0);
    }
    return v;
}

inline EnvState initial_state(std::span<const TransitionMatrix> matrices, std::uint64_t seed)
{
    EnvState s;
    s.rng = Rng(seed);
    s.true_occupancy = draw_stationary(matrices, s.rng);
    return s;
}

/// Length-T trajectory from a given initial occupancy.
inline std::vector<OccupancyVector> sample_occupancy(std::span<const TransitionMatrix> matrices, std::size_t horizon,
                                                     std::uint64_t seed, const OccupancyVector& initial)
{
    if (horizon < 1) {
        throw std::invalid_argument("sample_occupancy: horizon must be >= 1");
    }
    if (initial.size() != matrices.size()) {
        throw DimensionError("sample_occupancy: initial occupancy length differs from matrix count");
    }
    std::vector<OccupancyVector> out;
    out.reserve(horizon);
    EnvState s{initial, 0, Rng(seed)};
    out.push_back(s.true_occupancy);
    for (std::size_t t = 1; t < horizon; ++t) {
        s = step(std::move(s), matrices);
        out.push_back(s.true_occupancy);
    }
    return out;
}

/// Length-T trajectory whose first state is drawn from the stationary distribution.
inline std::vector<OccupancyVector> sample_occupancy(std::span<const TransitionMatrix> matrices, std::size_t horizon,
                                                     std::uint64_t seed)
{
    if (horizon < 1) {
        throw std::invalid_argument("sample_occupancy: horizon must be >= 1");
    }
    Rng rng(seed);
    auto initial = draw_stationary(matrices, rng);
    return sample_occupancy(matrices, horizon, rng(), initial);
}

} // namespace skyspec
