#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "skyspec/error.hpp"

namespace skyspec {

/// Durations (seconds) of the request, sensing, broadcast and access sub-slots.
struct SlotTiming {
    double t_req = 0.0;
    double t_s = 0.0;
    double t_b = 0.0;
    double t_a = 0.0;

    double total() const { return t_req + t_s + t_b + t_a; }

    void validate() const
    {
        for (double d : {t_req, t_s, t_b, t_a}) {
            if (!(d >= 0.0) || !std::isfinite(d)) {
                throw std::invalid_argument("slot timing: durations must be finite and non-negative");
            }
        }
        if (!(total() > 0.0)) {
            throw std::invalid_argument("slot timing: total slot length must be positive");
        }
    }
};

struct RadioParams {
    double v_cc = 1.0;                  // receiver supply voltage, V
    double p_tx = 0.2;                  // transmit power, W
    double subchannel_bandwidth = 540e3; // B_m, Hz
    int num_subchannels = 16;           // M
    int num_uavs = 3;                   // K
    std::optional<double> system_bandwidth;

    void validate() const
    {
        if (!(v_cc > 0.0) || !(p_tx > 0.0) || !(subchannel_bandwidth > 0.0)) {
            throw std::invalid_argument("radio params: v_cc, p_tx and subchannel_bandwidth must be positive");
        }
        if (num_subchannels < 1 || num_uavs < 1) {
            throw std::invalid_argument("radio params: num_subchannels and num_uavs must be >= 1");
        }
        if (system_bandwidth && num_subchannels * subchannel_bandwidth > *system_bandwidth) {
            throw std::invalid_argument("radio params: M * B_m exceeds the system bandwidth");
        }
    }
};

/// Length-M occupancy bits, 0 = vacant (hole), 1 = busy.
class OccupancyVector {
public:
    OccupancyVector() = default;

    explicit OccupancyVector(std::size_t size, std::uint8_t fill = 0) : bits_(size, fill)
    {
        if (fill > 1) {
            throw std::invalid_argument("occupancy bits must be 0 or 1");
        }
    }

    OccupancyVector(std::initializer_list<int> bits)
    {
        bits_.reserve(bits.size());
        for (int b : bits) {
            push_checked(b);
        }
    }

    explicit OccupancyVector(std::span<const int> bits)
    {
        bits_.reserve(bits.size());
        for (int b : bits) {
            push_checked(b);
        }
    }

    /// Bit m of the mask is channel m (0-based), i.e. channel m+1 in 1-based terms.
    static OccupancyVector from_mask(std::uint32_t mask, std::size_t size)
    {
        if (size > 32) {
            throw DimensionError("occupancy masks hold at most 32 channels");
        }
        OccupancyVector v(size);
        for (std::size_t m = 0; m < size; ++m) {
            v.bits_[m] = static_cast<std::uint8_t>((mask >> m) & 1U);
        }
        return v;
    }

    std::uint32_t to_mask() const
    {
        if (bits_.size() > 32) {
            throw DimensionError("occupancy masks hold at most 32 channels");
        }
        std::uint32_t mask = 0;
        for (std::size_t m = 0; m < bits_.size(); ++m) {
            mask |= static_cast<std::uint32_t>(bits_[m]) << m;
        }
        return mask;
    }

    std::size_t size() const { return bits_.size(); }
    std::uint8_t operator[](std::size_t m) const { return bits_[m]; }
    std::uint8_t at(std::size_t m) const { return bits_.at(m); }

    void set(std::size_t m, std::uint8_t value)
    {
        if (value > 1) {
            throw std::invalid_argument("occupancy bits must be 0 or 1");
        }
        bits_.at(m) = value;
    }

    bool busy(std::size_t m) const { return bits_[m] != 0; }
    bool vacant(std::size_t m) const { return bits_[m] == 0; }

    std::size_t popcount() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1)); }
    std::size_t holes() const { return bits_.size() - popcount(); }

    std::span<const std::uint8_t> bits() const { return bits_; }

    std::string to_string() const
    {
        std::string s;
        s.reserve(bits_.size());
        for (auto b : bits_) {
            s.push_back(b ? '1' : '0');
        }
        return s;
    }

    bool operator==(const OccupancyVector&) const = default;

private:
    void push_checked(int b)
    {
        if (b != 0 && b != 1) {
            throw std::invalid_argument("occupancy bits must be 0 or 1");
        }
        bits_.push_back(static_cast<std::uint8_t>(b));
    }

    std::vector<std::uint8_t> bits_;
};

/// One scheduled (uav, sub-channel) pair; both indices 0-based.
struct AssignmentPair {
    std::size_t uav = 0;
    std::size_t channel = 0;
    bool operator==(const AssignmentPair&) const = default;
};

/// y_km = 1 iff (k, m) is present.
struct Assignment {
    std::vector<AssignmentPair> pairs;

    bool empty() const { return pairs.empty(); }
    std::size_t size() const { return pairs.size(); }

    std::optional<std::size_t> channel_of(std::size_t uav) const
    {
        for (const auto& p : pairs) {
            if (p.uav == uav) {
                return p.channel;
            }
        }
        return std::nullopt;
    }

    bool operator==(const Assignment&) const = default;
};

/// Outcome of one transmitting pair within a slot.
struct PairOutcome {
    std::size_t uav = 0;
    std::size_t channel = 0;
    int collision = 0;        // r_km in {-1, 0, 1}
    double throughput = 0.0;  // R_km, bits
    double access_cost = 0.0; // AC_km, J
};

struct SlotLedger {
    std::uint64_t slot = 0;
    Assignment assignment;               // pairs transmitting in this slot
    std::vector<PairOutcome> outcomes;   // one per assignment pair, same order
    std::vector<double> sensing_costs;   // SC, one per UAV that sensed
    double utility = 0.0;
    double ee = 0.0;                     // NaN when undefined
    std::size_t holes_detected = 0;      // holes in the fused vector f(t)
    std::size_t holes_true = 0;          // holes in the true state
};

// ---------------------------------------------------------------------------
// Closed-form slot quantities.

/// SC_km = t_s * V_CC^2 * B_m.
inline double sensing_cost(const SlotTiming& timing, const RadioParams& radio)
{
    return timing.t_s * radio.v_cc * radio.v_cc * radio.subchannel_bandwidth;
}

/// AC_km = t_a * P_tx.
inline double access_cost(const SlotTiming& timing, const RadioParams& radio)
{
    return timing.t_a * radio.p_tx;
}

/// R_km = t_a * B_m * log2(1 + SINR), SINR in linear scale.
inline double throughput(const SlotTiming& timing, const RadioParams& radio, double sinr_linear)
{
    if (!(sinr_linear >= 0.0)) {
        throw std::invalid_argument("throughput: SINR must be non-negative (linear scale)");
    }
    return timing.t_a * radio.subchannel_bandwidth * std::log2(1.0 + sinr_linear);
}

/// r_km(t) from the true state now and the fused prediction of the previous slot.
constexpr int collision_indicator(int true_state_now, int fused_prev)
{
    if (fused_prev != 0) {
        return 0;
    }
    return true_state_now == 0 ? 1 : -1;
}

/// Sum of r_km * R_km over transmitting pairs.
inline double slot_utility(std::span<const PairOutcome> outcomes)
{
    double u = 0.0;
    for (const auto& o : outcomes) {
        u += static_cast<double>(o.collision) * o.throughput;
    }
    return u;
}

/// Sum of y*r*R over sum of (y*AC + SC). Sensing costs cover every UAV that
/// sensed, assigned or not.
inline double energy_efficiency(std::span<const PairOutcome> outcomes, std::span<const double> sensing_costs)
{
    double energy = 0.0;
    for (const auto& o : outcomes) {
        energy += o.access_cost;
    }
    for (double sc : sensing_costs) {
        energy += sc;
    }
    if (!(energy > 0.0)) {
        throw UndefinedEnergyEfficiency();
    }
    return slot_utility(outcomes) / energy;
}

// ---------------------------------------------------------------------------
// Assignment constraints.

struct AssignmentViolation {
    enum class Kind { UavRepeated, ChannelRepeated, ExceedsHoleBudget, ChannelBusy, ChannelOutOfRange };
    Kind kind;
    std::size_t index = 0;  // offending uav or channel (0-based); pair count for ExceedsHoleBudget
    std::size_t limit = 0;  // hole budget for ExceedsHoleBudget

    std::string describe() const
    {
        std::ostringstream os;
        switch (kind) {
        case Kind::UavRepeated: os << "uav " << index + 1 << " assigned more than one channel"; break;
        case Kind::ChannelRepeated: os << "channel " << index + 1 << " assigned more than once"; break;
        case Kind::ExceedsHoleBudget: os << index << " pairs exceed hole count " << limit; break;
        case Kind::ChannelBusy: os << "assigned channel " << index + 1 << " is busy in the fused vector"; break;
        case Kind::ChannelOutOfRange: os << "channel " << index + 1 << " out of range"; break;
        }
        return os.str();
    }
};

/// Empty result means the assignment satisfies every constraint.
inline std::vector<AssignmentViolation> validate_assignment(const Assignment& assignment, const OccupancyVector& fused)
{
    using Kind = AssignmentViolation::Kind;
    std::vector<AssignmentViolation> out;
    const auto& pairs = assignment.pairs;

    // each repeated index is reported once, at its second occurrence
    auto occurrences_before = [&](std::size_t i, auto field) {
        std::size_t n = 0;
        for (std::size_t j = 0; j < i; ++j) {
            n += field(pairs[j]) == field(pairs[i]) ? 1 : 0;
        }
        return n;
    };
    const auto uav_of = [](const AssignmentPair& p) { return p.uav; };
    const auto channel_of = [](const AssignmentPair& p) { return p.channel; };

    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (occurrences_before(i, uav_of) == 1) {
            out.push_back({Kind::UavRepeated, pairs[i].uav, 0});
        }
        if (occurrences_before(i, channel_of) == 1) {
            out.push_back({Kind::ChannelRepeated, pairs[i].channel, 0});
        }
    }

    const std::size_t budget = fused.size() - fused.popcount();
    if (pairs.size() > budget) {
        out.push_back({Kind::ExceedsHoleBudget, pairs.size(), budget});
    }

    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (occurrences_before(i, channel_of) > 0) {
            continue;
        }
        const auto m = pairs[i].channel;
        if (m >= fused.size()) {
            out.push_back({Kind::ChannelOutOfRange, m, 0});
        } else if (fused.busy(m)) {
            out.push_back({Kind::ChannelBusy, m, 0});
        }
    }
    return out;
}

} // namespace skyspec
