#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skyspec/error.hpp"
#include "skyspec/spectrum_core.hpp"

namespace skyspec {

/// n-out-of-N hard fusion: a channel is vacant iff at least n reports call it vacant.
/// n = 1 is the OR rule on vacancy, n = N the AND rule.
struct FusionRule {
    std::size_t n = 2;
};

namespace detail {

inline std::vector<std::size_t> vacancy_votes(std::span<const OccupancyVector> reports)
{
    if (reports.empty()) {
        throw DimensionError("fusion: no reports");
    }
    const auto m_count = reports.front().size();
    std::vector<std::size_t> votes(m_count, 0);
    for (const auto& r : reports) {
        if (r.size() != m_count) {
            throw DimensionError("fusion: report lengths differ");
        }
        for (std::size_t m = 0; m < m_count; ++m) {
            votes[m] += r.vacant(m) ? 1 : 0;
        }
    }
    return votes;
}

} // namespace detail

inline OccupancyVector fuse(std::span<const OccupancyVector> reports, FusionRule rule)
{
    if (rule.n < 1 || rule.n > reports.size()) {
        throw std::invalid_argument("fusion: n must lie in [1, " + std::to_string(reports.size()) + "]");
    }
    const auto votes = detail::vacancy_votes(reports);
    OccupancyVector fused(votes.size());
    for (std::size_t m = 0; m < votes.size(); ++m) {
        fused.set(m, votes[m] >= rule.n ? 0 : 1);
    }
    return fused;
}

/// fuse() for every n in 1..K from a single pass over the votes; entry i is n = i + 1.
inline std::vector<OccupancyVector> fusion_table(std::span<const OccupancyVector> reports)
{
    const auto votes = detail::vacancy_votes(reports);
    std::vector<OccupancyVector> table;
    table.reserve(reports.size());
    for (std::size_t n = 1; n <= reports.size(); ++n) {
        OccupancyVector fused(votes.size());
        for (std::size_t m = 0; m < votes.size(); ++m) {
            fused.set(m, votes[m] >= n ? 0 : 1);
        }
        table.push_back(std::move(fused));
    }
    return table;
}

struct PartialFusion {
    OccupancyVector fused;
    std::size_t reports_used = 0;
    std::vector<std::string> warnings;
};

/// Fusion when some UAVs did not report. Missing reports are dropped and N
/// shrinks; n is kept, so with fewer than n reports every channel fuses busy.
inline PartialFusion fuse_available(std::span<const std::optional<OccupancyVector>> reports, FusionRule rule,
                                    std::size_t num_subchannels)
{
    PartialFusion out;
    std::vector<OccupancyVector> present;
    for (std::size_t k = 0; k < reports.size(); ++k) {
        if (reports[k]) {
            present.push_back(*reports[k]);
        } else {
            out.warnings.push_back("uav " + std::to_string(k + 1) + " did not report; excluded from fusion");
        }
    }
    out.reports_used = present.size();
    if (rule.n < 1 || rule.n > reports.size()) {
        throw std::invalid_argument("fusion: n must lie in [1, " + std::to_string(reports.size()) + "]");
    }
    if (present.size() < rule.n) {
        out.warnings.push_back("fewer reports than n; all channels fused busy");
        out.fused = OccupancyVector(num_subchannels, 1);
        return out;
    }
    out.fused = fuse(present, rule);
    return out;
}

} // namespace skyspec
