#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "skyspec/channel_env.hpp"
#include "skyspec/csv.hpp"
#include "skyspec/fusion.hpp"
#include "skyspec/rng.hpp"
#include "skyspec/spectrum_core.hpp"

using namespace skyspec;

namespace {

SlotTiming timing(double t_s, double t_a) { return SlotTiming{0.0, t_s, 0.0, t_a}; }

RadioParams radio(double v_cc, double p_tx, double bw)
{
    RadioParams r;
    r.v_cc = v_cc;
    r.p_tx = p_tx;
    r.subchannel_bandwidth = bw;
    return r;
}

PairOutcome outcome(int r, double rate, double ac = 0.0)
{
    PairOutcome o;
    o.collision = r;
    o.throughput = rate;
    o.access_cost = ac;
    return o;
}

} // namespace

// ---------------------------------------------------------------------------
// rng

TEST(Rng, SameSeedSameStream)
{
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(a(), b());
    }
    EXPECT_NE(Rng(1)(), Rng(2)());
}

TEST(Rng, DerivedSeedsDiffer)
{
    EXPECT_NE(derive_seed(7, 0), derive_seed(7, 1));
    EXPECT_NE(derive_seed(7, 0), derive_seed(8, 0));
    EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(Rng, UniformAndNormalMoments)
{
    Rng rng(3);
    const int n = 200000;
    double su = 0.0, sn = 0.0, sn2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
    }
    EXPECT_NEAR(su / n, 0.5, 0.005);
    EXPECT_NEAR(sn / n, 0.0, 0.01);
    EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}

TEST(Rng, BelowStaysInRange)
{
    Rng rng(5);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto x = rng.below(7);
        ASSERT_LT(x, 7U);
        ++counts[x];
    }
    for (int c : counts) {
        EXPECT_NEAR(c, 10000, 500);
    }
    EXPECT_EQ(rng.below(1), 0U);
}

TEST(Rng, ShuffleIsPermutation)
{
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    Rng rng(9);
    auto w = v;
    shuffle(w.begin(), w.end(), rng);
    EXPECT_NE(v, w);
    std::sort(w.begin(), w.end());
    EXPECT_EQ(v, w);
}

// ---------------------------------------------------------------------------
// slot quantities

TEST(SpectrumCore, SensingCost)
{
    EXPECT_DOUBLE_EQ(sensing_cost(timing(0, 0), radio(1, 1, 5)), 0.0);
    EXPECT_DOUBLE_EQ(sensing_cost(timing(1, 0), radio(2, 1, 5)), 20.0);
    EXPECT_DOUBLE_EQ(sensing_cost(timing(2, 0), radio(1, 1, 1)), 2.0);
}

TEST(SpectrumCore, AccessCost)
{
    EXPECT_DOUBLE_EQ(access_cost(timing(0, 0), radio(1, 3, 1)), 0.0);
    EXPECT_DOUBLE_EQ(access_cost(timing(0, 2), radio(1, 0.5, 1)), 1.0);
    EXPECT_DOUBLE_EQ(access_cost(timing(0, 1), radio(1, 1, 1)), 1.0);
}

TEST(SpectrumCore, CostsLinearInDuration)
{
    const auto r = radio(1.3, 0.7, 540e3);
    EXPECT_DOUBLE_EQ(sensing_cost(timing(2e-3, 0), r), 2.0 * sensing_cost(timing(1e-3, 0), r));
    EXPECT_DOUBLE_EQ(access_cost(timing(0, 6e-3), r), 2.0 * access_cost(timing(0, 3e-3), r));
}

TEST(SpectrumCore, Throughput)
{
    EXPECT_DOUBLE_EQ(throughput(timing(0, 1), radio(1, 1, 1), 0.0), 0.0);
    EXPECT_DOUBLE_EQ(throughput(timing(0, 1), radio(1, 1, 1), 1.0), 1.0);
    EXPECT_DOUBLE_EQ(throughput(timing(0, 2), radio(1, 1, 3), 3.0), 12.0);
    EXPECT_THROW(throughput(timing(0, 1), radio(1, 1, 1), -0.5), std::invalid_argument);
}

TEST(SpectrumCore, ThroughputMonotone)
{
    double prev = -1.0;
    for (double s = 0.0; s < 1000.0; s = s * 1.7 + 0.01) {
        const double r = throughput(timing(0, 1e-3), radio(1, 1, 540e3), s);
        EXPECT_GE(r, prev);
        prev = r;
    }
}

TEST(SpectrumCore, CollisionIndicator)
{
    EXPECT_EQ(collision_indicator(0, 0), 1);
    EXPECT_EQ(collision_indicator(1, 0), -1);
    EXPECT_EQ(collision_indicator(1, 1), 0);
    EXPECT_EQ(collision_indicator(0, 1), 0);
}

TEST(SpectrumCore, SlotUtility)
{
    std::vector<PairOutcome> one{outcome(1, 12)};
    EXPECT_DOUBLE_EQ(slot_utility(one), 12.0);
    one[0].collision = -1;
    EXPECT_DOUBLE_EQ(slot_utility(one), -12.0);
    EXPECT_DOUBLE_EQ(slot_utility(std::vector<PairOutcome>{}), 0.0);
}

TEST(SpectrumCore, SlotUtilityAdditive)
{
    std::vector<PairOutcome> a{outcome(1, 3.5), outcome(-1, 2.0)};
    std::vector<PairOutcome> b{outcome(1, 7.25)};
    auto both = a;
    both.insert(both.end(), b.begin(), b.end());
    EXPECT_DOUBLE_EQ(slot_utility(both), slot_utility(a) + slot_utility(b));
}

TEST(SpectrumCore, EnergyEfficiency)
{
    const std::vector<double> sc{3.0};
    EXPECT_DOUBLE_EQ(energy_efficiency(std::vector<PairOutcome>{outcome(1, 10, 2)}, sc), 2.0);
    EXPECT_DOUBLE_EQ(energy_efficiency(std::vector<PairOutcome>{}, sc), 0.0);
    EXPECT_DOUBLE_EQ(energy_efficiency(std::vector<PairOutcome>{outcome(-1, 10, 2)}, sc), -2.0);
    EXPECT_THROW(energy_efficiency(std::vector<PairOutcome>{}, std::vector<double>{}), UndefinedEnergyEfficiency);
}

TEST(SpectrumCore, ValidateAssignmentExamples)
{
    using Kind = AssignmentViolation::Kind;
    // 1-based (1,1),(2,2) in the examples; 0-based here
    EXPECT_TRUE(validate_assignment(Assignment{{{0, 0}, {1, 1}}}, OccupancyVector{0, 0, 1, 1}).empty());

    auto twice = validate_assignment(Assignment{{{0, 0}, {1, 0}}}, OccupancyVector{0, 1, 1, 1});
    ASSERT_FALSE(twice.empty());
    EXPECT_TRUE(std::any_of(twice.begin(), twice.end(),
                            [](const auto& v) { return v.kind == Kind::ChannelRepeated && v.index == 0; }));

    auto busy = validate_assignment(Assignment{{{0, 0}}}, OccupancyVector{1, 1});
    ASSERT_EQ(busy.size(), 2U);
    EXPECT_EQ(busy[0].kind, Kind::ExceedsHoleBudget);
    EXPECT_EQ(busy[0].limit, 0U);
    EXPECT_EQ(busy[1].kind, Kind::ChannelBusy);
    EXPECT_EQ(busy[1].describe(), "assigned channel 1 is busy in the fused vector");
}

TEST(SpectrumCore, ValidateAssignmentUavRepeatedAndRange)
{
    using Kind = AssignmentViolation::Kind;
    auto v = validate_assignment(Assignment{{{0, 0}, {0, 1}}}, OccupancyVector{0, 0, 0});
    ASSERT_EQ(v.size(), 1U);
    EXPECT_EQ(v[0].kind, Kind::UavRepeated);
    auto r = validate_assignment(Assignment{{{0, 5}}}, OccupancyVector{0, 0});
    ASSERT_EQ(r.size(), 1U);
    EXPECT_EQ(r[0].kind, Kind::ChannelOutOfRange);
}

// Oracle: an assignment is valid iff uavs distinct, channels distinct and each
// channel in range and vacant. Checked against every assignment of up to 3
// UAVs onto every 3-channel fused vector, with the hole-budget property.
TEST(SpectrumCore, ValidateAssignmentExhaustive)
{
    const std::size_t m = 3;
    for (std::uint32_t mask = 0; mask < 8; ++mask) {
        const auto fused = OccupancyVector::from_mask(mask, m);
        // each of 3 uavs: absent, or channel 0..3 (3 is out of range)
        for (int code = 0; code < 125; ++code) {
            Assignment a;
            int c = code;
            for (std::size_t k = 0; k < 3; ++k, c /= 5) {
                if (c % 5 != 0) {
                    a.pairs.push_back({k, static_cast<std::size_t>(c % 5 - 1)});
                }
            }
            bool ok = true;
            for (std::size_t i = 0; i < a.pairs.size(); ++i) {
                const auto ch = a.pairs[i].channel;
                ok = ok && ch < m && fused.vacant(ch);
                for (std::size_t j = 0; j < i; ++j) {
                    ok = ok && a.pairs[j].channel != ch;
                }
            }
            const auto violations = validate_assignment(a, fused);
            EXPECT_EQ(violations.empty(), ok) << fused.to_string() << " code " << code;
            if (violations.empty()) {
                EXPECT_LE(a.size() + fused.popcount(), m);
            }
        }
    }
}

TEST(SpectrumCore, OccupancyVectorBasics)
{
    OccupancyVector v{1, 0, 1};
    EXPECT_EQ(v.popcount(), 2U);
    EXPECT_EQ(v.holes(), 1U);
    EXPECT_EQ(v.to_mask(), 5U);
    EXPECT_EQ(OccupancyVector::from_mask(5, 3), v);
    EXPECT_EQ(v.to_string(), "101");
    EXPECT_THROW((OccupancyVector{0, 2}), std::invalid_argument);
    EXPECT_THROW(v.set(0, 3), std::invalid_argument);
}

TEST(SpectrumCore, ParamsValidate)
{
    EXPECT_THROW((SlotTiming{0, 0, 0, 0}.validate()), std::invalid_argument);
    EXPECT_THROW((SlotTiming{-1, 1, 0, 0}.validate()), std::invalid_argument);
    auto r = radio(1, 1, 1e6);
    r.num_subchannels = 16;
    r.system_bandwidth = 10e6;
    EXPECT_THROW(r.validate(), std::invalid_argument);
    r.system_bandwidth = 20e6;
    EXPECT_NO_THROW(r.validate());
}

// ---------------------------------------------------------------------------
// channel-env

TEST(ChannelEnv, TransitionRowsSumToOne)
{
    for (double p01 : {0.0, 0.2, 0.5, 1.0}) {
        for (double p10 : {0.0, 0.3, 1.0}) {
            TransitionMatrix p{p01, p10};
            EXPECT_EQ(p.row(0)[0] + p.row(0)[1], 1.0);
            EXPECT_EQ(p.row(1)[0] + p.row(1)[1], 1.0);
        }
    }
    EXPECT_THROW((TransitionMatrix{1.2, 0.1}.validate()), std::invalid_argument);
}

TEST(ChannelEnv, IdentityDynamicsIsAbsorbing)
{
    std::vector<TransitionMatrix> mats(2, TransitionMatrix{0.0, 0.0});
    EnvState s{OccupancyVector{0, 1}, 0, Rng(1)};
    for (int t = 0; t < 50; ++t) {
        s = step(std::move(s), mats);
        ASSERT_EQ(s.true_occupancy, (OccupancyVector{0, 1}));
    }
    EXPECT_EQ(s.slot, 50U);
}

TEST(ChannelEnv, DeterministicFlip)
{
    std::vector<TransitionMatrix> mats(1, TransitionMatrix{1.0, 1.0});
    EnvState s{OccupancyVector{0}, 0, Rng(1)};
    for (int t = 1; t <= 10; ++t) {
        s = step(std::move(s), mats);
        ASSERT_EQ(s.true_occupancy[0], t % 2);
    }
}

TEST(ChannelEnv, LongRunBusyFraction)
{
    std::vector<TransitionMatrix> mats(1, TransitionMatrix{0.2, 0.3});
    EnvState s{OccupancyVector{0}, 0, Rng(11)};
    std::size_t busy = 0;
    const std::size_t n = 1000000;
    for (std::size_t t = 0; t < n; ++t) {
        s = step(std::move(s), mats);
        busy += s.true_occupancy[0];
    }
    EXPECT_NEAR(static_cast<double>(busy) / n, 0.2 / (0.2 + 0.3), 0.01);
}

TEST(ChannelEnv, StationaryDistribution)
{
    auto [v1, b1] = stationary_distribution({0.5, 0.5});
    EXPECT_DOUBLE_EQ(v1, 0.5);
    EXPECT_DOUBLE_EQ(b1, 0.5);
    auto [v2, b2] = stationary_distribution({0.2, 0.3});
    // pi P = pi by hand: pi_v * p01 = pi_b * p10 and pi_v + pi_b = 1
    EXPECT_NEAR(v2, 0.6, 1e-15);
    EXPECT_NEAR(b2, 0.4, 1e-15);
    EXPECT_NEAR(v2 * 0.2, b2 * 0.3, 1e-15);
    auto [v3, b3] = stationary_distribution({1.0, 0.0});
    EXPECT_DOUBLE_EQ(v3, 0.0);
    EXPECT_DOUBLE_EQ(b3, 1.0);
    EXPECT_THROW(stationary_distribution({0.0, 0.0}), NonUniqueStationary);
}

TEST(ChannelEnv, SinrLookupAndConversion)
{
    LinkModel link{{0.0}, {{0.0, 20.0, -10.0}}};
    EXPECT_NO_THROW(link.validate(1, 3));
    EXPECT_THROW(link.validate(2, 3), DimensionError);
    EXPECT_DOUBLE_EQ(db_to_linear(sinr_for(link, 0, 0)), 1.0);
    EXPECT_NEAR(db_to_linear(sinr_for(link, 0, 1)), 100.0, 1e-12);
    EXPECT_NEAR(db_to_linear(sinr_for(link, 0, 2)), 0.1, 1e-15);
    EXPECT_THROW(sinr_for(link, 1, 0), std::out_of_range);
    EXPECT_DOUBLE_EQ(link.max_access_sinr_db(), 20.0);
}

TEST(ChannelEnv, ConstantTrajectoryUnderIdentity)
{
    // identity dynamics have no unique stationary law, so start from a given state
    std::vector<TransitionMatrix> mats(3, TransitionMatrix{0.0, 0.0});
    const OccupancyVector start{1, 0, 1};
    const auto traj = sample_occupancy(mats, 20, 4, start);
    ASSERT_EQ(traj.size(), 20U);
    for (const auto& f : traj) {
        EXPECT_EQ(f, start);
    }
    EXPECT_THROW(sample_occupancy(mats, 20, 4), NonUniqueStationary);
}

TEST(ChannelEnv, SameSeedSameTrajectory)
{
    std::vector<TransitionMatrix> mats{{0.2, 0.3}, {0.1, 0.5}, {0.4, 0.4}};
    EXPECT_EQ(sample_occupancy(mats, 500, 77), sample_occupancy(mats, 500, 77));
    EXPECT_NE(sample_occupancy(mats, 500, 77), sample_occupancy(mats, 500, 78));
    EXPECT_THROW(sample_occupancy(mats, 0, 1), std::invalid_argument);
}

TEST(ChannelEnv, EmpiricalRatesMatchMatrices)
{
    std::vector<TransitionMatrix> mats{{0.2, 0.3}, {0.05, 0.6}, {0.5, 0.1}};
    const std::size_t horizon = 100000;
    const auto traj = sample_occupancy(mats, horizon, 2024);
    for (std::size_t m = 0; m < mats.size(); ++m) {
        std::size_t busy = 0, from0 = 0, to1 = 0, from1 = 0, to0 = 0;
        for (std::size_t t = 0; t < horizon; ++t) {
            ASSERT_EQ(traj[t].size(), mats.size());
            busy += traj[t][m];
            if (t + 1 < horizon) {
                if (traj[t][m] == 0) {
                    ++from0;
                    to1 += traj[t + 1][m];
                } else {
                    ++from1;
                    to0 += 1 - traj[t + 1][m];
                }
            }
        }
        const double expected_busy = mats[m].p01 / (mats[m].p01 + mats[m].p10);
        EXPECT_NEAR(static_cast<double>(busy) / horizon, expected_busy, 0.02);
        EXPECT_NEAR(static_cast<double>(to1) / from0, mats[m].p01, 0.02);
        EXPECT_NEAR(static_cast<double>(to0) / from1, mats[m].p10, 0.02);
    }
}

TEST(ChannelEnv, StepChecksDimensions)
{
    std::vector<TransitionMatrix> mats(2);
    EnvState s{OccupancyVector{0, 0, 0}, 0, Rng(1)};
    EXPECT_THROW(step(s, mats), DimensionError);
}

// ---------------------------------------------------------------------------
// fusion

namespace {

// Direct evaluation of the n-out-of-K rule: busy unless sum of busy bits
// is at most K - n.
int brute_fuse(const std::vector<int>& busy_votes, std::size_t n)
{
    int busy_sum = 0;
    for (int b : busy_votes) {
        busy_sum += b;
    }
    return busy_sum <= static_cast<int>(busy_votes.size()) - static_cast<int>(n) ? 0 : 1;
}

} // namespace

TEST(Fusion, Examples)
{
    const std::vector<OccupancyVector> r1{{0}, {0}, {1}};
    EXPECT_EQ(fuse(r1, {2}), (OccupancyVector{0}));
    EXPECT_EQ(fuse(r1, {3}), (OccupancyVector{1}));
    const std::vector<OccupancyVector> r2{{1}, {1}, {0}};
    EXPECT_EQ(fuse(r2, {1}), (OccupancyVector{0}));
}

TEST(Fusion, Errors)
{
    const std::vector<OccupancyVector> r{{0, 1}, {1, 1}};
    EXPECT_THROW(fuse(r, {0}), std::invalid_argument);
    EXPECT_THROW(fuse(r, {3}), std::invalid_argument);
    const std::vector<OccupancyVector> ragged{{0, 1}, {1}};
    EXPECT_THROW(fuse(ragged, {1}), DimensionError);
}

TEST(Fusion, ExhaustiveOracle)
{
    for (std::size_t k = 1; k <= 4; ++k) {
        for (std::size_t m = 1; m <= 4; ++m) {
            const std::uint32_t combos = 1U << (k * m);
            for (std::uint32_t code = 0; code < combos; ++code) {
                std::vector<OccupancyVector> reports;
                for (std::size_t i = 0; i < k; ++i) {
                    reports.push_back(OccupancyVector::from_mask((code >> (i * m)) & ((1U << m) - 1), m));
                }
                const auto table = fusion_table(reports);
                for (std::size_t n = 1; n <= k; ++n) {
                    const auto fused = fuse(reports, {n});
                    ASSERT_EQ(table[n - 1], fused);
                    for (std::size_t ch = 0; ch < m; ++ch) {
                        std::vector<int> votes;
                        for (const auto& r : reports) {
                            votes.push_back(r[ch]);
                        }
                        ASSERT_EQ(fused[ch], brute_fuse(votes, n));
                    }
                }
            }
        }
    }
}

TEST(Fusion, MonotoneUnanimousPermutation)
{
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 1 + rng.below(5);
        const std::size_t m = 1 + rng.below(8);
        std::vector<OccupancyVector> reports;
        for (std::size_t i = 0; i < k; ++i) {
            reports.push_back(OccupancyVector::from_mask(static_cast<std::uint32_t>(rng.below(1U << m)), m));
        }
        const auto table = fusion_table(reports);
        for (std::size_t n = 1; n < k; ++n) {
            for (std::size_t ch = 0; ch < m; ++ch) {
                if (table[n - 1][ch] == 1) {
                    EXPECT_EQ(table[n][ch], 1);
                }
            }
            EXPECT_GE(table[n - 1].holes(), table[n].holes());
        }
        auto permuted = reports;
        shuffle(permuted.begin(), permuted.end(), rng);
        EXPECT_EQ(fusion_table(permuted), table);
    }
    const std::vector<OccupancyVector> vacant(3, OccupancyVector(4, 0));
    const std::vector<OccupancyVector> busy(3, OccupancyVector(4, 1));
    for (std::size_t n = 1; n <= 3; ++n) {
        EXPECT_EQ(fuse(vacant, {n}), OccupancyVector(4, 0));
        EXPECT_EQ(fuse(busy, {n}), OccupancyVector(4, 1));
    }
}

TEST(Fusion, SingleReport)
{
    const std::vector<OccupancyVector> one{{1, 0, 1, 1}};
    const auto table = fusion_table(one);
    ASSERT_EQ(table.size(), 1U);
    EXPECT_EQ(table[0], one[0]);
}

TEST(Fusion, MissingReports)
{
    std::vector<std::optional<OccupancyVector>> reports{OccupancyVector{0, 1}, std::nullopt, OccupancyVector{0, 0}};
    auto out = fuse_available(reports, {2}, 2);
    EXPECT_EQ(out.reports_used, 2U);
    EXPECT_EQ(out.fused, (OccupancyVector{0, 1}));
    EXPECT_EQ(out.warnings.size(), 1U);

    auto starved = fuse_available(reports, {3}, 2);
    EXPECT_EQ(starved.fused, (OccupancyVector{1, 1}));
    EXPECT_EQ(starved.warnings.size(), 2U);
}

// ---------------------------------------------------------------------------
// csv

TEST(Csv, FormatRoundTrips)
{
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, 0.0}) {
        EXPECT_EQ(csv::parse_double(csv::format(v)), v);
    }
    EXPECT_EQ(csv::format(std::nan("")), "nan");
    EXPECT_TRUE(std::isnan(csv::parse_double("nan")));
    EXPECT_EQ(csv::format(-INFINITY), "-inf");
    EXPECT_THROW(csv::parse_double("1.5x"), FormatError);
}

TEST(Csv, WriteAndRead)
{
    const auto path = std::filesystem::temp_directory_path() / "skyspec_csv_test" / "t.csv";
    csv::Writer w({"a", "b", "c"});
    w.row(1, 2.5, std::string("x"));
    w.row(std::uint64_t{7}, std::nan(""), "");
    w.save(path);
    const auto t = csv::read(path);
    ASSERT_EQ(t.rows.size(), 2U);
    EXPECT_EQ(t.column("b"), 1U);
    EXPECT_EQ(t.rows[0][2], "x");
    EXPECT_EQ(t.rows[1][2], "");
    EXPECT_EQ(t.rows[1][1], "nan");
    EXPECT_THROW(t.column("zzz"), FormatError);
    std::filesystem::remove_all(path.parent_path());
}
