#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "skyspec/dataset_io.hpp"
#include "skyspec/fft.hpp"
#include "skyspec/iq_synth.hpp"
#include "skyspec/sensing.hpp"

using namespace skyspec;

namespace {

SynthConfig small_layout(std::uint64_t seed = 1)
{
    SynthConfig c;
    c.num_subchannels = 16;
    c.samples_per_observation = 1024;
    c.subcarriers_per_subchannel = 36;
    c.seed = seed;
    return c;
}

double mean_power(const std::vector<cplx>& x)
{
    double p = 0.0;
    for (const auto& v : x) {
        p += std::norm(v);
    }
    return p / static_cast<double>(x.size());
}

std::vector<cplx> naive_dft(const std::vector<cplx>& x)
{
    const auto n = x.size();
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
            acc += x[t] * cplx{std::cos(ang), std::sin(ang)};
        }
        out[k] = acc / std::sqrt(static_cast<double>(n));
    }
    return out;
}

std::vector<OccupancyVector> labels_of(const Dataset& ds, const std::vector<std::size_t>& idx)
{
    std::vector<OccupancyVector> out;
    for (auto i : idx) {
        out.push_back(ds.observations[i].label);
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// fft

TEST(Fft, MatchesNaiveDft)
{
    Rng rng(4);
    for (std::size_t n : {1U, 2U, 8U, 64U}) {
        std::vector<cplx> x(n);
        for (auto& v : x) {
            v = {rng.normal(), rng.normal()};
        }
        const auto fast = fft::forward(x);
        const auto slow = naive_dft(x);
        for (std::size_t k = 0; k < n; ++k) {
            EXPECT_NEAR(std::abs(fast[k] - slow[k]), 0.0, 1e-10);
        }
        const auto back = fft::inverse(fast);
        for (std::size_t k = 0; k < n; ++k) {
            EXPECT_NEAR(std::abs(back[k] - x[k]), 0.0, 1e-12);
        }
    }
}

TEST(Fft, ParsevalAndWindow)
{
    Rng rng(5);
    std::vector<cplx> x(256);
    for (auto& v : x) {
        v = {rng.normal(), rng.normal()};
    }
    EXPECT_NEAR(mean_power(fft::forward(x)), mean_power(x), 1e-10);
    const auto w = fft::hann_window(256);
    double p = 0.0;
    for (double v : w) {
        p += v * v;
    }
    EXPECT_NEAR(p / 256.0, 1.0, 1e-12);
    EXPECT_TRUE(fft::is_power_of_two(1024));
    EXPECT_FALSE(fft::is_power_of_two(1000));
}

// ---------------------------------------------------------------------------
// iq-synth

TEST(IqSynth, ConfigValidation)
{
    auto c = small_layout();
    EXPECT_NO_THROW(c.validate());
    c.samples_per_observation = 1000;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_layout();
    c.subcarriers_per_subchannel = 65;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_layout();
    Rng rng(1);
    EXPECT_THROW(synthesize_observation(OccupancyVector(3), 0.0, c, rng), DimensionError);
}

TEST(IqSynth, VacantLabelIsReferenceNoise)
{
    const auto c = small_layout();
    Rng rng(10);
    double p = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto obs = synthesize_observation(OccupancyVector(16, 0), 20.0, c, rng);
        ASSERT_EQ(obs.samples.size(), 1024U);
        p += mean_power(obs.samples);
    }
    EXPECT_NEAR(p / 100.0, kReferenceNoisePower, 0.05 * kReferenceNoisePower);
}

TEST(IqSynth, BusyEnergyStaysInItsBand)
{
    const auto c = small_layout();
    Rng rng(11);
    for (std::size_t m : {0U, 7U, 15U}) {
        OccupancyVector label(16, 0);
        label.set(m, 1);
        double in_band = 0.0, total = 0.0;
        for (int i = 0; i < 20; ++i) {
            const auto parts = synthesize_parts(label, 20.0, c, rng);
            // plain unitary transform, no window
            const auto spec = fft::forward(parts.signal);
            for (std::size_t k = 0; k < spec.size(); ++k) {
                const double e = std::norm(spec[k]);
                total += e;
                in_band += (k >= c.block_begin(m) && k < c.block_end(m)) ? e : 0.0;
            }
        }
        EXPECT_GE(in_band / total, 0.9) << "channel " << m;
    }
}

TEST(Sensing, BusyBandHoldsMostWindowedEnergy)
{
    // Hann leakage moves about 1/6 of each edge bin's power outward; with random
    // symbols single draws fluctuate, so pool 50 captures
    const auto c = small_layout();
    Rng rng(15);
    for (std::size_t m : {0U, 7U, 15U}) {
        OccupancyVector label(16, 0);
        label.set(m, 1);
        double in_band = 0.0, total = 0.0;
        for (int i = 0; i < 50; ++i) {
            const auto e = band_energies(synthesize_parts(label, 20.0, c, rng).signal, c);
            for (std::size_t j = 0; j < e.size(); ++j) {
                total += e[j];
            }
            in_band += e[m];
        }
        EXPECT_GE(in_band / total, 0.9) << "channel " << m;
    }
}

TEST(IqSynth, SignalPowerMatchesSinr)
{
    // per-sample power = amplitude^2 * (busy bins) / N
    const auto c = small_layout();
    Rng rng(12);
    OccupancyVector label(16, 0);
    label.set(3, 1);
    label.set(9, 1);
    const auto parts = synthesize_parts(label, 10.0, c, rng);
    EXPECT_NEAR(mean_power(parts.signal), 10.0 * 72.0 / 1024.0, 1e-9);
}

TEST(IqSynth, InterferenceIdentityCases)
{
    const auto c = small_layout();
    Rng rng(13);
    const auto obs = synthesize_observation(OccupancyVector{1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0}, 5.0, c, rng);
    const auto same = add_interference(obs, std::vector<OccupancyVector>{}, std::vector<double>{}, c, rng);
    EXPECT_EQ(same.samples, obs.samples);
    const std::vector<OccupancyVector> nb{OccupancyVector(16, 1)};
    const std::vector<double> skip{-INFINITY};
    EXPECT_EQ(add_interference(obs, nb, skip, c, rng).samples, obs.samples);
    EXPECT_THROW(add_interference(obs, nb, std::vector<double>{}, c, rng), DimensionError);
}

TEST(IqSynth, InterferencePowerAdds)
{
    const auto c = small_layout();
    Rng rng(14);
    const OccupancyVector label = OccupancyVector::from_mask(0x00ffU, 16);
    const OccupancyVector neighbour = OccupancyVector::from_mask(0xf0f0U, 16);
    const double sinr = 10.0;
    // neighbour amplitude^2 = 10^(sinr/10) * 10^(-3/10), spread over 8 * 36 bins of 1024
    const double expected = std::pow(10.0, sinr / 10.0) * std::pow(10.0, -0.3) * 8.0 * 36.0 / 1024.0;
    double increase = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto obs = synthesize_observation(label, sinr, c, rng);
        const auto with = add_interference(obs, std::vector<OccupancyVector>{neighbour}, std::vector<double>{-3.0}, c, rng);
        increase += mean_power(with.samples) - mean_power(obs.samples);
    }
    EXPECT_NEAR(increase / 100.0, expected, 0.1 * expected);
}

TEST(IqSynth, DatasetSizesAndSplit)
{
    auto c = small_layout(21);
    const auto ds = generate_dataset(c, uniform_source(16, 3), 100);
    EXPECT_EQ(ds.observations.size(), 400U);
    EXPECT_EQ(ds.split.train.size(), 280U);
    std::vector<std::size_t> all;
    for (const auto* part : {&ds.split.train, &ds.split.validation, &ds.split.test}) {
        all.insert(all.end(), part->begin(), part->end());
    }
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), 400U);
    for (std::size_t i = 0; i < all.size(); ++i) {
        ASSERT_EQ(all[i], i);
    }
    for (const auto& o : ds.observations) {
        EXPECT_EQ(o.samples.size(), 1024U);
        EXPECT_EQ(o.label.size(), 16U);
    }
}

TEST(IqSynth, DatasetFileIsDeterministicAndRoundTrips)
{
    auto c = small_layout(22);
    c.sinr_grid_db = {0.0, 20.0};
    c.interference_gains_db = {-6.0};
    c.num_uavs = 2;
    std::vector<TransitionMatrix> mats(16, TransitionMatrix{0.2, 0.3});
    std::ostringstream a, b;
    write_dataset(a, generate_dataset(c, markov_source(mats, 5), 20), c);
    write_dataset(b, generate_dataset(c, markov_source(mats, 5), 20), c);
    EXPECT_EQ(a.str(), b.str());

    std::istringstream in(a.str());
    const auto loaded = read_dataset(in);
    EXPECT_EQ(loaded.config.num_subchannels, 16U);
    EXPECT_EQ(loaded.config.num_uavs, 2U);
    EXPECT_EQ(loaded.config.sinr_grid_db, c.sinr_grid_db);
    ASSERT_EQ(loaded.dataset.observations.size(), 80U);
    std::ostringstream again;
    write_dataset(again, loaded.dataset, loaded.config);
    EXPECT_EQ(again.str(), a.str());

    std::istringstream bad("NOPE");
    EXPECT_THROW(read_dataset(bad), FormatError);
    std::istringstream truncated(a.str().substr(0, 100));
    EXPECT_THROW(read_dataset(truncated), FormatError);
}

// ---------------------------------------------------------------------------
// sensing

TEST(Sensing, BandEnergiesZeroAndWhiteNoise)
{
    const auto c = small_layout();
    const auto zero = band_energies(std::vector<cplx>(1024), c);
    for (double v : zero) {
        EXPECT_EQ(v, 0.0);
    }
    Rng rng(30);
    std::vector<double> avg(16, 0.0);
    for (int i = 0; i < 100; ++i) {
        const auto e = band_energies(complex_noise(1024, 1.0, rng), c);
        for (std::size_t m = 0; m < 16; ++m) {
            avg[m] += e[m] / 100.0;
        }
    }
    const auto [lo, hi] = std::minmax_element(avg.begin(), avg.end());
    EXPECT_LE(*hi / *lo, 2.0);
    // unit-power window keeps 36 bins of unit variance per band
    EXPECT_NEAR(avg[5], 36.0, 2.0);
}

TEST(Sensing, EnergyDetectExtremes)
{
    const std::vector<double> thr(4, 1.0);
    EXPECT_EQ(energy_detect(std::vector<double>(4, 0.5), thr), OccupancyVector(4, 0));
    EXPECT_EQ(energy_detect(std::vector<double>(4, 2.0), thr), OccupancyVector(4, 1));
    EXPECT_THROW(energy_detect(std::vector<double>(3, 2.0), thr), DimensionError);
}

TEST(Sensing, MicroMetricsExamples)
{
    const std::vector<OccupancyVector> truth{{0, 1, 0}, {1, 0, 1}};
    auto same = micro_metrics(truth, truth);
    EXPECT_DOUBLE_EQ(same.micro_precision, 1.0);
    EXPECT_DOUBLE_EQ(same.micro_recall, 1.0);
    EXPECT_DOUBLE_EQ(same.micro_f1, 1.0);

    // positive = vacant (0). truths have 3 vacant cells; predict 3 vacant, 2 right
    const std::vector<OccupancyVector> pred{{0, 0, 1}, {1, 0, 1}};
    auto m = micro_metrics(pred, truth);
    EXPECT_EQ(m.tp, 2U);
    EXPECT_EQ(m.fp, 1U);
    EXPECT_EQ(m.fn, 1U);
    EXPECT_DOUBLE_EQ(m.micro_precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.micro_recall, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.micro_f1, 2.0 / 3.0);

    const std::vector<OccupancyVector> all_pos(2, OccupancyVector(3, 0));
    auto a = micro_metrics(all_pos, truth);
    EXPECT_DOUBLE_EQ(a.micro_recall, 1.0);
    EXPECT_DOUBLE_EQ(a.micro_precision, 3.0 / 6.0);

    auto busy_pos = micro_metrics(pred, truth, 1);
    EXPECT_EQ(busy_pos.tp, 2U);
    EXPECT_THROW(micro_metrics(pred, truth, 2), std::invalid_argument);
}

TEST(Sensing, MicroMetricsUndefinedAndMerge)
{
    const std::vector<OccupancyVector> busy(2, OccupancyVector(2, 1));
    auto m = micro_metrics(busy, busy);
    EXPECT_FALSE(m.precision_defined);
    EXPECT_TRUE(std::isnan(m.micro_precision));
    SensingMetrics a, b;
    a.add(OccupancyVector{0, 0}, OccupancyVector{0, 1});
    b.add(OccupancyVector{1, 0}, OccupancyVector{0, 0});
    a += b;
    EXPECT_EQ(a.tp, 2U);
    EXPECT_EQ(a.fp, 1U);
    EXPECT_EQ(a.fn, 1U);
}

TEST(Sensing, CalibrationSeparated)
{
    Rng rng(31);
    std::vector<BandEnergies> e;
    std::vector<OccupancyVector> labels;
    for (int i = 0; i < 200; ++i) {
        OccupancyVector l(3);
        BandEnergies v(3);
        for (std::size_t m = 0; m < 3; ++m) {
            l.set(m, rng.bernoulli(0.5) ? 1 : 0);
            v[m] = l[m] ? rng.uniform(10.0, 20.0) : rng.uniform(0.0, 5.0);
        }
        e.push_back(v);
        labels.push_back(l);
    }
    const auto cal = calibrate_thresholds(e, labels, 3);
    EXPECT_DOUBLE_EQ(cal.validation_f1, 1.0);
    for (double t : cal.thresholds) {
        EXPECT_GT(t, 0.0);
        EXPECT_LE(t, 20.0);
    }
}

TEST(Sensing, CalibrationSingleClassWarns)
{
    std::vector<BandEnergies> e{{1.0, 2.0}, {3.0, 4.0}};
    std::vector<OccupancyVector> labels{{0, 1}, {0, 0}};
    const auto cal = calibrate_thresholds(e, labels, 2);
    EXPECT_TRUE(std::isinf(cal.thresholds[0]));
    EXPECT_EQ(cal.warnings.size(), 1U);
}

TEST(Sensing, CalibrationOnPureNoiseMatchesConstantPredictor)
{
    // identical energy laws for both classes: the held-out F1 can not beat the
    // best input-independent predictor by more than sampling noise
    Rng rng(32);
    auto draw = [&](std::size_t n, std::vector<BandEnergies>& e, std::vector<OccupancyVector>& l) {
        for (std::size_t i = 0; i < n; ++i) {
            OccupancyVector lab(4);
            BandEnergies v(4);
            for (std::size_t m = 0; m < 4; ++m) {
                lab.set(m, rng.bernoulli(0.4) ? 1 : 0);
                v[m] = rng.uniform(0.0, 1.0);
            }
            e.push_back(v);
            l.push_back(lab);
        }
    };
    std::vector<BandEnergies> ev, et;
    std::vector<OccupancyVector> lv, lt;
    draw(2000, ev, lv);
    draw(2000, et, lt);
    const auto cal = calibrate_thresholds(ev, lv, 4);
    std::vector<OccupancyVector> pred;
    for (const auto& v : et) {
        pred.push_back(energy_detect(v, cal.thresholds));
    }
    const double f1 = micro_metrics(pred, lt).micro_f1;
    const double oracle = constant_predictor_f1(lt);
    EXPECT_NEAR(oracle, 2.0 * 0.6 / 1.6, 0.02);
    EXPECT_NEAR(f1, oracle, 0.03);
    EXPECT_GE(cal.validation_f1, constant_predictor_f1(lv) - 1e-12);
}

namespace {

struct SensingFixture : ::testing::Test {
    static const Dataset& data()
    {
        static const Dataset ds = [] {
            auto c = small_layout(40);
            std::vector<TransitionMatrix> mats(16, TransitionMatrix{0.2, 0.3});
            return generate_dataset(c, markov_source(mats, 41), 400);
        }();
        return ds;
    }
    static ClassifierHyperparams hp()
    {
        ClassifierHyperparams h;
        h.hidden = {64, 64};
        h.epochs = 20;
        h.seed = 7;
        return h;
    }
};

} // namespace

TEST_F(SensingFixture, EnergyDetectorAt20Db)
{
    const auto& ds = data();
    const auto model = train_energy_detector(ds, small_layout());
    const auto by_sinr = evaluate_by_sinr(model, ds, ds.split.test);
    EXPECT_GE(by_sinr.at(20.0).micro_f1, 0.85);
    EXPECT_GT(by_sinr.at(20.0).micro_f1, by_sinr.at(-10.0).micro_f1);
}

TEST_F(SensingFixture, ClassifierAt20Db)
{
    const auto& ds = data();
    const auto model = train_classifier(ds, small_layout(), hp());
    const auto by_sinr = evaluate_by_sinr(model, ds, ds.split.test);
    EXPECT_GE(by_sinr.at(20.0).micro_precision, 0.9);
    EXPECT_GE(by_sinr.at(20.0).micro_recall, 0.9);
    ASSERT_EQ(model.training_curve.size(), 20U);
    EXPECT_LT(model.training_curve.back(), model.training_curve.front());
}

TEST_F(SensingFixture, TrainingIsDeterministic)
{
    const auto& ds = data();
    auto h = hp();
    h.epochs = 2;
    const auto a = train_classifier(ds, small_layout(), h);
    const auto b = train_classifier(ds, small_layout(), h);
    std::ostringstream sa, sb;
    write_sensing_model(sa, a);
    write_sensing_model(sb, b);
    EXPECT_EQ(sa.str(), sb.str());

    std::istringstream in(sa.str());
    const auto back = read_sensing_model(in);
    const auto& obs = ds.observations[ds.split.test.front()];
    EXPECT_EQ(predict_occupancy(back, obs), predict_occupancy(a, obs));
}

TEST_F(SensingFixture, EnergyModelRoundTrips)
{
    const auto& ds = data();
    const auto model = train_energy_detector(ds, small_layout());
    std::ostringstream out;
    write_sensing_model(out, model);
    std::istringstream in(out.str());
    const auto back = read_sensing_model(in);
    ASSERT_EQ(back.thresholds.size(), model.thresholds.size());
    for (std::size_t m = 0; m < back.thresholds.size(); ++m) {
        EXPECT_FLOAT_EQ(static_cast<float>(back.thresholds[m]), static_cast<float>(model.thresholds[m]));
    }
}

// A random-weight net makes calls independent of the truth. At call rate c and
// prevalence p the expected micro-F1 of such a guesser is 2cp / (c + p).
TEST_F(SensingFixture, UntrainedClassifierIsAtChance)
{
    const auto& ds = data();
    const auto model = untrained_classifier(ds, small_layout(), hp());
    std::vector<OccupancyVector> pred;
    const auto truth = labels_of(ds, ds.split.test);
    for (auto i : ds.split.test) {
        pred.push_back(predict_occupancy(model, ds.observations[i]));
    }
    const auto m = micro_metrics(pred, truth);
    const double cells = static_cast<double>(m.tp + m.fp + m.fn + m.tn);
    const double c = static_cast<double>(m.tp + m.fp) / cells;
    const double p = static_cast<double>(m.tp + m.fn) / cells;
    EXPECT_NEAR(m.micro_f1, 2.0 * c * p / (c + p), 0.1);
}

TEST_F(SensingFixture, ShuffledLabelsGiveConstantPredictor)
{
    // pair each capture with another capture's label, so inputs carry no information
    Dataset ds = data();
    Rng rng(50);
    std::vector<OccupancyVector> labels;
    for (const auto& o : ds.observations) {
        labels.push_back(o.label);
    }
    shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ds.observations[i].label = labels[i];
    }
    auto h = hp();
    h.epochs = 5;
    const auto model = train_classifier(ds, small_layout(), h);
    std::vector<OccupancyVector> pred;
    for (auto i : ds.split.test) {
        pred.push_back(predict_occupancy(model, ds.observations[i]));
    }
    const auto truth = labels_of(ds, ds.split.test);
    EXPECT_NEAR(micro_metrics(pred, truth).micro_f1, constant_predictor_f1(truth), 0.1);
}

TEST_F(SensingFixture, PredictChecksLength)
{
    const auto model = train_energy_detector(data(), small_layout());
    IQObservation obs;
    obs.samples.resize(512);
    EXPECT_THROW(predict_occupancy(model, obs), DimensionError);
}
