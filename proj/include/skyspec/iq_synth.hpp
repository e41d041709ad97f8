#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skyspec/channel_env.hpp"
#include "skyspec/error.hpp"
#include "skyspec/fft.hpp"
#include "skyspec/rng.hpp"
#include "skyspec/spectrum_core.hpp"

namespace skyspec {

using cplx = std::complex<double>;

/// Time-domain noise variance per complex sample. Signals are scaled against it.
inline constexpr double kReferenceNoisePower = 1.0;

struct SynthConfig {
    std::size_t num_subchannels = 16;
    std::size_t samples_per_observation = 1024;
    // 3 resource blocks x 12 subcarriers; 16 x 36 = 576 of 1024 bins occupied
    std::size_t subcarriers_per_subchannel = 36;
    std::vector<double> sinr_grid_db{-10.0, 0.0, 10.0, 20.0};
    std::vector<double> interference_gains_db;
    std::uint64_t seed = 0;
    std::size_t num_uavs = 1;
    double train_fraction = 0.70;
    double validation_fraction = 0.15;

    void validate() const
    {
        if (num_subchannels < 1 || num_subchannels > 32) {
            throw std::invalid_argument("synth config: num_subchannels must be in [1, 32]");
        }
        if (!fft::is_power_of_two(samples_per_observation)) {
            throw std::invalid_argument("synth config: samples_per_observation must be a power of two");
        }
        if (subcarriers_per_subchannel < 1 ||
            num_subchannels * subcarriers_per_subchannel > samples_per_observation) {
            throw std::invalid_argument("synth config: M * subcarriers_per_subchannel must not exceed N");
        }
        if (sinr_grid_db.empty()) {
            throw std::invalid_argument("synth config: SINR grid must not be empty");
        }
        if (num_uavs < 1) {
            throw std::invalid_argument("synth config: num_uavs must be >= 1");
        }
        if (!(train_fraction > 0.0) || !(validation_fraction >= 0.0) || train_fraction + validation_fraction > 1.0) {
            throw std::invalid_argument("synth config: invalid split fractions");
        }
    }

    /// Occupied blocks are centred in the N bins; the rest are guard bins.
    std::size_t first_bin() const
    {
        return (samples_per_observation - num_subchannels * subcarriers_per_subchannel) / 2;
    }

    std::size_t block_begin(std::size_t m) const { return first_bin() + m * subcarriers_per_subchannel; }
    std::size_t block_end(std::size_t m) const { return block_begin(m) + subcarriers_per_subchannel; }
};

struct IQObservation {
    std::vector<cplx> samples;
    OccupancyVector label;
    double sinr_db = 0.0;
    std::size_t uav_index = 0;
};

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

struct Dataset {
    std::vector<IQObservation> observations;
    DatasetSplit split;
};

/// Frequency-domain QPSK fill of the busy blocks at the given per-subcarrier amplitude.
inline std::vector<cplx> synthesize_spectrum(const OccupancyVector& label, double amplitude, const SynthConfig& config,
                                             Rng& rng)
{
    if (label.size() != config.num_subchannels) {
        throw DimensionError("synthesis: label length " + std::to_string(label.size()) + " != M " +
                             std::to_string(config.num_subchannels));
    }
    std::vector<cplx> spectrum(config.samples_per_observation, cplx{0.0, 0.0});
    const double s = amplitude / std::sqrt(2.0);
    for (std::size_t m = 0; m < config.num_subchannels; ++m) {
        if (label.vacant(m)) {
            continue;
        }
        for (std::size_t bin = config.block_begin(m); bin < config.block_end(m); ++bin) {
            const auto bits = rng() >> 62;
            spectrum[bin] = cplx{(bits & 1U) ? s : -s, (bits & 2U) ? s : -s};
        }
    }
    return spectrum;
}

/// Noise-free time-domain waveform for a label.
inline std::vector<cplx> synthesize_signal(const OccupancyVector& label, double amplitude, const SynthConfig& config,
                                           Rng& rng)
{
    return fft::inverse(synthesize_spectrum(label, amplitude, config, rng));
}

/// Complex white Gaussian noise with the given per-sample variance.
inline std::vector<cplx> complex_noise(std::size_t n, double variance, Rng& rng)
{
    std::vector<cplx> out(n);
    const double sd = std::sqrt(variance / 2.0);
    for (auto& v : out) {
        const double re = rng.normal();
        const double im = rng.normal();
        v = cplx{sd * re, sd * im};
    }
    return out;
}

/// Per-subcarrier signal amplitude giving the target SINR against the reference noise.
inline double amplitude_for_sinr(double sinr_db) { return std::sqrt(db_to_linear(sinr_db) * kReferenceNoisePower); }

struct SynthesisParts {
    std::vector<cplx> signal;
    std::vector<cplx> noise;
};

/// Signal and noise components before summation; exposed for measurement.
inline SynthesisParts synthesize_parts(const OccupancyVector& label, double sinr_db, const SynthConfig& config, Rng& rng)
{
    SynthesisParts parts;
    parts.signal = synthesize_signal(label, amplitude_for_sinr(sinr_db), config, rng);
    parts.noise = complex_noise(config.samples_per_observation, kReferenceNoisePower, rng);
    return parts;
}

/// One labelled capture. SINR is the per-subcarrier signal-to-noise power
/// ratio over occupied bins, so it does not depend on how many channels are busy.
inline IQObservation synthesize_observation(const OccupancyVector& label, double sinr_db, const SynthConfig& config,
                                            Rng& rng, std::size_t uav_index = 0)
{
    auto parts = synthesize_parts(label, sinr_db, config, rng);
    IQObservation obs;
    obs.samples = std::move(parts.signal);
    for (std::size_t i = 0; i < obs.samples.size(); ++i) {
        obs.samples[i] += parts.noise[i];
    }
    obs.label = label;
    obs.sinr_db = sinr_db;
    obs.uav_index = uav_index;
    return obs;
}

/// Adds neighbour-cell waveforms scaled by 10^(gain/20) relative to the serving
/// signal amplitude. A gain of -inf skips that neighbour. Label is untouched.
inline IQObservation add_interference(IQObservation observation, std::span<const OccupancyVector> neighbor_labels,
                                      std::span<const double> gains_db, const SynthConfig& config, Rng& rng)
{
    if (neighbor_labels.size() != gains_db.size()) {
        throw DimensionError("add_interference: neighbour and gain lists differ in length");
    }
    if (observation.samples.size() != config.samples_per_observation) {
        throw DimensionError("add_interference: observation length differs from N");
    }
    for (std::size_t i = 0; i < neighbor_labels.size(); ++i) {
        if (std::isinf(gains_db[i]) && gains_db[i] < 0.0) {
            continue;
        }
        const double amplitude = amplitude_for_sinr(observation.sinr_db) * std::pow(10.0, gains_db[i] / 20.0);
        const auto wave = synthesize_signal(neighbor_labels[i], amplitude, config, rng);
        for (std::size_t n = 0; n < wave.size(); ++n) {
            observation.samples[n] += wave[n];
        }
    }
    return observation;
}

/// Label stream for dataset generation.
using OccupancySource = std::function<OccupancyVector()>;

/// Continuing Markov trajectory, starting from the stationary distribution.
inline OccupancySource markov_source(std::vector<TransitionMatrix> matrices, std::uint64_t seed)
{
    auto rng = std::make_shared<Rng>(seed);
    auto state = std::make_shared<EnvState>();
    state->true_occupancy = draw_stationary(matrices, *rng);
    state->rng = Rng((*rng)());
    auto first = std::make_shared<bool>(true);
    return [matrices = std::move(matrices), state, first]() {
        if (*first) {
            *first = false;
        } else {
            *state = step(std::move(*state), matrices);
        }
        return state->true_occupancy;
    };
}

/// Independent labels, every one of the 2^M combinations equally likely.
inline OccupancySource uniform_source(std::size_t num_subchannels, std::uint64_t seed)
{
    auto rng = std::make_shared<Rng>(seed);
    return [num_subchannels, rng]() {
        const auto mask = static_cast<std::uint32_t>((*rng)() & ((num_subchannels >= 32) ? 0xffffffffULL
                                                                                         : ((1ULL << num_subchannels) - 1)));
        return OccupancyVector::from_mask(mask, num_subchannels);
    };
}

/// Stratified train/validation/test split. Within each SINR group the order is
/// shuffled with a seed-derived stream, then cut by the configured fractions.
inline DatasetSplit make_split(std::span<const IQObservation> observations, const SynthConfig& config)
{
    std::map<double, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < observations.size(); ++i) {
        groups[observations[i].sinr_db].push_back(i);
    }
    DatasetSplit split;
    Rng rng(derive_seed(config.seed, 0x5b1172ULL));
    for (auto& [sinr, idx] : groups) {
        (void)sinr;
        shuffle(idx.begin(), idx.end(), rng);
        const auto n = static_cast<double>(idx.size());
        const auto n_train = static_cast<std::size_t>(std::llround(n * config.train_fraction));
        const auto n_val = std::min(idx.size() - n_train,
                                    static_cast<std::size_t>(std::llround(n * config.validation_fraction)));
        split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        split.validation.insert(split.validation.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                                idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
        split.test.insert(split.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    }
    for (auto* part : {&split.train, &split.validation, &split.test}) {
        std::sort(part->begin(), part->end());
    }
    return split;
}

/// For each grid SINR, count_per_sinr labels are drawn from the source and
/// each is captured once per UAV. Observation i uses the substream
/// derive_seed(seed, i), so records are independent of generation order.
inline Dataset generate_dataset(const SynthConfig& config, const OccupancySource& source, std::size_t count_per_sinr)
{
    config.validate();
    if (count_per_sinr < 1) {
        throw std::invalid_argument("generate_dataset: count_per_sinr must be >= 1");
    }
    Dataset ds;
    ds.observations.reserve(config.sinr_grid_db.size() * count_per_sinr * config.num_uavs);
    std::uint64_t index = 0;
    for (double sinr : config.sinr_grid_db) {
        for (std::size_t c = 0; c < count_per_sinr; ++c) {
            const auto label = source();
            for (std::size_t k = 0; k < config.num_uavs; ++k) {
                Rng rng(derive_seed(config.seed, index++));
                auto obs = synthesize_observation(label, sinr, config, rng, k);
                if (!config.interference_gains_db.empty()) {
                    std::vector<OccupancyVector> neighbors;
                    for (std::size_t j = 0; j < config.interference_gains_db.size(); ++j) {
                        const auto mask = static_cast<std::uint32_t>(rng() & ((1ULL << config.num_subchannels) - 1));
                        neighbors.push_back(OccupancyVector::from_mask(mask, config.num_subchannels));
                    }
                    obs = add_interference(std::move(obs), neighbors, config.interference_gains_db, config, rng);
                }
                ds.observations.push_back(std::move(obs));
            }
        }
    }
    ds.split = make_split(ds.observations, config);
    return ds;
}

} // namespace skyspec
