#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skyspec/binary_io.hpp"
#include "skyspec/checkpoint.hpp"
#include "skyspec/error.hpp"
#include "skyspec/fft.hpp"
#include "skyspec/iq_synth.hpp"
#include "skyspec/neuralnet.hpp"
#include "skyspec/spectrum_core.hpp"

namespace skyspec {

using BandEnergies = std::vector<double>;

/// Hann-windowed unitary DFT of the capture, then |X|^2 summed over each
/// sub-channel's subcarrier block.
inline BandEnergies band_energies(std::span<const cplx> samples, const SynthConfig& layout)
{
    const auto n = samples.size();
    if (n != layout.samples_per_observation || n < layout.num_subchannels) {
        throw DimensionError("band_energies: capture length differs from configured N");
    }
    thread_local std::vector<double> window;
    if (window.size() != n) {
        window = fft::hann_window(n);
    }
    std::vector<cplx> windowed(n);
    for (std::size_t i = 0; i < n; ++i) {
        windowed[i] = samples[i] * window[i];
    }
    const auto spectrum = fft::forward(windowed);
    BandEnergies e(layout.num_subchannels, 0.0);
    for (std::size_t m = 0; m < layout.num_subchannels; ++m) {
        for (std::size_t bin = layout.block_begin(m); bin < layout.block_end(m); ++bin) {
            e[m] += std::norm(spectrum[bin]);
        }
    }
    return e;
}

inline BandEnergies band_energies(const IQObservation& obs, const SynthConfig& layout)
{
    return band_energies(obs.samples, layout);
}

/// Bit m is busy iff energies[m] >= thresholds[m].
inline OccupancyVector energy_detect(std::span<const double> energies, std::span<const double> thresholds)
{
    if (energies.size() != thresholds.size()) {
        throw DimensionError("energy_detect: thresholds length differs from band count");
    }
    OccupancyVector out(energies.size());
    for (std::size_t m = 0; m < energies.size(); ++m) {
        out.set(m, energies[m] >= thresholds[m] ? 1 : 0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Micro-averaged metrics.

struct SensingMetrics {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;
    double micro_precision = std::numeric_limits<double>::quiet_NaN();
    double micro_recall = std::numeric_limits<double>::quiet_NaN();
    double micro_f1 = std::numeric_limits<double>::quiet_NaN();
    bool precision_defined = false;
    bool recall_defined = false;
    bool f1_defined = false;

    /// Recomputes the scores from the counts. Undefined scores stay NaN.
    void finalize()
    {
        precision_defined = tp + fp > 0;
        recall_defined = tp + fn > 0;
        micro_precision = precision_defined ? static_cast<double>(tp) / static_cast<double>(tp + fp)
                                            : std::numeric_limits<double>::quiet_NaN();
        micro_recall = recall_defined ? static_cast<double>(tp) / static_cast<double>(tp + fn)
                                      : std::numeric_limits<double>::quiet_NaN();
        // 2TP / (2TP + FP + FN): equals the harmonic mean when both are defined, 0 iff tp = 0
        f1_defined = tp + fp + fn > 0;
        micro_f1 = f1_defined ? 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn)
                              : std::numeric_limits<double>::quiet_NaN();
    }

    /// Count-level merge; shard results combine associatively.
    SensingMetrics& operator+=(const SensingMetrics& o)
    {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        finalize();
        return *this;
    }

    void add(const OccupancyVector& prediction, const OccupancyVector& truth, int positive_class = 0)
    {
        if (prediction.size() != truth.size()) {
            throw DimensionError("micro_metrics: prediction and truth lengths differ");
        }
        for (std::size_t m = 0; m < truth.size(); ++m) {
            const bool p = prediction[m] == positive_class;
            const bool t = truth[m] == positive_class;
            tp += (p && t) ? 1 : 0;
            fp += (p && !t) ? 1 : 0;
            fn += (!p && t) ? 1 : 0;
            tn += (!p && !t) ? 1 : 0;
        }
    }
};

/// Counts pooled over every (observation, channel) cell. The positive class
/// defaults to vacant (0): holes are the detection target.
inline SensingMetrics micro_metrics(std::span<const OccupancyVector> predictions, std::span<const OccupancyVector> truths,
                                    int positive_class = 0)
{
    if (predictions.size() != truths.size()) {
        throw DimensionError("micro_metrics: prediction and truth counts differ");
    }
    if (positive_class != 0 && positive_class != 1) {
        throw std::invalid_argument("micro_metrics: positive class must be 0 or 1");
    }
    SensingMetrics s;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        s.add(predictions[i], truths[i], positive_class);
    }
    s.finalize();
    return s;
}

/// Best input-independent predictor: calling everything positive, or
/// everything negative (F1 = 0). Returns its micro-F1.
inline double constant_predictor_f1(std::span<const OccupancyVector> truths, int positive_class = 0)
{
    std::vector<OccupancyVector> all_pos;
    all_pos.reserve(truths.size());
    for (const auto& t : truths) {
        all_pos.emplace_back(t.size(), static_cast<std::uint8_t>(positive_class));
    }
    const auto m = micro_metrics(all_pos, truths, positive_class);
    return m.f1_defined ? m.micro_f1 : 0.0;
}

// ---------------------------------------------------------------------------
// Threshold calibration.

struct CalibrationResult {
    std::vector<double> thresholds;
    std::vector<std::string> warnings;
    double validation_f1 = 0.0;
};

namespace detail {

struct ChannelCounts {
    std::uint64_t tp = 0, fp = 0, fn = 0;
};

/// Counts for one channel with vacant as the positive class.
inline ChannelCounts counts_at(std::span<const double> energy, std::span<const std::uint8_t> busy, double threshold)
{
    ChannelCounts c;
    for (std::size_t i = 0; i < energy.size(); ++i) {
        const bool pred_vacant = !(energy[i] >= threshold);
        const bool vacant = busy[i] == 0;
        c.tp += (pred_vacant && vacant) ? 1 : 0;
        c.fp += (pred_vacant && !vacant) ? 1 : 0;
        c.fn += (!pred_vacant && vacant) ? 1 : 0;
    }
    return c;
}

inline double f1_from(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn)
{
    const auto d = 2 * tp + fp + fn;
    return d == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(d);
}

inline double median(std::vector<double> v)
{
    if (v.empty()) {
        return 0.0;
    }
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

} // namespace detail

/// Per-channel median of the observed band energies; the calibration starting point.
inline std::vector<double> median_thresholds(const std::vector<BandEnergies>& energies, std::size_t num_subchannels)
{
    std::vector<double> out(num_subchannels, 0.0);
    for (std::size_t m = 0; m < num_subchannels; ++m) {
        std::vector<double> col;
        col.reserve(energies.size());
        for (const auto& e : energies) {
            col.push_back(e[m]);
        }
        out[m] = detail::median(std::move(col));
    }
    return out;
}

/// Micro-F1 (vacant positive) of energy detection with the given thresholds.
inline double threshold_f1(const std::vector<BandEnergies>& energies, std::span<const OccupancyVector> labels,
                           std::span<const double> thresholds)
{
    SensingMetrics s;
    for (std::size_t i = 0; i < energies.size(); ++i) {
        s.add(energy_detect(energies[i], thresholds), labels[i], 0);
    }
    s.finalize();
    return s.f1_defined ? s.micro_f1 : 0.0;
}

/// Coordinate ascent on validation micro-F1, starting from per-channel medians.
/// Each channel sweeps every observed energy plus +inf while the others are held,
/// so the result is never worse than the median start.
inline CalibrationResult calibrate_thresholds(const std::vector<BandEnergies>& energies,
                                              std::span<const OccupancyVector> labels, std::size_t num_subchannels)
{
    if (energies.size() != labels.size() || energies.empty()) {
        throw DimensionError("calibrate_thresholds: need equal, non-empty energy and label lists");
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    CalibrationResult result;
    result.thresholds = median_thresholds(energies, num_subchannels);

    const auto n = energies.size();
    std::vector<std::vector<double>> col(num_subchannels, std::vector<double>(n));
    std::vector<std::vector<std::uint8_t>> busy(num_subchannels, std::vector<std::uint8_t>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t m = 0; m < num_subchannels; ++m) {
            col[m][i] = energies[i][m];
            busy[m][i] = labels[i][m];
        }
    }

    std::vector<detail::ChannelCounts> per(num_subchannels);
    for (std::size_t m = 0; m < num_subchannels; ++m) {
        const auto busy_count = static_cast<std::size_t>(std::count(busy[m].begin(), busy[m].end(), 1));
        if (busy_count == 0 || busy_count == n) {
            result.thresholds[m] = inf;
            result.warnings.push_back("channel " + std::to_string(m + 1) +
                                      ": only one class in validation data; threshold set to +inf (never busy)");
        }
        per[m] = detail::counts_at(col[m], busy[m], result.thresholds[m]);
    }

    for (std::size_t m = 0; m < num_subchannels; ++m) {
        if (std::isinf(result.thresholds[m])) {
            continue;
        }
        std::uint64_t tp_rest = 0, fp_rest = 0, fn_rest = 0;
        for (std::size_t j = 0; j < num_subchannels; ++j) {
            if (j != m) {
                tp_rest += per[j].tp;
                fp_rest += per[j].fp;
                fn_rest += per[j].fn;
            }
        }
        std::vector<double> candidates = col[m];
        candidates.push_back(inf);
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

        double best_thr = result.thresholds[m];
        double best_f1 = detail::f1_from(tp_rest + per[m].tp, fp_rest + per[m].fp, fn_rest + per[m].fn);
        detail::ChannelCounts best_counts = per[m];
        for (double thr : candidates) {
            const auto c = detail::counts_at(col[m], busy[m], thr);
            const double f1 = detail::f1_from(tp_rest + c.tp, fp_rest + c.fp, fn_rest + c.fn);
            if (f1 > best_f1) {
                best_f1 = f1;
                best_thr = thr;
                best_counts = c;
            }
        }
        result.thresholds[m] = best_thr;
        per[m] = best_counts;
    }
    result.validation_f1 = threshold_f1(energies, labels, result.thresholds);
    return result;
}

// ---------------------------------------------------------------------------
// Sensing models.

enum class InputMode : std::uint32_t { BandEnergy = 0, RawIq = 1 };

struct ClassifierHyperparams {
    InputMode input_mode = InputMode::BandEnergy;
    std::vector<std::size_t> hidden{128, 128};
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    double decision_threshold = 0.5;
    std::uint64_t seed = 0;
};

struct SensingModel {
    enum class Kind : std::uint32_t { EnergyThreshold = 0, DenseClassifier = 1 };
    Kind kind = Kind::EnergyThreshold;
    SynthConfig layout; // M, N and the subcarrier blocks
    std::vector<double> thresholds;
    InputMode input_mode = InputMode::BandEnergy;
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;
    nn::Network network;
    double decision_threshold = 0.5;
    std::vector<double> training_curve; // mean training loss per epoch
};

/// Unstandardised classifier input: log band energies, or the capture
/// flattened to 2N reals (re0, im0, re1, im1, ...).
inline std::vector<double> raw_features(const IQObservation& obs, const SynthConfig& layout, InputMode mode)
{
    if (mode == InputMode::BandEnergy) {
        auto e = band_energies(obs, layout);
        for (auto& v : e) {
            v = std::log(v + 1e-9);
        }
        return e;
    }
    if (obs.samples.size() != layout.samples_per_observation) {
        throw DimensionError("features: capture length differs from configured N");
    }
    std::vector<double> f;
    f.reserve(2 * obs.samples.size());
    for (const auto& s : obs.samples) {
        f.push_back(s.real());
        f.push_back(s.imag());
    }
    return f;
}

inline std::size_t feature_dim(const SynthConfig& layout, InputMode mode)
{
    return mode == InputMode::BandEnergy ? layout.num_subchannels : 2 * layout.samples_per_observation;
}

namespace detail {

inline nn::Matrix feature_matrix(const Dataset& ds, std::span<const std::size_t> idx, const SynthConfig& layout,
                                 InputMode mode)
{
    const auto d = feature_dim(layout, mode);
    nn::Matrix x(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const auto f = raw_features(ds.observations[idx[j]], layout, mode);
        for (std::size_t i = 0; i < d; ++i) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[i];
        }
    }
    return x;
}

inline nn::Matrix label_matrix(const Dataset& ds, std::span<const std::size_t> idx, std::size_t m_count)
{
    nn::Matrix y(static_cast<Eigen::Index>(m_count), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const auto& label = ds.observations[idx[j]].label;
        for (std::size_t m = 0; m < m_count; ++m) {
            y(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) = label[m];
        }
    }
    return y;
}

inline void standardize(nn::Matrix& x, const std::vector<double>& mean, const std::vector<double>& scale)
{
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        x.row(i) = (x.row(i).array() - mean[k]) / scale[k];
    }
}

inline void fit_standardizer(const nn::Matrix& x, std::vector<double>& mean, std::vector<double>& scale)
{
    const auto d = static_cast<std::size_t>(x.rows());
    mean.assign(d, 0.0);
    scale.assign(d, 1.0);
    if (x.cols() == 0) {
        return;
    }
    for (std::size_t i = 0; i < d; ++i) {
        const auto row = x.row(static_cast<Eigen::Index>(i));
        const double mu = row.mean();
        const double var = (row.array() - mu).square().mean();
        mean[i] = mu;
        scale[i] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
}

} // namespace detail

/// Random-weight classifier with standardisation fitted on the train split.
/// Useful as a chance-level reference.
inline SensingModel untrained_classifier(const Dataset& ds, const SynthConfig& layout, const ClassifierHyperparams& hp)
{
    SensingModel model;
    model.kind = SensingModel::Kind::DenseClassifier;
    model.layout = layout;
    model.input_mode = hp.input_mode;
    model.decision_threshold = hp.decision_threshold;
    const auto x = detail::feature_matrix(ds, ds.split.train, layout, hp.input_mode);
    detail::fit_standardizer(x, model.feature_mean, model.feature_scale);
    std::vector<std::size_t> dims{feature_dim(layout, hp.input_mode)};
    dims.insert(dims.end(), hp.hidden.begin(), hp.hidden.end());
    dims.push_back(layout.num_subchannels);
    Rng rng(derive_seed(hp.seed, 0xc1a55ULL));
    model.network = nn::Network::make(dims, nn::Activation::Relu, nn::Activation::Sigmoid, rng);
    return model;
}

/// Mini-batch Adam on mean per-channel binary cross-entropy (label 1 = busy).
inline SensingModel train_classifier(const Dataset& ds, const SynthConfig& layout, const ClassifierHyperparams& hp)
{
    if (ds.split.train.empty()) {
        throw std::invalid_argument("train_classifier: empty train split");
    }
    if (hp.batch_size < 1 || hp.epochs < 1) {
        throw std::invalid_argument("train_classifier: batch_size and epochs must be >= 1");
    }
    SensingModel model = untrained_classifier(ds, layout, hp);
    nn::Matrix x = detail::feature_matrix(ds, ds.split.train, layout, hp.input_mode);
    detail::standardize(x, model.feature_mean, model.feature_scale);
    const nn::Matrix y = detail::label_matrix(ds, ds.split.train, layout.num_subchannels);

    auto opt = nn::OptimizerState::adam(hp.learning_rate);
    const auto loss = nn::LossSpec::bce();
    Rng rng(derive_seed(hp.seed, 0xba7c4ULL));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.cols()));
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = static_cast<Eigen::Index>(i);
    }
    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
            const auto stop = std::min(order.size(), start + hp.batch_size);
            const auto b = static_cast<Eigen::Index>(stop - start);
            nn::Matrix xb(x.rows(), b);
            nn::Matrix yb(y.rows(), b);
            for (Eigen::Index j = 0; j < b; ++j) {
                xb.col(j) = x.col(order[start + static_cast<std::size_t>(j)]);
                yb.col(j) = y.col(order[start + static_cast<std::size_t>(j)]);
            }
            auto step = nn::backward(model.network, xb, yb, loss);
            if (!std::isfinite(step.loss)) {
                throw NonFiniteError("train_classifier: non-finite loss at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(batches));
            }
            total += step.loss;
            ++batches;
            nn::optimizer_step(model.network, std::move(step.gradients), opt);
        }
        model.training_curve.push_back(total / static_cast<double>(batches));
    }
    return model;
}

/// Energy-threshold model calibrated on the validation split.
inline SensingModel train_energy_detector(const Dataset& ds, const SynthConfig& layout,
                                          std::vector<std::string>* warnings = nullptr)
{
    const auto& idx = ds.split.validation.empty() ? ds.split.train : ds.split.validation;
    std::vector<BandEnergies> energies;
    std::vector<OccupancyVector> labels;
    for (auto i : idx) {
        energies.push_back(band_energies(ds.observations[i], layout));
        labels.push_back(ds.observations[i].label);
    }
    auto cal = calibrate_thresholds(energies, labels, layout.num_subchannels);
    if (warnings) {
        warnings->insert(warnings->end(), cal.warnings.begin(), cal.warnings.end());
    }
    SensingModel model;
    model.kind = SensingModel::Kind::EnergyThreshold;
    model.layout = layout;
    model.thresholds = std::move(cal.thresholds);
    return model;
}

/// Per-channel busy probabilities of the classifier.
inline std::vector<double> classifier_scores(const SensingModel& model, const IQObservation& obs)
{
    auto f = raw_features(obs, model.layout, model.input_mode);
    if (f.size() != model.network.input_dim() || f.size() != model.feature_mean.size()) {
        throw DimensionError("predict_occupancy: feature dim does not match the model");
    }
    nn::Vector x(static_cast<Eigen::Index>(f.size()));
    for (std::size_t i = 0; i < f.size(); ++i) {
        x(static_cast<Eigen::Index>(i)) = (f[i] - model.feature_mean[i]) / model.feature_scale[i];
    }
    const nn::Vector out = nn::forward(model.network, x);
    return {out.data(), out.data() + out.size()};
}

inline OccupancyVector predict_occupancy(const SensingModel& model, const IQObservation& obs)
{
    if (obs.samples.size() != model.layout.samples_per_observation) {
        throw DimensionError("predict_occupancy: capture length differs from the model's N");
    }
    if (model.kind == SensingModel::Kind::EnergyThreshold) {
        if (model.thresholds.size() != model.layout.num_subchannels) {
            throw DimensionError("predict_occupancy: threshold count differs from M");
        }
        return energy_detect(band_energies(obs, model.layout), model.thresholds);
    }
    if (model.network.output_dim() != model.layout.num_subchannels) {
        throw DimensionError("predict_occupancy: classifier output dim differs from M");
    }
    const auto scores = classifier_scores(model, obs);
    OccupancyVector h(scores.size());
    for (std::size_t m = 0; m < scores.size(); ++m) {
        h.set(m, scores[m] >= model.decision_threshold ? 1 : 0);
    }
    return h;
}

/// Metrics of a model over the given observations, keyed by SINR.
inline std::map<double, SensingMetrics> evaluate_by_sinr(const SensingModel& model, const Dataset& ds,
                                                         std::span<const std::size_t> idx, int positive_class = 0)
{
    std::map<double, SensingMetrics> out;
    for (auto i : idx) {
        const auto& obs = ds.observations[i];
        out[obs.sinr_db].add(predict_occupancy(model, obs), obs.label, positive_class);
    }
    for (auto& [sinr, m] : out) {
        (void)sinr;
        m.finalize();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sensing checkpoint: sensing header followed by the network block.
//
//   "SKSM", u32 version (1), u32 kind, u32 input mode,
//   u32 M, u32 N, u32 subcarriers_per_subchannel, f32 decision threshold,
//   u32 threshold count T, T x f32 thresholds (+inf allowed),
//   u32 feature dim D, D x f32 mean, D x f32 scale,
//   network block (classifier kind only)

inline void write_sensing_model(std::ostream& os, const SensingModel& model)
{
    io::put_magic(os, "SKSM");
    io::put_u32(os, 1);
    io::put_u32(os, static_cast<std::uint32_t>(model.kind));
    io::put_u32(os, static_cast<std::uint32_t>(model.input_mode));
    io::put_u32(os, static_cast<std::uint32_t>(model.layout.num_subchannels));
    io::put_u32(os, static_cast<std::uint32_t>(model.layout.samples_per_observation));
    io::put_u32(os, static_cast<std::uint32_t>(model.layout.subcarriers_per_subchannel));
    io::put_f32(os, static_cast<float>(model.decision_threshold));
    io::put_u32(os, static_cast<std::uint32_t>(model.thresholds.size()));
    for (double t : model.thresholds) {
        io::put_f32(os, static_cast<float>(t));
    }
    io::put_u32(os, static_cast<std::uint32_t>(model.feature_mean.size()));
    for (double v : model.feature_mean) {
        io::put_f32(os, static_cast<float>(v));
    }
    for (double v : model.feature_scale) {
        io::put_f32(os, static_cast<float>(v));
    }
    if (model.kind == SensingModel::Kind::DenseClassifier) {
        nn::write_network(os, model.network);
    }
}

inline SensingModel read_sensing_model(std::istream& is)
{
    io::expect_magic(is, "SKSM", "sensing checkpoint");
    if (io::get_u32(is) != 1) {
        throw FormatError("sensing checkpoint: unsupported version");
    }
    SensingModel m;
    const auto kind = io::get_u32(is);
    const auto mode = io::get_u32(is);
    if (kind > 1 || mode > 1) {
        throw FormatError("sensing checkpoint: bad kind or input mode");
    }
    m.kind = static_cast<SensingModel::Kind>(kind);
    m.input_mode = static_cast<InputMode>(mode);
    m.layout.num_subchannels = io::get_u32(is);
    m.layout.samples_per_observation = io::get_u32(is);
    m.layout.subcarriers_per_subchannel = io::get_u32(is);
    m.decision_threshold = io::get_f32(is);
    const auto t = io::get_u32(is);
    if (t > 32) {
        throw FormatError("sensing checkpoint: too many thresholds");
    }
    for (std::uint32_t i = 0; i < t; ++i) {
        m.thresholds.push_back(io::get_f32(is));
    }
    const auto d = io::get_u32(is);
    if (d > (1U << 20)) {
        throw FormatError("sensing checkpoint: implausible feature dim");
    }
    for (std::uint32_t i = 0; i < d; ++i) {
        m.feature_mean.push_back(io::get_f32(is));
    }
    for (std::uint32_t i = 0; i < d; ++i) {
        m.feature_scale.push_back(io::get_f32(is));
    }
    if (m.kind == SensingModel::Kind::DenseClassifier) {
        m.network = nn::read_network(is);
    }
    try {
        m.layout.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("sensing checkpoint: ") + e.what());
    }
    return m;
}

} // namespace skyspec
