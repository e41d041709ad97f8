#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skyspec/error.hpp"
#include "skyspec/rng.hpp"

namespace skyspec::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint32_t { Identity = 0, Relu = 1, Sigmoid = 2 };

struct Layer {
    Matrix weights; // out x in
    Vector bias;    // out
    Activation activation = Activation::Identity;

    std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
    std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Dense feedforward network. Copying a Network deep-copies every weight.
class Network {
public:
    Network() = default;

    explicit Network(std::vector<Layer> layers) : layers_(std::move(layers))
    {
        if (layers_.empty()) {
            throw DimensionError("network: at least one layer required");
        }
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& layer = layers_[l];
            if (static_cast<std::size_t>(layer.bias.size()) != layer.out_dim()) {
                throw DimensionError("network: bias size mismatch in layer " + std::to_string(l));
            }
            if (l > 0 && layer.in_dim() != layers_[l - 1].out_dim()) {
                throw DimensionError("network: layer " + std::to_string(l) + " input dim does not chain");
            }
            if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
                throw NonFiniteError("network: non-finite weights in layer " + std::to_string(l));
            }
        }
    }

    /// Randomly initialised network over dims = {in, h1, ..., out}. ReLU layers
    /// use He-uniform scaling; sigmoid and identity layers use Xavier-uniform.
    static Network make(std::span<const std::size_t> dims, Activation hidden, Activation output, Rng& rng)
    {
        if (dims.size() < 2) {
            throw DimensionError("network: need at least input and output dims");
        }
        std::vector<Layer> layers;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            Layer layer;
            const auto fan_in = dims[l];
            const auto fan_out = dims[l + 1];
            layer.activation = (l + 2 == dims.size()) ? output : hidden;
            const double limit = layer.activation == Activation::Relu
                                     ? std::sqrt(6.0 / static_cast<double>(fan_in))
                                     : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            layer.weights.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
            for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
                for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
                    layer.weights(r, c) = rng.uniform(-limit, limit);
                }
            }
            layer.bias = Vector::Zero(static_cast<Eigen::Index>(fan_out));
            layers.push_back(std::move(layer));
        }
        return Network(std::move(layers));
    }

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }

    std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
    std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

    std::size_t parameter_count() const
    {
        std::size_t n = 0;
        for (const auto& l : layers_) {
            n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
        }
        return n;
    }

    bool same_shape(const Network& other) const
    {
        if (layers_.size() != other.layers_.size()) {
            return false;
        }
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            if (layers_[l].in_dim() != other.layers_[l].in_dim() || layers_[l].out_dim() != other.layers_[l].out_dim() ||
                layers_[l].activation != other.layers_[l].activation) {
                return false;
            }
        }
        return true;
    }

private:
    std::vector<Layer> layers_;
};

inline Network clone_weights(const Network& src) { return src; }

namespace detail {

inline void activate(Activation a, Matrix& z)
{
    switch (a) {
    case Activation::Identity: break;
    case Activation::Relu: z = z.cwiseMax(0.0); break;
    case Activation::Sigmoid: z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); }); break;
    }
}

/// d activation / d z, given z and the activated value.
inline Matrix activation_derivative(Activation a, const Matrix& z, const Matrix& out)
{
    switch (a) {
    case Activation::Identity: return Matrix::Ones(z.rows(), z.cols());
    case Activation::Relu: return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::Sigmoid: return out.array() * (1.0 - out.array());
    }
    return Matrix::Ones(z.rows(), z.cols());
}

} // namespace detail

/// Per-layer pre-activations and outputs of a batched forward pass.
/// Columns are samples.
struct ForwardCache {
    std::vector<Matrix> inputs;          // input to layer l
    std::vector<Matrix> pre_activations; // z_l
    Matrix output;
};

inline ForwardCache forward_cached(const Network& net, const Matrix& batch)
{
    if (static_cast<std::size_t>(batch.rows()) != net.input_dim()) {
        throw DimensionError("forward: input dim " + std::to_string(batch.rows()) + " != network input " +
                             std::to_string(net.input_dim()));
    }
    ForwardCache cache;
    Matrix a = batch;
    for (const auto& layer : net.layers()) {
        cache.inputs.push_back(a);
        Matrix z = layer.weights * a;
        z.colwise() += layer.bias;
        cache.pre_activations.push_back(z);
        detail::activate(layer.activation, z);
        a = std::move(z);
    }
    cache.output = std::move(a);
    return cache;
}

inline Matrix forward_batch(const Network& net, const Matrix& batch)
{
    if (static_cast<std::size_t>(batch.rows()) != net.input_dim()) {
        throw DimensionError("forward: input dim " + std::to_string(batch.rows()) + " != network input " +
                             std::to_string(net.input_dim()));
    }
    Matrix a = batch;
    for (const auto& layer : net.layers()) {
        Matrix z = layer.weights * a;
        z.colwise() += layer.bias;
        detail::activate(layer.activation, z);
        a = std::move(z);
    }
    return a;
}

inline Vector forward(const Network& net, const Vector& input) { return forward_batch(net, input); }

/// Parameter-shaped gradient (or accumulator) storage.
struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> bias;

    static Gradients zeros_like(const Network& net)
    {
        Gradients g;
        for (const auto& l : net.layers()) {
            g.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
            g.bias.push_back(Vector::Zero(l.bias.size()));
        }
        return g;
    }

    Gradients& operator+=(const Gradients& o)
    {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            weights[l] += o.weights[l];
            bias[l] += o.bias[l];
        }
        return *this;
    }

    Gradients& operator*=(double s)
    {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            weights[l] *= s;
            bias[l] *= s;
        }
        return *this;
    }

    double squared_norm() const
    {
        double n = 0.0;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            n += weights[l].squaredNorm() + bias[l].squaredNorm();
        }
        return n;
    }
};

struct LossSpec {
    enum class Kind { MeanSquaredError, BinaryCrossEntropy, Huber };
    Kind kind = Kind::MeanSquaredError;
    double delta = 1.0; // Huber only

    static LossSpec mse() { return {Kind::MeanSquaredError, 1.0}; }
    static LossSpec bce() { return {Kind::BinaryCrossEntropy, 1.0}; }
    static LossSpec huber(double delta)
    {
        if (!(delta > 0.0)) {
            throw std::invalid_argument("huber loss: delta must be positive");
        }
        return {Kind::Huber, delta};
    }
};

/// Loss averaged over every output element of the batch. Binary cross-entropy
/// requires a sigmoid output layer and is evaluated from the logits.
inline double loss_value(const LossSpec& loss, const ForwardCache& cache, const Matrix& target)
{
    const auto& y = cache.output;
    const double count = static_cast<double>(y.size());
    switch (loss.kind) {
    case LossSpec::Kind::MeanSquaredError: return (y - target).squaredNorm() / count;
    case LossSpec::Kind::Huber: {
        const double d = loss.delta;
        return (y - target)
                   .unaryExpr([d](double e) {
                       const double a = std::abs(e);
                       return a <= d ? 0.5 * e * e : d * (a - 0.5 * d);
                   })
                   .sum() /
               count;
    }
    case LossSpec::Kind::BinaryCrossEntropy: {
        const Matrix& z = cache.pre_activations.back();
        double total = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            const double zi = z.data()[i];
            const double ti = target.data()[i];
            total += std::max(zi, 0.0) - zi * ti + std::log1p(std::exp(-std::abs(zi)));
        }
        return total / count;
    }
    }
    return 0.0;
}

namespace detail {

/// dL/dz for the last layer.
inline Matrix output_delta(const Network& net, const LossSpec& loss, const ForwardCache& cache, const Matrix& target)
{
    const auto& y = cache.output;
    const double count = static_cast<double>(y.size());
    const auto& last = net.layers().back();
    Matrix dy;
    switch (loss.kind) {
    case LossSpec::Kind::BinaryCrossEntropy:
        if (last.activation != Activation::Sigmoid) {
            throw std::invalid_argument("binary cross-entropy requires a sigmoid output layer");
        }
        return (y - target) / count;
    case LossSpec::Kind::MeanSquaredError: dy = 2.0 * (y - target) / count; break;
    case LossSpec::Kind::Huber: {
        const double d = loss.delta;
        dy = (y - target).unaryExpr([d](double e) { return std::clamp(e, -d, d); }) / count;
        break;
    }
    }
    return dy.cwiseProduct(activation_derivative(last.activation, cache.pre_activations.back(), y));
}

} // namespace detail

/// Reverse pass from dL/dz of the last layer.
inline Gradients backward_from_delta(const Network& net, const ForwardCache& cache, Matrix delta)
{
    const auto& layers = net.layers();
    Gradients g = Gradients::zeros_like(net);
    for (std::size_t l = layers.size(); l-- > 0;) {
        if (!delta.allFinite()) {
            throw NonFiniteError("backward: non-finite gradient at layer " + std::to_string(l));
        }
        g.weights[l] = delta * cache.inputs[l].transpose();
        g.bias[l] = delta.rowwise().sum();
        if (l > 0) {
            Matrix upstream = layers[l].weights.transpose() * delta;
            delta = upstream.cwiseProduct(detail::activation_derivative(layers[l - 1].activation,
                                                                        cache.pre_activations[l - 1], cache.inputs[l]));
        }
    }
    return g;
}

/// Reverse pass given dL/d(output).
inline Gradients backward_from_output_grad(const Network& net, const ForwardCache& cache, const Matrix& output_grad)
{
    const auto& last = net.layers().back();
    Matrix delta =
        output_grad.cwiseProduct(detail::activation_derivative(last.activation, cache.pre_activations.back(), cache.output));
    return backward_from_delta(net, cache, std::move(delta));
}

struct LossAndGradients {
    double loss = 0.0;
    Gradients gradients;
};

/// Exact gradients of the batch-mean loss. Columns of input/target are samples.
inline LossAndGradients backward(const Network& net, const Matrix& input, const Matrix& target, const LossSpec& loss)
{
    auto cache = forward_cached(net, input);
    if (target.rows() != cache.output.rows() || target.cols() != cache.output.cols()) {
        throw DimensionError("backward: target shape does not match network output");
    }
    for (std::size_t l = 0; l < cache.pre_activations.size(); ++l) {
        if (!cache.pre_activations[l].allFinite()) {
            throw NonFiniteError("backward: non-finite activation at layer " + std::to_string(l));
        }
    }
    LossAndGradients out;
    out.loss = loss_value(loss, cache, target);
    out.gradients = backward_from_delta(net, cache, detail::output_delta(net, loss, cache, target));
    return out;
}

// ---------------------------------------------------------------------------
// Optimisers.

struct OptimizerState {
    enum class Kind { SgdMomentum, Adam };
    Kind kind = Kind::Adam;
    double learning_rate = 1e-3;
    double momentum = 0.9;  // sgd
    double beta1 = 0.9;     // adam
    double beta2 = 0.999;   // adam
    double epsilon = 1e-8;  // adam
    double clip_norm = 0.0; // 0 disables gradient-norm clipping
    std::uint64_t steps = 0;
    Gradients first;  // momentum buffer / adam m
    Gradients second; // adam v

    static OptimizerState sgd(double lr, double momentum = 0.0)
    {
        OptimizerState s;
        s.kind = Kind::SgdMomentum;
        s.learning_rate = lr;
        s.momentum = momentum;
        return s;
    }

    static OptimizerState adam(double lr)
    {
        OptimizerState s;
        s.kind = Kind::Adam;
        s.learning_rate = lr;
        return s;
    }
};

/// In-place parameter update. Accumulators are created on first use.
inline void optimizer_step(Network& net, Gradients grads, OptimizerState& state)
{
    if (!(state.learning_rate > 0.0)) {
        throw std::invalid_argument("optimizer: learning rate must be positive");
    }
    if (state.first.weights.empty()) {
        state.first = Gradients::zeros_like(net);
        state.second = Gradients::zeros_like(net);
    }
    if (grads.weights.size() != net.layers().size()) {
        throw DimensionError("optimizer: gradient layer count mismatch");
    }
    if (state.clip_norm > 0.0) {
        const double norm = std::sqrt(grads.squared_norm());
        if (norm > state.clip_norm) {
            grads *= state.clip_norm / norm;
        }
    }
    ++state.steps;
    auto& layers = net.layers();
    if (state.kind == OptimizerState::Kind::SgdMomentum) {
        for (std::size_t l = 0; l < layers.size(); ++l) {
            state.first.weights[l] = state.momentum * state.first.weights[l] + grads.weights[l];
            state.first.bias[l] = state.momentum * state.first.bias[l] + grads.bias[l];
            layers[l].weights -= state.learning_rate * state.first.weights[l];
            layers[l].bias -= state.learning_rate * state.first.bias[l];
        }
        return;
    }
    const double t = static_cast<double>(state.steps);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double lr = state.learning_rate;
    const double eps = state.epsilon;
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
        update(layers[l].weights, state.first.weights[l], state.second.weights[l], grads.weights[l]);
        update(layers[l].bias, state.first.bias[l], state.second.bias[l], grads.bias[l]);
    }
}

/// target <- tau * primary + (1 - tau) * target, elementwise.
inline void polyak_update(Network& target, const Network& primary, double tau)
{
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw std::invalid_argument("polyak update: tau must lie in [0, 1]");
    }
    if (!target.same_shape(primary)) {
        throw DimensionError("polyak update: network shapes differ");
    }
    for (std::size_t l = 0; l < target.layers().size(); ++l) {
        auto& t = target.layers()[l];
        const auto& p = primary.layers()[l];
        t.weights = tau * p.weights + (1.0 - tau) * t.weights;
        t.bias = tau * p.bias + (1.0 - tau) * t.bias;
    }
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check.

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_layer = 0;
    bool worst_is_bias = false;
    Eigen::Index worst_index = 0;
    /// Smallest |z| over ReLU pre-activations of the unperturbed pass. Values
    /// comparable to epsilon mean a perturbation may cross a kink.
    double relu_kink_margin = std::numeric_limits<double>::infinity();
};

/// Compares analytic gradients (or the supplied ones) against central
/// differences with step eps. Relative error per parameter is
/// |a - n| / max(|a|, |n|, 1e-6).
inline GradientCheckResult gradient_check(const Network& net, const Matrix& input, const Matrix& target,
                                          const LossSpec& loss, double eps, const Gradients* analytic = nullptr)
{
    if (!(eps > 0.0)) {
        throw std::invalid_argument("gradient_check: eps must be positive");
    }
    GradientCheckResult result;
    const auto computed = backward(net, input, target, loss).gradients;
    const Gradients& g = analytic ? *analytic : computed;

    const auto cache = forward_cached(net, input);
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        if (net.layers()[l].activation == Activation::Relu) {
            result.relu_kink_margin = std::min(result.relu_kink_margin, cache.pre_activations[l].cwiseAbs().minCoeff());
        }
    }

    Network probe = net;
    auto loss_at = [&]() { return loss_value(loss, forward_cached(probe, input), target); };
    auto check = [&](double& param, double analytic_value, std::size_t layer, bool is_bias, Eigen::Index idx) {
        const double saved = param;
        param = saved + eps;
        const double up = loss_at();
        param = saved - eps;
        const double down = loss_at();
        param = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double denom = std::max({std::abs(analytic_value), std::abs(numeric), 1e-6});
        const double rel = std::abs(analytic_value - numeric) / denom;
        if (rel > result.max_relative_error) {
            result.max_relative_error = rel;
            result.worst_layer = layer;
            result.worst_is_bias = is_bias;
            result.worst_index = idx;
        }
    };
    for (std::size_t l = 0; l < probe.layers().size(); ++l) {
        auto& layer = probe.layers()[l];
        for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
            check(layer.weights.data()[i], g.weights[l].data()[i], l, false, i);
        }
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
            check(layer.bias.data()[i], g.bias[l].data()[i], l, true, i);
        }
    }
    return result;
}

} // namespace skyspec::nn
