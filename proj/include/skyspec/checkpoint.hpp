#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "skyspec/binary_io.hpp"
#include "skyspec/neuralnet.hpp"

namespace skyspec::nn {

// Network block, little-endian:
//
//   "SKNN"            magic
//   u32 version       currently 1
//   u32 layer count L
//   L x (u32 in, u32 out, u32 activation)   activation: 0 identity, 1 relu, 2 sigmoid
//   L x (out*in f32 weights, row-major; out f32 bias)
//
// Weights are held in 64-bit and stored as 32-bit.

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_network(std::ostream& os, const Network& net)
{
    io::put_magic(os, "SKNN");
    io::put_u32(os, kCheckpointVersion);
    io::put_u32(os, static_cast<std::uint32_t>(net.layers().size()));
    for (const auto& l : net.layers()) {
        io::put_u32(os, static_cast<std::uint32_t>(l.in_dim()));
        io::put_u32(os, static_cast<std::uint32_t>(l.out_dim()));
        io::put_u32(os, static_cast<std::uint32_t>(l.activation));
    }
    for (const auto& l : net.layers()) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
                io::put_f32(os, static_cast<float>(l.weights(r, c)));
            }
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
            io::put_f32(os, static_cast<float>(l.bias(r)));
        }
    }
}

inline Network read_network(std::istream& is)
{
    io::expect_magic(is, "SKNN", "network checkpoint");
    const auto version = io::get_u32(is);
    if (version != kCheckpointVersion) {
        throw FormatError("network checkpoint: unsupported version " + std::to_string(version));
    }
    const auto count = io::get_u32(is);
    if (count == 0 || count > 64) {
        throw FormatError("network checkpoint: implausible layer count");
    }
    std::vector<Layer> layers(count);
    for (auto& l : layers) {
        const auto in = io::get_u32(is);
        const auto out = io::get_u32(is);
        const auto act = io::get_u32(is);
        if (act > 2 || in == 0 || out == 0 || in > (1U << 20) || out > (1U << 20)) {
            throw FormatError("network checkpoint: bad layer header");
        }
        l.weights.resize(out, in);
        l.bias.resize(out);
        l.activation = static_cast<Activation>(act);
    }
    for (auto& l : layers) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
                l.weights(r, c) = io::get_f32(is);
            }
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
            l.bias(r) = io::get_f32(is);
        }
    }
    try {
        return Network(std::move(layers));
    } catch (const std::exception& e) {
        throw FormatError(std::string("network checkpoint: ") + e.what());
    }
}

} // namespace skyspec::nn
