#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "skyspec/binary_io.hpp"
#include "skyspec/iq_synth.hpp"

namespace skyspec {

// Dataset file, all integers and floats little-endian:
//
//   "SKIQ"                      4 bytes magic
//   u32 version                 currently 1
//   u32 M                       sub-channels
//   u32 N                       complex samples per record
//   u32 K                       UAVs; record i belongs to UAV (i mod K)
//   u32 subcarriers_per_subchannel
//   u32 G, then G x f32         SINR grid, dB
//   u64 seed
//   u64 record count
//   records, each 8 + 8N bytes:
//     u32 label mask            bit m-1 set = channel m busy
//     f32 sinr_db
//     N x (f32 real, f32 imag)
//
// The train/validation/test split is not stored; make_split() recomputes it
// from the seed.

inline constexpr std::uint32_t kDatasetVersion = 1;

inline void write_dataset(std::ostream& os, const Dataset& ds, const SynthConfig& config)
{
    io::put_magic(os, "SKIQ");
    io::put_u32(os, kDatasetVersion);
    io::put_u32(os, static_cast<std::uint32_t>(config.num_subchannels));
    io::put_u32(os, static_cast<std::uint32_t>(config.samples_per_observation));
    io::put_u32(os, static_cast<std::uint32_t>(config.num_uavs));
    io::put_u32(os, static_cast<std::uint32_t>(config.subcarriers_per_subchannel));
    io::put_u32(os, static_cast<std::uint32_t>(config.sinr_grid_db.size()));
    for (double g : config.sinr_grid_db) {
        io::put_f32(os, static_cast<float>(g));
    }
    io::put_u64(os, config.seed);
    io::put_u64(os, ds.observations.size());
    for (const auto& obs : ds.observations) {
        if (obs.samples.size() != config.samples_per_observation || obs.label.size() != config.num_subchannels) {
            throw DimensionError("write_dataset: record shape differs from header");
        }
        io::put_u32(os, obs.label.to_mask());
        io::put_f32(os, static_cast<float>(obs.sinr_db));
        for (const auto& s : obs.samples) {
            io::put_f32(os, static_cast<float>(s.real()));
            io::put_f32(os, static_cast<float>(s.imag()));
        }
    }
    if (!os) {
        throw std::runtime_error("write_dataset: stream write failed");
    }
}

struct LoadedDataset {
    SynthConfig config;
    Dataset dataset;
};

inline LoadedDataset read_dataset(std::istream& is)
{
    io::expect_magic(is, "SKIQ", "dataset");
    const auto version = io::get_u32(is);
    if (version != kDatasetVersion) {
        throw FormatError("dataset: unsupported version " + std::to_string(version));
    }
    LoadedDataset out;
    auto& cfg = out.config;
    cfg.num_subchannels = io::get_u32(is);
    cfg.samples_per_observation = io::get_u32(is);
    cfg.num_uavs = io::get_u32(is);
    cfg.subcarriers_per_subchannel = io::get_u32(is);
    const auto grid = io::get_u32(is);
    cfg.sinr_grid_db.clear();
    for (std::uint32_t i = 0; i < grid; ++i) {
        cfg.sinr_grid_db.push_back(io::get_f32(is));
    }
    cfg.seed = io::get_u64(is);
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("dataset header: ") + e.what());
    }
    const auto count = io::get_u64(is);
    auto& obs = out.dataset.observations;
    obs.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        IQObservation o;
        o.label = OccupancyVector::from_mask(io::get_u32(is), cfg.num_subchannels);
        o.sinr_db = io::get_f32(is);
        o.uav_index = static_cast<std::size_t>(i % cfg.num_uavs);
        o.samples.resize(cfg.samples_per_observation);
        for (auto& s : o.samples) {
            const float re = io::get_f32(is);
            const float im = io::get_f32(is);
            s = cplx{re, im};
        }
        obs.push_back(std::move(o));
    }
    out.dataset.split = make_split(obs, cfg);
    return out;
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& ds, const SynthConfig& config)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    write_dataset(os, ds, config);
}

inline LoadedDataset load_dataset(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return read_dataset(is);
}

} // namespace skyspec
