#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "skyspec/channel_env.hpp"
#include "skyspec/fft.hpp"
#include "skyspec/fusion.hpp"
#include "skyspec/iq_synth.hpp"
#include "skyspec/scheduler.hpp"
#include "skyspec/sensing.hpp"
#include "skyspec/spectrum_core.hpp"

namespace skyspec {

/// Every problem found in a config, each prefixed with its field path.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<std::string> errors)
        : std::invalid_argument(join(errors)), errors_(std::move(errors))
    {
    }
    const std::vector<std::string>& errors() const { return errors_; }

private:
    static std::string join(const std::vector<std::string>& errors)
    {
        std::string out;
        for (const auto& e : errors) {
            out += (out.empty() ? "" : "\n") + e;
        }
        return out;
    }
    std::vector<std::string> errors_;
};

enum class SensorKind { Perfect, Energy, Classifier };

inline const char* sensor_name(SensorKind k)
{
    switch (k) {
    case SensorKind::Perfect: return "perfect";
    case SensorKind::Energy: return "energy";
    case SensorKind::Classifier: return "classifier";
    }
    return "?";
}

struct SensingSpec {
    std::vector<SensorKind> per_uav;       // one detector per UAV
    ClassifierHyperparams classifier;
    std::size_t fft_size = 1024;
    std::size_t subcarriers_per_subchannel = 36;
    std::vector<double> training_sinr_db{-10.0, 0.0, 10.0, 20.0};
    std::size_t training_count_per_sinr = 250;
    std::optional<std::string> model_path; // pretrained sensing checkpoint
};

struct AgentSpec {
    std::string variant = "ddqn-soft"; // qtable | dqn | ddqn | ddqn-soft | random
    DqnConfig dqn;
    LearningRateSchedule schedule = LearningRateSchedule::RescaledLinear;
    double alpha = 0.1; // constant schedule only
    std::size_t train_episodes = 300;
    std::size_t train_slots = 100;
    std::optional<std::string> checkpoint;
};

struct DatasetSpec {
    std::size_t count_per_sinr = 250;
    std::string source = "markov"; // markov | uniform
    std::vector<double> interference_gains_db;
    double train_fraction = 0.70;
    double validation_fraction = 0.15;
};

struct SimConfig {
    std::uint64_t seed = 0;
    std::string preset;
    RadioParams radio;
    SlotTiming timing{0.001, 0.001, 0.001, 0.006};
    std::vector<TransitionMatrix> matrices;
    LinkModel link;
    FusionRule fusion{1};
    std::vector<double> request_probability; // per UAV
    SensingSpec sensing;
    AgentSpec agent;
    DatasetSpec dataset;
    std::size_t episodes = 1;
    std::size_t slots_per_episode = 100;
    std::string output_dir = "out";

    std::size_t num_uavs() const { return link.num_uavs(); }
    std::size_t num_channels() const { return matrices.size(); }

    /// Layout and grid used for synthesis, dataset generation and sensing.
    SynthConfig synth() const
    {
        SynthConfig s;
        s.num_subchannels = num_channels();
        s.samples_per_observation = sensing.fft_size;
        s.subcarriers_per_subchannel = sensing.subcarriers_per_subchannel;
        s.sinr_grid_db = sensing.training_sinr_db;
        s.interference_gains_db = dataset.interference_gains_db;
        s.seed = derive_seed(seed, 0xda7aULL);
        s.num_uavs = num_uavs();
        s.train_fraction = dataset.train_fraction;
        s.validation_fraction = dataset.validation_fraction;
        return s;
    }
};

/// Sets the run seed and every stream derived from it.
inline void apply_seed(SimConfig& c, std::uint64_t seed)
{
    c.seed = seed;
    c.agent.dqn.seed = derive_seed(seed, 0xa6e47ULL);
    c.sensing.classifier.seed = derive_seed(seed, 0x5e45eULL);
}

// ---------------------------------------------------------------------------
// Presets.

inline std::vector<std::string> preset_names() { return {"two-channel", "four-channel", "three-uav-wideband"}; }

inline SimConfig preset(const std::string& name)
{
    SimConfig c;
    c.preset = name;
    if (name == "two-channel") {
        c.matrices.assign(2, TransitionMatrix{0.2, 0.3});
        c.link = LinkModel{{20.0}, {{10.0, 20.0}}};
        c.fusion.n = 1;
        c.agent.variant = "qtable";
        c.agent.dqn.hidden = {32, 32};
    } else if (name == "four-channel") {
        c.matrices.assign(4, TransitionMatrix{0.2, 0.3});
        c.link = LinkModel{{20.0, 20.0}, {{20.0, 15.0, 10.0, 5.0}, {20.0, 15.0, 10.0, 5.0}}};
        c.fusion.n = 1;
    } else if (name == "three-uav-wideband") {
        c.matrices.assign(16, TransitionMatrix{0.2, 0.3});
        std::vector<double> row;
        for (int m = 0; m < 16; ++m) {
            row.push_back(20.0 - m);
        }
        auto weak = row;
        for (auto& v : weak) {
            v -= 10.0;
        }
        // third UAV sits 10 dB deeper in the shadow, for sensing and access
        c.link = LinkModel{{20.0, 20.0, 10.0}, {row, row, weak}};
        c.fusion.n = 2;
        c.agent.dqn.hidden = {128, 128};
        c.sensing.training_count_per_sinr = 600;
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    c.radio.num_subchannels = static_cast<int>(c.num_channels());
    c.radio.num_uavs = static_cast<int>(c.num_uavs());
    c.sensing.per_uav.assign(c.num_uavs(), SensorKind::Classifier);
    c.request_probability.assign(c.num_uavs(), 1.0);
    c.agent.dqn.num_subchannels = c.num_channels();
    return c;
}

// ---------------------------------------------------------------------------
// JSON parsing with exhaustive, path-qualified validation.

namespace detail {

using nlohmann::json;

class ConfigReader {
public:
    std::vector<std::string> errors;

    void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

    /// True when j is an object; records unknown keys.
    bool object(const json& j, const std::string& path, std::initializer_list<const char*> allowed)
    {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return false;
        }
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [key, value] : j.items()) {
            (void)value;
            if (!ok.count(key)) {
                fail(path.empty() ? key : path + "." + key, "unknown key");
            }
        }
        return true;
    }

    static std::string child(const std::string& path, const std::string& key)
    {
        return path.empty() ? key : path + "." + key;
    }

    void number(const json& obj, const std::string& path, const char* key, double& out, double lo, double hi,
                bool lo_open = false)
    {
        if (!obj.contains(key)) {
            return;
        }
        const auto p = child(path, key);
        const auto& v = obj.at(key);
        if (!v.is_number()) {
            fail(p, "expected a number");
            return;
        }
        const double x = v.get<double>();
        if (!std::isfinite(x) || x < lo || x > hi || (lo_open && x == lo)) {
            std::ostringstream os;
            os << "value " << x << " outside " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
            fail(p, os.str());
            return;
        }
        out = x;
    }

    void count(const json& obj, const std::string& path, const char* key, std::size_t& out, std::size_t lo,
               std::size_t hi)
    {
        if (!obj.contains(key)) {
            return;
        }
        const auto p = child(path, key);
        const auto& v = obj.at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) {
            fail(p, "expected a non-negative integer");
            return;
        }
        const auto x = v.get<unsigned long long>();
        if (x < lo || x > hi) {
            fail(p, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            return;
        }
        out = static_cast<std::size_t>(x);
    }

    void text(const json& obj, const std::string& path, const char* key, std::string& out,
              std::initializer_list<const char*> choices = {})
    {
        if (!obj.contains(key)) {
            return;
        }
        const auto p = child(path, key);
        const auto& v = obj.at(key);
        if (!v.is_string()) {
            fail(p, "expected a string");
            return;
        }
        auto s = v.get<std::string>();
        if (choices.size() > 0) {
            bool found = false;
            std::string list;
            for (const char* c : choices) {
                found = found || s == c;
                list += (list.empty() ? "" : ", ") + std::string(c);
            }
            if (!found) {
                fail(p, "'" + s + "' is not one of: " + list);
                return;
            }
        }
        out = std::move(s);
    }

    bool numbers(const json& v, const std::string& p, std::vector<double>& out, double lo, double hi)
    {
        if (!v.is_array()) {
            fail(p, "expected an array of numbers");
            return false;
        }
        std::vector<double> tmp;
        bool ok = true;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto pi = p + "[" + std::to_string(i) + "]";
            if (!v[i].is_number()) {
                fail(pi, "expected a number");
                ok = false;
                continue;
            }
            const double x = v[i].get<double>();
            if (!std::isfinite(x) || x < lo || x > hi) {
                std::ostringstream os;
                os << "value " << x << " outside [" << lo << ", " << hi << "]";
                fail(pi, os.str());
                ok = false;
                continue;
            }
            tmp.push_back(x);
        }
        if (ok) {
            out = std::move(tmp);
        }
        return ok;
    }

    void counts(const json& obj, const std::string& path, const char* key, std::vector<std::size_t>& out,
                std::size_t lo, std::size_t hi)
    {
        if (!obj.contains(key)) {
            return;
        }
        const auto p = child(path, key);
        const auto& v = obj.at(key);
        if (!v.is_array()) {
            fail(p, "expected an array of integers");
            return;
        }
        std::vector<std::size_t> tmp;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto pi = p + "[" + std::to_string(i) + "]";
            if (!v[i].is_number_integer() || v[i].get<long long>() < 0) {
                fail(pi, "expected a non-negative integer");
                return;
            }
            const auto x = v[i].get<unsigned long long>();
            if (x < lo || x > hi) {
                fail(pi, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
                return;
            }
            tmp.push_back(static_cast<std::size_t>(x));
        }
        out = std::move(tmp);
    }
};

inline void read_radio(ConfigReader& r, const json& j, SimConfig& c)
{
    if (!r.object(j, "radio", {"v_cc", "p_tx", "subchannel_bandwidth_hz", "system_bandwidth_hz"})) {
        return;
    }
    r.number(j, "radio", "v_cc", c.radio.v_cc, 0.0, 1e6);
    r.number(j, "radio", "p_tx", c.radio.p_tx, 0.0, 1e6);
    r.number(j, "radio", "subchannel_bandwidth_hz", c.radio.subchannel_bandwidth, 0.0, 1e12, true);
    if (j.contains("system_bandwidth_hz")) {
        double b = 0.0;
        r.number(j, "radio", "system_bandwidth_hz", b, 0.0, 1e12, true);
        c.radio.system_bandwidth = b;
    }
}

inline void read_timing(ConfigReader& r, const json& j, SimConfig& c)
{
    if (!r.object(j, "timing", {"t_req", "t_s", "t_b", "t_a"})) {
        return;
    }
    r.number(j, "timing", "t_req", c.timing.t_req, 0.0, 10.0);
    r.number(j, "timing", "t_s", c.timing.t_s, 0.0, 10.0);
    r.number(j, "timing", "t_b", c.timing.t_b, 0.0, 10.0);
    r.number(j, "timing", "t_a", c.timing.t_a, 0.0, 10.0);
}

inline void read_channels(ConfigReader& r, const json& j, SimConfig& c)
{
    if (!r.object(j, "channels", {"count", "p01", "p10", "matrices"})) {
        return;
    }
    if (j.contains("matrices")) {
        if (j.contains("count") || j.contains("p01") || j.contains("p10")) {
            r.fail("channels", "give either 'matrices' or 'count'/'p01'/'p10', not both");
            return;
        }
        const auto& arr = j.at("matrices");
        if (!arr.is_array() || arr.empty()) {
            r.fail("channels.matrices", "expected a non-empty array");
            return;
        }
        std::vector<TransitionMatrix> ms;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto p = "channels.matrices[" + std::to_string(i) + "]";
            TransitionMatrix t;
            if (r.object(arr[i], p, {"p01", "p10"})) {
                if (!arr[i].contains("p01") || !arr[i].contains("p10")) {
                    r.fail(p, "both p01 and p10 are required");
                }
                r.number(arr[i], p, "p01", t.p01, 0.0, 1.0);
                r.number(arr[i], p, "p10", t.p10, 0.0, 1.0);
            }
            ms.push_back(t);
        }
        c.matrices = std::move(ms);
        return;
    }
    std::size_t count = c.matrices.size();
    TransitionMatrix t = c.matrices.empty() ? TransitionMatrix{} : c.matrices.front();
    r.count(j, "channels", "count", count, 1, 32);
    r.number(j, "channels", "p01", t.p01, 0.0, 1.0);
    r.number(j, "channels", "p10", t.p10, 0.0, 1.0);
    c.matrices.assign(count, t);
}

inline void read_uavs(ConfigReader& r, const json& j, SimConfig& c)
{
    if (!r.object(j, "uavs", {"sensing_sinr_db", "access_sinr_db", "request_probability"})) {
        return;
    }
    if (j.contains("sensing_sinr_db")) {
        r.numbers(j.at("sensing_sinr_db"), "uavs.sensing_sinr_db", c.link.sensing_sinr_db, -100.0, 100.0);
    }
    if (j.contains("access_sinr_db")) {
        const auto& v = j.at("access_sinr_db");
        if (!v.is_array()) {
            r.fail("uavs.access_sinr_db", "expected an array of per-UAV arrays");
        } else {
            std::vector<std::vector<double>> rows(v.size());
            for (std::size_t k = 0; k < v.size(); ++k) {
                r.numbers(v[k], "uavs.access_sinr_db[" + std::to_string(k) + "]", rows[k], -100.0, 100.0);
            }
            c.link.access_sinr_db = std::move(rows);
        }
    }
    if (j.contains("request_probability")) {
        const auto& v = j.at("request_probability");
        if (v.is_number()) {
            double q = 1.0;
            r.number(j, "uavs", "request_probability", q, 0.0, 1.0);
            c.request_probability.assign(std::max<std::size_t>(c.link.sensing_sinr_db.size(), 1), q);
            c.request_probability.resize(c.link.sensing_sinr_db.size(), q);
        } else {
            r.numbers(v, "uavs.request_probability", c.request_probability, 0.0, 1.0);
        }
    } else {
        c.request_probability.resize(c.link.sensing_sinr_db.size(), 1.0);
    }
}

inline std::optional<SensorKind> sensor_from(const std::string& s)
{
    if (s == "perfect") {
        return SensorKind::Perfect;
    }
    if (s == "energy") {
        return SensorKind::Energy;
    }
    if (s == "classifier") {
        return SensorKind::Classifier;
    }
    return std::nullopt;
}

inline void read_sensing(ConfigReader& r, const json& j, SimConfig& c)
{
    if (!r.object(j, "sensing", {"detector", "input", "hidden", "epochs", "batch_size", "learning_rate",
                                 "decision_threshold", "fft_size", "subcarriers_per_subchannel", "training_sinr_db",
                                 "training_count_per_sinr", "model_path"})) {
        return;
    }
    auto& s = c.sensing;
    if (j.contains("detector")) {
        const auto& v = j.at("detector");
        auto one = [&](const json& x, const std::string& p) -> std::optional<SensorKind> {
            if (!x.is_string() || !sensor_from(x.get<std::string>())) {
                r.fail(p, "expected one of: perfect, energy, classifier");
                return std::nullopt;
            }
            return sensor_from(x.get<std::string>());
        };
        if (v.is_array()) {
            std::vector<SensorKind> kinds;
            for (std::size_t k = 0; k < v.size(); ++k) {
                if (auto kind = one(v[k], "sensing.detector[" + std::to_string(k) + "]")) {
                    kinds.push_back(*kind);
                }
            }
            s.per_uav = std::move(kinds);
        } else if (auto kind = one(v, "sensing.detector")) {
            s.per_uav.assign(c.link.sensing_sinr_db.size(), *kind);
        }
    } else {
        s.per_uav.resize(c.link.sensing_sinr_db.size(), s.per_uav.empty() ? SensorKind::Classifier : s.per_uav.front());
    }
    std::string input = s.classifier.input_mode == InputMode::RawIq ? "raw-iq" : "band-energy";
    r.text(j, "sensing", "input", input, {"band-energy", "raw-iq"});
    s.classifier.input_mode = input == "raw-iq" ? InputMode::RawIq : InputMode::BandEnergy;
    r.counts(j, "sensing", "hidden", s.classifier.hidden, 1, 4096);
    r.count(j, "sensing", "epochs", s.classifier.epochs, 1, 100000);
    r.count(j, "sensing", "batch_size", s.classifier.batch_size, 1, 1 << 20);
    r.number(j, "sensing", "learning_rate", s.classifier.learning_rate, 0.0, 10.0, true);
    r.number(j, "sensing", "decision_threshold", s.classifier.decision_threshold, 0.0, 1.0);
    r.count(j, "sensing", "fft_size", s.fft_size, 2, 1 << 20);
    r.count(j, "sensing", "subcarriers_per_subchannel", s.subcarriers_per_subchannel, 1, 1 << 20);
    if (j.contains("training_sinr_db")) {
        r.numbers(j.at("training_sinr_db"), "sensing.training_sinr_db", s.training_sinr_db, -100.0, 100.0);
    }
    r.count(j, "sensing", "training_count_per_sinr", s.training_count_per_sinr, 1, 1 << 24);
    if (j.contains("model_path")) {
        std::string path;
        r.text(j, "sensing", "model_path", path);
        s.model_path = path;
    }
}

inline void read_agent(ConfigReader& r, const json& j, SimConfig& c)
{
    if (!r.object(j, "agent", {"variant", "gamma", "hidden", "learning_rate", "batch_size", "replay_capacity",
                               "target_update_period", "tau", "epsilon_start", "epsilon_min",
                               "epsilon_decay_fraction", "lr_schedule", "alpha", "train_episodes", "train_slots",
                               "checkpoint"})) {
        return;
    }
    auto& a = c.agent;
    r.text(j, "agent", "variant", a.variant, {"qtable", "dqn", "ddqn", "ddqn-soft", "random"});
    r.number(j, "agent", "gamma", a.dqn.gamma, 0.0, 0.999999);
    r.counts(j, "agent", "hidden", a.dqn.hidden, 1, 4096);
    r.number(j, "agent", "learning_rate", a.dqn.learning_rate, 0.0, 10.0, true);
    r.count(j, "agent", "batch_size", a.dqn.batch_size, 1, 1 << 16);
    r.count(j, "agent", "replay_capacity", a.dqn.replay_capacity, 1, 1 << 24);
    r.count(j, "agent", "target_update_period", a.dqn.target_update_period, 1, 1 << 30);
    r.number(j, "agent", "tau", a.dqn.tau, 0.0, 1.0);
    r.number(j, "agent", "epsilon_start", a.dqn.epsilon_start, 0.0, 1.0);
    r.number(j, "agent", "epsilon_min", a.dqn.epsilon_min, 0.0, 1.0);
    r.number(j, "agent", "epsilon_decay_fraction", a.dqn.epsilon_decay_fraction, 0.0, 1.0, true);
    std::string schedule = a.schedule == LearningRateSchedule::Constant        ? "constant"
                           : a.schedule == LearningRateSchedule::InverseVisits ? "inverse-visits"
                                                                               : "rescaled-linear";
    r.text(j, "agent", "lr_schedule", schedule, {"constant", "inverse-visits", "rescaled-linear"});
    a.schedule = schedule == "constant"         ? LearningRateSchedule::Constant
                 : schedule == "inverse-visits" ? LearningRateSchedule::InverseVisits
                                                : LearningRateSchedule::RescaledLinear;
    r.number(j, "agent", "alpha", a.alpha, 0.0, 1.0, true);
    r.count(j, "agent", "train_episodes", a.train_episodes, 0, 1 << 24);
    r.count(j, "agent", "train_slots", a.train_slots, 1, 1 << 24);
    if (j.contains("checkpoint")) {
        std::string path;
        r.text(j, "agent", "checkpoint", path);
        a.checkpoint = path;
    }
}

inline void read_dataset_spec(ConfigReader& r, const json& j, SimConfig& c)
{
    if (!r.object(j, "dataset", {"count_per_sinr", "source", "interference_gains_db", "train_fraction",
                                 "validation_fraction"})) {
        return;
    }
    auto& d = c.dataset;
    r.count(j, "dataset", "count_per_sinr", d.count_per_sinr, 1, 1 << 24);
    r.text(j, "dataset", "source", d.source, {"markov", "uniform"});
    if (j.contains("interference_gains_db")) {
        r.numbers(j.at("interference_gains_db"), "dataset.interference_gains_db", d.interference_gains_db, -200.0,
                  100.0);
    }
    r.number(j, "dataset", "train_fraction", d.train_fraction, 0.0, 1.0);
    r.number(j, "dataset", "validation_fraction", d.validation_fraction, 0.0, 1.0);
}

inline void read_run(ConfigReader& r, const json& j, SimConfig& c)
{
    if (!r.object(j, "run", {"episodes", "slots_per_episode", "output_dir"})) {
        return;
    }
    r.count(j, "run", "episodes", c.episodes, 0, 1 << 24);
    r.count(j, "run", "slots_per_episode", c.slots_per_episode, 1, 1 << 28);
    r.text(j, "run", "output_dir", c.output_dir);
}

/// Cross-field checks once every section has been read.
inline void check_consistency(ConfigReader& r, const SimConfig& c)
{
    const auto k = c.link.sensing_sinr_db.size();
    const auto m = c.matrices.size();
    if (k < 1) {
        r.fail("uavs.sensing_sinr_db", "at least one UAV is required");
    }
    if (m < 1) {
        r.fail("channels", "at least one sub-channel is required");
    }
    if (c.link.access_sinr_db.size() != k) {
        r.fail("uavs.access_sinr_db", "expected " + std::to_string(k) + " rows (one per UAV), got " +
                                          std::to_string(c.link.access_sinr_db.size()));
    }
    for (std::size_t i = 0; i < c.link.access_sinr_db.size(); ++i) {
        if (c.link.access_sinr_db[i].size() != m) {
            r.fail("uavs.access_sinr_db[" + std::to_string(i) + "]",
                   "expected " + std::to_string(m) + " entries (one per sub-channel), got " +
                       std::to_string(c.link.access_sinr_db[i].size()));
        }
    }
    if (c.request_probability.size() != k) {
        r.fail("uavs.request_probability", "expected " + std::to_string(k) + " entries, got " +
                                               std::to_string(c.request_probability.size()));
    }
    if (c.sensing.per_uav.size() != k) {
        r.fail("sensing.detector",
               "expected " + std::to_string(k) + " entries, got " + std::to_string(c.sensing.per_uav.size()));
    }
    if (k >= 1 && (c.fusion.n < 1 || c.fusion.n > k)) {
        r.fail("fusion.n", "must lie in [1, " + std::to_string(k) + "]");
    }
    if (m >= 1 && c.sensing.subcarriers_per_subchannel * m > c.sensing.fft_size) {
        r.fail("sensing.subcarriers_per_subchannel", std::to_string(m) + " sub-channels x " +
                                                         std::to_string(c.sensing.subcarriers_per_subchannel) +
                                                         " subcarriers exceed fft_size " +
                                                         std::to_string(c.sensing.fft_size));
    }
    if (!fft::is_power_of_two(c.sensing.fft_size)) {
        r.fail("sensing.fft_size", "must be a power of two");
    }
    if (c.sensing.training_sinr_db.empty()) {
        r.fail("sensing.training_sinr_db", "must not be empty");
    }
    if (c.dataset.train_fraction + c.dataset.validation_fraction > 1.0) {
        r.fail("dataset", "train_fraction + validation_fraction exceeds 1");
    }
    if (c.agent.dqn.epsilon_min > c.agent.dqn.epsilon_start) {
        r.fail("agent.epsilon_min", "exceeds agent.epsilon_start");
    }
    if (c.agent.dqn.batch_size > c.agent.dqn.replay_capacity) {
        r.fail("agent.batch_size", "exceeds agent.replay_capacity");
    }
    if (c.agent.variant == "qtable" && m > kMaxTabularSubchannels) {
        r.fail("agent.variant", "qtable refuses M = " + std::to_string(m) + " (limit " +
                                    std::to_string(kMaxTabularSubchannels) + ")");
    }
}

} // namespace detail

/// Reads a config document. A "preset" key seeds every field; other keys
/// override it. "seed" is mandatory unless seed_override is given. All
/// problems are collected and thrown together as a ConfigError.
inline SimConfig parse_config(const nlohmann::json& j, std::optional<std::uint64_t> seed_override = std::nullopt)
{
    detail::ConfigReader r;
    if (!r.object(j, "", {"preset", "seed", "radio", "timing", "channels", "uavs", "fusion", "sensing", "agent",
                          "dataset", "run"})) {
        throw ConfigError(r.errors);
    }
    std::string name = "four-channel";
    r.text(j, "", "preset", name);
    SimConfig c;
    try {
        c = preset(name);
    } catch (const std::invalid_argument&) {
        std::string list;
        for (const auto& n : preset_names()) {
            list += (list.empty() ? "" : ", ") + n;
        }
        r.fail("preset", "'" + name + "' is not one of: " + list);
        c = preset("four-channel");
    }

    if (seed_override) {
        c.seed = *seed_override;
        if (j.contains("seed") && !j.at("seed").is_number_unsigned()) {
            r.fail("seed", "expected a non-negative integer");
        }
    } else if (!j.contains("seed")) {
        r.fail("seed", "required");
    } else if (!j.at("seed").is_number_unsigned()) {
        r.fail("seed", "expected a non-negative integer");
    } else {
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("radio")) {
        detail::read_radio(r, j.at("radio"), c);
    }
    if (j.contains("timing")) {
        detail::read_timing(r, j.at("timing"), c);
    }
    if (j.contains("channels")) {
        detail::read_channels(r, j.at("channels"), c);
    }
    if (j.contains("uavs")) {
        detail::read_uavs(r, j.at("uavs"), c);
    }
    if (j.contains("fusion") && r.object(j.at("fusion"), "fusion", {"n"})) {
        r.count(j.at("fusion"), "fusion", "n", c.fusion.n, 1, 64);
    }
    if (j.contains("sensing")) {
        detail::read_sensing(r, j.at("sensing"), c);
    } else {
        c.sensing.per_uav.resize(c.link.sensing_sinr_db.size(), SensorKind::Classifier);
    }
    if (j.contains("agent")) {
        detail::read_agent(r, j.at("agent"), c);
    }
    if (j.contains("dataset")) {
        detail::read_dataset_spec(r, j.at("dataset"), c);
    }
    if (j.contains("run")) {
        detail::read_run(r, j.at("run"), c);
    }
    c.radio.num_subchannels = static_cast<int>(c.matrices.size());
    c.radio.num_uavs = static_cast<int>(c.link.sensing_sinr_db.size());
    c.agent.dqn.num_subchannels = c.matrices.size();
    apply_seed(c, c.seed);
    detail::check_consistency(r, c);
    if (r.errors.empty()) {
        try {
            c.timing.validate();
            c.radio.validate();
        } catch (const std::exception& e) {
            r.fail("radio/timing", e.what());
        }
    }
    if (!r.errors.empty()) {
        throw ConfigError(r.errors);
    }
    return c;
}

inline SimConfig parse_config_text(const std::string& text, std::optional<std::uint64_t> seed_override = std::nullopt)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({std::string("<document>: ") + e.what()});
    }
    return parse_config(j, seed_override);
}

inline SimConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError({path.string() + ": cannot open"});
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), seed_override);
}

} // namespace skyspec
