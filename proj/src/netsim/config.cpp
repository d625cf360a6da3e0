#include "urm/netsim/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "urm/common/error.hpp"

namespace urm::netsim {

namespace {

using nlohmann::json;
using std::chrono::milliseconds;

std::string_view jitter_name(Jitter j) {
  switch (j) {
    case Jitter::None: return "none";
    case Jitter::Exponential: return "exponential";
    case Jitter::Uniform: return "uniform";
  }
  return "?";
}

Jitter parse_jitter(const std::string& s) {
  if (s == "none") return Jitter::None;
  if (s == "exponential") return Jitter::Exponential;
  if (s == "uniform") return Jitter::Uniform;
  throw ConfigError("unknown jitter distribution '" + s + "'");
}

Behavior parse_behavior(const std::string& s) {
  if (s == "silent") return Behavior::Silent;
  if (s == "equivocate") return Behavior::Equivocate;
  if (s == "delay") return Behavior::Delay;
  throw ConfigError("unknown Byzantine behavior '" + s + "'");
}

void only_keys(const json& j, std::initializer_list<std::string_view> keys, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [k, _] : j.items()) {
    bool known = false;
    for (auto key : keys) known |= key == k;
    if (!known) throw ConfigError("unknown key '" + k + "' in " + std::string(where));
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

milliseconds seconds_field(const json& j, const char* key, milliseconds fallback) {
  if (!j.contains(key)) return fallback;
  double s = 0;
  read(j, key, s);
  return milliseconds(std::llround(s * 1000.0));
}

milliseconds millis_field(const json& j, const char* key, milliseconds fallback) {
  if (!j.contains(key)) return fallback;
  std::int64_t ms = 0;
  read(j, key, ms);
  return milliseconds(ms);
}

}  // namespace

DelayModel region_model(std::size_t validators, Jitter jitter, double jitter_ms) {
  DelayModel m;
  m.jitter = jitter;
  m.jitter_ms = jitter_ms;
  m.base_ms.assign(validators, std::vector<double>(validators, 0.0));
  for (std::size_t i = 0; i < validators; ++i) {
    for (std::size_t j = 0; j < validators; ++j) m.base_ms[i][j] = kRegionLatencyMs[i % 4][j % 4];
  }
  return m;
}

Micros delay_sample(const DelayModel& model, std::size_t src, std::size_t dst, std::mt19937_64& rng) {
  if (src >= model.base_ms.size() || dst >= model.base_ms[src].size()) {
    throw ConfigError("no latency for pair " + std::to_string(src) + "->" + std::to_string(dst));
  }
  double ms = model.base_ms[src][dst];
  if (model.jitter_ms > 0) {
    if (model.jitter == Jitter::Exponential) {
      ms += std::exponential_distribution<double>(1.0 / model.jitter_ms)(rng);
    } else if (model.jitter == Jitter::Uniform) {
      ms += std::uniform_real_distribution<double>(0.0, model.jitter_ms)(rng);
    }
  }
  return Micros(std::llround(ms * 1000.0));
}

double mean_delay_ms(const DelayModel& model, std::size_t src, std::size_t dst) {
  if (src >= model.base_ms.size() || dst >= model.base_ms[src].size()) {
    throw ConfigError("no latency for pair " + std::to_string(src) + "->" + std::to_string(dst));
  }
  switch (model.jitter) {
    case Jitter::None: return model.base_ms[src][dst];
    case Jitter::Exponential: return model.base_ms[src][dst] + model.jitter_ms;
    case Jitter::Uniform: return model.base_ms[src][dst] + model.jitter_ms / 2;
  }
  return model.base_ms[src][dst];
}

std::string_view behavior_name(Behavior b) {
  switch (b) {
    case Behavior::Silent: return "silent";
    case Behavior::Equivocate: return "equivocate";
    case Behavior::Delay: return "delay";
  }
  return "?";
}

SimConfig default_config(std::uint32_t n) {
  SimConfig cfg;
  cfg.validators = n;
  cfg.delay = region_model(n);
  return cfg;
}

void validate_config(const SimConfig& cfg) {
  const auto n = cfg.validators;
  if (n == 0) throw ConfigError("validators must be at least 1");
  if (!cfg.powers.empty() && cfg.powers.size() != n) throw ConfigError("powers must list one entry per validator");
  std::uint64_t total = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto p = cfg.powers.empty() ? 1 : cfg.powers[i];
    if (p == 0) throw ConfigError("validator " + std::to_string(i) + " has zero power");
    total += p;
  }
  std::set<std::uint32_t> seen;
  std::uint64_t faulty = 0;
  for (const auto& b : cfg.byzantine) {
    if (b.validator >= n) throw ConfigError("Byzantine validator " + std::to_string(b.validator) + " out of range");
    if (!seen.insert(b.validator).second) throw ConfigError("validator listed twice as Byzantine");
    if (b.delay_ms < 0) throw ConfigError("negative Byzantine delay");
    if (b.behavior != Behavior::Delay && b.delay_ms != 0) throw ConfigError("delay_ms applies only to 'delay'");
    faulty += cfg.powers.empty() ? 1 : cfg.powers[b.validator];
  }
  if (faulty > total - consensus::quorum_power(total)) {
    throw ConfigError("Byzantine power " + std::to_string(faulty) + " is not below a third of " +
                      std::to_string(total));
  }
  if (cfg.delay.base_ms.size() != n) throw ConfigError("latency matrix must be " + std::to_string(n) + "x" + std::to_string(n));
  for (const auto& row : cfg.delay.base_ms) {
    if (row.size() != n) throw ConfigError("latency matrix rows must have " + std::to_string(n) + " entries");
    for (double v : row) {
      if (!(v >= 0)) throw ConfigError("latencies must be nonnegative");
    }
  }
  if (!(cfg.delay.jitter_ms >= 0)) throw ConfigError("jitter must be nonnegative");
  if (!(cfg.input_rate >= 0) || !std::isfinite(cfg.input_rate)) throw ConfigError("input_rate must be nonnegative");
  if (cfg.max_block_txs == 0) throw ConfigError("max_block_txs must be positive");
  if (cfg.commit_interval.count() < 0) throw ConfigError("commit interval must be nonnegative");
  if (cfg.timeouts.base.count() <= 0) throw ConfigError("timeout base must be positive");
  if (cfg.timeouts.delta.count() < 0) throw ConfigError("timeout delta must be nonnegative");
  if (cfg.duration.count() <= 0) throw ConfigError("duration must be positive");
  if (cfg.drain.count() < 0) throw ConfigError("drain must be nonnegative");
  if (cfg.anchor_interval.count() <= 0) throw ConfigError("anchor interval must be positive");
  if (cfg.base_delay.count() < 0) throw ConfigError("base delay must be nonnegative");
  const auto& c = cfg.cpu;
  for (double v : {c.tx_admit_us, c.tx_per_peer_us, c.message_us, c.proposal_tx_us, c.commit_tx_us, c.recheck_tx_us}) {
    if (!(v >= 0)) throw ConfigError("cpu costs must be nonnegative");
  }
}

void inject_fault(SimConfig& cfg, const ByzantineSpec& spec) {
  auto next = cfg;
  next.byzantine.push_back(spec);
  validate_config(next);
  cfg = std::move(next);
}

SimConfig config_from_json(const json& j) {
  only_keys(j,
            {"validators", "powers", "byzantine", "delay", "seed", "input_rate", "tx_size_bytes", "max_block_txs",
             "commit_interval_ms", "timeout", "duration_s", "drain_s", "target_heights", "anchor_interval_s",
             "base_delay_ms", "cpu", "record_messages"},
            "config");
  SimConfig cfg;
  read(j, "validators", cfg.validators);
  read(j, "powers", cfg.powers);
  read(j, "seed", cfg.seed);
  read(j, "input_rate", cfg.input_rate);
  read(j, "tx_size_bytes", cfg.tx_size_bytes);
  read(j, "max_block_txs", cfg.max_block_txs);
  read(j, "target_heights", cfg.target_heights);
  read(j, "record_messages", cfg.record_messages);
  cfg.commit_interval = millis_field(j, "commit_interval_ms", cfg.commit_interval);
  cfg.duration = seconds_field(j, "duration_s", cfg.duration);
  cfg.drain = seconds_field(j, "drain_s", cfg.drain);
  cfg.anchor_interval = seconds_field(j, "anchor_interval_s", cfg.anchor_interval);
  cfg.base_delay = millis_field(j, "base_delay_ms", cfg.base_delay);

  if (j.contains("timeout")) {
    const auto& t = j.at("timeout");
    only_keys(t, {"base_ms", "delta_ms"}, "timeout");
    cfg.timeouts.base = millis_field(t, "base_ms", cfg.timeouts.base);
    cfg.timeouts.delta = millis_field(t, "delta_ms", cfg.timeouts.delta);
  }

  if (j.contains("byzantine")) {
    const auto& list = j.at("byzantine");
    if (!list.is_array()) throw ConfigError("byzantine must be an array");
    for (const auto& e : list) {
      only_keys(e, {"validator", "behavior", "delay_ms"}, "byzantine entry");
      ByzantineSpec b;
      read(e, "validator", b.validator);
      std::string behavior = "silent";
      read(e, "behavior", behavior);
      b.behavior = parse_behavior(behavior);
      read(e, "delay_ms", b.delay_ms);
      cfg.byzantine.push_back(b);
    }
  }

  Jitter jitter = Jitter::Exponential;
  double jitter_ms = 5.0;
  std::vector<std::vector<double>> matrix;
  if (j.contains("delay")) {
    const auto& d = j.at("delay");
    only_keys(d, {"matrix_ms", "jitter", "jitter_ms"}, "delay");
    std::string name = "exponential";
    read(d, "jitter", name);
    jitter = parse_jitter(name);
    read(d, "jitter_ms", jitter_ms);
    read(d, "matrix_ms", matrix);
  }
  cfg.delay = region_model(cfg.validators, jitter, jitter_ms);
  if (!matrix.empty()) cfg.delay.base_ms = std::move(matrix);

  if (j.contains("cpu")) {
    const auto& c = j.at("cpu");
    only_keys(c, {"tx_admit_us", "tx_per_peer_us", "message_us", "proposal_tx_us", "commit_tx_us", "recheck_tx_us"},
              "cpu");
    read(c, "tx_admit_us", cfg.cpu.tx_admit_us);
    read(c, "tx_per_peer_us", cfg.cpu.tx_per_peer_us);
    read(c, "message_us", cfg.cpu.message_us);
    read(c, "proposal_tx_us", cfg.cpu.proposal_tx_us);
    read(c, "commit_tx_us", cfg.cpu.commit_tx_us);
    read(c, "recheck_tx_us", cfg.cpu.recheck_tx_us);
  }
  validate_config(cfg);
  return cfg;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

nlohmann::ordered_json config_to_json(const SimConfig& cfg) {
  nlohmann::ordered_json j;
  j["validators"] = cfg.validators;
  j["powers"] = cfg.powers;
  auto byz = nlohmann::ordered_json::array();
  for (const auto& b : cfg.byzantine) {
    nlohmann::ordered_json e;
    e["validator"] = b.validator;
    e["behavior"] = behavior_name(b.behavior);
    if (b.behavior == Behavior::Delay) e["delay_ms"] = b.delay_ms;
    byz.push_back(e);
  }
  j["byzantine"] = byz;
  j["delay"] = {{"matrix_ms", cfg.delay.base_ms}, {"jitter", jitter_name(cfg.delay.jitter)},
                {"jitter_ms", cfg.delay.jitter_ms}};
  j["seed"] = cfg.seed;
  j["input_rate"] = cfg.input_rate;
  j["tx_size_bytes"] = cfg.tx_size_bytes;
  j["max_block_txs"] = cfg.max_block_txs;
  j["commit_interval_ms"] = cfg.commit_interval.count();
  j["timeout"] = {{"base_ms", cfg.timeouts.base.count()}, {"delta_ms", cfg.timeouts.delta.count()}};
  j["duration_s"] = static_cast<double>(cfg.duration.count()) / 1000.0;
  j["drain_s"] = static_cast<double>(cfg.drain.count()) / 1000.0;
  j["target_heights"] = cfg.target_heights;
  j["anchor_interval_s"] = static_cast<double>(cfg.anchor_interval.count()) / 1000.0;
  j["base_delay_ms"] = cfg.base_delay.count();
  j["cpu"] = {{"tx_admit_us", cfg.cpu.tx_admit_us},       {"tx_per_peer_us", cfg.cpu.tx_per_peer_us},
              {"message_us", cfg.cpu.message_us},         {"proposal_tx_us", cfg.cpu.proposal_tx_us},
              {"commit_tx_us", cfg.cpu.commit_tx_us},     {"recheck_tx_us", cfg.cpu.recheck_tx_us}};
  j["record_messages"] = cfg.record_messages;
  return j;
}

}  // namespace urm::netsim
