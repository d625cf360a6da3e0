#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "urm/consensus/validators.hpp"

namespace urm::netsim {

using Micros = std::chrono::microseconds;

enum class Jitter : std::uint8_t { None, Exponential, Uniform };

/// One-way latency between validators: a base matrix in milliseconds plus
/// nonnegative jitter (exponential with the given mean, or uniform on [0, max]).
struct DelayModel {
  std::vector<std::vector<double>> base_ms;
  Jitter jitter = Jitter::Exponential;
  double jitter_ms = 5.0;
};

/// Four stand-in regions (Taiwan, Singapore, Belgium, US east) assigned
/// round-robin. One-way milliseconds; 1 ms inside a region.
inline constexpr std::string_view kRegionNames[] = {"taiwan", "singapore", "belgium", "us-east"};
inline constexpr double kRegionLatencyMs[4][4] = {
    {1, 25, 125, 85},
    {25, 1, 80, 110},
    {125, 80, 1, 50},
    {85, 110, 50, 1},
};

DelayModel region_model(std::size_t validators, Jitter jitter = Jitter::Exponential, double jitter_ms = 5.0);

/// Base latency plus a jitter draw. Throws ConfigError for a pair outside the matrix.
Micros delay_sample(const DelayModel& model, std::size_t src, std::size_t dst, std::mt19937_64& rng);

/// Mean one-way latency of the pair under the model.
double mean_delay_ms(const DelayModel& model, std::size_t src, std::size_t dst);

enum class Behavior : std::uint8_t { Silent, Equivocate, Delay };

std::string_view behavior_name(Behavior b);

struct ByzantineSpec {
  std::uint32_t validator = 0;
  Behavior behavior = Behavior::Silent;
  std::int64_t delay_ms = 0;
};

/// Validator CPU as two FIFO servers, one admitting client transactions and
/// one doing consensus work (messages, then block application and mempool
/// recheck after each commit). The commit wait starts after that work, so a
/// growing backlog stretches block intervals. Costs in microseconds.
struct CpuModel {
  /// Admitting one client transaction, plus a share per peer that relays it.
  double tx_admit_us = 950.0;
  double tx_per_peer_us = 110.0;
  /// Handling one consensus message.
  double message_us = 50.0;
  /// Checking each transaction of a received proposal.
  double proposal_tx_us = 5.0;
  /// After a commit: executing each committed transaction and rechecking each
  /// transaction left in the mempool.
  double commit_tx_us = 20.0;
  double recheck_tx_us = 200.0;
};

struct SimConfig {
  std::uint32_t validators = 4;
  /// Empty means power 1 each.
  std::vector<std::uint64_t> powers;
  std::vector<ByzantineSpec> byzantine;
  DelayModel delay;
  std::uint64_t seed = 1;
  double input_rate = 100.0;
  std::uint32_t tx_size_bytes = 212;
  std::uint32_t max_block_txs = 3000;
  std::chrono::milliseconds commit_interval{5000};
  consensus::TimeoutConfig timeouts{std::chrono::milliseconds{3000}, std::chrono::milliseconds{500}};
  /// Clients submit during [0, duration), switching validator every second.
  std::chrono::milliseconds duration{60'000};
  /// After submissions end the run continues at most this long for pending
  /// transactions to commit; what is left is reported as uncommitted.
  std::chrono::milliseconds drain{30'000};
  /// When nonzero, the run also stops once every honest validator has
  /// committed this many heights.
  std::uint64_t target_heights = 0;
  std::chrono::milliseconds anchor_interval{60'000};
  std::chrono::milliseconds base_delay{15'000};
  CpuModel cpu;
  /// Record every consensus message send.
  bool record_messages = false;
};

/// Defaults for `n` validators with the region delay model.
SimConfig default_config(std::uint32_t n);

/// Throws ConfigError naming the first problem.
void validate_config(const SimConfig& cfg);

/// Marks `spec.validator` as Byzantine. Rejects the change, leaving `cfg` as it
/// was, when the validator does not exist, is already faulty, or the faulty
/// power would reach a third of the total.
void inject_fault(SimConfig& cfg, const ByzantineSpec& spec);

/// Reads a JSON object; absent keys keep their defaults. Unknown keys are rejected.
SimConfig config_from_json(const nlohmann::json& j);
SimConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json config_to_json(const SimConfig& cfg);

}  // namespace urm::netsim
