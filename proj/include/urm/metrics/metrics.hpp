#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "urm/netsim/simulator.hpp"

namespace urm::metrics {

using Seconds = std::chrono::duration<double>;

struct BlockRate {
  std::uint64_t height = 0;
  std::size_t txs = 0;
  netsim::Micros interval{0};
  double tps = 0;
};

struct ValidatorRates {
  std::uint32_t index = 0;
  std::vector<BlockRate> blocks;
  double tps_avg = 0;
};

struct MetricsReport {
  std::string scenario;
  std::uint32_t validators = 0;
  double input_rate = 0;
  double tps_avg = 0;
  Seconds latency_avg{0};
  std::vector<ValidatorRates> per_validator;
  std::uint64_t committed = 0;
  std::uint64_t uncommitted = 0;
  /// Side-chain commit to base-chain anchor, over anchored transactions.
  std::optional<double> anchor_latency_p50_ms;
  std::optional<double> anchor_latency_max_ms;
};

/// Even-sized lists take the mean of the two central values. Throws Error
/// when empty.
double median(std::vector<double> xs);

/// Per-block rates of every honest validator. Each block's interval runs from
/// the previous commit, or from time zero for the first block; empty blocks
/// count. Throws Error when a validator has no block or an interval is not
/// positive.
std::vector<ValidatorRates> validator_rates(const netsim::Trace& trace);

/// Mean over honest validators of their mean per-block rate, in tx/s.
double tps_avg(const netsim::Trace& trace);

/// Mean over transactions of the median commit latency across honest
/// validators. Transactions some honest validator never committed are left out.
/// Throws Error when no transaction qualifies.
Seconds latency_avg(const netsim::Trace& trace);

MetricsReport compute_metrics(const netsim::Trace& trace, std::string scenario);

/// Column order: scenario, N, input_rate, tps_avg, latency_avg_ms,
/// uncommitted, anchor_latency_p50_ms. Throws Error for an empty report list.
void export_csv(std::ostream& out, const std::vector<MetricsReport>& reports);
void export_csv(const std::filesystem::path& path, const std::vector<MetricsReport>& reports);

nlohmann::ordered_json summary_json(const MetricsReport& report);

}  // namespace urm::metrics
