#include "urm/metrics/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "urm/common/error.hpp"

namespace urm::metrics {

namespace {

std::string fixed3(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << v;
  return out.str();
}

// Commit latencies of one transaction at each honest validator, or nothing
// when one of them never committed it.
std::optional<std::vector<double>> honest_latencies(const netsim::TxRecord& tx,
                                                    const std::vector<std::uint32_t>& honest) {
  std::vector<double> out;
  out.reserve(honest.size());
  for (auto i : honest) {
    if (!tx.commit[i]) return std::nullopt;
    out.push_back(std::chrono::duration_cast<Seconds>(*tx.commit[i] - tx.submit).count());
  }
  return out;
}

}  // namespace

double median(std::vector<double> xs) {
  if (xs.empty()) throw Error("median of an empty list");
  const auto mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  const double upper = xs[mid];
  if (xs.size() % 2 == 1) return upper;
  const double lower = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2;
}

std::vector<ValidatorRates> validator_rates(const netsim::Trace& trace) {
  std::vector<ValidatorRates> out;
  for (auto i : netsim::honest_validators(trace)) {
    const auto& v = trace.validators[i];
    if (v.blocks.empty()) throw Error("validator " + std::to_string(i) + " committed no block");
    ValidatorRates rates;
    rates.index = i;
    netsim::Micros prev{0};
    double sum = 0;
    for (const auto& b : v.blocks) {
      const auto interval = b.commit_time - prev;
      if (interval.count() <= 0) {
        throw Error("validator " + std::to_string(i) + " block " + std::to_string(b.height) +
                    " has a non-positive commit interval");
      }
      const double tps = static_cast<double>(b.txs.size()) / std::chrono::duration_cast<Seconds>(interval).count();
      rates.blocks.push_back({b.height, b.txs.size(), interval, tps});
      sum += tps;
      prev = b.commit_time;
    }
    rates.tps_avg = sum / static_cast<double>(rates.blocks.size());
    out.push_back(std::move(rates));
  }
  if (out.empty()) throw Error("trace has no honest validator");
  return out;
}

double tps_avg(const netsim::Trace& trace) {
  const auto rates = validator_rates(trace);
  double sum = 0;
  for (const auto& r : rates) sum += r.tps_avg;
  return sum / static_cast<double>(rates.size());
}

Seconds latency_avg(const netsim::Trace& trace) {
  const auto honest = netsim::honest_validators(trace);
  double sum = 0;
  std::uint64_t count = 0;
  for (const auto& tx : trace.txs) {
    if (auto lat = honest_latencies(tx, honest)) {
      sum += median(std::move(*lat));
      ++count;
    }
  }
  if (count == 0) throw Error("no transaction was committed by every honest validator");
  return Seconds(sum / static_cast<double>(count));
}

MetricsReport compute_metrics(const netsim::Trace& trace, std::string scenario) {
  MetricsReport r;
  r.scenario = std::move(scenario);
  r.validators = trace.config.validators;
  r.input_rate = trace.config.input_rate;
  r.per_validator = validator_rates(trace);
  double sum = 0;
  for (const auto& v : r.per_validator) sum += v.tps_avg;
  r.tps_avg = sum / static_cast<double>(r.per_validator.size());
  r.latency_avg = latency_avg(trace);
  r.uncommitted = netsim::uncommitted_count(trace);
  r.committed = trace.txs.size() - r.uncommitted;

  std::vector<double> anchor_ms;
  for (const auto& b : trace.side.blocks()) {
    if (b.txs.empty()) continue;
    const auto lat = ledger::interchain_latency(b.txs.front().seq, trace.side, trace.base);
    if (!lat) continue;
    anchor_ms.insert(anchor_ms.end(), b.txs.size(), static_cast<double>(*lat));
  }
  if (!anchor_ms.empty()) {
    r.anchor_latency_max_ms = *std::max_element(anchor_ms.begin(), anchor_ms.end());
    r.anchor_latency_p50_ms = median(std::move(anchor_ms));
  }
  return r;
}

void export_csv(std::ostream& out, const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw Error("no metrics to export");
  out << "scenario,N,input_rate,tps_avg,latency_avg_ms,uncommitted,anchor_latency_p50_ms\n";
  for (const auto& r : reports) {
    out << r.scenario << ',' << r.validators << ',' << fixed3(r.input_rate) << ',' << fixed3(r.tps_avg) << ','
        << fixed3(r.latency_avg.count() * 1000.0) << ',' << r.uncommitted << ',';
    if (r.anchor_latency_p50_ms) out << fixed3(*r.anchor_latency_p50_ms);
    out << '\n';
  }
}

void export_csv(const std::filesystem::path& path, const std::vector<MetricsReport>& reports) {
  std::ostringstream buf;
  export_csv(buf, reports);
  std::ofstream out(path);
  out << buf.str();
  out.flush();
  if (!out) throw Error("cannot write " + path.string());
}

nlohmann::ordered_json summary_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["N"] = r.validators;
  j["input_rate"] = r.input_rate;
  j["tps_avg"] = r.tps_avg;
  j["latency_avg_ms"] = r.latency_avg.count() * 1000.0;
  j["committed"] = r.committed;
  j["uncommitted"] = r.uncommitted;
  j["anchor_latency_p50_ms"] = r.anchor_latency_p50_ms ? nlohmann::ordered_json(*r.anchor_latency_p50_ms) : nullptr;
  j["anchor_latency_max_ms"] = r.anchor_latency_max_ms ? nlohmann::ordered_json(*r.anchor_latency_max_ms) : nullptr;
  auto per = nlohmann::ordered_json::array();
  for (const auto& v : r.per_validator) {
    nlohmann::ordered_json e;
    e["validator"] = v.index;
    e["blocks"] = v.blocks.size();
    e["tps_avg"] = v.tps_avg;
    per.push_back(e);
  }
  j["validators"] = per;
  return j;
}

}  // namespace urm::metrics
