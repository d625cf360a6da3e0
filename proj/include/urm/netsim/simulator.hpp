#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "urm/common/digest.hpp"
#include "urm/consensus/message.hpp"
#include "urm/consensus/state_machine.hpp"
#include "urm/ledger/chain.hpp"
#include "urm/netsim/config.hpp"

namespace urm::netsim {

struct CommittedBlock {
  std::uint64_t height = 0;
  std::uint64_t round = 0;
  Micros commit_time{0};
  Digest value;
  std::vector<std::uint64_t> txs;
};

struct ValidatorTrace {
  std::uint32_t index = 0;
  bool byzantine = false;
  std::vector<CommittedBlock> blocks;
  std::vector<consensus::Conflict> conflicts;
  std::uint64_t malformed = 0;
};

struct TxRecord {
  Micros submit{0};
  std::uint32_t entry = 0;
  /// Commit time at each validator; nullopt where it never committed.
  std::vector<std::optional<Micros>> commit;
};

struct Trace {
  SimConfig config;
  Micros end_time{0};
  std::vector<ValidatorTrace> validators;
  /// Indexed by transaction id.
  std::vector<TxRecord> txs;
  std::vector<consensus::TraceRecord> messages;
  /// Honest validator whose chain is materialized on `side`.
  std::uint32_t reference = 0;
  ledger::SideChain side{"side", 0};
  ledger::BaseChain base;
};

/// Runs one simulation: clients stop submitting at cfg.duration; the run ends
/// once every honest validator has committed every transaction that reached
/// it, the height target is met, or the drain window closes. A last anchor is
/// taken at the next anchor tick. Throws ConfigError for an invalid config.
Trace run_simulation(const SimConfig& cfg);

/// Same config with `n` validators and the region delay model rebuilt for
/// them. Byzantine entries and powers must still fit.
SimConfig with_validators(const SimConfig& cfg, std::uint32_t n);

std::vector<std::uint32_t> honest_validators(const Trace& trace);

/// decision_consistency over the honest validators' chains.
bool decisions_consistent(const Trace& trace);

/// Every committed transaction was submitted, and no honest chain holds a
/// transaction twice.
bool conservation_holds(const Trace& trace);

/// Transactions some honest validator never committed.
std::uint64_t uncommitted_count(const Trace& trace);

/// One row per transaction: tx, submit_us, entry, then commit_us_<i> per
/// validator (empty when never committed).
void export_trace_csv(std::ostream& out, const Trace& trace);

}  // namespace urm::netsim
