#include "urm/netsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <ostream>
#include <queue>
#include <unordered_map>

#include "urm/common/error.hpp"

namespace urm::netsim {

namespace {

using consensus::Message;
using consensus::PayloadPtr;
using consensus::ValidatorId;

enum class EvKind : std::uint8_t { Arrive, Process, Timer, Anchor };

struct Event {
  std::int64_t time = 0;
  std::uint64_t seq = 0;
  EvKind kind = EvKind::Timer;
  std::uint32_t node = 0;
  std::size_t message = 0;
  consensus::Timeout timeout;
};

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t k) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), k};
  return std::mt19937_64(seq);
}

Event make_event(std::int64_t time, EvKind kind, std::uint32_t node = 0, std::size_t message = 0) {
  Event ev;
  ev.time = time;
  ev.kind = kind;
  ev.node = node;
  ev.message = message;
  return ev;
}

Event timer_event(std::int64_t time, std::uint32_t node, consensus::Timeout t) {
  Event ev = make_event(time, EvKind::Timer, node);
  ev.timeout = t;
  return ev;
}

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    return a.time != b.time ? a.time > b.time : a.seq > b.seq;
  }
};

struct Node {
  consensus::ValidatorState state;
  consensus::Application app;
  std::optional<ByzantineSpec> byzantine;
  // Two FIFO servers: consensus work, and client transaction admission.
  std::int64_t busy_until = 0;
  std::int64_t admit_busy_until = 0;
  // Client transactions reaching this node, in arrival order.
  std::vector<std::pair<std::int64_t, std::uint64_t>> arrivals;
  std::size_t next_arrival = 0;
  std::vector<bool> reaches;
  std::uint64_t pending = 0;
  // Admitted transactions with the time they became available, oldest first.
  std::deque<std::pair<std::int64_t, std::uint64_t>> mempool;
  std::vector<bool> committed;
  std::unordered_map<Digest, bool> validity;
  std::map<std::pair<std::uint64_t, std::uint64_t>, PayloadPtr> alternates;
};

class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg)
      : cfg_(cfg),
        params_{make_validator_set(cfg), cfg.timeouts, cfg.commit_interval},
        net_rng_(stream(cfg.seed, 1)),
        byz_rng_(stream(cfg.seed, 3)) {
    trace_.config = cfg;
    const auto n = cfg.validators;
    nodes_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) nodes_[i].state = consensus::initial_state(ValidatorId{i});
    for (const auto& b : cfg.byzantine) nodes_[b.validator].byzantine = b;
    trace_.validators.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      trace_.validators[i].index = i;
      trace_.validators[i].byzantine = nodes_[i].byzantine.has_value();
    }
    trace_.reference = n;
    for (std::uint32_t i = 0; i < n && trace_.reference == n; ++i) {
      if (!nodes_[i].byzantine) trace_.reference = i;
    }
    if (trace_.reference == n) throw ConfigError("no honest validator");
    trace_.side = ledger::SideChain("side", 0);
    for (std::uint32_t i = 0; i < n; ++i) wire_app(i);
    generate_transactions();
  }

  Trace run() {
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
      now_ = 0;
      apply(i, consensus::StartHeight{1, cfg_.commit_interval});
    }
    push(make_event(cfg_.anchor_interval.count() * 1000, EvKind::Anchor));
    const std::int64_t horizon = (cfg_.duration + cfg_.drain).count() * 1000;
    while (!queue_.empty() && !finished()) {
      const Event ev = queue_.top();
      if (ev.time > horizon) break;
      queue_.pop();
      now_ = ev.time;
      switch (ev.kind) {
        case EvKind::Arrive: arrive(ev); break;
        case EvKind::Process: apply(ev.node, pool_[ev.message]); break;
        case EvKind::Timer: apply(ev.node, ev.timeout); break;
        case EvKind::Anchor:
          ledger::anchor(trace_.side, trace_.base, now_ / 1000, cfg_.base_delay.count());
          push(make_event(now_ + cfg_.anchor_interval.count() * 1000, EvKind::Anchor));
          break;
      }
    }
    trace_.end_time = Micros(now_);
    const std::int64_t every = cfg_.anchor_interval.count() * 1000;
    const std::int64_t last_tick = (now_ + every - 1) / every * every;
    ledger::anchor(trace_.side, trace_.base, last_tick / 1000, cfg_.base_delay.count());
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
      trace_.validators[i].conflicts = nodes_[i].state.conflicts;
      trace_.validators[i].malformed = nodes_[i].state.malformed;
    }
    return std::move(trace_);
  }

 private:
  static consensus::ValidatorSet make_validator_set(const SimConfig& cfg) {
    validate_config(cfg);
    std::vector<consensus::Validator> vs;
    for (std::uint32_t i = 0; i < cfg.validators; ++i) {
      vs.push_back({ValidatorId{i}, cfg.powers.empty() ? 1 : cfg.powers[i]});
    }
    return consensus::ValidatorSet(std::move(vs));
  }

  void push(Event ev) {
    ev.seq = seq_++;
    queue_.push(ev);
  }

  void wire_app(std::uint32_t i) {
    auto& app = nodes_[i].app;
    app.propose = [this, i](ValidatorId self, std::uint64_t h, std::uint64_t) {
      auto& node = nodes_[i];
      admit(node, now_);
      std::vector<std::uint64_t> batch;
      for (const auto& [ready, tx] : node.mempool) {
        if (ready > now_ || batch.size() >= cfg_.max_block_txs) break;
        batch.push_back(tx);
      }
      return consensus::make_payload(h, self, std::move(batch));
    };
    app.valid = [this, i](const consensus::Payload& p) {
      auto& node = nodes_[i];
      const auto [it, fresh] = node.validity.emplace(p.digest, false);
      if (!fresh) return it->second;
      bool ok = p.txs.size() <= cfg_.max_block_txs;
      std::vector<std::uint64_t> sorted = p.txs;
      std::sort(sorted.begin(), sorted.end());
      ok = ok && std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
      for (auto tx : sorted) ok = ok && tx < node.committed.size() && !node.committed[tx];
      it->second = ok;
      return ok;
    };
  }

  void generate_transactions() {
    const auto n = cfg_.validators;
    const double rate = cfg_.input_rate;
    const auto count =
        rate > 0 ? static_cast<std::uint64_t>(std::floor(rate * static_cast<double>(cfg_.duration.count()) / 1000.0))
                 : 0;
    auto rng = stream(cfg_.seed, 2);
    trace_.txs.resize(count);
    for (auto& node : nodes_) {
      node.committed.assign(count, false);
      node.reaches.assign(count, false);
    }
    for (std::uint64_t id = 0; id < count; ++id) {
      auto& rec = trace_.txs[id];
      rec.submit = Micros(std::llround(static_cast<double>(id) * 1e6 / rate));
      rec.entry = static_cast<std::uint32_t>(rec.submit.count() / 1'000'000 % n);
      rec.commit.assign(n, std::nullopt);
      // The client sits in the entry validator's region.
      const std::int64_t at_entry = rec.submit.count() + delay_sample(cfg_.delay, rec.entry, rec.entry, rng).count();
      add_arrival(rec.entry, at_entry, id);
      const auto& entry = nodes_[rec.entry];
      if (entry.byzantine && entry.byzantine->behavior == Behavior::Silent) continue;
      const std::int64_t extra =
          entry.byzantine && entry.byzantine->behavior == Behavior::Delay ? entry.byzantine->delay_ms * 1000 : 0;
      for (std::uint32_t j = 0; j < n; ++j) {
        if (j == rec.entry) continue;
        add_arrival(j, at_entry + extra + delay_sample(cfg_.delay, rec.entry, j, rng).count(), id);
      }
    }
    for (auto& node : nodes_) std::sort(node.arrivals.begin(), node.arrivals.end());
  }

  void add_arrival(std::uint32_t j, std::int64_t t, std::uint64_t id) {
    nodes_[j].arrivals.emplace_back(t, id);
    nodes_[j].reaches[id] = true;
    ++nodes_[j].pending;
  }

  std::int64_t cost(double us) const { return std::llround(us); }

  // Runs admission over every transaction that arrived by `t`. Entries whose
  // admission finishes after `t` are still queued but already count as pending.
  void admit(Node& node, std::int64_t t) {
    const double per_tx = cfg_.cpu.tx_admit_us + cfg_.cpu.tx_per_peer_us * (cfg_.validators - 1);
    while (node.next_arrival < node.arrivals.size() && node.arrivals[node.next_arrival].first <= t) {
      const auto [at, tx] = node.arrivals[node.next_arrival++];
      if (node.committed[tx]) continue;
      node.admit_busy_until = std::max(node.admit_busy_until, at) + cost(per_tx);
      node.mempool.emplace_back(node.admit_busy_until, tx);
    }
  }

  void arrive(const Event& ev) {
    auto& node = nodes_[ev.node];
    double us = cfg_.cpu.message_us;
    if (const auto* p = std::get_if<consensus::Proposal>(&pool_[ev.message].body); p && p->value) {
      us += cfg_.cpu.proposal_tx_us * static_cast<double>(p->value->txs.size());
    }
    node.busy_until = std::max(node.busy_until, now_) + cost(us);
    push(make_event(node.busy_until, EvKind::Process, ev.node, ev.message));
  }

  void apply(std::uint32_t i, const consensus::Event& event) {
    auto out = consensus::step(nodes_[i].state, event, now_, params_, nodes_[i].app);
    for (const auto& d : out.decisions) decide(i, d);
    for (const auto& t : out.timers) {
      // The commit wait starts once the node has finished applying the block.
      const std::int64_t from =
          t.timeout.kind == consensus::TimeoutKind::Commit ? std::max(now_, nodes_[i].busy_until) : now_;
      push(timer_event(from + t.delay.count() * 1000, i, t.timeout));
    }
    for (const auto& m : out.messages) send(i, m);
  }

  void decide(std::uint32_t i, const consensus::Decision& d) {
    auto& node = nodes_[i];
    trace_.validators[i].blocks.push_back({d.height, d.round, Micros(now_), d.value->digest, d.value->txs});
    for (auto tx : d.value->txs) {
      node.committed[tx] = true;
      if (node.reaches[tx]) --node.pending;
      trace_.txs[tx].commit[i] = Micros(now_);
    }
    admit(node, now_);
    std::erase_if(node.mempool, [&](const auto& e) { return node.committed[e.second]; });
    node.validity.clear();
    const double us = cfg_.cpu.commit_tx_us * static_cast<double>(d.value->txs.size()) +
                      cfg_.cpu.recheck_tx_us * static_cast<double>(node.mempool.size());
    node.busy_until = std::max(node.busy_until, now_) + cost(us);
    if (i == trace_.reference) append_side_block(d);
  }

  void append_side_block(const consensus::Decision& d) {
    std::vector<ledger::TxBody> body;
    body.reserve(d.value->txs.size());
    for (auto tx : d.value->txs) {
      const auto& rec = trace_.txs[tx];
      body.emplace_back(ledger::DataTx{entry_address(rec.entry), client_address_,
                                       sha256("tx:" + std::to_string(tx)), rec.submit.count() / 1000});
    }
    ledger::BlockMeta meta{now_ / 1000, "validator-" + std::to_string(consensus::to_index(d.value->proposer))};
    trace_.side.append_block(body, meta);
  }

  const ledger::Address& entry_address(std::uint32_t i) {
    if (entry_addresses_.empty()) {
      for (std::uint32_t j = 0; j < cfg_.validators; ++j) {
        entry_addresses_.push_back(ledger::address_of("validator-" + std::to_string(j)));
      }
    }
    return entry_addresses_[i];
  }

  void send(std::uint32_t i, const Message& m) {
    if (cfg_.record_messages) trace_.messages.push_back(consensus::trace_record(m, now_));
    const auto& byz = nodes_[i].byzantine;
    if (byz && byz->behavior == Behavior::Silent) return;
    const std::int64_t extra = byz && byz->behavior == Behavior::Delay ? byz->delay_ms * 1000 : 0;
    std::vector<std::uint32_t> others;
    for (std::uint32_t j = 0; j < nodes_.size(); ++j) {
      if (j != i) others.push_back(j);
    }
    if (byz && byz->behavior == Behavior::Equivocate) {
      std::shuffle(others.begin(), others.end(), byz_rng_);
      const auto half = others.size() / 2;
      const std::size_t original = add_to_pool(m);
      const std::size_t conflicting = add_to_pool(equivocal(i, m));
      if (cfg_.record_messages) trace_.messages.push_back(consensus::trace_record(pool_[conflicting], now_));
      for (std::size_t k = 0; k < others.size(); ++k) deliver(i, others[k], k < half ? original : conflicting, 0);
      return;
    }
    const std::size_t idx = add_to_pool(m);
    for (auto j : others) deliver(i, j, idx, extra);
  }

  // The variant of `m` an equivocating sender shows to the second half.
  Message equivocal(std::uint32_t i, const Message& m) {
    auto& node = nodes_[i];
    Message alt = m;
    if (auto* p = std::get_if<consensus::Proposal>(&alt.body)) {
      std::vector<std::uint64_t> txs = p->value->txs;
      if (!txs.empty()) txs.pop_back();
      p->value = consensus::make_payload(p->height, m.sender, std::move(txs), p->round + 1);
      p->valid_round = -1;
      p->pol.clear();
      node.alternates[{p->height, p->round}] = p->value;
    } else if (auto* v = std::get_if<consensus::Vote>(&alt.body)) {
      const auto it = node.alternates.find({v->height, v->round});
      if (it != node.alternates.end()) {
        v->value = it->second->digest;
      } else if (v->value) {
        v->value.reset();
      } else {
        const auto r = node.state.rounds.find(v->round);
        if (node.state.height == v->height && r != node.state.rounds.end() && r->second.proposal) {
          v->value = r->second.proposal->digest;
        }
      }
    }
    return alt;
  }

  std::size_t add_to_pool(const Message& m) {
    pool_.push_back(m);
    return pool_.size() - 1;
  }

  void deliver(std::uint32_t from, std::uint32_t to, std::size_t idx, std::int64_t extra) {
    const auto d = delay_sample(cfg_.delay, from, to, net_rng_).count();
    push(make_event(now_ + extra + d, EvKind::Arrive, to, idx));
  }

  bool finished() const {
    bool target_met = cfg_.target_heights > 0;
    bool drained = now_ >= cfg_.duration.count() * 1000;
    for (const auto& node : nodes_) {
      if (node.byzantine) continue;
      target_met = target_met && node.state.decisions.size() >= cfg_.target_heights;
      drained = drained && node.pending == 0;
    }
    return target_met || drained;
  }

  SimConfig cfg_;
  consensus::ConsensusParams params_;
  std::vector<Node> nodes_;
  std::vector<Message> pool_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  std::int64_t now_ = 0;
  std::mt19937_64 net_rng_;
  std::mt19937_64 byz_rng_;
  Trace trace_;
  std::vector<ledger::Address> entry_addresses_;
  ledger::Address client_address_ = ledger::address_of("client");
};

}  // namespace

Trace run_simulation(const SimConfig& cfg) { return Simulator(cfg).run(); }

SimConfig with_validators(const SimConfig& cfg, std::uint32_t n) {
  SimConfig out = cfg;
  out.validators = n;
  out.delay = region_model(n, cfg.delay.jitter, cfg.delay.jitter_ms);
  if (!cfg.powers.empty() && cfg.powers.size() != n) out.powers.clear();
  validate_config(out);
  return out;
}

std::vector<std::uint32_t> honest_validators(const Trace& trace) {
  std::vector<std::uint32_t> out;
  for (const auto& v : trace.validators) {
    if (!v.byzantine) out.push_back(v.index);
  }
  return out;
}

bool decisions_consistent(const Trace& trace) {
  std::map<std::uint64_t, Digest> decided;
  for (auto i : honest_validators(trace)) {
    for (const auto& b : trace.validators[i].blocks) {
      const auto [it, fresh] = decided.emplace(b.height, b.value);
      if (!fresh && it->second != b.value) return false;
    }
  }
  return true;
}

bool conservation_holds(const Trace& trace) {
  for (auto i : honest_validators(trace)) {
    std::vector<bool> seen(trace.txs.size(), false);
    for (const auto& b : trace.validators[i].blocks) {
      for (auto tx : b.txs) {
        if (tx >= trace.txs.size() || seen[tx]) return false;
        seen[tx] = true;
        if (!trace.txs[tx].commit[i] || *trace.txs[tx].commit[i] != b.commit_time) return false;
        if (b.commit_time < trace.txs[tx].submit) return false;
      }
    }
  }
  return true;
}

std::uint64_t uncommitted_count(const Trace& trace) {
  const auto honest = honest_validators(trace);
  std::uint64_t n = 0;
  for (const auto& tx : trace.txs) {
    for (auto i : honest) {
      if (!tx.commit[i]) {
        ++n;
        break;
      }
    }
  }
  return n;
}

void export_trace_csv(std::ostream& out, const Trace& trace) {
  out << "tx,submit_us,entry";
  for (std::size_t i = 0; i < trace.validators.size(); ++i) out << ",commit_us_" << i;
  out << '\n';
  for (std::size_t id = 0; id < trace.txs.size(); ++id) {
    const auto& tx = trace.txs[id];
    out << id << ',' << tx.submit.count() << ',' << tx.entry;
    for (const auto& c : tx.commit) {
      out << ',';
      if (c) out << c->count();
    }
    out << '\n';
  }
}

}  // namespace urm::netsim
