#include "urm/audit/audit.hpp"

#include <istream>
#include <ostream>
#include <set>

#include "urm/common/error.hpp"

namespace urm::audit {

using enforcement::Query;
using json = nlohmann::json;

namespace {

bool mask_assignments(enforcement::Assignments& a, const std::string& owner_column) {
  bool any = false;
  for (auto& [field, value] : a) {
    if (field == owner_column || esa::is_null(value)) continue;
    value = std::string(kMaskToken);
    any = true;
  }
  return any;
}

struct Located {
  const ledger::DataTx* tx = nullptr;
  std::uint64_t block = 0;
};

std::map<std::uint64_t, Located> data_txs(const ledger::SideChain& side) {
  std::map<std::uint64_t, Located> out;
  for (const auto& b : side.blocks()) {
    for (const auto& t : b.txs) {
      if (const auto* d = std::get_if<ledger::DataTx>(&t.body)) out[t.seq] = {d, b.height};
    }
  }
  return out;
}

// Compliance of one parsed record under the agreements in force at its position.
void check_record(RecordVerdict& v, const AuditRecord& rec, const ledger::SideChain& side, const EsaStore& store,
                  const SchemaMap& schemas) {
  Query q;
  try {
    q = enforcement::parse_query(rec.query);
  } catch (const Error& e) {
    v.reason = std::string("stored query does not parse: ") + e.what();
    return;
  }
  const auto schema_it = schemas.find(enforcement::table_of(q));
  if (schema_it == schemas.end()) {
    v.reason = "no schema for table " + enforcement::table_of(q);
    return;
  }
  const auto& schema = schema_it->second;
  const auto stored = stored_form(q, schema);
  if (stored.text != rec.query || stored.masked != rec.masked) {
    v.reason = "stored query is not in masked form";
    return;
  }

  std::vector<esa::Esa> agreements;
  for (const auto& h : ledger::agreements_in_force(side, rec.seq)) {
    const auto it = store.find(h);
    if (it == store.end() || esa::hash_esa(it->second) != h) {
      v.reason = "agreement " + h.hex() + " is not available";
      return;
    }
    agreements.push_back(it->second);
  }
  v.verifiable = true;

  if (const auto* s = std::get_if<enforcement::Select>(&q)) {
    const enforcement::ComplianceContext ctx{rec.requester, rec.purpose, agreements};
    v.compliant = enforcement::check_compliance(*s, ctx, schema);
    if (!v.compliant) v.reason = "read exceeds the agreements in force";
  } else if (std::holds_alternative<enforcement::Delete>(q)) {
    v.compliant = true;
  } else {
    const auto rewrite = enforcement::rewrite_write(q, agreements, schema);
    v.compliant = rewrite.executed && rewrite.query == q;
    if (!v.compliant) v.reason = "write assigns columns no agreement in force allows";
  }
}

}  // namespace

StoredQuery stored_form(const Query& q, const enforcement::Schema& schema) {
  Query copy = q;
  bool masked = false;
  if (auto* ins = std::get_if<enforcement::Insert>(&copy)) {
    masked = mask_assignments(ins->values, schema.owner_column);
  } else if (auto* up = std::get_if<enforcement::Update>(&copy)) {
    masked = mask_assignments(up->set, schema.owner_column);
  }
  return {enforcement::render_query(copy), masked};
}

std::pair<AuditRecord, ledger::DataTx> log_query(AuditLog& log, ledger::SideChain& side, const Query& q,
                                                 const enforcement::Schema& schema, const LogContext& ctx) {
  const auto stored = stored_form(q, schema);
  const ledger::DataTx tx{ledger::address_of(ctx.provider), ledger::address_of(ctx.requester), sha256(stored.text),
                          ctx.time_ms};
  const auto& block = side.append_block({tx}, ledger::BlockMeta{ctx.time_ms, ledger::address_of(ctx.provider)});
  AuditRecord rec{block.txs.back().seq, ctx.requester, ctx.purpose, stored.masked, stored.text, tx.query_hash,
                  ctx.time_ms, block.height};
  log.records.push_back(rec);
  return {rec, tx};
}

AuditVerdict verify_audit(const AuditLog& log, const ledger::SideChain& side, const EsaStore& store,
                          const SchemaMap& schemas) {
  AuditVerdict out;
  if (const auto chain = ledger::check_chain(side); !chain) out.chain_problem = chain.reason;
  const auto txs = data_txs(side);
  std::set<std::uint64_t> claimed;
  std::optional<std::uint64_t> last_seq;

  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto& rec = log.records[i];
    RecordVerdict v;
    v.seq = rec.seq;
    const auto it = txs.find(rec.seq);
    if (it == txs.end() || !claimed.insert(rec.seq).second) {
      v.reason = "no unclaimed DataTx with this sequence number";
      out.orphans.push_back(i);
      out.records.push_back(v);
      continue;
    }
    if (last_seq && rec.seq < *last_seq) {
      v.reason = "record out of ledger order";
      out.orphans.push_back(i);
      out.records.push_back(v);
      continue;
    }
    last_seq = rec.seq;
    const auto& tx = *it->second.tx;
    v.hash_match = sha256(rec.query) == rec.query_hash && rec.query_hash == tx.query_hash &&
                   ledger::address_of(rec.requester) == tx.requester && rec.time_ms == tx.time_ms &&
                   rec.block == it->second.block;
    if (!v.hash_match) {
      v.reason = "record does not match its DataTx";
    } else {
      check_record(v, rec, side, store, schemas);
    }
    out.records.push_back(v);
  }
  for (const auto& [seq, located] : txs) {
    if (!claimed.count(seq)) out.unlogged.push_back(seq);
  }

  out.ok = out.chain_problem.empty() && out.orphans.empty() && out.unlogged.empty();
  for (const auto& v : out.records) out.ok = out.ok && v.ok();
  return out;
}

std::vector<Disclosure> reveal_agreements(const ledger::SideChain& side, const EsaStore& store,
                                          std::string_view consumer) {
  const auto owner = ledger::address_of(consumer);
  std::vector<Disclosure> out;
  std::map<Digest, std::size_t> index;
  for (const auto& b : side.blocks()) {
    for (const auto& t : b.txs) {
      if (const auto* d = std::get_if<ledger::EsadTx>(&t.body); d && d->owner == owner) {
        auto [it, fresh] = index.emplace(d->esa_hash, out.size());
        if (fresh) {
          const auto s = store.find(d->esa_hash);
          if (s == store.end()) throw Error("disclosure refused: agreement " + d->esa_hash.hex() + " is not stored");
          if (esa::hash_esa(s->second) != d->esa_hash || s->second.consumer != consumer) {
            throw Error("disclosure refused: stored agreement " + d->esa_hash.hex() + " does not match the ledger");
          }
          out.push_back({d->esa_hash, s->second, {}});
        }
        out[it->second].events.push_back({t.seq, "ESAD", d->deployed_at_ms});
      } else if (const auto* r = std::get_if<ledger::EsarTx>(&t.body)) {
        const auto it = index.find(r->esa_hash);
        if (it != index.end()) out[it->second].events.push_back({t.seq, "ESAR", r->time_ms});
      }
    }
  }
  if (out.empty()) throw Error("no agreement deployed for " + std::string(consumer));
  return out;
}

void write_audit_log(std::ostream& out, const AuditLog& log) {
  for (const auto& r : log.records) {
    nlohmann::ordered_json j;
    j["seq"] = r.seq;
    j["requester"] = r.requester;
    j["purpose"] = r.purpose;
    j["masked"] = r.masked;
    j["query"] = r.query;
    j["hash"] = r.query_hash.hex();
    j["time_ms"] = r.time_ms;
    j["block"] = r.block;
    out << j.dump() << '\n';
  }
}

AuditLog read_audit_log(std::istream& in) {
  static const std::set<std::string> keys{"seq", "requester", "purpose", "masked", "query", "hash", "time_ms", "block"};
  AuditLog log;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      if (!j.is_object() || j.size() != keys.size()) throw Error("expected the fields of an audit record");
      for (const auto& [k, v] : j.items()) {
        if (!keys.count(k)) throw Error("unknown field '" + k + "'");
      }
      AuditRecord r;
      r.seq = j.at("seq").get<std::uint64_t>();
      r.requester = j.at("requester").get<std::string>();
      r.purpose = j.at("purpose").get<std::string>();
      r.masked = j.at("masked").get<bool>();
      r.query = j.at("query").get<std::string>();
      r.query_hash = Digest::from_hex(j.at("hash").get<std::string>());
      r.time_ms = j.at("time_ms").get<std::int64_t>();
      r.block = j.at("block").get<std::uint64_t>();
      log.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError(std::string("bad audit record: ") + e.what(), n, 1);
    }
  }
  return log;
}

nlohmann::ordered_json verdict_json(const AuditVerdict& v) {
  nlohmann::ordered_json j;
  j["ok"] = v.ok;
  j["chain_problem"] = v.chain_problem;
  auto records = nlohmann::ordered_json::array();
  for (const auto& r : v.records) {
    records.push_back({{"seq", r.seq},
                       {"hash_match", r.hash_match},
                       {"verifiable", r.verifiable},
                       {"compliant", r.compliant},
                       {"reason", r.reason}});
  }
  j["records"] = records;
  j["unlogged"] = v.unlogged;
  j["orphans"] = v.orphans;
  return j;
}

}  // namespace urm::audit
