#include "urm/cli/workspace.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "urm/common/error.hpp"

namespace urm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kChainId = "urm";

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open " + p.string());
  return in;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw Error("cannot write " + p.string());
}

// Runs `f`, prefixing any error with the file it concerns.
template <typename F>
auto with_file(const fs::path& p, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw Error(p.string() + ":" + std::to_string(e.line()) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(p.string() + ": " + e.what());
  }
}

}  // namespace

Workspace::Workspace(std::string provider) : provider_(std::move(provider)), side_(kChainId, 0) {}

Workspace Workspace::create(const fs::path& dir, const std::vector<enforcement::Table>& tables,
                            std::string provider) {
  if (fs::exists(dir / "workspace.json")) throw Error(dir.string() + " already holds a workspace");
  Workspace ws(std::move(provider));
  for (const auto& t : tables) ws.add_table(t);
  ws.dir_ = dir;
  ws.save();
  return ws;
}

Workspace Workspace::open(const fs::path& dir) {
  const auto meta_path = dir / "workspace.json";
  const json meta = with_file(meta_path, [&] {
    auto in = open_in(meta_path);
    return json::parse(in);
  });
  Workspace ws;
  ws.dir_ = dir;
  with_file(meta_path, [&] {
    ws.provider_ = meta.at("provider").get<std::string>();
    ws.clock_ms_ = meta.at("clock_ms").get<std::int64_t>();
    ws.rejected_writes_ = meta.at("rejected_writes").get<std::uint64_t>();
    return 0;
  });
  for (const auto& name : meta.at("tables")) {
    const auto path = dir / "tables" / (name.get<std::string>() + ".csv");
    ws.add_table(with_file(path, [&] { return enforcement::load_csv_file(path.string(), name.get<std::string>()); }));
  }
  if (fs::exists(dir / "esa")) {
    for (const auto& entry : fs::directory_iterator(dir / "esa")) {
      if (entry.path().extension() != ".esa") continue;
      const auto path = entry.path();
      with_file(path, [&] {
        auto in = open_in(path);
        std::stringstream buf;
        buf << in.rdbuf();
        auto agreement = esa::parse_esa(buf.str());
        const auto h = esa::hash_esa(agreement);
        if (h.hex() != path.stem().string()) throw Error("agreement does not match its file name hash");
        ws.store_.emplace(h, std::move(agreement));
        return 0;
      });
    }
  }
  const auto side_path = dir / "chain" / "side.jsonl";
  ws.side_ = with_file(side_path, [&] {
    auto in = open_in(side_path);
    return ledger::import_chain(in);
  });
  const auto base_path = dir / "chain" / "base.jsonl";
  ws.base_ = with_file(base_path, [&] {
    auto in = open_in(base_path);
    return ledger::import_base(in);
  });
  const auto log_path = dir / "audit.jsonl";
  ws.log_ = with_file(log_path, [&] {
    auto in = open_in(log_path);
    return audit::read_audit_log(in);
  });
  return ws;
}

void Workspace::save() const {
  if (!dir_) throw Error("workspace has no directory");
  const auto& dir = *dir_;
  fs::create_directories(dir / "tables");
  fs::create_directories(dir / "esa");
  fs::create_directories(dir / "chain");

  nlohmann::ordered_json meta;
  meta["provider"] = provider_;
  meta["clock_ms"] = clock_ms_;
  meta["rejected_writes"] = rejected_writes_;
  meta["tables"] = json::array();
  for (const auto& [name, table] : db_.tables()) {
    meta["tables"].push_back(name);
    std::ostringstream csv;
    enforcement::save_csv(csv, table);
    write_file(dir / "tables" / (name + ".csv"), csv.str());
  }
  for (const auto& [h, agreement] : store_) write_file(dir / "esa" / (h.hex() + ".esa"), esa::render_esa(agreement) + "\n");

  std::ostringstream side, base, log;
  ledger::export_chain(side, side_);
  ledger::export_base(base, base_);
  audit::write_audit_log(log, log_);
  write_file(dir / "chain" / "side.jsonl", side.str());
  write_file(dir / "chain" / "base.jsonl", base.str());
  write_file(dir / "audit.jsonl", log.str());
  write_file(dir / "workspace.json", meta.dump(2) + "\n");
}

void Workspace::add_table(enforcement::Table table) {
  const std::string name = table.schema.table;
  if (schemas_.count(name)) throw Error("table " + name + " already exists");
  schemas_.emplace(name, table.schema);
  db_.add_table(std::move(table));
}

std::int64_t Workspace::tick() {
  clock_ms_ += 1000;
  return clock_ms_;
}

void Workspace::anchor() { ledger::anchor(side_, base_, clock_ms_, 0); }

std::vector<esa::Esa> Workspace::agreements_in_force() const {
  std::vector<esa::Esa> out;
  for (const auto& h : ledger::agreements_in_force(side_, side_.next_seq())) out.push_back(store_.at(h));
  return out;
}

DeployResult Workspace::deploy(const std::string& esa_text) {
  auto agreement = esa::parse_esa(esa_text);
  esa::validate(agreement);
  const auto schema = schemas_.find(agreement.domain);
  if (schema == schemas_.end()) throw Error("agreement refers to unknown table " + agreement.domain);
  for (const auto& f : agreement.fields) {
    if (!schema->second.has(f)) throw Error("table " + agreement.domain + " has no column " + f);
  }
  const auto h = esa::hash_esa(agreement);
  const auto time = tick();
  const ledger::EsadTx tx{ledger::address_of(agreement.consumer), ledger::address_of(provider_), h, time, true};
  const auto& block = side_.append_block({tx}, {time, ledger::address_of(provider_)});
  store_.emplace(h, std::move(agreement));
  anchor();
  return {h, block.txs.back().seq};
}

RevokeResult Workspace::revoke(const Digest& hash) {
  const auto it = store_.find(hash);
  if (it == store_.end()) throw Error("unknown agreement " + hash.hex());
  if (!ledger::agreements_in_force(side_, side_.next_seq()).count(hash)) {
    throw Error("agreement " + hash.hex() + " is not in force");
  }
  const auto time = tick();
  const auto& block = side_.append_block({ledger::EsarTx{hash, false, time}}, {time, ledger::address_of(provider_)});
  RevokeResult out{hash, block.txs.back().seq, {}};
  const auto& revoked = it->second;
  for (const auto& q : enforcement::apply_revocation(db_, revoked, agreements_in_force())) {
    const audit::LogContext ctx{provider_, std::string(kEngineRequester), std::string(kRevocationPurpose), tick()};
    out.enforced.push_back(audit::log_query(log_, side_, q, schemas_.at(revoked.domain), ctx).first);
  }
  anchor();
  return out;
}

QueryResult Workspace::query(const std::string& requester, const std::string& purpose, const std::string& text) {
  const auto q = enforcement::parse_query(text);
  const auto schema_it = schemas_.find(enforcement::table_of(q));
  if (schema_it == schemas_.end()) throw Error("unknown table " + enforcement::table_of(q));
  const auto& schema = schema_it->second;
  enforcement::validate_query(schema, q);

  QueryResult out;
  enforcement::Query executed = q;
  if (const auto* s = std::get_if<enforcement::Select>(&q)) {
    const enforcement::ComplianceContext ctx{requester, purpose, agreements_in_force()};
    executed = enforcement::rewrite_select(*s, ctx, schema);
    out.rows = enforcement::execute(db_, executed);
  } else if (const auto* d = std::get_if<enforcement::Delete>(&q)) {
    out.rows.affected = enforcement::apply_deletion(db_, *d);
  } else {
    auto rewrite = enforcement::rewrite_write(q, agreements_in_force(), schema);
    if (!rewrite.executed) {
      ++rejected_writes_;
      out.executed = false;
      return out;
    }
    executed = std::move(rewrite.query);
    out.rows = enforcement::execute(db_, executed);
  }
  out.record = audit::log_query(log_, side_, executed, schema, {provider_, requester, purpose, tick()}).first;
  anchor();
  return out;
}

audit::AuditVerdict Workspace::audit() const { return audit::verify_audit(log_, side_, store_, schemas_); }

std::vector<audit::Disclosure> Workspace::reveal(const std::string& consumer) const {
  return audit::reveal_agreements(side_, store_, consumer);
}

}  // namespace urm::cli
