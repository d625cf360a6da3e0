#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "urm/cli/workspace.hpp"
#include "urm/common/error.hpp"

using namespace urm;
using namespace urm::audit;
using cli::Workspace;

namespace {

constexpr const char* kBobRead =
    R"(Bob, requester = "Stanford Medical Center" and purpose = research : [age, ethnicity, PSA] of EHR, PSA >= 2)";
constexpr const char* kBobWrite = "Bob, true : [age, ethnicity, PSA, phone, medication] of EHR.write";
constexpr const char* kAliceRead =
    R"(Alice, requester = "Stanford Medical Center" and purpose = research : [age, PSA] of EHR, true)";
constexpr const char* kStanford = "Stanford Medical Center";

enforcement::Table ehr() { return enforcement::load_csv_file(URM_FIXTURE_DIR "/ehr.csv", "EHR"); }

Workspace fresh() {
  Workspace ws;
  ws.add_table(ehr());
  return ws;
}

/// deploy, read, write, revoke, blocked write, revoke, read, delete.
struct Scripted {
  Workspace ws = fresh();
  Digest bob_read, bob_write, alice_read;

  Scripted() {
    bob_read = ws.deploy(kBobRead).hash;
    bob_write = ws.deploy(kBobWrite).hash;
    alice_read = ws.deploy(kAliceRead).hash;
    ws.query(kStanford, "research", "SELECT age, ethnicity, PSA, phone FROM EHR");
    ws.query("Bob", "self-service", R"(UPDATE EHR SET PSA = 2.5, smoker = false WHERE person = "Bob")");
    ws.query(kStanford, "research", "SELECT age, ethnicity, PSA FROM EHR");
    ws.revoke(bob_write);
    ws.query("Bob", "self-service", R"(INSERT INTO EHR SET person = "Bob", age = 53)");
    ws.revoke(bob_read);
    ws.query(kStanford, "research", "SELECT age, PSA FROM EHR");
    ws.query("Erin", "erasure", R"(DELETE FROM EHR WHERE person = "Erin")");
  }
};

std::size_t column(const enforcement::ResultSet& rs, const std::string& name) {
  for (std::size_t i = 0; i < rs.columns.size(); ++i) {
    if (rs.columns[i] == name) return i;
  }
  FAIL("missing column " << name);
  return 0;
}

}  // namespace

TEST_CASE("stored form masks written values only") {
  const auto schema = ehr().schema;
  const auto read = enforcement::parse_query(R"(SELECT age FROM EHR WHERE person = "Bob" and age = 52)");
  const auto r = stored_form(read, schema);
  CHECK(!r.masked);
  CHECK(r.text == enforcement::render_query(read));

  const auto ins = enforcement::parse_query(R"(INSERT INTO EHR SET person = "Bob", age = 52, smoker = null)");
  const auto w = stored_form(ins, schema);
  CHECK(w.masked);
  CHECK(w.text == R"(INSERT INTO EHR SET person = "Bob", age = "«masked»", smoker = null)");

  const auto up = enforcement::parse_query(R"(UPDATE EHR SET phone = "555" WHERE person = "Bob")");
  CHECK(stored_form(up, schema).text == R"(UPDATE EHR SET phone = "«masked»" WHERE person = "Bob")");

  const auto del = enforcement::parse_query(R"(DELETE FROM EHR WHERE person = "Bob")");
  CHECK(!stored_form(del, schema).masked);
}

TEST_CASE("log_query appends aligned records") {
  AuditLog log;
  ledger::SideChain side("urm", 0);
  const auto schema = ehr().schema;
  const auto q = enforcement::parse_query("SELECT age FROM EHR WHERE false");
  const auto [a, tx_a] = log_query(log, side, q, schema, {"p", "r", "x", 10});
  const auto [b, tx_b] = log_query(log, side, q, schema, {"p", "r", "x", 20});
  CHECK(a.seq != b.seq);
  CHECK(a.query_hash == b.query_hash);
  CHECK(tx_a.query_hash == sha256(a.query));
  CHECK(log.records.size() == 2);
  CHECK(side.blocks().size() == 3);
  CHECK(side.locate(b.seq)->first == b.block);

  // A refused block leaves the log untouched.
  CHECK_THROWS_AS(log_query(log, side, q, schema, {"p", "r", "x", 5}), Error);
  CHECK(log.records.size() == 2);
}

TEST_CASE("scripted workflow") {
  Workspace ws = fresh();
  const auto bob_read = ws.deploy(kBobRead);
  ws.deploy(kBobWrite);
  ws.deploy(kAliceRead);
  CHECK_THROWS_AS(ws.deploy(kAliceRead), Error);
  CHECK_THROWS_AS(ws.deploy("Zed, true : [age] of Nowhere, true"), Error);
  CHECK_THROWS_AS(ws.deploy("Zed, true : [height] of EHR, true"), Error);

  auto r = ws.query(kStanford, "research", "SELECT age, ethnicity, PSA, phone FROM EHR");
  REQUIRE(r.record);
  CHECK(!r.record->masked);
  // Only Alice's row qualifies: Bob's PSA of 1.5 is below his threshold.
  REQUIRE(r.rows.rows.size() == 1);
  CHECK(r.rows.columns == std::vector<std::string>{"age", "ethnicity", "PSA"});
  CHECK(esa::is_null(r.rows.rows[0][column(r.rows, "ethnicity")]));

  auto w = ws.query("Bob", "self-service", R"(UPDATE EHR SET PSA = 2.5, smoker = false WHERE person = "Bob")");
  REQUIRE(w.record);
  CHECK(w.record->masked);
  CHECK(w.record->query == R"(UPDATE EHR SET PSA = "«masked»", smoker = null WHERE person = "Bob")");
  CHECK(w.rows.affected == 1);

  r = ws.query(kStanford, "research", "SELECT age, ethnicity, PSA FROM EHR");
  CHECK(r.rows.rows.size() == 2);

  r = ws.query("Mallory", "research", "SELECT age FROM EHR");
  CHECK(r.rows.rows.empty());
  CHECK(ws.audit().ok);

  const auto bob_write = esa::hash_esa(esa::parse_esa(kBobWrite));
  const auto rev = ws.revoke(bob_write);
  REQUIRE(rev.enforced.size() == 1);
  CHECK(rev.enforced[0].query == R"(DELETE FROM EHR WHERE person = "Bob")");
  CHECK(rev.enforced[0].requester == cli::kEngineRequester);
  CHECK_THROWS_AS(ws.revoke(bob_write), Error);
  CHECK_THROWS_AS(ws.revoke(sha256("nothing")), Error);

  const auto records = ws.log().records.size();
  const auto blocked = ws.query("Bob", "self-service", R"(INSERT INTO EHR SET person = "Bob", age = 53)");
  CHECK(!blocked.executed);
  CHECK(!blocked.record);
  CHECK(ws.log().records.size() == records);
  CHECK(ws.rejected_writes() == 1);

  ws.revoke(bob_read.hash);
  r = ws.query(kStanford, "research", "SELECT person, age FROM EHR");
  // Alice's row only, and the owner column is not granted.
  REQUIRE(r.rows.rows.size() == 1);
  CHECK(r.rows.columns == std::vector<std::string>{"age"});
  CHECK(std::get<std::int64_t>(r.rows.rows[0][0]) == 61);

  const auto d = ws.query("Erin", "erasure", R"(DELETE FROM EHR WHERE person = "Erin")");
  CHECK(d.rows.affected == 1);

  const auto verdict = ws.audit();
  CHECK(verdict.ok);
  CHECK(verdict.records.size() == ws.log().records.size());
  CHECK(verdict.unlogged.empty());
  CHECK(verdict.orphans.empty());
}

TEST_CASE("audit detects tampering") {
  const Scripted s;
  REQUIRE(s.ws.audit().ok);
  const auto n = s.ws.log().records.size();
  REQUIRE(n >= 6);

  auto fails = [&](auto mutate) {
    Workspace ws = s.ws;
    mutate(ws);
    return !ws.audit().ok;
  };
  for (std::size_t i = 0; i < n; ++i) {
    CAPTURE(i);
    CHECK(fails([&](Workspace& ws) { ws.mutable_log().records[i].query.back() ^= 1; }));
    CHECK(fails([&](Workspace& ws) { ws.mutable_log().records[i].query_hash.mutable_bytes()[0] ^= 1; }));
    CHECK(fails([&](Workspace& ws) {
      auto& r = ws.mutable_log().records[i];
      r.query += " and true";
      r.query_hash = sha256(r.query);
    }));
    CHECK(fails([&](Workspace& ws) { ws.mutable_log().records[i].requester += "x"; }));
    CHECK(fails([&](Workspace& ws) { ws.mutable_log().records[i].time_ms += 1; }));
    CHECK(fails([&](Workspace& ws) { ws.mutable_log().records[i].seq += 1; }));
    CHECK(fails([&](Workspace& ws) { ws.mutable_log().records[i].block += 1; }));
    CHECK(fails([&](Workspace& ws) {
      auto& recs = ws.mutable_log().records;
      recs.erase(recs.begin() + static_cast<std::ptrdiff_t>(i));
    }));
    CHECK(fails([&](Workspace& ws) {
      auto& recs = ws.mutable_log().records;
      recs.push_back(recs[i]);
    }));
    if (i + 1 < n) CHECK(fails([&](Workspace& ws) { std::swap(ws.mutable_log().records[i], ws.mutable_log().records[i + 1]); }));
  }

  // A write stored with its values in clear.
  CHECK(fails([&](Workspace& ws) {
    for (auto& r : ws.mutable_log().records) {
      if (!r.masked) continue;
      r.query = R"(UPDATE EHR SET PSA = 2.5, smoker = null WHERE person = "Bob")";
      r.query_hash = sha256(r.query);
      break;
    }
  }));
  // A read relabelled with a purpose no agreement covers.
  CHECK(fails([&](Workspace& ws) { ws.mutable_log().records[0].purpose = "marketing"; }));
  // An agreement withheld from the auditor.
  const auto verdict = [&] {
    Workspace ws = s.ws;
    ws.mutable_store().erase(s.alice_read);
    return ws.audit();
  }();
  CHECK(!verdict.ok);
  bool unverifiable = false;
  for (const auto& r : verdict.records) unverifiable |= r.hash_match && !r.verifiable;
  CHECK(unverifiable);
  // A block edited on the side chain.
  CHECK(fails([&](Workspace& ws) { ws.mutable_side().mutable_blocks()[2].meta.timestamp_ms += 1; }));
}

TEST_CASE("a read beyond the agreements fails compliance") {
  Workspace ws = fresh();
  ws.deploy(kAliceRead);
  ws.query(kStanford, "research", "SELECT age FROM EHR");
  // Forge a matching pair: a DataTx and record for an unrewritten read.
  const auto q = enforcement::parse_query("SELECT age, phone FROM EHR");
  log_query(ws.mutable_log(), ws.mutable_side(), q, ws.schemas().at("EHR"), {"provider", kStanford, "research", 99'000});
  const auto v = ws.audit();
  CHECK(!v.ok);
  REQUIRE(v.records.size() == 2);
  CHECK(v.records[0].ok());
  CHECK(v.records[1].hash_match);
  CHECK(v.records[1].verifiable);
  CHECK(!v.records[1].compliant);
}

TEST_CASE("reveal agreements") {
  Workspace ws = fresh();
  const auto read = ws.deploy(kBobRead);
  ws.deploy(kAliceRead);
  ws.revoke(read.hash);
  const auto corrected = ws.deploy(
      R"(Bob, requester = "Stanford Medical Center" and purpose = research : [age, PSA] of EHR, PSA >= 2)");
  const auto bundle = ws.reveal("Bob");
  REQUIRE(bundle.size() == 2);
  CHECK(bundle[0].hash == read.hash);
  REQUIRE(bundle[0].events.size() == 2);
  CHECK(bundle[0].events[0].type == "ESAD");
  CHECK(bundle[0].events[1].type == "ESAR");
  // Rectification shows as an ESAR followed directly by the new ESAD.
  CHECK(bundle[1].events[0].seq == bundle[0].events[1].seq + 1);
  CHECK(bundle[1].hash == corrected.hash);
  CHECK(ws.reveal("Alice").size() == 1);
  CHECK_THROWS_AS(ws.reveal("Zed"), Error);

  auto tampered = ws;
  tampered.mutable_store().at(corrected.hash).fields.insert("phone");
  CHECK_THROWS_AS(tampered.reveal("Bob"), Error);
}

TEST_CASE("audit log persistence") {
  const Scripted s;
  std::stringstream buf;
  write_audit_log(buf, s.ws.log());
  const auto back = read_audit_log(buf);
  CHECK(back.records == s.ws.log().records);

  std::istringstream bad("{\"seq\": 1}\n");
  CHECK_THROWS_AS(read_audit_log(bad), ParseError);
  std::istringstream junk("\n{nope\n");
  try {
    read_audit_log(junk);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("workspace round trip on disk") {
  const auto dir = std::filesystem::temp_directory_path() / "urm_ws_test";
  std::filesystem::remove_all(dir);
  {
    auto ws = Workspace::create(dir, {ehr()});
    ws.deploy(kBobWrite);
    ws.query("Bob", "self-service", R"(UPDATE EHR SET phone = "555-000-9999" WHERE person = "Bob")");
    ws.save();
  }
  CHECK_THROWS_AS(Workspace::create(dir, {ehr()}), Error);
  auto ws = Workspace::open(dir);
  CHECK(ws.audit().ok);
  CHECK(ws.agreements_in_force().size() == 1);
  CHECK(ws.log().records.size() == 1);
  CHECK(ledger::verify_anchors(ws.side(), ws.base()));
  const auto rows = ws.query("x", "y", "SELECT phone FROM EHR");
  CHECK(rows.rows.rows.empty());
  ws.save();
  CHECK(Workspace::open(dir).log().records.size() == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ledger exports hold no plaintext") {
  const Scripted s;
  std::ostringstream out;
  ledger::export_chain(out, s.ws.side());
  ledger::export_base(out, s.ws.base());
  const auto text = out.str();
  for (const char* needle : {"Bob", "Alice", "Stanford", "research", "white", "555-", "statin", "EHR", "PSA", "person",
                             "phone", "masked", "SELECT", "UPDATE"}) {
    CAPTURE(needle);
    CHECK(text.find(needle) == std::string::npos);
  }
}
