#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "../support/ehr_gen.hpp"
#include "../support/generators.hpp"
#include "urm/common/error.hpp"
#include "urm/enforcement/compliance.hpp"
#include "urm/enforcement/entailment.hpp"

using namespace urm;
using namespace urm::enforcement;
using esa::CmpOp;
using esa::Decimal;
using esa::Null;
using esa::Predicate;
using esa::Value;

namespace {

constexpr const char* kBobRead =
    R"(Bob, requester = "Stanford Medical Center" and purpose = research : [age, ethnicity, PSA] of EHR, PSA >= 2)";
constexpr const char* kBobWrite = "Bob, true : [age, ethnicity, PSA, phone, medication] of EHR.write";

Schema paper_schema() {
  return {"EHR",
          {{"person", ColumnKind::Text},
           {"age", ColumnKind::Integer},
           {"ethnicity", ColumnKind::Text},
           {"PSA", ColumnKind::Decimal},
           {"phone", ColumnKind::Text},
           {"smoker", ColumnKind::Bool},
           {"consumesAlcohol", ColumnKind::Bool},
           {"medication", ColumnKind::Text}},
          "person"};
}

Database fixture_db() {
  Database db;
  db.add_table(load_csv_file(std::string(URM_FIXTURE_DIR) + "/ehr.csv", "EHR"));
  return db;
}

Predicate atom(const std::string& f, CmpOp op, Value v) { return Predicate::compare(f, op, std::move(v)); }

}  // namespace

TEST_CASE("parse_query / render_query") {
  const char* texts[] = {
      "SELECT age, PSA FROM EHR WHERE PSA >= 5",
      "SELECT * FROM EHR WHERE true",
      R"(SELECT age WHEN owner = "Bob" or owner = "Carol", PSA FROM EHR WHERE age > 3 and (owner = "Bob" or owner = "Carol"))",
      R"(INSERT INTO EHR SET person = "Bob", age = 52, smoker = true, medication = null)",
      R"(UPDATE EHR SET age = null, PSA = 2.5 WHERE person = "Bob")",
      "DELETE FROM EHR WHERE false",
  };
  for (const char* t : texts) {
    INFO(t);
    const Query q = parse_query(t);
    CHECK(render_query(q) == t);
    CHECK(parse_query(render_query(q)) == q);
  }
  CHECK(render_query(parse_query("select age from EHR")) == "SELECT age FROM EHR WHERE true");
  CHECK(render_query(parse_query("insert EHR set person = Bob, ethnicity = white")) ==
        R"(INSERT INTO EHR SET person = "Bob", ethnicity = "white")");
  CHECK_THROWS_AS(parse_query("SELECT age EHR"), ParseError);
  CHECK_THROWS_AS(parse_query("INSERT INTO EHR SET age = 1, age = 2"), ParseError);
  CHECK_THROWS_AS(parse_query("DROP TABLE EHR"), ParseError);
}

TEST_CASE("validate_query rejects unknown fields and kind mismatches") {
  const Schema s = paper_schema();
  CHECK_NOTHROW(validate_query(s, parse_query("SELECT age FROM EHR WHERE PSA >= 2")));
  CHECK_NOTHROW(validate_query(s, parse_query("SELECT age FROM EHR WHERE age > 2.5")));
  CHECK_THROWS_AS(validate_query(s, parse_query("SELECT height FROM EHR")), Error);
  CHECK_THROWS_AS(validate_query(s, parse_query("SELECT age FROM EHR WHERE smoker = 3")), Error);
  CHECK_THROWS_AS(validate_query(s, parse_query("INSERT INTO EHR SET age = 1.5")), Error);
  CHECK_THROWS_AS(validate_query(s, parse_query("SELECT age FROM Other")), Error);
}

TEST_CASE("load_csv infers kinds and save_csv round-trips") {
  const Database db = fixture_db();
  const Table& t = db.table("EHR");
  CHECK(t.schema.owner_column == "person");
  CHECK(t.schema.column("age").kind == ColumnKind::Integer);
  CHECK(t.schema.column("PSA").kind == ColumnKind::Decimal);
  CHECK(t.schema.column("smoker").kind == ColumnKind::Bool);
  CHECK(t.schema.column("phone").kind == ColumnKind::Text);
  REQUIRE(t.rows.size() == 5);
  CHECK(t.rows[1].at("medication") == Value{std::string("statin, aspirin")});
  CHECK(t.rows[0].at("medication") == Value{Null{}});
  CHECK(t.rows[2].at("PSA") == Value{Decimal(2, 0)});

  std::stringstream ss;
  save_csv(ss, t);
  const Table back = load_csv(ss, "EHR");
  CHECK(back.schema == t.schema);
  CHECK(back.rows == t.rows);

  std::istringstream ragged("owner,age\nBob,1,2\n");
  CHECK_THROWS_AS(load_csv(ragged, "T"), Error);
  std::istringstream ownerless("owner,age\n,1\n");
  CHECK_THROWS_AS(load_csv(ownerless, "T"), Error);
}

TEST_CASE("execute") {
  Database db = fixture_db();
  SUBCASE("select with a false where clause is empty") {
    CHECK(execute(db, select({"age"}, "EHR", Predicate::never())).rows.empty());
  }
  SUBCASE("insert then select") {
    execute(db, parse_query(R"(INSERT INTO EHR SET person = "Zed", age = 29, PSA = 3)"));
    const auto rs = execute(db, parse_query(R"(SELECT person, age, PSA, phone FROM EHR WHERE person = "Zed")"));
    REQUIRE(rs.rows.size() == 1);
    CHECK(rs.rows[0] == std::vector<Value>{std::string("Zed"), std::int64_t{29}, Decimal(3, 0), Null{}});
  }
  SUBCASE("update touching two of five rows") {
    // Rows with age > 60: Alice (61) and Dave (70).
    const auto rs = execute(db, parse_query("UPDATE EHR SET medication = \"x\" WHERE age > 60"));
    CHECK(rs.affected == 2);
    const auto check = execute(db, parse_query(R"(SELECT person FROM EHR WHERE medication = "x")"));
    CHECK(check.rows == std::vector<std::vector<Value>>{{std::string("Alice")}, {std::string("Dave")}});
  }
  SUBCASE("guards mask individual cells") {
    const auto rs = execute(db, parse_query(R"(SELECT person, age WHEN person = "Bob" FROM EHR WHERE age < 55)"));
    REQUIRE(rs.rows.size() == 3);
    CHECK(rs.rows[0][1] == Value{std::int64_t{52}});
    CHECK(rs.rows[1][1] == Value{Null{}});
  }
  CHECK_THROWS_AS(execute(db, parse_query("SELECT age FROM Nope")), Error);
}

TEST_CASE("entails: basic cases") {
  const auto ge = [](std::int64_t v) { return atom("PSA", CmpOp::Ge, v); };
  CHECK(entails(Predicate::never(), ge(100)));
  CHECK(entails(ge(3), ge(2)));
  CHECK_FALSE(entails(ge(2), ge(3)));
  CHECK(entails(ge(2), ge(2)));

  DomainMap ints{{"x", FieldDomain{ColumnKind::Integer, std::nullopt, std::nullopt, false}}};
  DomainMap decs{{"x", FieldDomain{ColumnKind::Decimal, std::nullopt, std::nullopt, false}}};
  CHECK(entails(atom("x", CmpOp::Gt, std::int64_t{2}), atom("x", CmpOp::Ge, std::int64_t{3}), ints));
  CHECK_FALSE(entails(atom("x", CmpOp::Gt, std::int64_t{2}), atom("x", CmpOp::Ge, std::int64_t{3}), decs));
  CHECK(entails(atom("x", CmpOp::Gt, Decimal(25, 1)), atom("x", CmpOp::Ge, std::int64_t{3}), ints));
  CHECK_FALSE(entails(atom("x", CmpOp::Gt, Decimal(25, 1)), atom("x", CmpOp::Ge, std::int64_t{3}), decs));

  // Null fails every ordering, so `x != 1` does not follow from `not x = 1` style reasoning.
  CHECK_FALSE(entails(Predicate::always(), Predicate::any_of({atom("x", CmpOp::Lt, std::int64_t{1}),
                                                              atom("x", CmpOp::Ge, std::int64_t{1})})));
  CHECK(entails(Predicate::always(),
                Predicate::any_of({atom("x", CmpOp::Lt, std::int64_t{1}), atom("x", CmpOp::Ge, std::int64_t{1}),
                                   atom("x", CmpOp::Eq, Null{})})));

  const auto owner = [](const char* o) { return atom("owner", CmpOp::Eq, std::string(o)); };
  CHECK(entails(owner("Bob"), Predicate::any_of({owner("Alice"), owner("Bob")})));
  CHECK_FALSE(entails(atom("owner", CmpOp::Ne, std::string("Bob")), owner("Alice")));

  CHECK(satisfiable(Predicate::all_of({atom("x", CmpOp::Gt, Decimal(1, 18)), atom("x", CmpOp::Lt, Decimal(3, 18))})));
  CHECK_FALSE(
      satisfiable(Predicate::all_of({atom("x", CmpOp::Gt, Decimal(1, 18)), atom("x", CmpOp::Lt, Decimal(2, 18))}), decs));
}

TEST_CASE("entails agrees with brute force over two bounded integer fields") {
  std::mt19937_64 rng(2024);
  DomainMap domains;
  for (const char* f : {"x", "y"}) domains[f] = FieldDomain{ColumnKind::Integer, 0, 7, false};
  int agreed = 0;
  int positives = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto pi = testing::random_int_predicate(rng, 3, -1, 8);
    const auto phi = testing::random_int_predicate(rng, 3, -1, 8);
    const bool expected = testing::brute_force_entails(pi.holds, phi.holds, 0, 7);
    positives += expected ? 1 : 0;
    agreed += entails(pi.ast, phi.ast, domains) == expected ? 1 : 0;
  }
  CHECK(agreed == 1000);
  CHECK(positives > 50);
}

TEST_CASE("rewrite_select: construction template") {
  const Schema schema = [] {
    Schema s = paper_schema();
    s.owner_column = "owner";
    s.columns[0].name = "owner";
    s.columns.push_back({"name", ColumnKind::Text});
    return s;
  }();
  ComplianceContext ctx{"Stanford Medical Center", "research", {esa::parse_esa(kBobRead)}};
  const Select q = select({"age", "name"}, "EHR", atom("PSA", CmpOp::Ge, std::int64_t{5}));
  const Select r = rewrite_select(q, ctx, schema);
  CHECK(render_query(r) == R"(SELECT age FROM EHR WHERE PSA >= 5 and (owner = "Bob" and true and PSA >= 2))");
  CHECK(check_compliance(r, ctx, schema));

  ComplianceContext other{"Acme", "marketing", ctx.agreements};
  const Select r2 = rewrite_select(q, other, schema);
  CHECK(render_query(r2) == R"(SELECT FROM EHR WHERE PSA >= 5 and (owner = "Bob" and false and PSA >= 2))");

  ComplianceContext none{"Stanford Medical Center", "research", {}};
  CHECK(rewrite_select(q, none, schema).where.is_false());
  CHECK(check_compliance(select({"age", "name"}, "EHR", Predicate::never()), none, schema));
  CHECK_FALSE(check_compliance(r, none, schema));
}

TEST_CASE("rewrite_select matches the per-row oracle and is accepted by check_compliance") {
  std::mt19937_64 rng(99);
  const Schema schema = testing::ehr_schema();
  for (int i = 0; i < 150; ++i) {
    Database db = testing::random_database(rng, 60);
    const auto ctx = testing::random_context_with_agreements(rng, 5);
    const Select q = testing::random_select(rng);
    const Select r = rewrite_select(q, ctx, schema);
    INFO(render_query(r));
    const auto got = execute(db, r);
    const auto want = testing::oracle_select(db.table("EHR"), q, ctx);
    CHECK(got.columns == want.columns);
    CHECK(got.rows == want.rows);
    CHECK(check_compliance(r, ctx, schema));

    // Adding an agreement never removes rows.
    auto wider = ctx;
    wider.agreements.push_back(testing::random_read_agreement(rng));
    CHECK(execute(db, rewrite_select(q, wider, schema)).rows.size() >= got.rows.size());
  }
}

TEST_CASE("check_compliance rejects queries once their agreement is removed") {
  const Schema schema = testing::ehr_schema();
  const auto e = esa::parse_esa(R"(Bob, requester = "Stanford" : [age, PSA] of EHR, PSA >= 2)");
  const auto other = esa::parse_esa(R"(Alice, true : [age] of EHR, age > 40)");
  ComplianceContext ctx{"Stanford", "research", {e, other}};
  const Select r = rewrite_select(select({"age", "PSA"}, "EHR"), ctx, schema);
  CHECK(render_query(r) ==
        R"(SELECT age, PSA WHEN owner = "Bob" and PSA >= 2 FROM EHR WHERE true and ((owner = "Bob" and true and PSA >= 2) or (owner = "Alice" and true and age > 40)))");
  CHECK(check_compliance(r, ctx, schema));
  ComplianceContext without_bob{"Stanford", "research", {other}};
  CHECK_FALSE(check_compliance(r, without_bob, schema));

  Select widened = r;
  widened.items[1].guard = Predicate::always();
  CHECK_FALSE(check_compliance(widened, ctx, schema));
  Select extra = r;
  extra.items.push_back({"ethnicity", Predicate::always()});
  CHECK_FALSE(check_compliance(extra, ctx, schema));
}

TEST_CASE("rewrite_write") {
  const Schema schema = paper_schema();
  const auto agreement = esa::parse_esa(kBobWrite);
  const Query q = parse_query(
      R"(INSERT EHR SET person=Bob, age=52, ethnicity=white, PSA=1.5, phone="555-555-5555", smoker=TRUE, consumesAlcohol=FALSE)");

  const auto w = rewrite_write(q, {agreement}, schema);
  CHECK(w.executed);
  CHECK(render_query(w.query) ==
        R"(INSERT INTO EHR SET person = "Bob", age = 52, ethnicity = "white", PSA = 1.5, phone = "555-555-5555", smoker = null, consumesAlcohol = null)");
  CHECK(rewrite_write(w.query, {agreement}, schema).query == w.query);

  const auto all = esa::parse_esa(
      "Bob, true : [age, ethnicity, PSA, phone, smoker, consumesAlcohol, medication] of EHR.write");
  CHECK(rewrite_write(q, {all}, schema).query == q);

  const auto none = rewrite_write(q, {esa::parse_esa(kBobRead)}, schema);
  CHECK_FALSE(none.executed);
  CHECK(render_query(none.query).find("age = null") != std::string::npos);

  const auto alice = rewrite_write(q, {esa::parse_esa("Alice, true : [age] of EHR.write")}, schema);
  CHECK_FALSE(alice.executed);

  const auto up = rewrite_write(parse_query(R"(UPDATE EHR SET smoker = false, age = 53 WHERE person = "Bob" and age = 52)"),
                                {agreement}, schema);
  CHECK(up.executed);
  CHECK(render_query(up.query) ==
        R"(UPDATE EHR SET smoker = null, age = 53 WHERE person = "Bob" and age = 52)");
  CHECK_FALSE(rewrite_write(parse_query("UPDATE EHR SET age = 1 WHERE age = 52"), {agreement}, schema).executed);
}

TEST_CASE("apply_deletion") {
  Database db = fixture_db();
  CHECK(apply_deletion(db, Delete{"EHR", Predicate::never()}) == 0);
  CHECK(apply_deletion(db, Delete{"EHR", atom("person", CmpOp::Eq, std::string("Bob"))}) == 1);
  std::vector<std::string> left;
  for (const auto& row : db.table("EHR").rows) left.push_back(std::get<std::string>(row.at("person")));
  CHECK(left == std::vector<std::string>{"Alice", "Carol", "Dave", "Erin"});
}

TEST_CASE("apply_revocation") {
  const auto only = esa::parse_esa("Bob, true : [age, PSA, phone] of EHR.write");
  const auto overlap = esa::parse_esa("Bob, true : [age, medication] of EHR.write");
  const auto subset = esa::parse_esa("Bob, true : [age] of EHR.write");

  SUBCASE("last write agreement deletes the rows") {
    Database db = fixture_db();
    const auto qs = apply_revocation(db, only, {});
    REQUIRE(qs.size() == 1);
    CHECK(render_query(qs[0]) == R"(DELETE FROM EHR WHERE person = "Bob")");
    CHECK(db.table("EHR").rows.size() == 4);
  }
  SUBCASE("overlapping agreements null only the difference") {
    Database db = fixture_db();
    const auto qs = apply_revocation(db, only, {overlap});
    REQUIRE(qs.size() == 1);
    CHECK(render_query(qs[0]) == R"(UPDATE EHR SET phone = null, PSA = null WHERE person = "Bob")");
    const Row& bob = db.table("EHR").rows[0];
    CHECK(bob.at("PSA") == Value{Null{}});
    CHECK(bob.at("phone") == Value{Null{}});
    CHECK(bob.at("age") == Value{std::int64_t{52}});
  }
  SUBCASE("subset revocation changes nothing") {
    Database db = fixture_db();
    CHECK(apply_revocation(db, subset, {only}).empty());
  }
  SUBCASE("read agreements leave data untouched") {
    Database db = fixture_db();
    CHECK(apply_revocation(db, esa::parse_esa(kBobRead), {}).empty());
    CHECK(db.table("EHR").rows.size() == 5);
  }
}
