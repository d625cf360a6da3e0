#include <doctest.h>

#include <deque>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "urm/common/error.hpp"
#include "urm/consensus/state_machine.hpp"

using namespace urm;
using namespace urm::consensus;
using namespace std::chrono_literals;

namespace {

ValidatorId vid(std::uint32_t i) { return ValidatorId{i}; }

std::vector<Validator> equal_set(std::uint32_t n) {
  std::vector<Validator> out;
  for (std::uint32_t i = 0; i < n; ++i) out.push_back({vid(i), 1});
  return out;
}

ConsensusParams params_for(std::uint32_t n) {
  return ConsensusParams{ValidatorSet(equal_set(n)), TimeoutConfig{1000ms, 200ms}, 0ms};
}

Application batch_app() {
  Application app;
  app.propose = [](ValidatorId self, std::uint64_t h, std::uint64_t r) {
    return make_payload(h, self, {h * 100 + r, to_index(self)});
  };
  return app;
}

/// Zero-latency network: messages are delivered in FIFO order before time
/// moves; when nothing is in flight the earliest timer fires.
struct Harness {
  ConsensusParams params;
  Application app;
  std::vector<ValidatorState> nodes;
  std::deque<std::pair<std::uint32_t, Message>> inbox;
  std::multimap<std::int64_t, std::pair<std::uint32_t, Timeout>> timers;
  std::int64_t now = 0;
  std::set<std::uint32_t> silent;

  explicit Harness(std::uint32_t n) : params(params_for(n)), app(batch_app()) {
    for (std::uint32_t i = 0; i < n; ++i) nodes.push_back(initial_state(vid(i)));
  }

  void absorb(std::uint32_t from, Outputs out) {
    for (auto& t : out.timers) timers.emplace(now + t.delay.count(), std::pair{from, t.timeout});
    if (silent.count(from)) return;
    for (auto& m : out.messages) {
      for (std::uint32_t j = 0; j < nodes.size(); ++j) {
        if (j != from) inbox.emplace_back(j, m);
      }
    }
  }

  void start() {
    for (std::uint32_t i = 0; i < nodes.size(); ++i) absorb(i, step(nodes[i], StartHeight{1}, now, params, app));
  }

  bool all_decided(std::uint64_t h) const {
    for (std::uint32_t i = 0; i < nodes.size(); ++i) {
      if (silent.count(i)) continue;
      if (nodes[i].decisions.size() < h) return false;
    }
    return true;
  }

  void run_until_height(std::uint64_t h, std::int64_t horizon = 1'000'000) {
    while (!all_decided(h) && now <= horizon) {
      if (!inbox.empty()) {
        auto [dst, m] = inbox.front();
        inbox.pop_front();
        absorb(dst, step(nodes[dst], m, now, params, app));
      } else if (!timers.empty()) {
        auto it = timers.begin();
        now = it->first;
        auto [dst, t] = it->second;
        timers.erase(it);
        absorb(dst, step(nodes[dst], t, now, params, app));
      } else {
        break;
      }
    }
  }
};

Message proposal(const ConsensusParams& p, std::uint64_t h, std::uint64_t r, PayloadPtr v, std::int64_t vr = -1) {
  return {p.validators.leader(h, r), Proposal{h, r, std::move(v), vr}};
}

Message prevote(std::uint32_t from, std::uint64_t h, std::uint64_t r, std::optional<Digest> v) {
  return {vid(from), Vote{VoteKind::Prevote, h, r, v}};
}

Message precommit(std::uint32_t from, std::uint64_t h, std::uint64_t r, std::optional<Digest> v) {
  return {vid(from), Vote{VoteKind::Precommit, h, r, v}};
}

const Vote* last_vote(const Outputs& out, VoteKind kind) {
  const Vote* found = nullptr;
  for (const auto& m : out.messages) {
    if (const auto* v = std::get_if<Vote>(&m.body); v && v->kind == kind) found = v;
  }
  return found;
}

}  // namespace

TEST_CASE("quorum thresholds") {
  CHECK(quorum_power(4) == 3);
  CHECK(quorum_power(7) == 5);
  CHECK(quorum_power(1) == 1);
  // Powers {3,1,1,1}: the threshold is the smallest integer above 2·6/3 = 4.
  CHECK(ValidatorSet({{vid(0), 3}, {vid(1), 1}, {vid(2), 1}, {vid(3), 1}}).quorum() == 5);
  for (std::uint64_t p = 1; p < 500; ++p) {
    const auto q = quorum_power(p);
    CHECK(3 * q > 2 * p);
    CHECK(3 * (q - 1) <= 2 * p);
  }
  // Equal weights: N − f with f = ⌊(N − 1)/3⌋.
  for (std::uint64_t n = 1; n <= 64; ++n) CHECK(quorum_power(n) == n - (n - 1) / 3);
}

TEST_CASE("timeout schedule") {
  const TimeoutConfig cfg{1000ms, 200ms};
  CHECK(timeout_duration(0, cfg) == 1000ms);
  CHECK(timeout_duration(2, cfg) == 1600ms);
  auto prev = timeout_duration(0, cfg);
  for (std::uint64_t r = 1; r <= 100; ++r) {
    const auto t = timeout_duration(r, cfg);
    CHECK(t == prev + cfg.delta * static_cast<std::int64_t>(r));
    CHECK(t >= prev);
    prev = t;
  }
  CHECK(timeout_duration(50, TimeoutConfig{1000ms, 0ms}) == 1000ms);
}

TEST_CASE("leader selection examples") {
  const auto four = equal_set(4);
  std::vector<ValidatorId> order;
  for (std::uint64_t h = 1; h <= 8; ++h) order.push_back(select_leader(four, h, 0));
  for (std::size_t i = 0; i < 4; ++i) CHECK(order[i] == order[i + 4]);
  CHECK(std::set<ValidatorId>(order.begin(), order.begin() + 4).size() == 4);

  const std::vector<Validator> weighted{{vid(0), 2}, {vid(1), 1}, {vid(2), 1}};
  // Accumulator by hand: (2,1,1)→A → (0,2,2)→B → (2,-1,3)→C → (4,0,0)→A.
  CHECK(select_leader(weighted, 0, 0) == vid(0));
  CHECK(select_leader(weighted, 1, 0) == vid(1));
  CHECK(select_leader(weighted, 2, 0) == vid(2));
  CHECK(select_leader(weighted, 3, 0) == vid(0));
  CHECK(select_leader(weighted, 4, 0) == vid(0));

  const std::vector<Validator> one{{vid(9), 5}};
  for (std::uint64_t s = 0; s < 20; ++s) CHECK(select_leader(one, s, s % 3) == vid(9));

  CHECK_THROWS_AS(select_leader(std::vector<Validator>{}, 1, 0), ConfigError);
  CHECK_THROWS_AS(ValidatorSet({{vid(0), 0}}), ConfigError);
  CHECK_THROWS_AS(ValidatorSet({{vid(1), 1}, {vid(1), 2}}), ConfigError);
}

TEST_CASE("leader selection is exact over every window") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = static_cast<std::uint32_t>(1 + rng() % 7);
    std::vector<Validator> vs;
    for (std::uint32_t i = 0; i < n; ++i) vs.push_back({vid(i * 3 + 1), 1 + rng() % 6});
    const ValidatorSet set(vs);
    const auto total = set.total_power();
    for (std::uint64_t start = 0; start < total + 3; ++start) {
      std::map<ValidatorId, std::uint64_t> count;
      for (std::uint64_t s = start; s < start + total; ++s) {
        const auto picked = set.leader(s, 0);
        CHECK(picked == select_leader(vs, s, 0));
        ++count[picked];
      }
      for (const auto& v : vs) CHECK(count[v.id] == v.power);
    }
    CHECK(set.leader(5, 2) == set.leader(7, 0));
  }
}

TEST_CASE("leader fairness over 10000 slots") {
  const ValidatorSet set({{vid(0), 5}, {vid(1), 3}, {vid(2), 1}, {vid(3), 1}, {vid(4), 7}});
  std::map<ValidatorId, double> count;
  for (std::uint64_t s = 0; s < 10'000; ++s) count[set.leader(s, 0)] += 1;
  for (const auto& v : set.members()) {
    const double expected = 10'000.0 * static_cast<double>(v.power) / static_cast<double>(set.total_power());
    CHECK(std::abs(count[v.id] - expected) <= 0.01 * expected);
  }
}

TEST_CASE("honest synchronous run decides the proposer's batch in round 0") {
  Harness net(4);
  net.start();
  net.run_until_height(3);
  REQUIRE(net.all_decided(3));
  for (std::uint64_t h = 1; h <= 3; ++h) {
    const auto leader = net.params.validators.leader(h, 0);
    for (const auto& node : net.nodes) {
      const auto& d = node.decisions[h - 1];
      CHECK(d.height == h);
      CHECK(d.round == 0);
      CHECK(d.value->proposer == leader);
      CHECK(d.value->txs == std::vector<std::uint64_t>{h * 100, to_index(leader)});
    }
  }
  std::vector<std::vector<Decision>> logs;
  for (const auto& node : net.nodes) logs.push_back(node.decisions);
  CHECK(decision_consistency(logs));
  CHECK(net.now == 0);
}

TEST_CASE("hand trace of one height") {
  auto params = params_for(4);
  const auto app = batch_app();
  // Validator 2 is not the round-0 proposer at height 1 (slot 1 → validator 1).
  REQUIRE(params.validators.leader(1, 0) == vid(1));
  auto s = initial_state(vid(2));
  auto out = step(s, StartHeight{1}, 0, params, app);
  CHECK(out.messages.empty());
  REQUIRE(out.timers.size() == 1);
  CHECK(out.timers[0].timeout.kind == TimeoutKind::Propose);
  CHECK(out.timers[0].delay == 1000ms);
  CHECK(s.step == Step::Propose);

  const auto v = make_payload(1, vid(1), {7, 8, 9});
  out = step(s, proposal(params, 1, 0, v), 1, params, app);
  REQUIRE(out.messages.size() == 1);
  CHECK(message_type(out.messages[0]) == "prevote");
  CHECK(std::get<Vote>(out.messages[0].body).value == v->digest);
  CHECK(s.step == Step::Prevote);

  out = step(s, prevote(1, 1, 0, v->digest), 2, params, app);
  CHECK(out.messages.empty());
  // Third prevote for v: quorum. Locks, precommits, and arms the prevote timer.
  out = step(s, prevote(3, 1, 0, v->digest), 3, params, app);
  REQUIRE(out.messages.size() == 1);
  CHECK(message_type(out.messages[0]) == "precommit");
  CHECK(s.locked_value == v);
  CHECK(s.locked_round == 0);
  CHECK(s.valid_round == 0);
  CHECK(s.step == Step::Precommit);

  out = step(s, precommit(1, 1, 0, v->digest), 4, params, app);
  CHECK(out.decisions.empty());
  out = step(s, precommit(0, 1, 0, v->digest), 5, params, app);
  REQUIRE(out.decisions.size() == 1);
  CHECK(out.decisions[0].value == v);
  CHECK(out.decisions[0].time == 5);
  REQUIRE(out.messages.size() == 1);
  CHECK(message_type(out.messages[0]) == "commit");
  CHECK(s.height == 2);
  CHECK(s.step == Step::NewHeight);
  CHECK(s.locked_round == -1);
  bool commit_timer = false;
  for (const auto& t : out.timers) commit_timer |= t.timeout.kind == TimeoutKind::Commit && t.timeout.height == 2;
  CHECK(commit_timer);
}

TEST_CASE("silent proposer forces a decision in round 1") {
  Harness net(4);
  const auto first = net.params.validators.leader(1, 0);
  net.silent.insert(to_index(first));
  net.start();
  net.run_until_height(1);
  REQUIRE(net.all_decided(1));
  for (std::uint32_t i = 0; i < 4; ++i) {
    if (net.silent.count(i)) continue;
    const auto& d = net.nodes[i].decisions[0];
    CHECK(d.round == 1);
    CHECK(d.value->proposer == net.params.validators.leader(1, 1));
  }
  // Round 0 expires after the propose timeout, then nil votes and the precommit timeout.
  CHECK(net.now == 2000);
}

TEST_CASE("lock is respected without a justified valid round") {
  auto params = params_for(4);
  const auto app = batch_app();
  auto s = initial_state(vid(0));
  step(s, StartHeight{1}, 0, params, app);
  const auto v = make_payload(1, params.validators.leader(1, 0), {1});
  step(s, proposal(params, 1, 0, v), 0, params, app);
  step(s, prevote(1, 1, 0, v->digest), 0, params, app);
  step(s, prevote(2, 1, 0, v->digest), 0, params, app);
  REQUIRE(s.locked_value == v);

  // Round 0 ends without a decision.
  step(s, precommit(1, 1, 0, std::nullopt), 0, params, app);
  auto out = step(s, precommit(2, 1, 0, std::nullopt), 0, params, app);
  CHECK(out.timers.back().timeout.kind == TimeoutKind::Precommit);
  step(s, Timeout{TimeoutKind::Precommit, 1, 0}, 1000, params, app);
  REQUIRE(s.round == 1);

  const auto w = make_payload(1, params.validators.leader(1, 1), {2});
  out = step(s, proposal(params, 1, 1, w), 1000, params, app);
  const auto* pv = last_vote(out, VoteKind::Prevote);
  REQUIRE(pv);
  CHECK(pv->value == v->digest);
  CHECK(s.locked_round == 0);

  SUBCASE("a justified newer valid value unlocks") {
    // Round 1: w gathers a prevote quorum only after this validator gave up on
    // the round, so its valid value moves to w while the lock stays on v.
    step(s, prevote(1, 1, 1, w->digest), 1000, params, app);
    out = step(s, prevote(2, 1, 1, w->digest), 1000, params, app);
    CHECK(out.timers.back().timeout.kind == TimeoutKind::Prevote);
    step(s, Timeout{TimeoutKind::Prevote, 1, 1}, 2200, params, app);
    REQUIRE(s.step == Step::Precommit);
    step(s, prevote(3, 1, 1, w->digest), 2200, params, app);
    CHECK(s.locked_value == v);
    CHECK(s.valid_value == w);
    CHECK(s.valid_round == 1);
    step(s, precommit(1, 1, 1, std::nullopt), 2200, params, app);
    step(s, precommit(2, 1, 1, std::nullopt), 2200, params, app);
    step(s, Timeout{TimeoutKind::Precommit, 1, 1}, 3400, params, app);
    REQUIRE(s.round == 2);
    const auto leader2 = params.validators.leader(1, 2);
    REQUIRE(leader2 != s.id);
    out = step(s, Message{leader2, Proposal{1, 2, w, 1}}, 3400, params, app);
    pv = last_vote(out, VoteKind::Prevote);
    REQUIRE(pv);
    CHECK(pv->value == w->digest);
  }

  SUBCASE("an unjustified valid round is not trusted") {
    step(s, precommit(1, 1, 1, std::nullopt), 1000, params, app);
    step(s, precommit(2, 1, 1, std::nullopt), 1000, params, app);
    step(s, Timeout{TimeoutKind::Precommit, 1, 1}, 2200, params, app);
    REQUIRE(s.round == 2);
    const auto leader2 = params.validators.leader(1, 2);
    REQUIRE(leader2 != s.id);
    const auto x = make_payload(1, leader2, {3});
    out = step(s, Message{leader2, Proposal{1, 2, x, 1}}, 2200, params, app);
    // No prevote quorum for x in round 1 was observed, so the validator waits.
    CHECK(last_vote(out, VoteKind::Prevote) == nullptr);
    out = step(s, Timeout{TimeoutKind::Propose, 1, 2}, 2200 + 1600, params, app);
    pv = last_vote(out, VoteKind::Prevote);
    REQUIRE(pv);
    CHECK(!pv->value.has_value());
  }

  SUBCASE("a proof-of-lock short of a quorum does not justify") {
    step(s, precommit(1, 1, 1, std::nullopt), 1000, params, app);
    step(s, precommit(2, 1, 1, std::nullopt), 1000, params, app);
    step(s, Timeout{TimeoutKind::Precommit, 1, 1}, 2200, params, app);
    const auto leader2 = params.validators.leader(1, 2);
    const auto x = make_payload(1, leader2, {3});
    out = step(s, Message{leader2, Proposal{1, 2, x, 1, {vid(1), vid(3), vid(1)}}}, 2200, params, app);
    // Validator 1 is listed twice; two distinct signers fall short.
    CHECK(last_vote(out, VoteKind::Prevote) == nullptr);
  }
}

TEST_CASE("proof-of-lock certificates") {
  auto params = params_for(4);
  const auto app = batch_app();
  auto s = initial_state(vid(0));
  step(s, StartHeight{1}, 0, params, app);
  const auto v = make_payload(1, params.validators.leader(1, 0), {1});
  step(s, proposal(params, 1, 0, v), 0, params, app);
  step(s, prevote(1, 1, 0, v->digest), 0, params, app);
  step(s, prevote(2, 1, 0, v->digest), 0, params, app);
  REQUIRE(s.locked_round == 0);
  step(s, precommit(1, 1, 0, std::nullopt), 0, params, app);
  step(s, precommit(2, 1, 0, std::nullopt), 0, params, app);
  step(s, Timeout{TimeoutKind::Precommit, 1, 0}, 1000, params, app);
  step(s, precommit(1, 1, 1, std::nullopt), 1000, params, app);
  step(s, precommit(2, 1, 1, std::nullopt), 1000, params, app);
  step(s, Timeout{TimeoutKind::Precommit, 1, 1}, 2200, params, app);
  REQUIRE(s.round == 2);
  const auto leader2 = params.validators.leader(1, 2);
  const auto x = make_payload(1, leader2, {3});
  const auto out = step(s, Message{leader2, Proposal{1, 2, x, 1, {vid(1), vid(3), vid(2)}}}, 2200, params, app);
  const auto* pv = last_vote(out, VoteKind::Prevote);
  REQUIRE(pv);
  CHECK(pv->value == x->digest);
}

TEST_CASE("a re-proposed valid value carries its prevote signers") {
  auto params = params_for(4);
  const auto app = batch_app();
  // Find a validator that proposes at height 1 round 1 but not round 0.
  const auto me = params.validators.leader(1, 1);
  REQUIRE(params.validators.leader(1, 0) != me);
  auto s = initial_state(me);
  step(s, StartHeight{1}, 0, params, app);
  const auto v = make_payload(1, params.validators.leader(1, 0), {5});
  step(s, proposal(params, 1, 0, v), 0, params, app);
  std::vector<std::uint32_t> others;
  for (std::uint32_t i = 0; i < 4; ++i) {
    if (vid(i) != me) others.push_back(i);
  }
  step(s, prevote(others[0], 1, 0, v->digest), 0, params, app);
  step(s, prevote(others[1], 1, 0, v->digest), 0, params, app);
  REQUIRE(s.valid_round == 0);
  step(s, precommit(others[0], 1, 0, std::nullopt), 0, params, app);
  step(s, precommit(others[1], 1, 0, std::nullopt), 0, params, app);
  const auto out = step(s, Timeout{TimeoutKind::Precommit, 1, 0}, 1000, params, app);
  REQUIRE(!out.messages.empty());
  const auto& p = std::get<Proposal>(out.messages[0].body);
  CHECK(p.value == v);
  CHECK(p.valid_round == 0);
  CHECK(std::set<ValidatorId>(p.pol.begin(), p.pol.end()) ==
        std::set<ValidatorId>{me, vid(others[0]), vid(others[1])});
}

TEST_CASE("equivocation keeps the first vote and is flagged") {
  auto params = params_for(4);
  const auto app = batch_app();
  auto s = initial_state(vid(0));
  step(s, StartHeight{1}, 0, params, app);
  const auto v = make_payload(1, vid(1), {1});
  step(s, prevote(3, 1, 0, v->digest), 0, params, app);
  step(s, prevote(3, 1, 0, std::nullopt), 0, params, app);
  step(s, prevote(3, 1, 0, v->digest), 0, params, app);
  REQUIRE(s.conflicts.size() == 1);
  CHECK(s.conflicts[0].sender == vid(3));
  CHECK(s.conflicts[0].type == "prevote");
  CHECK(s.rounds[0].prevotes.total == 1);
  CHECK(s.rounds[0].prevotes.power_for(v->digest) == 1);
}

TEST_CASE("malformed messages are counted and ignored") {
  auto params = params_for(4);
  const auto app = batch_app();
  auto s = initial_state(vid(0));
  step(s, StartHeight{1}, 0, params, app);
  const auto leader = params.validators.leader(1, 0);
  const auto impostor = ValidatorId{(to_index(leader) + 1) % 4};
  const auto v = make_payload(1, impostor, {1});
  step(s, Message{impostor, Proposal{1, 0, v, -1}}, 0, params, app);
  CHECK(s.malformed == 1);
  CHECK(!s.rounds[0].proposal);

  auto forged = std::make_shared<Payload>(*make_payload(1, leader, {1}));
  forged->txs.push_back(2);
  step(s, Message{leader, Proposal{1, 0, forged, -1}}, 0, params, app);
  CHECK(s.malformed == 2);

  step(s, prevote(17, 1, 0, std::nullopt), 0, params, app);
  CHECK(s.malformed == 3);

  step(s, Message{leader, Proposal{1, 0, make_payload(1, leader, {}), 0}}, 0, params, app);
  CHECK(s.malformed == 4);
  CHECK(s.step == Step::Propose);
}

TEST_CASE("invalid proposals draw nil prevotes") {
  auto params = params_for(4);
  auto app = batch_app();
  app.valid = [](const Payload& p) { return p.txs.size() < 3; };
  auto s = initial_state(vid(0));
  step(s, StartHeight{1}, 0, params, app);
  const auto out = step(s, proposal(params, 1, 0, make_payload(1, params.validators.leader(1, 0), {1, 2, 3})), 0,
                        params, app);
  const auto* pv = last_vote(out, VoteKind::Prevote);
  REQUIRE(pv);
  CHECK(!pv->value);
}

TEST_CASE("round skip on messages from a later round") {
  auto params = params_for(4);
  const auto app = batch_app();
  auto s = initial_state(vid(2));
  REQUIRE(params.validators.leader(1, 3) != s.id);
  step(s, StartHeight{1}, 0, params, app);
  step(s, prevote(1, 1, 3, std::nullopt), 0, params, app);
  CHECK(s.round == 0);
  step(s, prevote(3, 1, 3, std::nullopt), 0, params, app);
  CHECK(s.round == 3);
  CHECK(s.step == Step::Propose);
}

TEST_CASE("lagging validator catches up from commit messages") {
  auto params = params_for(4);
  const auto app = batch_app();
  auto s = initial_state(vid(0));
  step(s, StartHeight{1}, 0, params, app);
  const auto v1 = make_payload(1, vid(1), {1});
  const auto v2 = make_payload(2, vid(2), {2});
  // Height-2 commits arrive first and are buffered.
  step(s, Message{vid(1), Commit{2, 0, v2, {}}}, 0, params, app);
  step(s, Message{vid(2), Commit{2, 0, v2, {}}}, 0, params, app);
  CHECK(s.decisions.empty());
  step(s, Message{vid(1), Commit{1, 0, v1, {}}}, 0, params, app);
  CHECK(s.decisions.empty());
  const auto out = step(s, Message{vid(3), Commit{1, 0, v1, {}}}, 0, params, app);
  REQUIRE(out.decisions.size() == 2);
  CHECK(out.decisions[0].value == v1);
  CHECK(out.decisions[1].value == v2);
  CHECK(s.height == 3);
}

TEST_CASE("a quorum certificate decides at once") {
  auto params = params_for(4);
  const auto app = batch_app();
  auto s = initial_state(vid(0));
  step(s, StartHeight{1}, 0, params, app);
  const auto v = make_payload(1, vid(1), {1});
  // Repeated signers count once, and two distinct ones fall short of 3.
  step(s, Message{vid(1), Commit{1, 2, v, {vid(1), vid(1), vid(2), vid(9)}}}, 0, params, app);
  CHECK(s.decisions.empty());
  const auto out = step(s, Message{vid(2), Commit{1, 2, v, {vid(3), vid(2), vid(1)}}}, 7, params, app);
  REQUIRE(out.decisions.size() == 1);
  CHECK(out.decisions[0].value == v);
  CHECK(out.decisions[0].round == 2);
  CHECK(s.height == 2);
  // The decider forwards the certificate it used.
  REQUIRE(out.messages.size() == 1);
  const auto& fwd = std::get<Commit>(out.messages[0].body);
  CHECK(fwd.certificate.size() == 3);
}

TEST_CASE("deciders attach the precommit quorum") {
  auto params = params_for(4);
  const auto app = batch_app();
  auto s = initial_state(vid(2));
  step(s, StartHeight{1}, 0, params, app);
  const auto v = make_payload(1, params.validators.leader(1, 0), {4});
  step(s, proposal(params, 1, 0, v), 0, params, app);
  for (std::uint32_t i : {0u, 1u}) step(s, prevote(i, 1, 0, v->digest), 0, params, app);
  step(s, precommit(0, 1, 0, v->digest), 0, params, app);
  step(s, precommit(3, 1, 0, std::nullopt), 0, params, app);
  const auto out = step(s, precommit(1, 1, 0, v->digest), 0, params, app);
  REQUIRE(out.decisions.size() == 1);
  const Commit* c = nullptr;
  for (const auto& m : out.messages) {
    if (const auto* x = std::get_if<Commit>(&m.body)) c = x;
  }
  REQUIRE(c);
  CHECK(std::set<ValidatorId>(c->certificate.begin(), c->certificate.end()) ==
        std::set<ValidatorId>{vid(0), vid(1), vid(2)});
}

TEST_CASE("handle_event is a pure transition") {
  auto params = params_for(4);
  const auto app = batch_app();
  const auto s0 = initial_state(vid(1));
  const auto [s1, out1] = handle_event(s0, StartHeight{1}, 0, params, app);
  const auto [s2, out2] = handle_event(s0, StartHeight{1}, 0, params, app);
  CHECK(!s0.started);
  // The round-0 proposer emits its proposal and its own prevote.
  REQUIRE(out1.messages.size() == 2);
  REQUIRE(out2.messages.size() == 2);
  CHECK(value_of(out1.messages[0]) == value_of(out2.messages[0]));
  CHECK(s1.step == s2.step);
  CHECK(s1.rounds.at(0).proposal->digest == s2.rounds.at(0).proposal->digest);
}

TEST_CASE("decision consistency detector") {
  const auto a = make_payload(1, vid(0), {1});
  const auto b = make_payload(1, vid(0), {2});
  std::vector<std::vector<Decision>> logs{{{1, 0, a, 0}}, {{1, 0, a, 0}}};
  CHECK(decision_consistency(logs));
  logs.push_back({{1, 1, b, 0}});
  CHECK(!decision_consistency(logs));
  CHECK(decision_consistency({}));
}

TEST_CASE("message trace lines") {
  const auto v = make_payload(1, vid(0), {1});
  std::ostringstream out;
  write_trace(out, {trace_record(Message{vid(2), Vote{VoteKind::Precommit, 1, 0, std::nullopt}}, 42),
                    trace_record(Message{vid(0), Proposal{1, 0, v, -1}}, 43)});
  CHECK(out.str() ==
        "{\"time\":42,\"sender\":2,\"type\":\"precommit\",\"height\":1,\"round\":0,\"value\":null}\n"
        "{\"time\":43,\"sender\":0,\"type\":\"proposal\",\"height\":1,\"round\":0,\"value\":\"" +
            v->digest.hex() + "\"}\n");
}
