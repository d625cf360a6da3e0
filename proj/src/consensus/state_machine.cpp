#include "urm/consensus/state_machine.hpp"

#include <map>
#include <set>

namespace urm::consensus {

std::string_view step_name(Step s) {
  switch (s) {
    case Step::NewHeight: return "new_height";
    case Step::Propose: return "propose";
    case Step::Prevote: return "prevote";
    case Step::Precommit: return "precommit";
  }
  return "?";
}

std::uint64_t Tally::power_for(const std::optional<Digest>& v) const {
  const auto it = power.find(v);
  return it == power.end() ? 0 : it->second;
}

namespace {

class Machine {
 public:
  Machine(ValidatorState& s, std::int64_t now, const ConsensusParams& params, const Application& app)
      : s_(s), now_(now), params_(params), app_(app) {}

  void on_event(const Event& event) {
    if (const auto* start = std::get_if<StartHeight>(&event)) {
      if (!s_.started) {
        s_.started = true;
        enter_height(start->height);
        if (start->wait.count() > 0) {
          timer(TimeoutKind::Commit, start->height, 0, start->wait);
        } else {
          start_round(0);
        }
      }
    } else if (const auto* m = std::get_if<Message>(&event)) {
      if (m->sender == s_.id) return;
      record(*m);
    } else {
      on_timeout(std::get<Timeout>(event));
    }
    progress();
  }

  Outputs take() { return std::move(out_); }

 private:
  std::uint64_t quorum() const { return params_.validators.quorum(); }

  bool acceptable(const PayloadPtr& v) const { return v && well_formed(*v) && (!app_.valid || app_.valid(*v)); }

  void enter_height(std::uint64_t h) {
    s_.height = h;
    s_.round = 0;
    s_.step = Step::NewHeight;
    s_.locked_value.reset();
    s_.locked_round = -1;
    s_.valid_value.reset();
    s_.valid_round = -1;
    s_.rounds.clear();
    s_.commits.clear();
    s_.certified.reset();
    const auto node = s_.future.extract(h);
    s_.future.erase(s_.future.begin(), s_.future.lower_bound(h));
    if (!node.empty()) {
      for (const auto& m : node.mapped()) record(m);
    }
  }

  void start_round(std::uint64_t r) {
    s_.round = r;
    s_.step = Step::Propose;
    if (params_.validators.leader(s_.height, r) == s_.id) {
      PayloadPtr value = s_.valid_value;
      if (!value) value = app_.propose ? app_.propose(s_.id, s_.height, r) : make_payload(s_.height, s_.id, {});
      const std::int64_t vr = value == s_.valid_value ? s_.valid_round : -1;
      std::vector<ValidatorId> pol;
      if (vr >= 0) pol = signers(s_.rounds[static_cast<std::uint64_t>(vr)].prevotes, value->digest);
      broadcast({s_.id, Proposal{s_.height, r, value, vr, std::move(pol)}});
    }
    timer(TimeoutKind::Propose, s_.height, r, timeout_duration(r, params_.timeouts));
  }

  void timer(TimeoutKind kind, std::uint64_t h, std::uint64_t r, std::chrono::milliseconds d) {
    out_.timers.push_back({{kind, h, r}, d});
  }

  void broadcast(Message m) {
    record(m);
    out_.messages.push_back(std::move(m));
  }

  void vote(VoteKind kind, std::optional<Digest> value) {
    broadcast({s_.id, Vote{kind, s_.height, s_.round, value}});
  }

  static std::vector<ValidatorId> signers(const Tally& tally, const Digest& value) {
    std::vector<ValidatorId> out;
    for (const auto& [sender, v] : tally.votes) {
      if (v == value) out.push_back(sender);
    }
    return out;
  }

  std::uint64_t certificate_power(const std::vector<ValidatorId>& ids) const {
    std::uint64_t power = 0;
    for (auto v : std::set<ValidatorId>(ids.begin(), ids.end())) power += params_.validators.power_of(v);
    return power;
  }

  void conflict(const Message& m) { s_.conflicts.push_back({m.sender, message_type(m), height_of(m), round_of(m)}); }

  void note_sender(RoundState& rs, ValidatorId sender) {
    if (rs.senders.insert(sender).second) rs.sender_power += params_.validators.power_of(sender);
  }

  void record(const Message& m) {
    const auto power = params_.validators.power_of(m.sender);
    if (power == 0) {
      ++s_.malformed;
      return;
    }
    const auto h = height_of(m);
    if (h < s_.height) return;
    if (h > s_.height) {
      if (h <= s_.height + kFutureHeights) s_.future[h].push_back(m);
      return;
    }
    if (const auto* p = std::get_if<Proposal>(&m.body)) {
      const bool ok = p->value && well_formed(*p->value) && p->value->height == h &&
                      params_.validators.leader(h, p->round) == m.sender && p->valid_round >= -1 &&
                      p->valid_round < static_cast<std::int64_t>(p->round);
      if (!ok) {
        ++s_.malformed;
        return;
      }
      auto& rs = s_.rounds[p->round];
      if (rs.proposal) {
        if (rs.proposal->digest != p->value->digest || rs.proposal_valid_round != p->valid_round) conflict(m);
        return;
      }
      rs.proposal = p->value;
      rs.proposal_valid_round = p->valid_round;
      rs.proposal_pol = p->pol;
      note_sender(rs, m.sender);
    } else if (const auto* v = std::get_if<Vote>(&m.body)) {
      auto& rs = s_.rounds[v->round];
      auto& tally = v->kind == VoteKind::Prevote ? rs.prevotes : rs.precommits;
      const auto [it, fresh] = tally.votes.emplace(m.sender, v->value);
      if (!fresh) {
        if (it->second != v->value) conflict(m);
        return;
      }
      tally.power[v->value] += power;
      tally.total += power;
      note_sender(rs, m.sender);
    } else {
      const auto& c = std::get<Commit>(m.body);
      if (!c.value || !well_formed(*c.value) || c.value->height != h) {
        ++s_.malformed;
        return;
      }
      const auto [it, fresh] = s_.commits.emplace(m.sender, c.value);
      if (!fresh && it->second->digest != c.value->digest) conflict(m);
      if (!s_.certified && certificate_power(c.certificate) >= quorum()) s_.certified = c;
    }
  }

  void on_timeout(const Timeout& t) {
    if (!s_.started || t.height != s_.height) return;
    switch (t.kind) {
      case TimeoutKind::Propose:
        if (t.round == s_.round && s_.step == Step::Propose) {
          vote(VoteKind::Prevote, std::nullopt);
          s_.step = Step::Prevote;
        }
        break;
      case TimeoutKind::Prevote:
        if (t.round == s_.round && s_.step == Step::Prevote) {
          vote(VoteKind::Precommit, std::nullopt);
          s_.step = Step::Precommit;
        }
        break;
      case TimeoutKind::Precommit:
        if (t.round == s_.round && s_.step != Step::NewHeight) start_round(s_.round + 1);
        break;
      case TimeoutKind::Commit:
        if (s_.step == Step::NewHeight) start_round(0);
        break;
    }
  }

  // Prevote for a proposal of the current round, honouring the lock.
  std::optional<Digest> prevote_for(const PayloadPtr& v, std::int64_t valid_round) const {
    if (!acceptable(v)) return std::nullopt;
    const bool unlocked = s_.locked_round < 0 || s_.locked_value->digest == v->digest ||
                          (valid_round >= 0 && valid_round > s_.locked_round);
    if (unlocked) return v->digest;
    return s_.locked_value->digest;
  }

  bool try_decide() {
    for (const auto& [r, rs] : s_.rounds) {
      if (!rs.proposal || rs.precommits.power_for(rs.proposal->digest) < quorum()) continue;
      if (!acceptable(rs.proposal)) continue;
      decide(r, rs.proposal, signers(rs.precommits, rs.proposal->digest));
      return true;
    }
    if (s_.certified && acceptable(s_.certified->value)) {
      auto c = *s_.certified;
      decide(c.round, c.value, std::move(c.certificate));
      return true;
    }
    std::map<Digest, std::uint64_t> support;
    for (const auto& [sender, value] : s_.commits) {
      const auto p = support[value->digest] += params_.validators.power_of(sender);
      if (p >= params_.validators.honest_witness() && acceptable(value)) {
        decide(s_.round, value, {});
        return true;
      }
    }
    return false;
  }

  void decide(std::uint64_t r, PayloadPtr value, std::vector<ValidatorId> certificate) {
    const auto h = s_.height;
    Decision d{h, r, value, now_};
    s_.decisions.push_back(d);
    out_.decisions.push_back(d);
    broadcast({s_.id, Commit{h, r, value, std::move(certificate)}});
    timer(TimeoutKind::Commit, h + 1, 0, params_.commit_interval);
    enter_height(h + 1);
  }

  bool fire_rule() {
    if (try_decide()) return true;
    if (s_.step == Step::NewHeight) return false;

    auto& rs = s_.rounds[s_.round];
    const auto q = quorum();

    if (s_.step == Step::Propose && rs.proposal) {
      const auto vr = rs.proposal_valid_round;
      if (vr < 0) {
        vote(VoteKind::Prevote, prevote_for(rs.proposal, -1));
        s_.step = Step::Prevote;
        return true;
      }
      const auto it = s_.rounds.find(static_cast<std::uint64_t>(vr));
      const bool seen = it != s_.rounds.end() && it->second.prevotes.power_for(rs.proposal->digest) >= q;
      if (seen || certificate_power(rs.proposal_pol) >= q) {
        vote(VoteKind::Prevote, prevote_for(rs.proposal, vr));
        s_.step = Step::Prevote;
        return true;
      }
    }

    if (s_.step == Step::Prevote && !rs.prevote_timer && rs.prevotes.total >= q) {
      rs.prevote_timer = true;
      timer(TimeoutKind::Prevote, s_.height, s_.round, timeout_duration(s_.round, params_.timeouts));
      return true;
    }

    if (s_.step != Step::Propose && !rs.prevote_quorum_seen && rs.proposal &&
        rs.prevotes.power_for(rs.proposal->digest) >= q && acceptable(rs.proposal)) {
      rs.prevote_quorum_seen = true;
      if (s_.step == Step::Prevote) {
        s_.locked_value = rs.proposal;
        s_.locked_round = static_cast<std::int64_t>(s_.round);
        vote(VoteKind::Precommit, rs.proposal->digest);
        s_.step = Step::Precommit;
      }
      s_.valid_value = rs.proposal;
      s_.valid_round = static_cast<std::int64_t>(s_.round);
      return true;
    }

    if (s_.step == Step::Prevote && rs.prevotes.power_for(std::nullopt) >= q) {
      vote(VoteKind::Precommit, std::nullopt);
      s_.step = Step::Precommit;
      return true;
    }

    if (!rs.precommit_timer && rs.precommits.total >= q) {
      rs.precommit_timer = true;
      timer(TimeoutKind::Precommit, s_.height, s_.round, timeout_duration(s_.round, params_.timeouts));
      return true;
    }

    for (auto it = s_.rounds.upper_bound(s_.round); it != s_.rounds.end(); ++it) {
      if (it->second.sender_power >= params_.validators.honest_witness()) {
        start_round(it->first);
        return true;
      }
    }
    return false;
  }

  void progress() {
    if (!s_.started) return;
    while (fire_rule()) {
    }
  }

  ValidatorState& s_;
  std::int64_t now_;
  const ConsensusParams& params_;
  const Application& app_;
  Outputs out_;
};

}  // namespace

ValidatorState initial_state(ValidatorId id) {
  ValidatorState s;
  s.id = id;
  return s;
}

Outputs step(ValidatorState& state, const Event& event, std::int64_t now, const ConsensusParams& params,
             const Application& app) {
  Machine m(state, now, params, app);
  m.on_event(event);
  return m.take();
}

std::pair<ValidatorState, Outputs> handle_event(ValidatorState state, const Event& event, std::int64_t now,
                                                const ConsensusParams& params, const Application& app) {
  auto out = step(state, event, now, params, app);
  return {std::move(state), std::move(out)};
}

bool decision_consistency(const std::vector<std::vector<Decision>>& logs) {
  std::map<std::uint64_t, Digest> decided;
  for (const auto& log : logs) {
    for (const auto& d : log) {
      const auto [it, fresh] = decided.emplace(d.height, d.value->digest);
      if (!fresh && it->second != d.value->digest) return false;
    }
  }
  return true;
}

}  // namespace urm::consensus
