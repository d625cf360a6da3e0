#include "urm/consensus/message.hpp"

#include <ostream>

#include <json.hpp>

namespace urm::consensus {

namespace {

void put_u64(Sha256& h, std::uint64_t v) {
  std::uint8_t buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(v >> (56 - 8 * i));
  h.update(std::span<const std::uint8_t>(buf, 8));
}

}  // namespace

Digest payload_digest(std::uint64_t height, ValidatorId proposer, std::uint64_t nonce,
                      const std::vector<std::uint64_t>& txs) {
  Sha256 h;
  h.update(std::string_view("batch"));
  put_u64(h, height);
  put_u64(h, to_index(proposer));
  put_u64(h, nonce);
  put_u64(h, txs.size());
  for (auto tx : txs) put_u64(h, tx);
  return h.finish();
}

PayloadPtr make_payload(std::uint64_t height, ValidatorId proposer, std::vector<std::uint64_t> txs,
                        std::uint64_t nonce) {
  auto p = std::make_shared<Payload>();
  p->height = height;
  p->proposer = proposer;
  p->nonce = nonce;
  p->txs = std::move(txs);
  p->digest = payload_digest(height, proposer, nonce, p->txs);
  return p;
}

bool well_formed(const Payload& p) { return p.digest == payload_digest(p.height, p.proposer, p.nonce, p.txs); }

std::uint64_t height_of(const Message& m) {
  return std::visit([](const auto& b) { return b.height; }, m.body);
}

std::uint64_t round_of(const Message& m) {
  return std::visit([](const auto& b) { return b.round; }, m.body);
}

std::string_view message_type(const Message& m) {
  if (std::holds_alternative<Proposal>(m.body)) return "proposal";
  if (std::holds_alternative<Commit>(m.body)) return "commit";
  return std::get<Vote>(m.body).kind == VoteKind::Prevote ? "prevote" : "precommit";
}

std::optional<Digest> value_of(const Message& m) {
  if (const auto* p = std::get_if<Proposal>(&m.body)) {
    return p->value ? std::optional(p->value->digest) : std::nullopt;
  }
  if (const auto* c = std::get_if<Commit>(&m.body)) {
    return c->value ? std::optional(c->value->digest) : std::nullopt;
  }
  return std::get<Vote>(m.body).value;
}

TraceRecord trace_record(const Message& m, std::int64_t time) {
  return {time, m.sender, message_type(m), height_of(m), round_of(m), value_of(m)};
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["time"] = r.time;
    j["sender"] = to_index(r.sender);
    j["type"] = r.type;
    j["height"] = r.height;
    j["round"] = r.round;
    j["value"] = r.value ? nlohmann::ordered_json(r.value->hex()) : nlohmann::ordered_json(nullptr);
    out << j.dump() << '\n';
  }
}

}  // namespace urm::consensus
