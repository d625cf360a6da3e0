#include "urm/ledger/chain.hpp"

#include <istream>
#include <json.hpp>
#include <ostream>

#include "encoder.hpp"
#include "urm/common/error.hpp"
#include "urm/ledger/merkle.hpp"

namespace urm::ledger {

using ojson = nlohmann::ordered_json;

std::string encode_meta(const BlockMeta& meta) {
  Encoder e;
  e.i64(meta.timestamp_ms).bytes(meta.proposer);
  return e.str();
}

Digest block_hash(const Digest& prev_hash, const Digest& merkle_root, const BlockMeta& meta) {
  Sha256 h;
  h.update(prev_hash).update(merkle_root).update(encode_meta(meta));
  return h.finish();
}

// ---------------------------------------------------------------------------
// SideChain

SideChain::SideChain(std::string id, std::int64_t genesis_time_ms) : id_(std::move(id)) {
  Block g;
  g.meta = BlockMeta{genesis_time_ms, id_};
  g.merkle_root = merkle_root(g.txs);
  g.hash = block_hash(g.prev_hash, g.merkle_root, g.meta);
  blocks_.push_back(std::move(g));
}

SideChain SideChain::from_blocks(std::string id, std::vector<Block> blocks) {
  SideChain c(std::move(id));
  c.blocks_ = std::move(blocks);
  return c;
}

std::uint64_t SideChain::next_seq() const {
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    if (!it->txs.empty()) return it->txs.back().seq + 1;
  }
  return 0;
}

const Block& SideChain::append_block(const std::vector<TxBody>& txs, BlockMeta meta) {
  const Block& prev = head();
  if (meta.timestamp_ms < prev.meta.timestamp_ms) {
    throw Error("block timestamp " + std::to_string(meta.timestamp_ms) + " precedes previous block at " +
                std::to_string(prev.meta.timestamp_ms));
  }
  std::uint64_t seq = next_seq();
  std::set<Digest> in_force = agreements_in_force(*this, seq);
  Block b;
  b.height = prev.height + 1;
  b.prev_hash = prev.hash;
  b.meta = std::move(meta);
  for (const auto& body : txs) {
    if (const auto* d = std::get_if<EsadTx>(&body)) {
      if (!in_force.insert(d->esa_hash).second) throw Error("agreement " + d->esa_hash.hex() + " is already in force");
    } else if (const auto* r = std::get_if<EsarTx>(&body)) {
      if (in_force.erase(r->esa_hash) == 0) {
        throw Error("agreement " + r->esa_hash.hex() + " is not in force on chain '" + id_ + "'");
      }
    }
    b.txs.push_back(LedgerTx{seq++, body});
  }
  b.merkle_root = merkle_root(b.txs);
  b.hash = block_hash(b.prev_hash, b.merkle_root, b.meta);
  blocks_.push_back(std::move(b));
  return blocks_.back();
}

std::optional<std::pair<std::size_t, std::size_t>> SideChain::locate(std::uint64_t seq) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& txs = blocks_[i].txs;
    if (txs.empty() || seq < txs.front().seq || seq > txs.back().seq) continue;
    for (std::size_t j = 0; j < txs.size(); ++j) {
      if (txs[j].seq == seq) return std::make_pair(i, j);
    }
  }
  return std::nullopt;
}

Verdict check_chain(const SideChain& chain) {
  const auto& blocks = chain.blocks();
  if (blocks.empty()) return Verdict::fail("chain has no genesis block");
  std::uint64_t expected_seq = 0;
  std::set<Digest> in_force;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    const std::string at = "block " + std::to_string(i) + ": ";
    if (b.height != i) return Verdict::fail(at + "height mismatch");
    if (i == 0) {
      if (!b.prev_hash.is_zero()) return Verdict::fail(at + "genesis must point at the zero digest");
      if (!b.txs.empty()) return Verdict::fail(at + "genesis carries transactions");
      if (b.meta.proposer != chain.id()) return Verdict::fail(at + "genesis does not name the chain id");
    } else {
      if (b.prev_hash != blocks[i - 1].hash) return Verdict::fail(at + "broken hash pointer");
      if (b.meta.timestamp_ms < blocks[i - 1].meta.timestamp_ms) return Verdict::fail(at + "timestamp regression");
    }
    for (const auto& tx : b.txs) {
      if (tx.seq != expected_seq++) return Verdict::fail(at + "sequence gap at " + std::to_string(tx.seq));
      if (const auto* d = std::get_if<EsadTx>(&tx.body)) {
        if (!d->valid) return Verdict::fail(at + "ESAD with validity false");
        if (!in_force.insert(d->esa_hash).second) return Verdict::fail(at + "duplicate ESAD");
      } else if (const auto* r = std::get_if<EsarTx>(&tx.body)) {
        if (r->valid) return Verdict::fail(at + "ESAR with validity true");
        if (in_force.erase(r->esa_hash) == 0) return Verdict::fail(at + "ESAR of an agreement not in force");
      }
    }
    if (b.merkle_root != merkle_root(b.txs)) return Verdict::fail(at + "merkle root mismatch");
    if (b.hash != block_hash(b.prev_hash, b.merkle_root, b.meta)) return Verdict::fail(at + "block hash mismatch");
  }
  return {};
}

bool verify_chain(const SideChain& chain) { return check_chain(chain).ok; }

std::set<Digest> agreements_in_force(const SideChain& chain, std::uint64_t upto_seq) {
  std::set<Digest> out;
  for (const auto& b : chain.blocks()) {
    for (const auto& tx : b.txs) {
      if (tx.seq >= upto_seq) return out;
      if (const auto* d = std::get_if<EsadTx>(&tx.body)) {
        out.insert(d->esa_hash);
      } else if (const auto* r = std::get_if<EsarTx>(&tx.body)) {
        out.erase(r->esa_hash);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// BaseChain and anchoring

Digest anchor_hash(const Digest& prev_hash, std::uint64_t index, const std::string& chain_id, std::uint64_t side_height,
                   const Digest& side_root, std::int64_t base_time_ms) {
  Encoder e;
  e.digest(prev_hash).u64(index).bytes(chain_id).u64(side_height).digest(side_root).i64(base_time_ms);
  return sha256(e.str());
}

const AnchorRecord& BaseChain::append(const std::string& chain_id, std::uint64_t side_height, const Digest& side_root,
                                      std::int64_t base_time_ms) {
  AnchorRecord r;
  r.index = records_.size();
  r.chain_id = chain_id;
  r.side_height = side_height;
  r.side_root = side_root;
  r.base_time_ms = base_time_ms;
  r.prev_hash = records_.empty() ? Digest::zero() : records_.back().hash;
  if (!records_.empty() && base_time_ms < records_.back().base_time_ms) throw Error("base chain time regression");
  r.hash = anchor_hash(r.prev_hash, r.index, r.chain_id, r.side_height, r.side_root, r.base_time_ms);
  records_.push_back(std::move(r));
  return records_.back();
}

std::optional<std::uint64_t> BaseChain::anchored_height(const std::string& chain_id) const {
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->chain_id == chain_id) return it->side_height;
  }
  return std::nullopt;
}

BaseChain BaseChain::from_records(std::vector<AnchorRecord> records) {
  BaseChain b;
  b.records_ = std::move(records);
  return b;
}

std::vector<AnchorRecord> anchor(const SideChain& side, BaseChain& base, std::int64_t now_ms, std::int64_t delay_ms) {
  const auto last = base.anchored_height(side.id());
  const std::uint64_t first = last ? *last + 1 : 0;
  std::vector<AnchorRecord> out;
  for (std::uint64_t h = first; h < side.blocks().size(); ++h) {
    out.push_back(base.append(side.id(), h, side.blocks()[h].merkle_root, now_ms + delay_ms));
  }
  return out;
}

Verdict check_anchors(const SideChain& side, const BaseChain& base) {
  const auto& recs = base.records();
  std::uint64_t next_height = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const AnchorRecord& r = recs[i];
    const std::string at = "anchor " + std::to_string(i) + ": ";
    if (r.index != i) return Verdict::fail(at + "index mismatch");
    if (r.prev_hash != (i == 0 ? Digest::zero() : recs[i - 1].hash)) return Verdict::fail(at + "broken hash pointer");
    if (i > 0 && r.base_time_ms < recs[i - 1].base_time_ms) return Verdict::fail(at + "time regression");
    if (r.hash != anchor_hash(r.prev_hash, r.index, r.chain_id, r.side_height, r.side_root, r.base_time_ms)) {
      return Verdict::fail(at + "record hash mismatch");
    }
    if (r.chain_id != side.id()) continue;
    if (r.side_height != next_height) return Verdict::fail(at + "side heights out of order");
    if (r.side_height >= side.blocks().size()) return Verdict::fail(at + "anchors a block the side chain lacks");
    const Block& b = side.blocks()[r.side_height];
    if (r.side_root != b.merkle_root) return Verdict::fail(at + "root differs from side block");
    if (r.base_time_ms < b.meta.timestamp_ms) return Verdict::fail(at + "anchored before the block was committed");
    ++next_height;
  }
  return {};
}

bool verify_anchors(const SideChain& side, const BaseChain& base) { return check_anchors(side, base).ok; }

std::optional<std::int64_t> interchain_latency(std::uint64_t seq, const SideChain& side, const BaseChain& base) {
  const auto pos = side.locate(seq);
  if (!pos) throw Error("no transaction with sequence " + std::to_string(seq));
  const Block& b = side.blocks()[pos->first];
  for (const auto& r : base.records()) {
    if (r.chain_id == side.id() && r.side_height == b.height) return r.base_time_ms - b.meta.timestamp_ms;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Export / import

namespace {

ojson tx_json(const LedgerTx& tx) {
  ojson j;
  j["seq"] = tx.seq;
  j["type"] = tx_type_name(tx.body);
  if (const auto* d = std::get_if<EsadTx>(&tx.body)) {
    j["owner"] = d->owner;
    j["provider"] = d->provider;
    j["esa"] = d->esa_hash.hex();
    j["deployed_at"] = d->deployed_at_ms;
    j["valid"] = d->valid;
  } else if (const auto* q = std::get_if<DataTx>(&tx.body)) {
    j["provider"] = q->provider;
    j["requester"] = q->requester;
    j["query"] = q->query_hash.hex();
    j["time"] = q->time_ms;
  } else {
    const auto& r = std::get<EsarTx>(tx.body);
    j["esa"] = r.esa_hash.hex();
    j["valid"] = r.valid;
    j["time"] = r.time_ms;
  }
  return j;
}

template <typename T>
T field(const ojson& j, const char* key) {
  const ojson& v = j.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw Error(std::string("field '") + key + "' is not a boolean");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw Error(std::string("field '") + key + "' is not a string");
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!v.is_number_unsigned()) throw Error(std::string("field '") + key + "' is not a non-negative integer");
  } else {
    if (!v.is_number_integer()) throw Error(std::string("field '") + key + "' is not an integer");
  }
  return v.get<T>();
}

Digest digest_field(const ojson& j, const char* key) {
  try {
    return Digest::from_hex(field<std::string>(j, key));
  } catch (const std::invalid_argument& e) {
    throw Error(std::string("field '") + key + "': " + e.what());
  }
}

void expect_keys(const ojson& j, std::size_t n) {
  if (!j.is_object() || j.size() != n) throw Error("unexpected record shape");
}

LedgerTx tx_from_json(const ojson& j) {
  LedgerTx tx;
  tx.seq = field<std::uint64_t>(j, "seq");
  const auto type = field<std::string>(j, "type");
  if (type == "ESAD") {
    expect_keys(j, 7);
    tx.body = EsadTx{field<std::string>(j, "owner"), field<std::string>(j, "provider"), digest_field(j, "esa"),
                     field<std::int64_t>(j, "deployed_at"), field<bool>(j, "valid")};
  } else if (type == "DATA") {
    expect_keys(j, 6);
    tx.body = DataTx{field<std::string>(j, "provider"), field<std::string>(j, "requester"), digest_field(j, "query"),
                     field<std::int64_t>(j, "time")};
  } else if (type == "ESAR") {
    expect_keys(j, 5);
    tx.body = EsarTx{digest_field(j, "esa"), field<bool>(j, "valid"), field<std::int64_t>(j, "time")};
  } else {
    throw Error("unknown transaction type '" + type + "'");
  }
  return tx;
}

template <typename F>
void for_each_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      f(ojson::parse(line));
    } catch (const ojson::exception& e) {
      throw Error("line " + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("line " + std::to_string(n) + ": " + e.what());
    }
  }
}

}  // namespace

void export_chain(std::ostream& out, const SideChain& chain) {
  for (const auto& b : chain.blocks()) {
    ojson j;
    j["height"] = b.height;
    j["prev"] = b.prev_hash.hex();
    j["root"] = b.merkle_root.hex();
    j["time"] = b.meta.timestamp_ms;
    j["proposer"] = b.meta.proposer;
    j["hash"] = b.hash.hex();
    j["txs"] = ojson::array();
    for (const auto& tx : b.txs) j["txs"].push_back(tx_json(tx));
    out << j.dump() << '\n';
  }
}

SideChain import_chain(std::istream& in) {
  std::vector<Block> blocks;
  for_each_line(in, [&](const ojson& j) {
    expect_keys(j, 7);
    Block b;
    b.height = field<std::uint64_t>(j, "height");
    b.prev_hash = digest_field(j, "prev");
    b.merkle_root = digest_field(j, "root");
    b.meta.timestamp_ms = field<std::int64_t>(j, "time");
    b.meta.proposer = field<std::string>(j, "proposer");
    b.hash = digest_field(j, "hash");
    const ojson& txs = j.at("txs");
    if (!txs.is_array()) throw Error("field 'txs' is not an array");
    for (const auto& t : txs) b.txs.push_back(tx_from_json(t));
    blocks.push_back(std::move(b));
  });
  if (blocks.empty()) throw Error("chain export is empty");
  std::string id = blocks.front().meta.proposer;
  return SideChain::from_blocks(std::move(id), std::move(blocks));
}

void export_base(std::ostream& out, const BaseChain& base) {
  for (const auto& r : base.records()) {
    ojson j;
    j["index"] = r.index;
    j["chain"] = r.chain_id;
    j["height"] = r.side_height;
    j["root"] = r.side_root.hex();
    j["time"] = r.base_time_ms;
    j["prev"] = r.prev_hash.hex();
    j["hash"] = r.hash.hex();
    out << j.dump() << '\n';
  }
}

BaseChain import_base(std::istream& in) {
  std::vector<AnchorRecord> recs;
  for_each_line(in, [&](const ojson& j) {
    expect_keys(j, 7);
    AnchorRecord r;
    r.index = field<std::uint64_t>(j, "index");
    r.chain_id = field<std::string>(j, "chain");
    r.side_height = field<std::uint64_t>(j, "height");
    r.side_root = digest_field(j, "root");
    r.base_time_ms = field<std::int64_t>(j, "time");
    r.prev_hash = digest_field(j, "prev");
    r.hash = digest_field(j, "hash");
    recs.push_back(std::move(r));
  });
  return BaseChain::from_records(std::move(recs));
}

}  // namespace urm::ledger
