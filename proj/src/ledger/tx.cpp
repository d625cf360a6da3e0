#include "urm/ledger/tx.hpp"

#include "encoder.hpp"

namespace urm::ledger {

Address address_of(std::string_view name) {
  const Digest d = sha256(std::string("addr:") + std::string(name));
  return d.hex().substr(0, 40);
}

std::string_view tx_type_name(const TxBody& body) {
  switch (body.index()) {
    case 0: return "ESAD";
    case 1: return "DATA";
    default: return "ESAR";
  }
}

std::string encode_tx(const LedgerTx& tx) {
  Encoder e;
  e.u64(tx.seq).bytes(tx_type_name(tx.body));
  if (const auto* d = std::get_if<EsadTx>(&tx.body)) {
    e.bytes(d->owner).bytes(d->provider).digest(d->esa_hash).i64(d->deployed_at_ms).boolean(d->valid);
  } else if (const auto* q = std::get_if<DataTx>(&tx.body)) {
    e.bytes(q->provider).bytes(q->requester).digest(q->query_hash).i64(q->time_ms);
  } else {
    const auto& r = std::get<EsarTx>(tx.body);
    e.digest(r.esa_hash).boolean(r.valid).i64(r.time_ms);
  }
  return e.str();
}

Digest leaf_hash(const LedgerTx& tx) { return sha256(encode_tx(tx)); }

}  // namespace urm::ledger
