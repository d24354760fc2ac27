#include "bloff/consensus/mempool.h"

namespace bloff {

std::string_view add_status_name(AddStatus s) {
  switch (s) {
    case AddStatus::kAccepted: return "accepted";
    case AddStatus::kDuplicate: return "duplicate";
    case AddStatus::kInvalid: return "invalid";
    case AddStatus::kFull: return "full";
  }
  return "unknown";
}

AddResult Mempool::add(Transaction tx) {
  Digest id = tx.id();
  if (by_id_.contains(id))
    return {AddStatus::kDuplicate, {}};
  if (Validity v = verify_tx(tx); !v)
    return {AddStatus::kInvalid, v};
  if (by_id_.size() >= capacity_)
    return {AddStatus::kFull, {}};
  uint64_t seq = next_seq_++;
  by_seq_.emplace(seq, std::move(tx));
  by_id_.emplace(id, seq);
  return {AddStatus::kAccepted, {}};
}

bool Mempool::remove(const Digest& tx_id) {
  auto it = by_id_.find(tx_id);
  if (it == by_id_.end())
    return false;
  by_seq_.erase(it->second);
  by_id_.erase(it);
  return true;
}

std::vector<Transaction> Mempool::pending() const {
  std::vector<Transaction> out;
  out.reserve(by_seq_.size());
  for (const auto& [seq, tx] : by_seq_)
    out.push_back(tx);
  return out;
}

}  // namespace bloff
