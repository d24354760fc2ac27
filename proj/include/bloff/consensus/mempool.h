#ifndef BLOFF_CONSENSUS_MEMPOOL_H_
#define BLOFF_CONSENSUS_MEMPOOL_H_

#include <cstdint>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "bloff/ledger/transaction.h"

namespace bloff {

inline constexpr size_t kDefaultMempoolCapacity = 10'000;

enum class AddStatus { kAccepted, kDuplicate, kInvalid, kFull };

std::string_view add_status_name(AddStatus s);

struct AddResult {
  AddStatus status;
  // Set when status is kInvalid.
  Validity reason;

  bool accepted() const { return status == AddStatus::kAccepted; }
};

// Pending transactions in arrival order, unique by tx id. Only admits
// transactions that pass verify_tx; context checks belong to the caller.
class Mempool {
 public:
  explicit Mempool(size_t capacity = kDefaultMempoolCapacity)
      : capacity_(capacity) {}

  AddResult add(Transaction tx);
  bool contains(const Digest& tx_id) const { return by_id_.contains(tx_id); }
  // Removes |tx_id| if present.
  bool remove(const Digest& tx_id);

  // Oldest first.
  std::vector<Transaction> pending() const;
  size_t size() const { return by_id_.size(); }
  bool empty() const { return by_id_.empty(); }
  size_t capacity() const { return capacity_; }

 private:
  size_t capacity_;
  uint64_t next_seq_ = 0;
  std::map<uint64_t, Transaction> by_seq_;
  std::unordered_map<Digest, uint64_t, FixedBytesHash> by_id_;
};

}  // namespace bloff

#endif  // BLOFF_CONSENSUS_MEMPOOL_H_
