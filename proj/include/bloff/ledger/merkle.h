#ifndef BLOFF_LEDGER_MERKLE_H_
#define BLOFF_LEDGER_MERKLE_H_

#include <span>
#include <vector>

#include "bloff/crypto/crypto.h"
#include "bloff/ledger/transaction.h"

namespace bloff {

// Domain-separated tree hashing:
//   leaf     = sha256(0x00 | tx_id)
//   internal = sha256(0x01 | left | right)
// A level with an odd node count pairs its last node with itself.
Digest merkle_leaf(const Digest& tx_id);
Digest merkle_parent(const Digest& left, const Digest& right);

// Throws Error("empty-merkle") for an empty list.
Digest merkle_root(std::span<const Digest> tx_ids);
Digest merkle_root(std::span<const Transaction> txs);

struct MerkleStep {
  // Which side of the running hash the sibling sits on.
  enum class Side { kLeft, kRight };
  Side side;
  Digest sibling;

  friend bool operator==(const MerkleStep&, const MerkleStep&) = default;
};

// Sibling path from leaf |index| up to the root. Throws Error if |index| is
// out of range.
std::vector<MerkleStep> merkle_path(std::span<const Digest> tx_ids,
                                    size_t index);

// Folds a leaf hash along |path|.
Digest fold_merkle_path(const Digest& leaf, std::span<const MerkleStep> path);

}  // namespace bloff

#endif  // BLOFF_LEDGER_MERKLE_H_
