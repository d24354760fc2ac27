#ifndef BLOFF_CONSENSUS_NODE_STATE_H_
#define BLOFF_CONSENSUS_NODE_STATE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "bloff/consensus/mempool.h"
#include "bloff/consensus/miner.h"
#include "bloff/ledger/chain.h"

namespace bloff {

inline constexpr size_t kDefaultOrphanCapacity = 100;

struct NodeParams {
  size_t mempool_capacity = kDefaultMempoolCapacity;
  size_t max_block_txs = kDefaultMaxBlockTxs;
  size_t orphan_capacity = kDefaultOrphanCapacity;
};

enum class BlockStatus {
  // Appended to the best chain.
  kExtended,
  // Made a competing branch the best chain.
  kReorganized,
  // Valid but on a losing branch.
  kStoredFork,
  kDuplicate,
  // Parent unknown; held until it arrives.
  kOrphan,
  kOrphanPoolFull,
  kInvalid,
};

std::string_view block_status_name(BlockStatus s);

struct ApplyResult {
  BlockStatus status = BlockStatus::kInvalid;
  Validity reason;
  // Every block stored by this call in connection order: the block itself
  // (unless it was orphaned, duplicate or invalid) followed by any orphans
  // it unlocked.
  std::vector<Digest> stored;
  bool tip_changed = false;

  bool accepted() const {
    return status == BlockStatus::kExtended ||
           status == BlockStatus::kReorganized ||
           status == BlockStatus::kStoredFork;
  }
};

// The per-node consensus state: every known valid block, the selected best
// chain, the mempool and the orphan pool. Owned by one logical thread; the
// simulator and the live node both drive this class.
class NodeState {
 public:
  explicit NodeState(Chain chain, NodeParams params = {});

  const Chain& chain() const { return chain_; }
  const Mempool& mempool() const { return mempool_; }
  Digest best_tip() const { return chain_.tip_hash(); }
  const NodeParams& params() const { return params_; }

  // Admits |tx| if it is valid, new, and its submitter is (or will be, by a
  // pending registration) allowed to submit it.
  AddResult submit_tx(const Transaction& tx);

  // Validates and stores |block|, running fork choice. Reorgs return the
  // disconnected transactions to the mempool.
  ApplyResult apply_block(const Block& block);

  // Mines on the best tip and applies the result. Propagates mine_block's
  // errors.
  Block mine(const KeyPair& miner,
             uint64_t timestamp,
             MiningStats* stats = nullptr);

  bool knows_block(const Digest& hash) const { return known_.contains(hash); }
  const Block* find_block(const Digest& hash) const;
  // Known valid blocks not on the best chain, parents before children.
  std::vector<Block> fork_blocks() const;
  size_t orphan_count() const { return orphans_.size(); }

 private:
  struct KnownBlock {
    Block block;
    uint64_t height;
  };

  ApplyResult connect(const Block& block, const Digest& hash);
  std::vector<Block> ancestry(const Digest& tip) const;
  void switch_to(Chain candidate);
  void on_connected(const Block& block);
  void on_disconnected(const Block& block);
  std::optional<Role> effective_role(const PublicKey& key) const;
  Validity admissible(const Transaction& tx) const;
  AddResult pool_add(const Transaction& tx);
  void pool_remove(const Transaction& tx);

  NodeParams params_;
  Chain chain_;
  std::vector<Digest> best_hashes_;
  std::unordered_map<Digest, KnownBlock, FixedBytesHash> known_;
  Mempool mempool_;
  // Registrations waiting in the mempool, so dependants can queue behind.
  Registry pending_registrations_;
  std::unordered_map<Digest, Block, FixedBytesHash> orphans_;
};

}  // namespace bloff

#endif  // BLOFF_CONSENSUS_NODE_STATE_H_
