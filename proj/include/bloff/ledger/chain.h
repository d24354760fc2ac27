#ifndef BLOFF_LEDGER_CHAIN_H_
#define BLOFF_LEDGER_CHAIN_H_

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bloff/ledger/block.h"

namespace bloff {

struct AnchorLocation {
  uint64_t height = 0;
  uint32_t tx_index = 0;

  friend bool operator==(const AnchorLocation&, const AnchorLocation&) =
      default;
};

// log_hash -> every place it was anchored, in chain order.
using AnchorIndex =
    std::unordered_map<Digest, std::vector<AnchorLocation>, FixedBytesHash>;

struct ChainValidation;

// A validated sequence of blocks from genesis together with the state
// derived by replaying it. Only ever holds blocks that passed validation.
class Chain {
 public:
  // Replays |blocks| from genesis, checking every rule.
  static ChainValidation validate(std::vector<Block> blocks,
                                  uint8_t difficulty);

  // Rebuilds derived state for blocks this process already validated.
  // Skips signature and proof-of-work checks.
  static Chain from_validated(std::vector<Block> blocks, uint8_t difficulty);

  // Validates |block| against the tip and appends it. On failure the chain
  // is unchanged.
  Validity extend(Block block);

  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(uint64_t height) const { return blocks_.at(height); }
  const Block& tip() const { return blocks_.back(); }
  Digest tip_hash() const { return tip_hash_; }
  Digest genesis_hash() const { return blocks_.front().hash(); }
  // Number of blocks, genesis included.
  uint64_t length() const { return blocks_.size(); }
  uint64_t tip_height() const { return blocks_.size() - 1; }
  uint8_t difficulty() const { return difficulty_; }

  const Registry& registered_nodes() const { return registry_; }
  std::optional<Role> role_of(const PublicKey& key) const;

  const AnchorIndex& anchor_index() const { return anchors_; }
  std::span<const AnchorLocation> find_anchor(const Digest& log_hash) const;
  bool contains_tx(const Digest& tx_id) const {
    return tx_ids_.contains(tx_id);
  }
  uint64_t tx_count() const { return tx_ids_.size(); }

  // Structural equality: same blocks and difficulty. Derived state follows.
  friend bool operator==(const Chain& a, const Chain& b) {
    return a.difficulty_ == b.difficulty_ && a.blocks_ == b.blocks_;
  }

 private:
  Chain() = default;
  void index_block(const Block& block, uint64_t height);

  std::vector<Block> blocks_;
  uint8_t difficulty_ = 0;
  Digest tip_hash_;
  Registry registry_;
  AnchorIndex anchors_;
  std::unordered_set<Digest, FixedBytesHash> tx_ids_;
};

struct ChainValidation {
  std::optional<Chain> chain;
  // Height of the first failing block when |chain| is empty.
  uint64_t failed_height = 0;
  Validity failure;

  bool ok() const { return chain.has_value(); }
};

inline ChainValidation validate_chain(std::vector<Block> blocks,
                                      uint8_t difficulty) {
  return Chain::validate(std::move(blocks), difficulty);
}

}  // namespace bloff

#endif  // BLOFF_LEDGER_CHAIN_H_
