#include "bloff/ledger/chain.h"

#include "bloff/common/error.h"

namespace bloff {

ChainValidation Chain::validate(std::vector<Block> blocks, uint8_t difficulty) {
  ChainValidation result;
  if (blocks.empty()) {
    result.failure = Validity::fail(Reject::kBadGenesis, "no blocks");
    return result;
  }
  if (Validity v = validate_genesis(blocks.front()); !v) {
    result.failure = v;
    return result;
  }
  Chain chain;
  chain.difficulty_ = difficulty;
  chain.blocks_.reserve(blocks.size());
  chain.blocks_.push_back(std::move(blocks.front()));
  chain.index_block(chain.blocks_.front(), 0);
  for (size_t i = 1; i < blocks.size(); ++i) {
    if (Validity v = chain.extend(std::move(blocks[i])); !v) {
      result.failed_height = i;
      result.failure = v;
      return result;
    }
  }
  result.chain = std::move(chain);
  return result;
}

Chain Chain::from_validated(std::vector<Block> blocks, uint8_t difficulty) {
  if (blocks.empty())
    throw Error("empty-chain", "from_validated needs a genesis block");
  Chain chain;
  chain.difficulty_ = difficulty;
  chain.blocks_ = std::move(blocks);
  for (size_t i = 0; i < chain.blocks_.size(); ++i)
    chain.index_block(chain.blocks_[i], i);
  return chain;
}

Validity Chain::extend(Block block) {
  Validity v = validate_block(block, tip().header, registry_, difficulty_);
  if (!v)
    return v;
  for (size_t i = 0; i < block.txs.size(); ++i) {
    if (tx_ids_.contains(block.txs[i].id()))
      return Validity::fail(Reject::kDuplicateTx,
                            "tx " + std::to_string(i) + " already on chain");
  }
  blocks_.push_back(std::move(block));
  index_block(blocks_.back(), blocks_.size() - 1);
  return {};
}

void Chain::index_block(const Block& block, uint64_t height) {
  tip_hash_ = block.hash();
  apply_registrations(block, registry_);
  for (size_t i = 0; i < block.txs.size(); ++i) {
    const Transaction& tx = block.txs[i];
    tx_ids_.insert(tx.id());
    if (const AnchorPayload* a = tx.anchor())
      anchors_[a->log_hash].push_back({height, static_cast<uint32_t>(i)});
  }
}

std::optional<Role> Chain::role_of(const PublicKey& key) const {
  auto it = registry_.find(key);
  if (it == registry_.end())
    return std::nullopt;
  return it->second;
}

std::span<const AnchorLocation> Chain::find_anchor(
    const Digest& log_hash) const {
  auto it = anchors_.find(log_hash);
  if (it == anchors_.end())
    return {};
  return it->second;
}

}  // namespace bloff
