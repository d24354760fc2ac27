#include "bloff/consensus/miner.h"

#include <algorithm>

#include "bloff/common/error.h"
#include "bloff/consensus/pow.h"
#include "bloff/ledger/merkle.h"

namespace bloff {

uint64_t solve_pow(BlockHeader& header) {
  uint64_t attempts = 0;
  while (true) {
    ++attempts;
    if (check_pow(header, header.difficulty))
      return attempts;
    if (header.nonce == UINT64_MAX)
      throw Error("nonce-exhausted");
    ++header.nonce;
  }
}

Block mine_block(const Mempool& pool,
                 const BlockHeader& parent,
                 uint8_t difficulty,
                 const KeyPair& miner,
                 uint64_t timestamp,
                 const Registry& registry,
                 MiningStats* stats,
                 size_t max_txs) {
  auto it = registry.find(miner.public_key);
  if (it == registry.end() || it->second != Role::kCspMiner)
    throw Error("not-a-miner", node_short_id(miner.public_key) +
                                   " is not a registered csp-miner");
  if (pool.empty())
    throw Error("no-work", "mempool is empty");

  Block block;
  Registry scratch = registry;
  for (Transaction& tx : pool.pending()) {
    if (block.txs.size() >= max_txs)
      break;
    if (admit_in_context(tx, scratch))
      block.txs.push_back(std::move(tx));
  }
  if (block.txs.empty())
    throw Error("no-work", "no pending transaction is admissible");

  BlockHeader& h = block.header;
  h.prev_hash = block_hash(parent);
  h.merkle_root = merkle_root(block.txs);
  h.timestamp = std::max(timestamp, parent.timestamp);
  h.difficulty = difficulty;
  h.nonce = 0;
  uint64_t attempts = solve_pow(h);
  if (stats)
    stats->attempts = attempts;
  seal_block(block, miner);
  return block;
}

}  // namespace bloff
