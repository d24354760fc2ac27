#ifndef BLOFF_CONSENSUS_MINER_H_
#define BLOFF_CONSENSUS_MINER_H_

#include <cstdint>

#include "bloff/consensus/mempool.h"
#include "bloff/ledger/block.h"

namespace bloff {

inline constexpr size_t kDefaultMaxBlockTxs = 100;

struct MiningStats {
  // Headers hashed, the successful one included.
  uint64_t attempts = 0;
};

// Seals a block on |parent| from the oldest pending transactions that are
// admissible in order against |registry| (at most |max_txs|). The nonce
// search starts at 0 and is single-threaded, so the result is a pure
// function of the inputs. A timestamp older than the parent's is raised to
// the parent's.
//
// Throws Error("not-a-miner") unless |miner| is a registered csp-miner,
// Error("no-work") when nothing is minable, Error("nonce-exhausted") if the
// 64-bit nonce space runs out.
Block mine_block(const Mempool& pool,
                 const BlockHeader& parent,
                 uint8_t difficulty,
                 const KeyPair& miner,
                 uint64_t timestamp,
                 const Registry& registry,
                 MiningStats* stats = nullptr,
                 size_t max_txs = kDefaultMaxBlockTxs);

// Nonce search only: advances |header.nonce| to the first value from its
// current one satisfying |header.difficulty|. Returns the hashes tried.
uint64_t solve_pow(BlockHeader& header);

}  // namespace bloff

#endif  // BLOFF_CONSENSUS_MINER_H_
