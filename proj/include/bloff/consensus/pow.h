#ifndef BLOFF_CONSENSUS_POW_H_
#define BLOFF_CONSENSUS_POW_H_

#include "bloff/ledger/block.h"

namespace bloff {

// True iff block_hash(header) has at least |difficulty| leading zero bits,
// counted from the most significant bit of byte 0.
inline bool meets_difficulty(const Digest& hash, int difficulty) {
  return leading_zero_bits(hash) >= difficulty;
}

inline bool check_pow(const BlockHeader& header, int difficulty) {
  return meets_difficulty(block_hash(header), difficulty);
}

}  // namespace bloff

#endif  // BLOFF_CONSENSUS_POW_H_
