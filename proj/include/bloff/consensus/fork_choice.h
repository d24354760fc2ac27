#ifndef BLOFF_CONSENSUS_FORK_CHOICE_H_
#define BLOFF_CONSENSUS_FORK_CHOICE_H_

#include <cstdint>

#include "bloff/ledger/chain.h"

namespace bloff {

// Strict total order on chain tips: the longer chain wins; at equal length
// the byte-wise smaller tip hash wins.
bool chain_preferred(uint64_t length_a,
                     const Digest& tip_a,
                     uint64_t length_b,
                     const Digest& tip_b);

// Returns the winner of |a| and |b|. Throws Error("incompatible-genesis")
// when they do not share a genesis block.
const Chain& choose_chain(const Chain& a, const Chain& b);

}  // namespace bloff

#endif  // BLOFF_CONSENSUS_FORK_CHOICE_H_
