#include "bloff/consensus/fork_choice.h"

#include "bloff/common/error.h"

namespace bloff {

bool chain_preferred(uint64_t length_a,
                     const Digest& tip_a,
                     uint64_t length_b,
                     const Digest& tip_b) {
  if (length_a != length_b)
    return length_a > length_b;
  return tip_a < tip_b;
}

const Chain& choose_chain(const Chain& a, const Chain& b) {
  if (a.genesis_hash() != b.genesis_hash())
    throw Error("incompatible-genesis",
                a.genesis_hash().hex() + " vs " + b.genesis_hash().hex());
  if (a.tip_hash() == b.tip_hash())
    return a;
  return chain_preferred(a.length(), a.tip_hash(), b.length(), b.tip_hash())
             ? a
             : b;
}

}  // namespace bloff
