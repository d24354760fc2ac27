#ifndef BLOFF_LEDGER_BLOCK_H_
#define BLOFF_LEDGER_BLOCK_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "bloff/crypto/crypto.h"
#include "bloff/ledger/transaction.h"
#include "bloff/ledger/validation.h"

namespace bloff {

inline constexpr uint8_t kBlockVersion = 1;
inline constexpr size_t kHeaderBytes = 82;

struct BlockHeader {
  uint8_t version = kBlockVersion;
  Digest prev_hash;
  Digest merkle_root;
  uint64_t timestamp = 0;
  // Required count of leading zero bits in the block hash.
  uint8_t difficulty = 0;
  uint64_t nonce = 0;

  friend bool operator==(const BlockHeader&, const BlockHeader&) = default;
};

// version(1) | prev_hash(32) | merkle_root(32) | timestamp(8, BE) |
// difficulty(1) | nonce(8, BE)
Bytes header_bytes(const BlockHeader& header);
Digest block_hash(const BlockHeader& header);

// Leading zero bits of |d|, MSB of byte 0 first.
int leading_zero_bits(const Digest& d);

// Miner attestation: the sealing csp-miner signs the block hash. Lives
// outside the header so the header layout stays fixed; the genesis block
// carries none.
struct BlockSeal {
  PublicKey miner;
  Signature signature;

  friend bool operator==(const BlockSeal&, const BlockSeal&) = default;
};

struct Block {
  BlockHeader header;
  std::vector<Transaction> txs;
  std::optional<BlockSeal> seal;

  Digest hash() const { return block_hash(header); }
  std::vector<Digest> tx_ids() const;

  friend bool operator==(const Block&, const Block&) = default;
};

// header(82) | has_seal(1) [| miner(32) | signature(64)] | tx_count(4, BE) |
// canonical txs back to back.
Bytes encode_block(const Block& block);
Block decode_block(ByteReader& reader);
Block decode_block(ByteView bytes);

// block_count(4, BE) | (block_len(4, BE) | block)*
Bytes encode_block_list(std::span<const Block> blocks);
std::vector<Block> decode_block_list(ByteView bytes);

// Registered node set, rebuilt by replaying registrations.
using Registry = std::map<PublicKey, Role>;

// Signs |block| as |miner|, filling in block.seal.
void seal_block(Block& block, const KeyPair& miner);

// Checks a non-genesis block against its parent in this order: linkage,
// non-empty, merkle root, difficulty, proof of work, timestamp monotonicity,
// per-tx validity, duplicate txs, submitter registration and role policy,
// miner seal. Registrations earlier in the block count for later txs.
Validity validate_block(const Block& block,
                        const BlockHeader& parent,
                        const Registry& registered,
                        uint8_t chain_difficulty);

// Genesis rules: zero prev_hash, difficulty 0, no seal, only self-signed
// csp-miner registrations.
Validity validate_genesis(const Block& block);

// Registration and role policy for one transaction given the registry so
// far: anchors need a device or csp-miner submitter, registrations a
// csp-miner sponsor and a fresh key. Applies registrations to |registry|
// on success.
Validity admit_in_context(const Transaction& tx, Registry& registry);

// Applies the block's registrations to |registry|. Assumes the block is valid.
void apply_registrations(const Block& block, Registry& registry);

// Throws Error("no-authorities") when |authorities| is empty.
Block make_genesis(std::span<const KeyPair> authorities, uint64_t timestamp);

}  // namespace bloff

#endif  // BLOFF_LEDGER_BLOCK_H_
