#include "bloff/ledger/block.h"

#include <bit>
#include <set>

#include "bloff/common/error.h"
#include "bloff/ledger/merkle.h"

namespace bloff {

Bytes header_bytes(const BlockHeader& header) {
  ByteWriter w;
  w.u8(header.version);
  w.bytes(header.prev_hash.span());
  w.bytes(header.merkle_root.span());
  w.u64be(header.timestamp);
  w.u8(header.difficulty);
  w.u64be(header.nonce);
  return std::move(w).take();
}

Digest block_hash(const BlockHeader& header) {
  return sha256_digest(header_bytes(header));
}

int leading_zero_bits(const Digest& d) {
  int bits = 0;
  for (size_t i = 0; i < d.size(); ++i) {
    if (d[i] != 0)
      return bits + std::countl_zero(d[i]);
    bits += 8;
  }
  return bits;
}

std::vector<Digest> Block::tx_ids() const {
  std::vector<Digest> ids;
  ids.reserve(txs.size());
  for (const Transaction& tx : txs)
    ids.push_back(tx.id());
  return ids;
}

Bytes encode_block(const Block& block) {
  ByteWriter w;
  w.bytes(header_bytes(block.header));
  w.u8(block.seal ? 1 : 0);
  if (block.seal) {
    w.bytes(block.seal->miner.span());
    w.bytes(block.seal->signature.span());
  }
  w.u32be(static_cast<uint32_t>(block.txs.size()));
  for (const Transaction& tx : block.txs)
    w.bytes(canonical_tx_bytes(tx));
  return std::move(w).take();
}

Block decode_block(ByteReader& r) {
  Block b;
  b.header.version = r.u8();
  b.header.prev_hash = r.fixed<Digest>();
  b.header.merkle_root = r.fixed<Digest>();
  b.header.timestamp = r.u64be();
  b.header.difficulty = r.u8();
  b.header.nonce = r.u64be();
  uint8_t has_seal = r.u8();
  if (has_seal > 1)
    throw Error("bad-block-encoding", "seal flag " + std::to_string(has_seal));
  if (has_seal) {
    BlockSeal seal;
    seal.miner = r.fixed<PublicKey>();
    seal.signature = r.fixed<Signature>();
    b.seal = seal;
  }
  uint32_t count = r.u32be();
  // Smallest encodable transaction is 131 bytes; reject absurd counts early.
  if (count > r.remaining() / 131)
    throw Error("bad-block-encoding", "tx count exceeds payload");
  b.txs.reserve(count);
  for (uint32_t i = 0; i < count; ++i)
    b.txs.push_back(decode_tx(r));
  return b;
}

Block decode_block(ByteView bytes) {
  ByteReader r(bytes);
  Block b = decode_block(r);
  r.expect_done();
  return b;
}

Bytes encode_block_list(std::span<const Block> blocks) {
  ByteWriter w;
  w.u32be(static_cast<uint32_t>(blocks.size()));
  for (const Block& b : blocks) {
    Bytes enc = encode_block(b);
    w.u32be(static_cast<uint32_t>(enc.size()));
    w.bytes(enc);
  }
  return std::move(w).take();
}

std::vector<Block> decode_block_list(ByteView bytes) {
  ByteReader r(bytes);
  uint32_t count = r.u32be();
  std::vector<Block> out;
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t len = r.u32be();
    out.push_back(decode_block(r.take(len)));
  }
  r.expect_done();
  return out;
}

void seal_block(Block& block, const KeyPair& miner) {
  Digest h = block.hash();
  block.seal = BlockSeal{miner.public_key, sign(miner.secret_key, h.span())};
}

namespace {

std::optional<Role> role_of(const Registry& registry, const PublicKey& key) {
  auto it = registry.find(key);
  if (it == registry.end())
    return std::nullopt;
  return it->second;
}

}  // namespace

Validity admit_in_context(const Transaction& tx, Registry& registry) {
  std::optional<Role> role = role_of(registry, tx.submitter);
  if (!role)
    return Validity::fail(Reject::kUnregisteredSubmitter,
                          node_short_id(tx.submitter));
  if (tx.anchor()) {
    if (*role != Role::kDevice && *role != Role::kCspMiner)
      return Validity::fail(Reject::kRoleNotPermitted,
                            std::string(role_name(*role)) + " cannot anchor");
    return {};
  }
  const RegistrationPayload& reg = *tx.registration();
  if (*role != Role::kCspMiner)
    return Validity::fail(Reject::kRoleNotPermitted,
                          std::string(role_name(*role)) + " cannot sponsor");
  if (registry.contains(reg.new_node_pubkey))
    return Validity::fail(Reject::kAlreadyRegistered,
                          node_short_id(reg.new_node_pubkey));
  registry.emplace(reg.new_node_pubkey, reg.role);
  return {};
}

namespace {

Validity check_body(const Block& block) {
  if (block.txs.empty())
    return Validity::fail(Reject::kEmptyBlock);
  std::vector<Digest> ids = block.tx_ids();
  if (merkle_root(ids) != block.header.merkle_root)
    return Validity::fail(Reject::kMerkleMismatch);
  return {};
}

Validity check_txs(const Block& block) {
  std::set<Digest> seen;
  for (size_t i = 0; i < block.txs.size(); ++i) {
    Validity v = verify_tx(block.txs[i]);
    if (!v)
      return Validity::fail(v.reason(), "tx " + std::to_string(i));
    if (!seen.insert(block.txs[i].id()).second)
      return Validity::fail(Reject::kDuplicateTx, "tx " + std::to_string(i));
  }
  return {};
}

}  // namespace

Validity validate_block(const Block& block,
                        const BlockHeader& parent,
                        const Registry& registered,
                        uint8_t chain_difficulty) {
  const BlockHeader& h = block.header;
  if (h.prev_hash != block_hash(parent))
    return Validity::fail(Reject::kBadLinkage);
  if (h.version != kBlockVersion)
    return Validity::fail(Reject::kBadVersion,
                          "block version " + std::to_string(h.version));
  if (Validity v = check_body(block); !v)
    return v;
  if (h.difficulty != chain_difficulty)
    return Validity::fail(Reject::kBadDifficulty,
                          std::to_string(h.difficulty) + " != " +
                              std::to_string(chain_difficulty));
  if (leading_zero_bits(block.hash()) < h.difficulty)
    return Validity::fail(Reject::kInsufficientWork);
  if (h.timestamp < parent.timestamp)
    return Validity::fail(Reject::kTimestampRegression);
  if (Validity v = check_txs(block); !v)
    return v;

  Registry registry = registered;
  for (size_t i = 0; i < block.txs.size(); ++i) {
    Validity v = admit_in_context(block.txs[i], registry);
    if (!v)
      return Validity::fail(v.reason(),
                            "tx " + std::to_string(i) + ": " + v.detail());
  }

  if (!block.seal)
    return Validity::fail(Reject::kMissingSeal);
  if (role_of(registry, block.seal->miner) != Role::kCspMiner)
    return Validity::fail(Reject::kUnregisteredMiner,
                          node_short_id(block.seal->miner));
  if (!verify_signature(block.seal->miner, block.hash().span(),
                        block.seal->signature)) {
    return Validity::fail(Reject::kBadSeal);
  }
  return {};
}

Validity validate_genesis(const Block& block) {
  const BlockHeader& h = block.header;
  if (!h.prev_hash.is_zero())
    return Validity::fail(Reject::kBadGenesis, "prev_hash must be zero");
  if (h.version != kBlockVersion)
    return Validity::fail(Reject::kBadVersion);
  if (Validity v = check_body(block); !v)
    return v;
  if (h.difficulty != 0)
    return Validity::fail(Reject::kBadGenesis, "difficulty must be 0");
  if (block.seal)
    return Validity::fail(Reject::kBadGenesis, "genesis is not sealed");
  if (Validity v = check_txs(block); !v)
    return v;
  std::set<PublicKey> authorities;
  for (const Transaction& tx : block.txs) {
    const RegistrationPayload* reg = tx.registration();
    if (!reg || reg->role != Role::kCspMiner ||
        reg->new_node_pubkey != tx.submitter) {
      return Validity::fail(Reject::kBadGenesis,
                            "only self-signed csp-miner registrations");
    }
    if (!authorities.insert(reg->new_node_pubkey).second)
      return Validity::fail(Reject::kAlreadyRegistered);
  }
  return {};
}

void apply_registrations(const Block& block, Registry& registry) {
  for (const Transaction& tx : block.txs)
    if (const RegistrationPayload* reg = tx.registration())
      registry.emplace(reg->new_node_pubkey, reg->role);
}

Block make_genesis(std::span<const KeyPair> authorities, uint64_t timestamp) {
  if (authorities.empty())
    throw Error("no-authorities", "genesis needs at least one authority");
  Block g;
  for (const KeyPair& k : authorities)
    g.txs.push_back(build_registration_tx(k.public_key, Role::kCspMiner, k));
  g.header.timestamp = timestamp;
  g.header.difficulty = 0;
  g.header.merkle_root = merkle_root(g.txs);
  return g;
}

}  // namespace bloff
