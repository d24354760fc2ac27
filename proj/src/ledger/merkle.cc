#include "bloff/ledger/merkle.h"

#include "bloff/common/error.h"

namespace bloff {

namespace {

std::vector<Digest> next_level(const std::vector<Digest>& level) {
  std::vector<Digest> up;
  up.reserve((level.size() + 1) / 2);
  for (size_t i = 0; i < level.size(); i += 2) {
    const Digest& left = level[i];
    const Digest& right = i + 1 < level.size() ? level[i + 1] : level[i];
    up.push_back(merkle_parent(left, right));
  }
  return up;
}

std::vector<Digest> leaves(std::span<const Digest> tx_ids) {
  std::vector<Digest> out;
  out.reserve(tx_ids.size());
  for (const Digest& id : tx_ids)
    out.push_back(merkle_leaf(id));
  return out;
}

}  // namespace

Digest merkle_leaf(const Digest& tx_id) {
  ByteWriter w;
  w.u8(0x00);
  w.bytes(tx_id.span());
  return sha256_digest(w.data());
}

Digest merkle_parent(const Digest& left, const Digest& right) {
  ByteWriter w;
  w.u8(0x01);
  w.bytes(left.span());
  w.bytes(right.span());
  return sha256_digest(w.data());
}

Digest merkle_root(std::span<const Digest> tx_ids) {
  if (tx_ids.empty())
    throw Error("empty-merkle", "merkle root of an empty list");
  std::vector<Digest> level = leaves(tx_ids);
  while (level.size() > 1)
    level = next_level(level);
  return level.front();
}

Digest merkle_root(std::span<const Transaction> txs) {
  std::vector<Digest> ids;
  ids.reserve(txs.size());
  for (const Transaction& tx : txs)
    ids.push_back(tx.id());
  return merkle_root(ids);
}

std::vector<MerkleStep> merkle_path(std::span<const Digest> tx_ids,
                                    size_t index) {
  if (index >= tx_ids.size())
    throw Error("not-in-block", "leaf index out of range");
  std::vector<MerkleStep> path;
  std::vector<Digest> level = leaves(tx_ids);
  while (level.size() > 1) {
    if (index % 2 == 0) {
      size_t sib = index + 1 < level.size() ? index + 1 : index;
      path.push_back({MerkleStep::Side::kRight, level[sib]});
    } else {
      path.push_back({MerkleStep::Side::kLeft, level[index - 1]});
    }
    level = next_level(level);
    index /= 2;
  }
  return path;
}

Digest fold_merkle_path(const Digest& leaf, std::span<const MerkleStep> path) {
  Digest acc = leaf;
  for (const MerkleStep& step : path) {
    acc = step.side == MerkleStep::Side::kLeft
              ? merkle_parent(step.sibling, acc)
              : merkle_parent(acc, step.sibling);
  }
  return acc;
}

}  // namespace bloff
