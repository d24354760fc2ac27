#include "bloff/consensus/node_state.h"

#include <algorithm>
#include <deque>

#include "bloff/common/error.h"
#include "bloff/consensus/fork_choice.h"

namespace bloff {

std::string_view block_status_name(BlockStatus s) {
  switch (s) {
    case BlockStatus::kExtended: return "extended";
    case BlockStatus::kReorganized: return "reorganized";
    case BlockStatus::kStoredFork: return "stored-fork";
    case BlockStatus::kDuplicate: return "duplicate";
    case BlockStatus::kOrphan: return "orphan";
    case BlockStatus::kOrphanPoolFull: return "orphan-pool-full";
    case BlockStatus::kInvalid: return "invalid";
  }
  return "unknown";
}

NodeState::NodeState(Chain chain, NodeParams params)
    : params_(params),
      chain_(std::move(chain)),
      mempool_(params.mempool_capacity) {
  for (uint64_t h = 0; h < chain_.length(); ++h) {
    const Block& b = chain_.block(h);
    Digest hash = b.hash();
    best_hashes_.push_back(hash);
    known_.emplace(hash, KnownBlock{b, h});
  }
}

const Block* NodeState::find_block(const Digest& hash) const {
  auto it = known_.find(hash);
  return it == known_.end() ? nullptr : &it->second.block;
}

std::vector<Block> NodeState::fork_blocks() const {
  std::vector<const KnownBlock*> forks;
  for (const auto& [hash, kb] : known_) {
    bool on_best = kb.height < best_hashes_.size() &&
                   best_hashes_[kb.height] == hash;
    if (!on_best)
      forks.push_back(&kb);
  }
  std::sort(forks.begin(), forks.end(),
            [](const KnownBlock* a, const KnownBlock* b) {
              if (a->height != b->height)
                return a->height < b->height;
              return a->block.hash() < b->block.hash();
            });
  std::vector<Block> out;
  for (const KnownBlock* kb : forks)
    out.push_back(kb->block);
  return out;
}

std::optional<Role> NodeState::effective_role(const PublicKey& key) const {
  if (auto role = chain_.role_of(key))
    return role;
  auto it = pending_registrations_.find(key);
  if (it == pending_registrations_.end())
    return std::nullopt;
  return it->second;
}

Validity NodeState::admissible(const Transaction& tx) const {
  std::optional<Role> role = effective_role(tx.submitter);
  if (!role)
    return Validity::fail(Reject::kUnregisteredSubmitter,
                          node_short_id(tx.submitter));
  if (tx.anchor()) {
    if (*role != Role::kDevice && *role != Role::kCspMiner)
      return Validity::fail(Reject::kRoleNotPermitted,
                            std::string(role_name(*role)) + " cannot anchor");
    return {};
  }
  if (*role != Role::kCspMiner)
    return Validity::fail(Reject::kRoleNotPermitted,
                          std::string(role_name(*role)) + " cannot sponsor");
  if (effective_role(tx.registration()->new_node_pubkey))
    return Validity::fail(Reject::kAlreadyRegistered);
  return {};
}

AddResult NodeState::pool_add(const Transaction& tx) {
  AddResult r = mempool_.add(tx);
  if (r.accepted())
    if (const RegistrationPayload* reg = tx.registration())
      pending_registrations_.emplace(reg->new_node_pubkey, reg->role);
  return r;
}

void NodeState::pool_remove(const Transaction& tx) {
  if (!mempool_.remove(tx.id()))
    return;
  if (const RegistrationPayload* reg = tx.registration())
    pending_registrations_.erase(reg->new_node_pubkey);
}

AddResult NodeState::submit_tx(const Transaction& tx) {
  Digest id = tx.id();
  if (chain_.contains_tx(id) || mempool_.contains(id))
    return {AddStatus::kDuplicate, {}};
  if (Validity v = verify_tx(tx); !v)
    return {AddStatus::kInvalid, v};
  if (Validity v = admissible(tx); !v)
    return {AddStatus::kInvalid, v};
  return pool_add(tx);
}

void NodeState::on_connected(const Block& block) {
  for (const Transaction& tx : block.txs)
    pool_remove(tx);
}

void NodeState::on_disconnected(const Block& block) {
  for (const Transaction& tx : block.txs)
    if (!chain_.contains_tx(tx.id()))
      pool_add(tx);
}

std::vector<Block> NodeState::ancestry(const Digest& tip) const {
  std::vector<Block> out;
  Digest cur = tip;
  while (true) {
    const KnownBlock& kb = known_.at(cur);
    out.push_back(kb.block);
    if (kb.height == 0)
      break;
    cur = kb.block.header.prev_hash;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

void NodeState::switch_to(Chain candidate) {
  std::vector<Digest> new_hashes;
  new_hashes.reserve(candidate.length());
  for (const Block& b : candidate.blocks())
    new_hashes.push_back(b.hash());
  size_t fork = 0;
  while (fork < best_hashes_.size() && fork < new_hashes.size() &&
         best_hashes_[fork] == new_hashes[fork]) {
    ++fork;
  }
  std::vector<Block> disconnected(chain_.blocks().begin() + fork,
                                  chain_.blocks().end());
  chain_ = std::move(candidate);
  best_hashes_ = std::move(new_hashes);
  for (uint64_t h = fork; h < chain_.length(); ++h)
    on_connected(chain_.block(h));
  // Chain order keeps registrations ahead of the anchors that need them.
  for (const Block& b : disconnected)
    on_disconnected(b);
}

ApplyResult NodeState::connect(const Block& block, const Digest& hash) {
  ApplyResult result;
  const Digest& parent = block.header.prev_hash;
  uint64_t height = known_.at(parent).height + 1;

  if (parent == chain_.tip_hash()) {
    Validity v = chain_.extend(block);
    if (!v) {
      result.reason = v;
      return result;
    }
    known_.emplace(hash, KnownBlock{block, height});
    best_hashes_.push_back(hash);
    on_connected(block);
    result.status = BlockStatus::kExtended;
    result.tip_changed = true;
    result.stored.push_back(hash);
    return result;
  }

  Chain candidate = Chain::from_validated(ancestry(parent), chain_.difficulty());
  Validity v = candidate.extend(block);
  if (!v) {
    result.reason = v;
    return result;
  }
  known_.emplace(hash, KnownBlock{block, height});
  result.stored.push_back(hash);
  if (chain_preferred(candidate.length(), hash, chain_.length(),
                      chain_.tip_hash())) {
    switch_to(std::move(candidate));
    result.status = BlockStatus::kReorganized;
    result.tip_changed = true;
  } else {
    result.status = BlockStatus::kStoredFork;
  }
  return result;
}

ApplyResult NodeState::apply_block(const Block& block) {
  Digest hash = block.hash();
  ApplyResult result;
  if (known_.contains(hash) || orphans_.contains(hash)) {
    result.status = BlockStatus::kDuplicate;
    return result;
  }
  if (!known_.contains(block.header.prev_hash)) {
    if (orphans_.size() >= params_.orphan_capacity) {
      result.status = BlockStatus::kOrphanPoolFull;
      return result;
    }
    orphans_.emplace(hash, block);
    result.status = BlockStatus::kOrphan;
    return result;
  }

  result = connect(block, hash);
  if (!result.accepted())
    return result;

  // Connect orphans whose ancestry is now complete, breadth first.
  std::deque<Digest> frontier(result.stored.begin(), result.stored.end());
  while (!frontier.empty()) {
    Digest parent = frontier.front();
    frontier.pop_front();
    std::vector<Digest> children;
    for (const auto& [h, b] : orphans_)
      if (b.header.prev_hash == parent)
        children.push_back(h);
    std::sort(children.begin(), children.end());
    for (const Digest& child : children) {
      Block orphan = std::move(orphans_.at(child));
      orphans_.erase(child);
      ApplyResult r = connect(orphan, child);
      if (!r.accepted())
        continue;
      result.tip_changed = result.tip_changed || r.tip_changed;
      result.stored.push_back(child);
      frontier.push_back(child);
    }
  }
  return result;
}

Block NodeState::mine(const KeyPair& miner,
                      uint64_t timestamp,
                      MiningStats* stats) {
  Block block = mine_block(mempool_, chain_.tip().header, chain_.difficulty(),
                           miner, timestamp, chain_.registered_nodes(), stats,
                           params_.max_block_txs);
  ApplyResult r = apply_block(block);
  if (r.status != BlockStatus::kExtended)
    throw Error("mined-block-rejected", r.reason.to_string());
  return block;
}

}  // namespace bloff
