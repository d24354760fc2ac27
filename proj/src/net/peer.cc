#include "bloff/net/peer.h"

#include "bloff/common/error.h"

namespace bloff {

Peer::Peer(std::string id, NodeState state)
    : id_(std::move(id)), state_(std::move(state)) {
  for (const Block& b : state_.chain().blocks())
    seen_.insert(b.hash());
}

Outbound Peer::all_except(const std::string& exclude, Message m) const {
  m.from = id_;
  return {"", exclude, std::move(m)};
}

Outbound Peer::to_peer(const std::string& peer, Message m) const {
  m.from = id_;
  m.to = peer;
  return {peer, "", std::move(m)};
}

AddResult Peer::submit(const Transaction& tx, std::vector<Outbound>& out) {
  AddResult r = state_.submit_tx(tx);
  if (r.accepted()) {
    seen_.insert(tx.id());
    out.push_back(all_except("", tx_message(tx)));
  }
  return r;
}

Block Peer::mine(const KeyPair& miner,
                 uint64_t timestamp,
                 std::vector<Outbound>& out,
                 MiningStats* stats) {
  Block b = state_.mine(miner, timestamp, stats);
  Digest hash = b.hash();
  seen_.insert(hash);
  ApplyResult r;
  r.status = BlockStatus::kExtended;
  r.stored = {hash};
  r.tip_changed = true;
  applied_.push_back({hash, r});
  out.push_back(all_except("", block_message(b)));
  return b;
}

void Peer::request_chain(const std::string& peer, std::vector<Outbound>& out) {
  Message m = chain_request(state_.best_tip());
  if (peer.empty())
    out.push_back(all_except("", std::move(m)));
  else
    out.push_back(to_peer(peer, std::move(m)));
}

std::vector<Peer::Applied> Peer::take_applied() {
  std::vector<Applied> out;
  out.swap(applied_);
  return out;
}

void Peer::relay_stored(const std::vector<Digest>& stored,
                        const std::string& from,
                        std::vector<Outbound>& out) {
  for (const Digest& h : stored)
    if (const Block* b = state_.find_block(h))
      out.push_back(all_except(from, block_message(*b)));
}

void Peer::on_block(const Block& block,
                    const std::string& from,
                    bool request_on_orphan,
                    std::vector<Outbound>& out) {
  Digest hash = block.hash();
  if (!seen_.insert(hash).second && state_.knows_block(hash))
    return;
  ApplyResult r = state_.apply_block(block);
  if (r.accepted() || !r.stored.empty())
    applied_.push_back({hash, r});
  if (r.status == BlockStatus::kOrphan && request_on_orphan && !from.empty())
    request_chain(from, out);
  relay_stored(r.stored, from, out);
}

bool Peer::receive(const Message& m, std::vector<Outbound>& out) {
  try {
    switch (m.kind) {
      case MessageKind::kTxGossip: {
        Transaction tx = decode_tx(m.payload);
        if (!seen_.insert(tx.id()).second)
          return false;
        if (!state_.submit_tx(tx).accepted())
          return false;
        out.push_back(all_except(m.from, tx_message(tx)));
        return true;
      }
      case MessageKind::kBlockGossip:
        on_block(decode_block(m.payload), m.from, true, out);
        return true;
      case MessageKind::kChainRequest: {
        check_payload(m);
        if (Digest::from_span(m.payload) == state_.best_tip())
          return true;
        out.push_back(
            to_peer(m.from, chain_response(state_.chain().blocks())));
        return true;
      }
      case MessageKind::kChainResponse: {
        std::vector<Block> blocks = decode_block_list(m.payload);
        // A response that leaves orphans (foreign genesis, gaps) is not
        // answered with another request.
        for (const Block& b : blocks)
          if (!state_.knows_block(b.hash()))
            on_block(b, m.from, false, out);
        return true;
      }
    }
  } catch (const Error&) {
    // Undecodable payload: drop the message.
  }
  return false;
}

}  // namespace bloff
