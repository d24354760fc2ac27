#ifndef BLOFF_NET_PEER_H_
#define BLOFF_NET_PEER_H_

#include <string>
#include <unordered_set>
#include <vector>

#include "bloff/consensus/node_state.h"
#include "bloff/net/message.h"

namespace bloff {

// An outbound message produced by a peer. An empty |to| means every
// neighbor except |exclude|.
struct Outbound {
  std::string to;
  std::string exclude;
  Message message;
};

// Wire-protocol logic over a NodeState, independent of the transport: the
// simulator and the TCP node both feed inbound messages here and route
// whatever comes back.
//
// Gossip is a flood deduplicated by object hash. A block whose parent is
// unknown triggers a chain-request to its sender; a chain-request is
// answered with the full best chain.
class Peer {
 public:
  Peer(std::string id, NodeState state);

  const std::string& id() const { return id_; }
  const NodeState& state() const { return state_; }

  // Local submission. Gossips the tx when it enters the mempool.
  AddResult submit(const Transaction& tx, std::vector<Outbound>& out);

  // Mines on the best tip and gossips the block. Propagates mine_block's
  // errors.
  Block mine(const KeyPair& miner,
             uint64_t timestamp,
             std::vector<Outbound>& out,
             MiningStats* stats = nullptr);

  // Handles one inbound message. Malformed payloads are dropped; the
  // return value says whether the message was acted on.
  bool receive(const Message& message, std::vector<Outbound>& out);

  // Asks |peer| (or every neighbor when empty) for its chain.
  void request_chain(const std::string& peer, std::vector<Outbound>& out);

  // Results of block applications, in order, for callers that persist.
  struct Applied {
    Digest hash;
    ApplyResult result;
  };
  std::vector<Applied> take_applied();

 private:
  void on_block(const Block& block, const std::string& from,
                bool request_on_orphan, std::vector<Outbound>& out);
  void relay_stored(const std::vector<Digest>& stored,
                    const std::string& from, std::vector<Outbound>& out);
  Outbound all_except(const std::string& exclude, Message m) const;
  Outbound to_peer(const std::string& peer, Message m) const;

  std::string id_;
  NodeState state_;
  std::unordered_set<Digest, FixedBytesHash> seen_;
  std::vector<Applied> applied_;
};

}  // namespace bloff

#endif  // BLOFF_NET_PEER_H_
