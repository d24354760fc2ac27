#ifndef BLOFF_NET_MESSAGE_H_
#define BLOFF_NET_MESSAGE_H_

#include <optional>
#include <string>
#include <string_view>

#include "bloff/common/bytes.h"
#include "bloff/ledger/block.h"

namespace bloff {

enum class MessageKind {
  kTxGossip,
  kBlockGossip,
  // Payload: the requester's best tip hash.
  kChainRequest,
  // Payload: the responder's best chain as an encoded block list.
  kChainResponse,
};

std::string_view message_kind_name(MessageKind kind);
std::optional<MessageKind> parse_message_kind(std::string_view name);

struct Message {
  MessageKind kind = MessageKind::kTxGossip;
  Bytes payload;
  std::string from;
  std::string to;

  friend bool operator==(const Message&, const Message&) = default;
};

Message tx_message(const Transaction& tx);
Message block_message(const Block& block);
Message chain_request(const Digest& tip);
Message chain_response(std::span<const Block> blocks);

// Throws Error when the payload does not decode as |message.kind|.
void check_payload(const Message& message);

// Hash identifying the carried object, used for gossip dedup: the tx id
// or block hash. Requests and responses have none.
std::optional<Digest> object_hash(const Message& message);

// {"from":..,"kind":..,"payload":<hex>,"to":..} on one line.
std::string message_to_line(const Message& message);
// Throws Error("bad-message") on malformed input, including payloads that
// do not decode as the stated kind.
Message message_from_line(std::string_view line);

}  // namespace bloff

#endif  // BLOFF_NET_MESSAGE_H_
