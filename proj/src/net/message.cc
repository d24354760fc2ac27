#include "bloff/net/message.h"

#include "bloff/common/error.h"
#include "json.hpp"

namespace bloff {

using nlohmann::json;

std::string_view message_kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::kTxGossip: return "tx-gossip";
    case MessageKind::kBlockGossip: return "block-gossip";
    case MessageKind::kChainRequest: return "chain-request";
    case MessageKind::kChainResponse: return "chain-response";
  }
  return "unknown";
}

std::optional<MessageKind> parse_message_kind(std::string_view name) {
  for (MessageKind k : {MessageKind::kTxGossip, MessageKind::kBlockGossip,
                        MessageKind::kChainRequest,
                        MessageKind::kChainResponse})
    if (message_kind_name(k) == name)
      return k;
  return std::nullopt;
}

Message tx_message(const Transaction& tx) {
  return {MessageKind::kTxGossip, canonical_tx_bytes(tx), {}, {}};
}

Message block_message(const Block& block) {
  return {MessageKind::kBlockGossip, encode_block(block), {}, {}};
}

Message chain_request(const Digest& tip) {
  return {MessageKind::kChainRequest, Bytes(tip.span().begin(), tip.span().end()),
          {}, {}};
}

Message chain_response(std::span<const Block> blocks) {
  return {MessageKind::kChainResponse, encode_block_list(blocks), {}, {}};
}

void check_payload(const Message& m) {
  switch (m.kind) {
    case MessageKind::kTxGossip:
      decode_tx(m.payload);
      return;
    case MessageKind::kBlockGossip:
      decode_block(m.payload);
      return;
    case MessageKind::kChainRequest:
      if (m.payload.size() != Digest::kSize)
        throw Error("bad-message", "chain-request payload must be 32 bytes");
      return;
    case MessageKind::kChainResponse:
      decode_block_list(m.payload);
      return;
  }
}

std::optional<Digest> object_hash(const Message& m) {
  switch (m.kind) {
    case MessageKind::kTxGossip:
      return sha256_digest(m.payload);
    case MessageKind::kBlockGossip:
      if (m.payload.size() < kHeaderBytes)
        return std::nullopt;
      return sha256_digest(ByteView(m.payload).first(kHeaderBytes));
    default:
      return std::nullopt;
  }
}

std::string message_to_line(const Message& m) {
  json j;
  j["kind"] = std::string(message_kind_name(m.kind));
  j["payload"] = to_hex(m.payload);
  j["from"] = m.from;
  j["to"] = m.to;
  return j.dump();
}

Message message_from_line(std::string_view line) {
  try {
    json j = json::parse(line);
    if (!j.is_object())
      throw Error("bad-message", "expected an object");
    Message m;
    auto kind = parse_message_kind(j.at("kind").get<std::string>());
    if (!kind)
      throw Error("bad-message", "unknown kind");
    m.kind = *kind;
    auto payload = from_hex(j.at("payload").get<std::string>());
    if (!payload)
      throw Error("bad-message", "payload is not lowercase hex");
    m.payload = std::move(*payload);
    m.from = j.value("from", "");
    m.to = j.value("to", "");
    check_payload(m);
    return m;
  } catch (const json::exception& e) {
    throw Error("bad-message", e.what());
  } catch (const Error& e) {
    if (e.code() == "bad-message")
      throw;
    throw Error("bad-message", e.what());
  }
}

}  // namespace bloff
