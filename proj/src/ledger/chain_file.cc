#include "bloff/ledger/chain_file.h"

#include <initializer_list>

namespace bloff {

using nlohmann::json;

namespace {

[[noreturn]] void bad_json(const std::string& what) {
  throw Error("bad-json", what);
}

void expect_keys(const json& obj, std::initializer_list<const char*> keys) {
  if (!obj.is_object())
    bad_json("expected an object");
  for (const char* k : keys)
    if (!obj.contains(k))
      bad_json(std::string("missing field '") + k + "'");
  if (obj.size() != keys.size())
    bad_json("unexpected extra fields");
}

const json& field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end())
    bad_json(std::string("missing field '") + key + "'");
  return *it;
}

uint64_t get_u64(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_number_unsigned())
    bad_json(std::string("'") + key + "' must be a non-negative integer");
  return v.get<uint64_t>();
}

uint8_t get_u8(const json& obj, const char* key) {
  uint64_t v = get_u64(obj, key);
  if (v > 255)
    bad_json(std::string("'") + key + "' out of range");
  return static_cast<uint8_t>(v);
}

const std::string& get_string(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_string())
    bad_json(std::string("'") + key + "' must be a string");
  return v.get_ref<const std::string&>();
}

template <typename Fixed>
Fixed get_fixed(const json& obj, const char* key) {
  auto v = Fixed::from_hex(get_string(obj, key));
  if (!v)
    bad_json(std::string("'") + key + "' must be " +
             std::to_string(Fixed::kSize * 2) + " lowercase hex characters");
  return *v;
}

}  // namespace

json tx_to_json(const Transaction& tx) {
  json j;
  j["version"] = tx.version;
  j["submitter"] = tx.submitter.hex();
  j["signature"] = tx.signature.hex();
  j["tx_id"] = tx.id().hex();
  if (const AnchorPayload* a = tx.anchor()) {
    j["kind"] = "anchor";
    j["log_hash"] = a->log_hash.hex();
    j["source_id"] = to_hex(as_bytes(a->source_id));
    j["capture_timestamp"] = a->capture_timestamp;
  } else {
    const RegistrationPayload& r = *tx.registration();
    j["kind"] = "registration";
    j["new_node_pubkey"] = r.new_node_pubkey.hex();
    // Out-of-range tags never reach a chain file; keep them visible anyway.
    if (is_known_role(r.role))
      j["role"] = std::string(role_name(r.role));
    else
      j["role"] = static_cast<int>(r.role);
  }
  return j;
}

Transaction tx_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    bad_json("transaction needs a 'kind'");
  Transaction tx;
  const std::string& kind = get_string(j, "kind");
  if (kind == "anchor") {
    expect_keys(j, {"kind", "version", "log_hash", "source_id",
                    "capture_timestamp", "submitter", "signature", "tx_id"});
    AnchorPayload a;
    a.log_hash = get_fixed<Digest>(j, "log_hash");
    auto source = from_hex(get_string(j, "source_id"));
    if (!source || source->size() > kMaxSourceIdBytes)
      bad_json("'source_id' must be at most 64 bytes of lowercase hex");
    a.source_id = to_string(*source);
    a.capture_timestamp = get_u64(j, "capture_timestamp");
    tx.payload = std::move(a);
  } else if (kind == "registration") {
    expect_keys(j, {"kind", "version", "new_node_pubkey", "role", "submitter",
                    "signature", "tx_id"});
    RegistrationPayload r;
    r.new_node_pubkey = get_fixed<PublicKey>(j, "new_node_pubkey");
    auto role = parse_role(get_string(j, "role"));
    if (!role)
      bad_json("unknown role");
    r.role = *role;
    tx.payload = r;
  } else {
    bad_json("unknown transaction kind '" + kind + "'");
  }
  tx.version = get_u8(j, "version");
  tx.submitter = get_fixed<PublicKey>(j, "submitter");
  tx.signature = get_fixed<Signature>(j, "signature");
  if (get_fixed<Digest>(j, "tx_id") != tx.id())
    throw Error("tx-id-mismatch", "stored tx_id disagrees with content");
  return tx;
}

json block_to_json(const Block& block, std::optional<uint8_t> chain_difficulty) {
  const BlockHeader& h = block.header;
  json j;
  j["version"] = h.version;
  j["prev_hash"] = h.prev_hash.hex();
  j["merkle_root"] = h.merkle_root.hex();
  j["timestamp"] = h.timestamp;
  j["difficulty"] = h.difficulty;
  j["nonce"] = h.nonce;
  j["block_hash"] = block.hash().hex();
  json txs = json::array();
  for (const Transaction& tx : block.txs)
    txs.push_back(tx_to_json(tx));
  j["txs"] = std::move(txs);
  if (block.seal) {
    j["miner"] = block.seal->miner.hex();
    j["seal"] = block.seal->signature.hex();
  }
  if (chain_difficulty)
    j["chain_difficulty"] = *chain_difficulty;
  return j;
}

std::string block_to_line(const Block& block,
                          std::optional<uint8_t> chain_difficulty) {
  return block_to_json(block, chain_difficulty).dump();
}

ParsedBlockLine block_from_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    bad_json(e.what());
  }
  if (!j.is_object())
    bad_json("block must be an object");

  ParsedBlockLine out;
  size_t expected_fields = 8;
  if (j.contains("chain_difficulty")) {
    out.chain_difficulty = get_u8(j, "chain_difficulty");
    ++expected_fields;
  }
  if (j.contains("miner") || j.contains("seal")) {
    BlockSeal seal;
    seal.miner = get_fixed<PublicKey>(j, "miner");
    seal.signature = get_fixed<Signature>(j, "seal");
    out.block.seal = seal;
    expected_fields += 2;
  }
  for (const char* k : {"version", "prev_hash", "merkle_root", "timestamp",
                        "difficulty", "nonce", "block_hash", "txs"}) {
    if (!j.contains(k))
      bad_json(std::string("missing field '") + k + "'");
  }
  if (j.size() != expected_fields)
    bad_json("unexpected extra fields");

  BlockHeader& h = out.block.header;
  h.version = get_u8(j, "version");
  h.prev_hash = get_fixed<Digest>(j, "prev_hash");
  h.merkle_root = get_fixed<Digest>(j, "merkle_root");
  h.timestamp = get_u64(j, "timestamp");
  h.difficulty = get_u8(j, "difficulty");
  h.nonce = get_u64(j, "nonce");
  const json& txs = field(j, "txs");
  if (!txs.is_array())
    bad_json("'txs' must be an array");
  for (const json& t : txs)
    out.block.txs.push_back(tx_from_json(t));

  if (get_fixed<Digest>(j, "block_hash") != out.block.hash())
    throw Error("block-hash-mismatch", "stored block_hash disagrees with header");
  if (block_to_line(out.block, out.chain_difficulty) != line)
    throw Error("non-canonical", "line is not in canonical form");
  return out;
}

std::string serialize_blocks(std::span<const Block> blocks, uint8_t difficulty) {
  std::string out;
  for (size_t i = 0; i < blocks.size(); ++i) {
    out += block_to_line(blocks[i], i == 0 ? std::optional<uint8_t>(difficulty)
                                           : std::nullopt);
    out += '\n';
  }
  return out;
}

std::string serialize_chain(const Chain& chain) {
  return serialize_blocks(chain.blocks(), chain.difficulty());
}

Chain parse_chain(std::string_view text) {
  if (text.empty())
    throw ChainLoadError("empty-chain", "chain file is empty", 1, std::nullopt);
  std::vector<Block> blocks;
  std::optional<uint8_t> difficulty;
  uint64_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos)
      throw ChainLoadError("parse-error", "line " + std::to_string(line_no) +
                                              ": truncated (no newline)",
                           line_no, std::nullopt);
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ParsedBlockLine parsed;
    try {
      parsed = block_from_line(line);
    } catch (const Error& e) {
      throw ChainLoadError("parse-error",
                           "line " + std::to_string(line_no) + ": " + e.what(),
                           line_no, std::nullopt);
    }
    if ((line_no == 1) != parsed.chain_difficulty.has_value())
      throw ChainLoadError(
          "parse-error",
          "line " + std::to_string(line_no) +
              ": chain_difficulty belongs on the genesis line only",
          line_no, std::nullopt);
    if (line_no == 1)
      difficulty = parsed.chain_difficulty;
    blocks.push_back(std::move(parsed.block));
  }
  ChainValidation v = Chain::validate(std::move(blocks), *difficulty);
  if (!v.ok())
    throw ChainLoadError("invalid-chain",
                         "height " + std::to_string(v.failed_height) + ": " +
                             v.failure.to_string(),
                         std::nullopt, v.failed_height);
  return std::move(*v.chain);
}

}  // namespace bloff
