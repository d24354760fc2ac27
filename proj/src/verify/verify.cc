#include "bloff/verify/verify.h"

#include <algorithm>

#include "bloff/common/error.h"
#include "bloff/lpc/ingest.h"

namespace bloff::verify {
namespace {

using nlohmann::json;

Digest presented_hash(ByteView log) {
  return sha256_digest(lpc::canonicalize_record(log));
}

void check_min(const VerifyOptions& options) {
  if (options.min_confirmations < 1)
    throw Error("bad-min-confirmations", "must be at least 1");
}

bool submitter_ok(const VerifyOptions& options, const PublicKey& submitter) {
  return !options.expect_submitter || *options.expect_submitter == submitter;
}

// Splits candidate anchors into an Accepted or Rejected verdict.
Verdict decide(Digest hash, std::vector<Match> found, uint64_t min) {
  Verdict v;
  v.computed_hash = hash;
  for (Match& m : found)
    if (m.confirmations >= min)
      v.matches.push_back(std::move(m));
  if (!v.matches.empty()) {
    v.outcome = Outcome::kAccepted;
  } else {
    v.reason = found.empty() ? RejectReason::kNotFound
                             : RejectReason::kInsufficientConfirmations;
  }
  return v;
}

Match match_at(const Block& block, uint32_t index, uint64_t height,
               uint64_t tip_height) {
  const Transaction& tx = block.txs[index];
  const AnchorPayload& a = *tx.anchor();
  return {height, tx.id(), tx.submitter, a.source_id, a.capture_timestamp,
          tip_height - height + 1};
}

template <typename Fixed>
Fixed hex_field(const json& j, const char* key, const char* code) {
  if (!j.contains(key) || !j[key].is_string())
    throw Error(code, std::string("missing or non-string ") + key);
  auto v = Fixed::from_hex(j[key].get<std::string>());
  if (!v)
    throw Error(code, std::string("bad hex in ") + key);
  return *v;
}

uint64_t u64_field(const json& j, const char* key, const char* code) {
  if (!j.contains(key) || !j[key].is_number_unsigned())
    throw Error(code, std::string("missing or non-integer ") + key);
  return j[key].get<uint64_t>();
}

}  // namespace

std::string_view reject_reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::kNone: return "";
    case RejectReason::kNotFound: return "not-found";
    case RejectReason::kInsufficientConfirmations:
      return "insufficient-confirmations";
  }
  return "";
}

json Verdict::to_json() const {
  json j;
  j["outcome"] = accepted() ? "accepted" : "rejected";
  j["computed_hash"] = computed_hash.hex();
  if (accepted()) {
    j["matches"] = json::array();
    for (const Match& m : matches) {
      j["matches"].push_back({{"height", m.height},
                              {"tx_id", m.tx_id.hex()},
                              {"submitter", m.submitter.hex()},
                              {"source_id", m.source_id},
                              {"capture_timestamp", m.capture_timestamp},
                              {"confirmations", m.confirmations}});
    }
  } else {
    j["reason"] = reject_reason_name(reason);
  }
  return j;
}

Verdict verify_log(ByteView log, const Chain& chain,
                   const VerifyOptions& options) {
  check_min(options);
  Digest hash = presented_hash(log);
  std::vector<Match> found;
  for (const AnchorLocation& loc : chain.find_anchor(hash)) {
    const Block& b = chain.block(loc.height);
    if (!submitter_ok(options, b.txs[loc.tx_index].submitter))
      continue;
    found.push_back(match_at(b, loc.tx_index, loc.height, chain.tip_height()));
  }
  return decide(hash, std::move(found), options.min_confirmations);
}

Verdict court_recheck(ByteView log, const Chain& chain,
                      const VerifyOptions& options) {
  check_min(options);
  Digest hash = presented_hash(log);
  const std::vector<Block>& blocks = chain.blocks();
  std::vector<Match> found;
  for (uint64_t h = 0; h < blocks.size(); ++h) {
    const Block& b = blocks[h];
    for (uint32_t i = 0; i < b.txs.size(); ++i) {
      const AnchorPayload* a = b.txs[i].anchor();
      if (a && a->log_hash == hash && submitter_ok(options, b.txs[i].submitter))
        found.push_back(match_at(b, i, h, blocks.size() - 1));
    }
  }
  return decide(hash, std::move(found), options.min_confirmations);
}

json InclusionProof::to_json() const {
  json steps = json::array();
  for (const MerkleStep& s : path)
    steps.push_back({{"side", s.side == MerkleStep::Side::kLeft ? "left"
                                                                 : "right"},
                     {"digest", s.sibling.hex()}});
  return {{"tx_id", tx_id.hex()},
          {"height", height},
          {"block_hash", block_hash.hex()},
          {"merkle_root", merkle_root.hex()},
          {"path", steps}};
}

InclusionProof InclusionProof::from_json(const json& j) {
  if (!j.is_object())
    throw Error("bad-proof", "not an object");
  InclusionProof p;
  p.tx_id = hex_field<Digest>(j, "tx_id", "bad-proof");
  p.height = u64_field(j, "height", "bad-proof");
  p.block_hash = hex_field<Digest>(j, "block_hash", "bad-proof");
  p.merkle_root = hex_field<Digest>(j, "merkle_root", "bad-proof");
  if (!j.contains("path") || !j["path"].is_array())
    throw Error("bad-proof", "missing path");
  for (const json& s : j["path"]) {
    if (!s.is_object() || !s.contains("side") || !s["side"].is_string())
      throw Error("bad-proof", "bad path step");
    std::string side = s["side"].get<std::string>();
    if (side != "left" && side != "right")
      throw Error("bad-proof", "side must be left or right");
    p.path.push_back({side == "left" ? MerkleStep::Side::kLeft
                                     : MerkleStep::Side::kRight,
                      hex_field<Digest>(s, "digest", "bad-proof")});
  }
  return p;
}

InclusionProof make_inclusion_proof(const Chain& chain, uint64_t height,
                                    const Digest& tx_id) {
  if (height > chain.tip_height())
    throw Error("no-such-block", "height " + std::to_string(height));
  const Block& b = chain.block(height);
  std::vector<Digest> ids = b.tx_ids();
  auto it = std::find(ids.begin(), ids.end(), tx_id);
  if (it == ids.end())
    throw Error("not-in-block",
                tx_id.hex() + " at height " + std::to_string(height));
  return {tx_id, height, b.hash(), b.header.merkle_root,
          merkle_path(ids, static_cast<size_t>(it - ids.begin()))};
}

bool verify_inclusion_proof(const InclusionProof& proof,
                            const BlockHeader& header) {
  return proof.block_hash == block_hash(header) &&
         proof.merkle_root == header.merkle_root &&
         fold_merkle_path(merkle_leaf(proof.tx_id), proof.path) ==
             header.merkle_root;
}

Bytes attestation_message(const Digest& log_hash, const PublicKey& holder,
                          uint64_t received_timestamp) {
  ByteWriter w;
  w.bytes(log_hash.span());
  w.bytes(holder.span());
  w.u64be(received_timestamp);
  return std::move(w).take();
}

CustodyAttestation make_attestation(const Digest& log_hash,
                                    uint64_t received_timestamp,
                                    const KeyPair& holder) {
  Bytes msg =
      attestation_message(log_hash, holder.public_key, received_timestamp);
  return {log_hash, holder.public_key, received_timestamp,
          sign(holder.secret_key, msg)};
}

bool attestation_signature_ok(const CustodyAttestation& a) {
  return verify_signature(
      a.holder, attestation_message(a.log_hash, a.holder, a.received_timestamp),
      a.signature);
}

std::string attestation_to_line(const CustodyAttestation& a) {
  json j = {{"log_hash", a.log_hash.hex()},
            {"holder", a.holder.hex()},
            {"received_timestamp", a.received_timestamp},
            {"signature", a.signature.hex()}};
  return j.dump();
}

CustodyAttestation attestation_from_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error("bad-attestation", "not a JSON object");
  if (j.size() != 4)
    throw Error("bad-attestation", "expected exactly 4 fields");
  CustodyAttestation a;
  a.log_hash = hex_field<Digest>(j, "log_hash", "bad-attestation");
  a.holder = hex_field<PublicKey>(j, "holder", "bad-attestation");
  a.received_timestamp = u64_field(j, "received_timestamp", "bad-attestation");
  a.signature = hex_field<Signature>(j, "signature", "bad-attestation");
  return a;
}

std::vector<AttestationEntry> parse_attestation_file(std::string_view text) {
  std::vector<AttestationEntry> out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos)
      continue;
    AttestationEntry e;
    try {
      e.attestation = attestation_from_line(line);
    } catch (const Error& err) {
      e.error = err.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

json CustodyReport::to_json() const {
  json hop_list = json::array();
  for (size_t i = 0; i < hops.size(); ++i) {
    json h = {{"hop", i + 1}, {"pass", hops[i].pass}};
    if (!hops[i].reason.empty())
      h["reason"] = hops[i].reason;
    if (hops[i].attestation) {
      h["holder"] = hops[i].attestation->holder.hex();
      h["received_timestamp"] = hops[i].attestation->received_timestamp;
    }
    hop_list.push_back(std::move(h));
  }
  return {{"pass", pass}, {"hops", hop_list}, {"verdict", verdict.to_json()}};
}

CustodyReport verify_custody(ByteView log,
                             std::span<const AttestationEntry> attestations,
                             const Chain& chain,
                             const VerifyOptions& options) {
  CustodyReport r;
  r.verdict = verify_log(log, chain, options);
  const Digest& hash = r.verdict.computed_hash;
  std::optional<uint64_t> last_ts;
  bool all = !attestations.empty();
  for (const AttestationEntry& e : attestations) {
    HopResult hop;
    hop.attestation = e.attestation;
    if (!e.attestation) {
      hop.reason = "malformed: " + e.error;
    } else {
      const CustodyAttestation& a = *e.attestation;
      if (a.log_hash != hash)
        hop.reason = "digest-mismatch";
      else if (!attestation_signature_ok(a))
        hop.reason = "bad-signature";
      else if (last_ts && a.received_timestamp < *last_ts)
        hop.reason = "timestamp-regression";
      last_ts = a.received_timestamp;
    }
    hop.pass = hop.reason.empty();
    all = all && hop.pass;
    r.hops.push_back(std::move(hop));
  }
  r.pass = all && r.verdict.accepted();
  return r;
}

}  // namespace bloff::verify
