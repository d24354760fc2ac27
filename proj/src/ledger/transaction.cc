#include "bloff/ledger/transaction.h"

#include "bloff/common/error.h"

namespace bloff {

std::string_view reject_name(Reject r) {
  switch (r) {
    case Reject::kNone: return "ok";
    case Reject::kBadVersion: return "bad-version";
    case Reject::kBadSignature: return "bad-signature";
    case Reject::kBadLength: return "bad-length";
    case Reject::kBadRoleTag: return "bad-role-tag";
    case Reject::kBadLinkage: return "bad-linkage";
    case Reject::kEmptyBlock: return "empty-block";
    case Reject::kMerkleMismatch: return "merkle-mismatch";
    case Reject::kBadDifficulty: return "bad-difficulty";
    case Reject::kInsufficientWork: return "insufficient-work";
    case Reject::kTimestampRegression: return "timestamp-regression";
    case Reject::kDuplicateTx: return "duplicate-tx";
    case Reject::kUnregisteredSubmitter: return "unregistered-submitter";
    case Reject::kRoleNotPermitted: return "role-not-permitted";
    case Reject::kAlreadyRegistered: return "already-registered";
    case Reject::kMissingSeal: return "missing-seal";
    case Reject::kUnregisteredMiner: return "unregistered-miner";
    case Reject::kBadSeal: return "bad-seal";
    case Reject::kBadGenesis: return "bad-genesis";
  }
  return "unknown";
}

std::string Validity::to_string() const {
  std::string out(reject_name(reason_));
  if (!detail_.empty())
    out += " (" + detail_ + ")";
  return out;
}

bool is_known_role(Role role) {
  return role == Role::kCspMiner || role == Role::kDevice ||
         role == Role::kStakeholder;
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kCspMiner: return "csp-miner";
    case Role::kDevice: return "device";
    case Role::kStakeholder: return "stakeholder";
  }
  return "unknown";
}

std::optional<Role> parse_role(std::string_view name) {
  for (Role r : {Role::kCspMiner, Role::kDevice, Role::kStakeholder})
    if (role_name(r) == name)
      return r;
  return std::nullopt;
}

Bytes canonical_tx_bytes(const Transaction& tx, bool with_signature) {
  ByteWriter w;
  w.u8(tx.version);
  w.u8(static_cast<uint8_t>(tx.kind()));
  if (const AnchorPayload* a = tx.anchor()) {
    if (a->source_id.size() > kMaxSourceIdBytes)
      throw Error("source-id-too-long",
                  std::to_string(a->source_id.size()) + " bytes");
    w.bytes(a->log_hash.span());
    w.u8(static_cast<uint8_t>(a->source_id.size()));
    w.bytes(as_bytes(a->source_id));
    w.u64be(a->capture_timestamp);
  } else {
    const RegistrationPayload& r = *tx.registration();
    w.bytes(r.new_node_pubkey.span());
    w.u8(static_cast<uint8_t>(r.role));
  }
  w.bytes(tx.submitter.span());
  if (with_signature)
    w.bytes(tx.signature.span());
  return std::move(w).take();
}

Transaction decode_tx(ByteReader& reader) {
  Transaction tx;
  tx.version = reader.u8();
  uint8_t kind = reader.u8();
  if (kind == static_cast<uint8_t>(TxKind::kAnchor)) {
    AnchorPayload a;
    a.log_hash = reader.fixed<Digest>();
    uint8_t len = reader.u8();
    a.source_id = to_string(reader.take(len));
    a.capture_timestamp = reader.u64be();
    tx.payload = std::move(a);
  } else if (kind == static_cast<uint8_t>(TxKind::kRegistration)) {
    RegistrationPayload r;
    r.new_node_pubkey = reader.fixed<PublicKey>();
    r.role = static_cast<Role>(reader.u8());
    tx.payload = r;
  } else {
    throw Error("bad-kind", "unknown transaction kind " + std::to_string(kind));
  }
  tx.submitter = reader.fixed<PublicKey>();
  tx.signature = reader.fixed<Signature>();
  return tx;
}

Transaction decode_tx(ByteView bytes) {
  ByteReader reader(bytes);
  Transaction tx = decode_tx(reader);
  reader.expect_done();
  return tx;
}

Digest Transaction::id() const {
  return sha256_digest(canonical_tx_bytes(*this));
}

Transaction build_anchor_tx(const Digest& log_hash,
                            std::string source_id,
                            uint64_t capture_timestamp,
                            const KeyPair& keys) {
  Transaction tx;
  tx.payload = AnchorPayload{log_hash, std::move(source_id), capture_timestamp};
  tx.submitter = keys.public_key;
  tx.signature = sign(keys.secret_key, tx_preamble(tx));
  return tx;
}

Transaction build_registration_tx(const PublicKey& new_node,
                                  Role role,
                                  const KeyPair& sponsor) {
  Transaction tx;
  tx.payload = RegistrationPayload{new_node, role};
  tx.submitter = sponsor.public_key;
  tx.signature = sign(sponsor.secret_key, tx_preamble(tx));
  return tx;
}

Validity verify_tx(const Transaction& tx) {
  if (tx.version != kTxVersion)
    return Validity::fail(Reject::kBadVersion,
                          "version " + std::to_string(tx.version));
  if (const AnchorPayload* a = tx.anchor()) {
    if (a->source_id.size() > kMaxSourceIdBytes)
      return Validity::fail(Reject::kBadLength, "source_id too long");
  } else if (!is_known_role(tx.registration()->role)) {
    return Validity::fail(
        Reject::kBadRoleTag,
        "role tag " + std::to_string(static_cast<int>(tx.registration()->role)));
  }
  if (!verify_signature(tx.submitter, tx_preamble(tx), tx.signature))
    return Validity::fail(Reject::kBadSignature);
  return {};
}

}  // namespace bloff
