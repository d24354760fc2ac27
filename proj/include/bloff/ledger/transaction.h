#ifndef BLOFF_LEDGER_TRANSACTION_H_
#define BLOFF_LEDGER_TRANSACTION_H_

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "bloff/common/bytes.h"
#include "bloff/crypto/crypto.h"
#include "bloff/ledger/validation.h"

namespace bloff {

inline constexpr uint8_t kTxVersion = 1;
inline constexpr size_t kMaxSourceIdBytes = 64;

enum class TxKind : uint8_t {
  kAnchor = 0x01,
  kRegistration = 0x02,
};

// Stored as the raw tag byte so that decoding an out-of-range tag still
// produces a value verify_tx can reject with bad-role-tag.
enum class Role : uint8_t {
  kCspMiner = 0x01,
  kDevice = 0x02,
  kStakeholder = 0x03,
};

bool is_known_role(Role role);
std::string_view role_name(Role role);
std::optional<Role> parse_role(std::string_view name);

// Commits a log digest; the log itself never leaves the producer.
struct AnchorPayload {
  Digest log_hash;
  std::string source_id;
  uint64_t capture_timestamp = 0;

  friend bool operator==(const AnchorPayload&, const AnchorPayload&) = default;
};

// Admits a new node. Sponsored by a registered csp-miner, except in genesis
// where authorities register themselves.
struct RegistrationPayload {
  PublicKey new_node_pubkey;
  Role role = Role::kDevice;

  friend bool operator==(const RegistrationPayload&,
                         const RegistrationPayload&) = default;
};

struct Transaction {
  uint8_t version = kTxVersion;
  std::variant<AnchorPayload, RegistrationPayload> payload;
  PublicKey submitter;
  Signature signature;

  TxKind kind() const {
    return std::holds_alternative<AnchorPayload>(payload)
               ? TxKind::kAnchor
               : TxKind::kRegistration;
  }
  const AnchorPayload* anchor() const {
    return std::get_if<AnchorPayload>(&payload);
  }
  const RegistrationPayload* registration() const {
    return std::get_if<RegistrationPayload>(&payload);
  }

  // sha256 of the full canonical bytes, signature included.
  Digest id() const;

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

// version | kind | payload | submitter_pubkey [| signature]
// anchor payload: log_hash(32) | len(1) | source_id | capture_ts(8, BE)
// registration payload: new_node_pubkey(32) | role(1)
// Throws Error("source-id-too-long") if source_id exceeds 64 bytes.
Bytes canonical_tx_bytes(const Transaction& tx, bool with_signature = true);
inline Bytes tx_preamble(const Transaction& tx) {
  return canonical_tx_bytes(tx, false);
}

// Reads one signed transaction from |reader|. Throws Error on truncation or
// an unknown kind tag.
Transaction decode_tx(ByteReader& reader);
// Decodes a whole buffer; trailing bytes are an error.
Transaction decode_tx(ByteView bytes);

// Signs an anchor of |log_hash| as |keys|.
Transaction build_anchor_tx(const Digest& log_hash,
                            std::string source_id,
                            uint64_t capture_timestamp,
                            const KeyPair& keys);

// Signs a registration of |new_node| with |role|, sponsored by |sponsor|.
Transaction build_registration_tx(const PublicKey& new_node,
                                  Role role,
                                  const KeyPair& sponsor);

// Context-free checks: version, lengths, role tag, signature. Registration
// state is checked at block level.
Validity verify_tx(const Transaction& tx);

}  // namespace bloff

#endif  // BLOFF_LEDGER_TRANSACTION_H_
