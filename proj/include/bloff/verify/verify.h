#ifndef BLOFF_VERIFY_VERIFY_H_
#define BLOFF_VERIFY_VERIFY_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bloff/ledger/chain.h"
#include "bloff/ledger/merkle.h"
#include "json.hpp"

namespace bloff::verify {

struct Match {
  uint64_t height = 0;
  Digest tx_id;
  PublicKey submitter;
  std::string source_id;
  uint64_t capture_timestamp = 0;
  // best height - match height + 1
  uint64_t confirmations = 0;

  friend bool operator==(const Match&, const Match&) = default;
};

enum class Outcome { kAccepted, kRejected };
enum class RejectReason { kNone, kNotFound, kInsufficientConfirmations };

std::string_view reject_reason_name(RejectReason r);

struct Verdict {
  Outcome outcome = Outcome::kRejected;
  Digest computed_hash;
  // Accepted only: matches deep enough, in chain order.
  std::vector<Match> matches;
  RejectReason reason = RejectReason::kNone;

  bool accepted() const { return outcome == Outcome::kAccepted; }
  nlohmann::json to_json() const;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct VerifyOptions {
  // Must be >= 1.
  uint64_t min_confirmations = 1;
  // When set, only anchors signed by this key count.
  std::optional<PublicKey> expect_submitter;
};

// The presented log is canonicalized with the ingestion rule, hashed, and
// looked up in the anchor index. Throws Error("empty-record") for an empty
// log and Error("bad-min-confirmations") for a minimum of 0.
Verdict verify_log(ByteView log, const Chain& chain,
                   const VerifyOptions& options = {});

// Same contract, computed without the chain's index: a fresh scan over
// every block. Shares no state with verify_log.
Verdict court_recheck(ByteView log, const Chain& chain,
                      const VerifyOptions& options = {});

struct InclusionProof {
  Digest tx_id;
  uint64_t height = 0;
  Digest block_hash;
  Digest merkle_root;
  std::vector<MerkleStep> path;

  nlohmann::json to_json() const;
  // Throws Error("bad-proof") on malformed JSON.
  static InclusionProof from_json(const nlohmann::json& j);

  friend bool operator==(const InclusionProof&, const InclusionProof&) =
      default;
};

// Throws Error("no-such-block") or Error("not-in-block").
InclusionProof make_inclusion_proof(const Chain& chain,
                                    uint64_t height,
                                    const Digest& tx_id);

// Pure: |header| must hash to the proof's block_hash, and the tx leaf
// folded along the path must give its merkle_root.
bool verify_inclusion_proof(const InclusionProof& proof,
                            const BlockHeader& header);

// Signed hand-over record: |holder| received the log with |log_hash| at
// |received_timestamp|. Kept off-chain.
struct CustodyAttestation {
  Digest log_hash;
  PublicKey holder;
  uint64_t received_timestamp = 0;
  Signature signature;

  friend bool operator==(const CustodyAttestation&,
                         const CustodyAttestation&) = default;
};

// log_hash(32) | holder(32) | received_timestamp(8, BE)
Bytes attestation_message(const Digest& log_hash,
                          const PublicKey& holder,
                          uint64_t received_timestamp);
CustodyAttestation make_attestation(const Digest& log_hash,
                                    uint64_t received_timestamp,
                                    const KeyPair& holder);
bool attestation_signature_ok(const CustodyAttestation& a);

// JSON Lines with hex fields:
//   {"holder":..,"log_hash":..,"received_timestamp":..,"signature":..}
std::string attestation_to_line(const CustodyAttestation& a);
// Throws Error("bad-attestation").
CustodyAttestation attestation_from_line(std::string_view line);

// One line of an attestation file: parsed, or the parse error.
struct AttestationEntry {
  std::optional<CustodyAttestation> attestation;
  std::string error;
};
// Blank lines are skipped; every other line becomes one entry.
std::vector<AttestationEntry> parse_attestation_file(std::string_view text);

struct HopResult {
  bool pass = false;
  // "malformed: ...", "digest-mismatch", "bad-signature",
  // "timestamp-regression"; empty on pass.
  std::string reason;
  std::optional<CustodyAttestation> attestation;
};

struct CustodyReport {
  std::vector<HopResult> hops;
  Verdict verdict;
  // Every hop passes, there is at least one hop, and the log is accepted.
  bool pass = false;

  nlohmann::json to_json() const;
};

CustodyReport verify_custody(ByteView log,
                             std::span<const AttestationEntry> attestations,
                             const Chain& chain,
                             const VerifyOptions& options = {});

}  // namespace bloff::verify

#endif  // BLOFF_VERIFY_VERIFY_H_
