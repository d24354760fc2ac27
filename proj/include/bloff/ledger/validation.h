#ifndef BLOFF_LEDGER_VALIDATION_H_
#define BLOFF_LEDGER_VALIDATION_H_

#include <string>
#include <string_view>

namespace bloff {

enum class Reject {
  kNone,
  // Transaction level.
  kBadVersion,
  kBadSignature,
  kBadLength,
  kBadRoleTag,
  // Block level.
  kBadLinkage,
  kEmptyBlock,
  kMerkleMismatch,
  kBadDifficulty,
  kInsufficientWork,
  kTimestampRegression,
  kDuplicateTx,
  kUnregisteredSubmitter,
  kRoleNotPermitted,
  kAlreadyRegistered,
  kMissingSeal,
  kUnregisteredMiner,
  kBadSeal,
  kBadGenesis,
};

// Kebab-case name used in reports, e.g. "merkle-mismatch".
std::string_view reject_name(Reject r);

// Outcome of a validation check. Validation never throws; the first failing
// rule is reported here.
class Validity {
 public:
  Validity() = default;
  static Validity fail(Reject reason, std::string detail = {}) {
    Validity v;
    v.reason_ = reason;
    v.detail_ = std::move(detail);
    return v;
  }

  bool ok() const { return reason_ == Reject::kNone; }
  explicit operator bool() const { return ok(); }
  Reject reason() const { return reason_; }
  const std::string& detail() const { return detail_; }
  std::string to_string() const;

 private:
  Reject reason_ = Reject::kNone;
  std::string detail_;
};

}  // namespace bloff

#endif  // BLOFF_LEDGER_VALIDATION_H_
