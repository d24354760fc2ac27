#ifndef BLOFF_COMMON_ERROR_H_
#define BLOFF_COMMON_ERROR_H_

#include <stdexcept>
#include <string>

namespace bloff {

// Precondition and I/O failures. |code| is a stable kebab-case tag
// ("empty-record", "no-work", ...) that tests and the CLI match on;
// the message adds human detail.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string code, const std::string& detail = {})
      : std::runtime_error(detail.empty() ? code : code + ": " + detail),
        code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

}  // namespace bloff

#endif  // BLOFF_COMMON_ERROR_H_
