#ifndef BLOFF_LEDGER_CHAIN_FILE_H_
#define BLOFF_LEDGER_CHAIN_FILE_H_

#include <optional>
#include <string>
#include <string_view>

#include "bloff/common/error.h"
#include "bloff/ledger/chain.h"
#include "json.hpp"

namespace bloff {

// Chain files are JSON Lines, one block per line, compact with sorted keys.
// Hex is lowercase; integers are decimal. The JSON is a view of the
// canonical bytes: a line is accepted only if it re-serializes to exactly
// the same text, and only hashes recomputed from canonical bytes count.
//
// The genesis line additionally carries "chain_difficulty", the constant
// difficulty every later block header must state.

nlohmann::json tx_to_json(const Transaction& tx);
// Throws Error("bad-json") on missing, extra, or ill-typed fields, or when
// the stored tx_id disagrees with the content.
Transaction tx_from_json(const nlohmann::json& j);

nlohmann::json block_to_json(const Block& block,
                             std::optional<uint8_t> chain_difficulty = {});

// One line without the trailing newline.
std::string block_to_line(const Block& block,
                          std::optional<uint8_t> chain_difficulty = {});

struct ParsedBlockLine {
  Block block;
  std::optional<uint8_t> chain_difficulty;
};
ParsedBlockLine block_from_line(std::string_view line);

// Raised while loading a chain. |line| is 1-based and set for syntax
// errors; |height| is set for validation failures.
class ChainLoadError : public Error {
 public:
  ChainLoadError(std::string code,
                 const std::string& detail,
                 std::optional<uint64_t> line,
                 std::optional<uint64_t> height)
      : Error(std::move(code), detail), line_(line), height_(height) {}

  std::optional<uint64_t> line() const { return line_; }
  std::optional<uint64_t> height() const { return height_; }

 private:
  std::optional<uint64_t> line_;
  std::optional<uint64_t> height_;
};

std::string serialize_chain(const Chain& chain);
std::string serialize_blocks(std::span<const Block> blocks, uint8_t difficulty);

// Parses and fully validates a chain file. Every line, the last included,
// must end with '\n'.
Chain parse_chain(std::string_view text);

}  // namespace bloff

#endif  // BLOFF_LEDGER_CHAIN_FILE_H_
