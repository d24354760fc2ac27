#ifndef BLOFF_TESTS_SUPPORT_FIXTURES_H_
#define BLOFF_TESTS_SUPPORT_FIXTURES_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "bloff/consensus/node_state.h"
#include "bloff/ledger/chain.h"

namespace bloff::testing {

inline constexpr uint64_t kGenesisTime = 1'700'000'000;

// Deterministic keypair number |n|.
KeyPair test_key(uint32_t n);

// A small permissioned network: genesis registers |miner|; block 1 (mined
// by |miner|) registers |device| and |stakeholder|.
struct TestNet {
  KeyPair miner = test_key(1);
  KeyPair device = test_key(2);
  KeyPair stakeholder = test_key(3);
  KeyPair outsider = test_key(99);
  uint8_t difficulty;

  explicit TestNet(uint8_t difficulty = 4);

  // Genesis plus the registration block.
  std::vector<Block> base_blocks() const { return base_; }
  Chain base_chain() const;

  // Anchors sha256(line) for each line as |device|.
  std::vector<Transaction> anchors(const std::vector<std::string>& lines,
                                   uint64_t capture_ts) const;

  // Mines |txs| on top of |parent| with |miner|.
  Block mine_on(const Block& parent,
                const std::vector<Transaction>& txs,
                uint64_t timestamp,
                const Registry& registry) const;

  // Base chain plus |n| extra blocks with |per_block| anchors each. Log
  // lines are "log-<block>-<i>".
  std::vector<Block> blocks_with_anchors(size_t n, size_t per_block) const;

 private:
  std::vector<Block> base_;
};

std::string random_line(std::mt19937_64& rng, size_t min_len, size_t max_len);

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view content);

}  // namespace bloff::testing

#endif  // BLOFF_TESTS_SUPPORT_FIXTURES_H_
