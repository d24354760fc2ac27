#include "support/fixtures.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bloff/consensus/miner.h"
#include "bloff/ledger/merkle.h"

namespace bloff::testing {

KeyPair test_key(uint32_t n) {
  Digest seed = sha256_digest("bloff-test-key-" + std::to_string(n));
  return generate_keypair(seed.span());
}

TestNet::TestNet(uint8_t difficulty) : difficulty(difficulty) {
  base_.push_back(make_genesis(std::vector<KeyPair>{miner}, kGenesisTime));
  Registry reg{{miner.public_key, Role::kCspMiner}};
  std::vector<Transaction> regs = {
      build_registration_tx(device.public_key, Role::kDevice, miner),
      build_registration_tx(stakeholder.public_key, Role::kStakeholder, miner),
  };
  base_.push_back(mine_on(base_[0], regs, kGenesisTime + 10, reg));
}

Chain TestNet::base_chain() const {
  ChainValidation v = Chain::validate(base_, difficulty);
  if (!v.ok())
    throw std::runtime_error("fixture chain invalid: " + v.failure.to_string());
  return std::move(*v.chain);
}

std::vector<Transaction> TestNet::anchors(const std::vector<std::string>& lines,
                                          uint64_t capture_ts) const {
  std::vector<Transaction> out;
  for (const std::string& line : lines)
    out.push_back(build_anchor_tx(sha256_digest(line), "sensor-1", capture_ts,
                                  device));
  return out;
}

Block TestNet::mine_on(const Block& parent,
                       const std::vector<Transaction>& txs,
                       uint64_t timestamp,
                       const Registry& registry) const {
  Mempool pool;
  for (const Transaction& tx : txs)
    pool.add(tx);
  return mine_block(pool, parent.header, difficulty, miner, timestamp,
                    registry, nullptr, txs.size());
}

std::vector<Block> TestNet::blocks_with_anchors(size_t n,
                                                size_t per_block) const {
  Chain chain = base_chain();
  for (size_t b = 0; b < n; ++b) {
    std::vector<std::string> lines;
    for (size_t i = 0; i < per_block; ++i)
      lines.push_back("log-" + std::to_string(b) + "-" + std::to_string(i));
    uint64_t ts = kGenesisTime + 100 + 10 * b;
    Block block = mine_on(chain.tip(), anchors(lines, ts), ts,
                          chain.registered_nodes());
    Validity v = chain.extend(block);
    if (!v)
      throw std::runtime_error("fixture block invalid: " + v.to_string());
  }
  return chain.blocks();
}

std::string random_line(std::mt19937_64& rng, size_t min_len, size_t max_len) {
  std::uniform_int_distribution<size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> ch(0x20, 0x7e);
  std::string s(len(rng), ' ');
  for (char& c : s)
    c = static_cast<char>(ch(rng));
  return s;
}

TempDir::TempDir() {
  static int counter = 0;
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("bloff-test-" + std::to_string(rd()) + "-" +
           std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, std::string_view content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace bloff::testing
