#ifndef BLOFF_NODE_STORE_H_
#define BLOFF_NODE_STORE_H_

#include <filesystem>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "bloff/ledger/chain_file.h"

namespace bloff::node {

// Sidecars live next to the chain file: forks.jsonl holds valid blocks that
// lost fork choice, mempool.jsonl the pending transactions of a file-mode
// chain (one tx JSON per line).
struct StorePaths {
  std::filesystem::path chain;
  std::filesystem::path forks;
  std::filesystem::path mempool;
};
StorePaths store_paths(const std::filesystem::path& chain_file);

// Parses and fully re-validates a chain file. Throws ChainLoadError with the
// line (syntax) or height (rule) at fault, or Error("unreadable-chain").
Chain load_chain(const std::filesystem::path& file);

// Append-only chain file holding exactly the current best chain. Every
// write is flushed to disk before the call returns; a failed write leaves
// the file and the in-memory chain as they were.
class BlockStore {
 public:
  // Writes a new chain file. Throws Error("chain-exists") rather than
  // overwrite one.
  static BlockStore create(const std::filesystem::path& file,
                           const Chain& chain);
  static BlockStore open(const std::filesystem::path& file);

  const Chain& chain() const { return *chain_; }
  const StorePaths& paths() const { return paths_; }

  // Validates |block| against the tip, then appends one line and syncs.
  // Returns the failed rule without writing when invalid; throws
  // Error("io-error") when the disk write fails.
  Validity append(const Block& block);

  // Brings the file to |chain|, which must share the stored genesis. A
  // plain extension is appended; anything else is a reorg, written as a
  // whole new file that atomically replaces the old one. Blocks dropped by
  // a reorg are kept in forks.jsonl.
  void sync_to(const Chain& chain);

  // Appends |block| to forks.jsonl unless already there.
  void record_fork(const Block& block);
  // Malformed lines are skipped.
  std::vector<Block> load_forks() const;

  // Throws Error("bad-mempool") naming the line.
  std::vector<Transaction> load_mempool() const;
  // Atomically replaces mempool.jsonl.
  void save_mempool(std::span<const Transaction> txs) const;
  void append_mempool(const Transaction& tx) const;

 private:
  explicit BlockStore(StorePaths paths) : paths_(std::move(paths)) {}

  StorePaths paths_;
  std::optional<Chain> chain_;
  std::unordered_set<Digest, FixedBytesHash> forks_written_;
};

// Writes |content| to a temp file beside |file|, syncs it and renames it
// over |file|.
void atomic_write(const std::filesystem::path& file, std::string_view content);

}  // namespace bloff::node

#endif  // BLOFF_NODE_STORE_H_
