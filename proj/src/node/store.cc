#include "bloff/node/store.h"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "bloff/common/error.h"

namespace bloff::node {
namespace {

namespace fs = std::filesystem;

Error io_error(const std::string& what, const fs::path& p) {
  return Error("io-error", what + " " + p.string() + ": " + std::strerror(errno));
}

std::optional<std::string> read_whole(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    return std::nullopt;
  std::ostringstream s;
  s << in.rdbuf();
  return std::move(s).str();
}

void write_all(int fd, std::string_view data, const fs::path& p) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR)
        continue;
      throw io_error("write", p);
    }
    data.remove_prefix(static_cast<size_t>(n));
  }
}

void sync_dir(const fs::path& dir) {
  int fd = ::open(dir.empty() ? "." : dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

// Calls |f| on each newline-terminated or trailing line with its number.
template <typename F>
void for_each_line(std::string_view text, F f) {
  uint64_t n = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++n;
    if (!line.empty())
      f(n, line);
  }
}

void append_line(const fs::path& file, const std::string& line) {
  int fd = ::open(file.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0)
    throw io_error("open", file);
  struct stat st {};
  off_t before = ::fstat(fd, &st) == 0 ? st.st_size : -1;
  try {
    write_all(fd, line + "\n", file);
    if (::fsync(fd) != 0)
      throw io_error("fsync", file);
  } catch (...) {
    // Never leave a torn line behind.
    if (before >= 0 && ::ftruncate(fd, before) == 0)
      ::fsync(fd);
    ::close(fd);
    throw;
  }
  ::close(fd);
}

}  // namespace

StorePaths store_paths(const fs::path& chain_file) {
  fs::path dir = chain_file.parent_path();
  return {chain_file, dir / "forks.jsonl", dir / "mempool.jsonl"};
}

Chain load_chain(const fs::path& file) {
  auto text = read_whole(file);
  if (!text)
    throw Error("unreadable-chain", file.string());
  return parse_chain(*text);
}

void atomic_write(const fs::path& file, std::string_view content) {
  fs::path tmp = file;
  tmp += ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0)
    throw io_error("open", tmp);
  try {
    write_all(fd, content, tmp);
    if (::fsync(fd) != 0)
      throw io_error("fsync", tmp);
  } catch (...) {
    ::close(fd);
    ::unlink(tmp.c_str());
    throw;
  }
  ::close(fd);
  if (::rename(tmp.c_str(), file.c_str()) != 0) {
    Error e = io_error("rename", file);
    ::unlink(tmp.c_str());
    throw e;
  }
  sync_dir(file.parent_path());
}

BlockStore BlockStore::create(const fs::path& file, const Chain& chain) {
  if (fs::exists(file))
    throw Error("chain-exists", file.string());
  BlockStore s(store_paths(file));
  atomic_write(file, serialize_chain(chain));
  s.chain_ = chain;
  return s;
}

BlockStore BlockStore::open(const fs::path& file) {
  BlockStore s(store_paths(file));
  s.chain_ = load_chain(file);
  for (const Block& b : s.load_forks())
    s.forks_written_.insert(b.hash());
  return s;
}

Validity BlockStore::append(const Block& block) {
  Chain next = *chain_;
  Validity v = next.extend(block);
  if (!v)
    return v;
  append_line(paths_.chain, block_to_line(block));
  chain_ = std::move(next);
  return v;
}

void BlockStore::sync_to(const Chain& chain) {
  if (chain.tip_hash() == chain_->tip_hash())
    return;
  if (chain.genesis_hash() != chain_->genesis_hash())
    throw Error("incompatible-genesis", "refusing to replace the stored chain");
  const Chain& old = *chain_;
  bool extends = chain.length() > old.length() &&
                 chain.block(old.tip_height()).hash() == old.tip_hash();
  if (extends) {
    std::string lines;
    for (uint64_t h = old.length(); h < chain.length(); ++h)
      lines += block_to_line(chain.block(h)) + "\n";
    lines.pop_back();
    append_line(paths_.chain, lines);
    chain_ = chain;
    return;
  }
  uint64_t fork = 0;
  while (fork < std::min(old.length(), chain.length()) &&
         old.block(fork).hash() == chain.block(fork).hash())
    ++fork;
  std::vector<Block> dropped(old.blocks().begin() + fork, old.blocks().end());
  atomic_write(paths_.chain, serialize_chain(chain));
  chain_ = chain;
  for (const Block& b : dropped)
    record_fork(b);
}

void BlockStore::record_fork(const Block& block) {
  Digest h = block.hash();
  if (forks_written_.contains(h))
    return;
  append_line(paths_.forks, block_to_line(block));
  forks_written_.insert(h);
}

std::vector<Block> BlockStore::load_forks() const {
  std::vector<Block> out;
  auto text = read_whole(paths_.forks);
  if (!text)
    return out;
  for_each_line(*text, [&](uint64_t, std::string_view line) {
    try {
      out.push_back(block_from_line(line).block);
    } catch (const Error&) {
    }
  });
  return out;
}

std::vector<Transaction> BlockStore::load_mempool() const {
  std::vector<Transaction> out;
  auto text = read_whole(paths_.mempool);
  if (!text)
    return out;
  for_each_line(*text, [&](uint64_t n, std::string_view line) {
    try {
      out.push_back(tx_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw Error("bad-mempool", paths_.mempool.string() + " line " +
                                     std::to_string(n) + ": " + e.what());
    }
  });
  return out;
}

void BlockStore::save_mempool(std::span<const Transaction> txs) const {
  std::string text;
  for (const Transaction& tx : txs)
    text += tx_to_json(tx).dump() + "\n";
  atomic_write(paths_.mempool, text);
}

void BlockStore::append_mempool(const Transaction& tx) const {
  append_line(paths_.mempool, tx_to_json(tx).dump());
}

}  // namespace bloff::node
