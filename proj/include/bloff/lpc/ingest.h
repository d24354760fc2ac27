#ifndef BLOFF_LPC_INGEST_H_
#define BLOFF_LPC_INGEST_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "bloff/common/bytes.h"
#include "bloff/consensus/mempool.h"
#include "bloff/ledger/transaction.h"

namespace bloff::lpc {

inline constexpr size_t kMaxRecordBytes = 65'536;

struct LogRecord {
  // One log entry exactly as the producer wrote it, minus the terminator.
  Bytes raw;
  std::string source_id;
  uint64_t capture_timestamp = 0;
};

// Strips one trailing "\n" or "\r\n" and nothing else. Throws
// Error("empty-record") or Error("oversize") (over kMaxRecordBytes).
Bytes canonicalize_record(ByteView line);
inline Bytes canonicalize_record(std::string_view line) {
  return canonicalize_record(as_bytes(line));
}

// sha256 of the canonical record: the value anchored and later looked up.
Digest record_digest(ByteView line);

enum class SourceKind { kFile, kDirectoryWatch, kStdin };

struct LogSource {
  SourceKind kind = SourceKind::kFile;
  std::filesystem::path location;
  std::string source_id;
  // Directory watch only: also ingest content already present at open.
  bool from_start = false;
};

// One line read from a source. Lines that cannot become records (blank or
// oversize) come back with |record| empty and |error| set so callers can
// report them instead of silently dropping evidence.
struct IngestItem {
  std::string file;  // "-" for standard input
  uint64_t line = 0;  // 1-based within |file|
  std::optional<LogRecord> record;
  std::string error;
};

using Clock = std::function<uint64_t()>;
uint64_t wall_clock_seconds();

// Splits a byte stream into lines. Lines longer than the record limit are
// not buffered past it; they surface as oversize.
class LineSplitter {
 public:
  struct Line {
    Bytes bytes;  // terminator included when present
    bool oversize = false;
  };

  void feed(ByteView data, std::vector<Line>& out);
  // Emits an unterminated tail, if any.
  void finish(std::vector<Line>& out);
  bool has_partial() const { return !pending_.empty() || discarding_; }

 private:
  Bytes pending_;
  bool discarding_ = false;
};

// Reads records from a LogSource in order. File and stdin sources end at
// EOF, the final unterminated line included. A directory source never ends:
// next() returns nullopt when a poll finds nothing new, and only complete
// lines are returned (a tail waits for its newline).
class LogReader {
 public:
  // Throws Error("unreadable-source") naming the path.
  explicit LogReader(LogSource source, Clock clock = wall_clock_seconds);
  ~LogReader();
  LogReader(const LogReader&) = delete;
  LogReader& operator=(const LogReader&) = delete;

  std::optional<IngestItem> next();
  const LogSource& source() const { return source_; }

 private:
  struct Tracked {
    uint64_t offset = 0;
    uint64_t lines = 0;
    LineSplitter splitter;
  };

  IngestItem make_item(const std::string& file, uint64_t line,
                       LineSplitter::Line l) const;
  void fill_stream();
  void poll_directory();

  LogSource source_;
  Clock clock_;
  int fd_ = -1;
  bool owns_fd_ = false;
  bool eof_ = false;
  uint64_t stream_lines_ = 0;
  LineSplitter stream_splitter_;
  std::map<std::filesystem::path, Tracked> tracked_;
  std::vector<IngestItem> ready_;
  size_t ready_pos_ = 0;
};

// Where built transactions go: a local mempool, a chain file's pending
// set, or a live node.
class SubmitTarget {
 public:
  virtual ~SubmitTarget() = default;
  virtual AddResult submit(const Transaction& tx) = 0;
};

// Hashes |record|, signs an anchor as |key| and submits it. Returns the tx.
// Throws Error("submit-rejected") with the target's reason on refusal.
Transaction anchor_record(const LogRecord& record,
                          const KeyPair& key,
                          SubmitTarget& target);

}  // namespace bloff::lpc

#endif  // BLOFF_LPC_INGEST_H_
