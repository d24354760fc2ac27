#include "bloff/lpc/ingest.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <fstream>

#include "bloff/common/error.h"

namespace bloff::lpc {

namespace fs = std::filesystem;

Bytes canonicalize_record(ByteView line) {
  size_t n = line.size();
  if (n > 0 && line[n - 1] == '\n') {
    --n;
    if (n > 0 && line[n - 1] == '\r')
      --n;
  }
  if (n == 0)
    throw Error("empty-record");
  if (n > kMaxRecordBytes)
    throw Error("oversize", std::to_string(n) + " bytes exceeds " +
                                std::to_string(kMaxRecordBytes));
  return Bytes(line.begin(), line.begin() + n);
}

Digest record_digest(ByteView line) {
  return sha256_digest(canonicalize_record(line));
}

uint64_t wall_clock_seconds() {
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
}

void LineSplitter::feed(ByteView data, std::vector<Line>& out) {
  // Terminator plus the record itself may legitimately reach limit + 2.
  constexpr size_t kCap = kMaxRecordBytes + 2;
  size_t start = 0;
  while (start < data.size()) {
    auto nl = std::find(data.begin() + start, data.end(), uint8_t{'\n'});
    size_t end = static_cast<size_t>(nl - data.begin());
    bool complete = nl != data.end();
    size_t take = end - start + (complete ? 1 : 0);
    if (!discarding_) {
      pending_.insert(pending_.end(), data.begin() + start,
                      data.begin() + start + take);
      if (pending_.size() > kCap) {
        // Keep a bounded prefix; the line is reported, not anchored.
        pending_.resize(kCap);
        discarding_ = true;
      }
    }
    if (complete) {
      out.push_back({std::move(pending_), discarding_});
      pending_.clear();
      discarding_ = false;
    }
    start += take;
  }
}

void LineSplitter::finish(std::vector<Line>& out) {
  if (pending_.empty() && !discarding_)
    return;
  out.push_back({std::move(pending_), discarding_});
  pending_.clear();
  discarding_ = false;
}

LogReader::LogReader(LogSource source, Clock clock)
    : source_(std::move(source)), clock_(std::move(clock)) {
  switch (source_.kind) {
    case SourceKind::kStdin:
      fd_ = STDIN_FILENO;
      break;
    case SourceKind::kFile:
      if (fs::is_directory(source_.location))
        throw Error("unreadable-source", source_.location.string());
      fd_ = ::open(source_.location.c_str(), O_RDONLY | O_CLOEXEC);
      if (fd_ < 0)
        throw Error("unreadable-source", source_.location.string());
      owns_fd_ = true;
      break;
    case SourceKind::kDirectoryWatch: {
      std::error_code ec;
      if (!fs::is_directory(source_.location, ec))
        throw Error("unreadable-source", source_.location.string());
      if (!source_.from_start) {
        for (const auto& entry : fs::directory_iterator(source_.location, ec))
          if (entry.is_regular_file())
            tracked_[entry.path()].offset = entry.file_size();
      }
      break;
    }
  }
}

LogReader::~LogReader() {
  if (owns_fd_)
    ::close(fd_);
}

IngestItem LogReader::make_item(const std::string& file,
                                uint64_t line,
                                LineSplitter::Line l) const {
  IngestItem item;
  item.file = file;
  item.line = line;
  if (l.oversize) {
    item.error = "oversize";
    return item;
  }
  try {
    LogRecord r;
    r.raw = canonicalize_record(l.bytes);
    r.source_id = source_.source_id;
    r.capture_timestamp = clock_();
    item.record = std::move(r);
  } catch (const Error& e) {
    item.error = e.code();
  }
  return item;
}

void LogReader::fill_stream() {
  std::string name =
      source_.kind == SourceKind::kStdin ? "-" : source_.location.string();
  uint8_t buf[1 << 16];
  std::vector<LineSplitter::Line> lines;
  while (lines.empty() && !eof_) {
    ssize_t n = ::read(fd_, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR)
        continue;
      throw Error("unreadable-source", name);
    }
    if (n == 0) {
      eof_ = true;
      stream_splitter_.finish(lines);
    } else {
      stream_splitter_.feed(ByteView(buf, static_cast<size_t>(n)), lines);
    }
  }
  for (auto& l : lines)
    ready_.push_back(make_item(name, ++stream_lines_, std::move(l)));
}

void LogReader::poll_directory() {
  std::error_code ec;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(source_.location, ec))
    if (entry.is_regular_file())
      files.push_back(entry.path());
  if (ec)
    throw Error("unreadable-source", source_.location.string());
  std::sort(files.begin(), files.end());
  for (const fs::path& p : files) {
    Tracked& t = tracked_[p];
    std::ifstream in(p, std::ios::binary);
    if (!in)
      continue;
    in.seekg(0, std::ios::end);
    uint64_t size = static_cast<uint64_t>(in.tellg());
    if (size < t.offset) {
      // Truncated or replaced: start over.
      t = Tracked{};
    }
    if (size == t.offset)
      continue;
    in.seekg(static_cast<std::streamoff>(t.offset));
    Bytes data(size - t.offset);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
    data.resize(static_cast<size_t>(in.gcount()));
    t.offset += data.size();
    std::vector<LineSplitter::Line> lines;
    t.splitter.feed(data, lines);
    for (auto& l : lines)
      ready_.push_back(make_item(p.string(), ++t.lines, std::move(l)));
  }
}

std::optional<IngestItem> LogReader::next() {
  if (ready_pos_ == ready_.size()) {
    ready_.clear();
    ready_pos_ = 0;
    if (source_.kind == SourceKind::kDirectoryWatch)
      poll_directory();
    else if (!eof_)
      fill_stream();
  }
  if (ready_pos_ == ready_.size())
    return std::nullopt;
  return std::move(ready_[ready_pos_++]);
}

Transaction anchor_record(const LogRecord& record,
                          const KeyPair& key,
                          SubmitTarget& target) {
  Transaction tx = build_anchor_tx(sha256_digest(record.raw), record.source_id,
                                   record.capture_timestamp, key);
  AddResult r = target.submit(tx);
  if (!r.accepted()) {
    std::string why(add_status_name(r.status));
    if (!r.reason.ok())
      why += " (" + r.reason.to_string() + ")";
    throw Error("submit-rejected", why);
  }
  return tx;
}

}  // namespace bloff::lpc
