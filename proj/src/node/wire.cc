#include "bloff/node/wire.h"

#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "bloff/common/error.h"
#include "json.hpp"

namespace bloff::node {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// Lines longer than this are a protocol violation. A full chain response
// for a desk-scale chain fits comfortably.
constexpr size_t kMaxLineBytes = size_t{256} << 20;

std::chrono::milliseconds left(Clock::time_point deadline) {
  auto d = std::chrono::duration_cast<std::chrono::milliseconds>(
      deadline - Clock::now());
  return std::max(d, std::chrono::milliseconds(0));
}

}  // namespace

std::string Address::to_string() const {
  return host + ":" + std::to_string(port);
}

std::optional<Address> parse_address(std::string_view text) {
  size_t colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 ||
      colon + 1 == text.size())
    return std::nullopt;
  std::string_view port = text.substr(colon + 1);
  unsigned value = 0;
  auto [end, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || end != port.data() + port.size() || value > 65535)
    return std::nullopt;
  std::string_view host = text.substr(0, colon);
  if (host.find('/') != std::string_view::npos)
    return std::nullopt;
  return Address{std::string(host), static_cast<uint16_t>(value)};
}

LineSocket::~LineSocket() {
  if (fd_ >= 0)
    ::close(fd_);
}

LineSocket LineSocket::connect(const Address& address) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  std::string port = std::to_string(address.port);
  if (int rc = ::getaddrinfo(address.host.c_str(), port.c_str(), &hints, &res))
    throw Error("connect-failed",
                address.to_string() + ": " + ::gai_strerror(rc));
  int fd = -1;
  int err = 0;
  for (addrinfo* a = res; a; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
    if (fd < 0)
      continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0)
      break;
    err = errno;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0)
    throw Error("connect-failed",
                address.to_string() + ": " + std::strerror(err));
  return LineSocket(fd);
}

void LineSocket::write_line(std::string_view line) {
  std::string data(line);
  data += '\n';
  std::string_view rest = data;
  while (!rest.empty()) {
    ssize_t n = ::send(fd_, rest.data(), rest.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR)
        continue;
      throw Error("io-error", std::string("send: ") + std::strerror(errno));
    }
    rest.remove_prefix(static_cast<size_t>(n));
  }
}

std::optional<std::string> LineSocket::read_line(
    std::optional<std::chrono::milliseconds> timeout) {
  auto deadline = Clock::now() + timeout.value_or(std::chrono::milliseconds(0));
  for (;;) {
    size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    if (buffer_.size() > kMaxLineBytes)
      throw Error("io-error", "line too long");
    if (timeout) {
      pollfd p{fd_, POLLIN, 0};
      int rc = ::poll(&p, 1, static_cast<int>(left(deadline).count()));
      if (rc == 0)
        return std::nullopt;
      if (rc < 0 && errno != EINTR)
        throw Error("io-error", std::string("poll: ") + std::strerror(errno));
      if (rc < 0)
        continue;
    }
    char chunk[65536];
    ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n == 0)
      return std::nullopt;
    if (n < 0) {
      if (errno == EINTR)
        continue;
      throw Error("io-error", std::string("recv: ") + std::strerror(errno));
    }
    buffer_.append(chunk, static_cast<size_t>(n));
  }
}

void LineSocket::shutdown() {
  ::shutdown(fd_, SHUT_RDWR);
}

std::string tx_submit_line(const Transaction& tx) {
  return json{{"kind", "tx-submit"}, {"payload", to_hex(canonical_tx_bytes(tx))}}
      .dump();
}

std::string TxAck::to_line() const {
  return json{{"kind", "tx-ack"},
              {"tx_id", tx_id.hex()},
              {"status", add_status_name(status)},
              {"reason", reason}}
      .dump();
}

TxAck TxAck::from_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.value("kind", "") != "tx-ack")
    throw Error("bad-message", "expected tx-ack");
  TxAck a;
  auto id = Digest::from_hex(j.value("tx_id", ""));
  if (!id)
    throw Error("bad-message", "tx-ack without tx_id");
  a.tx_id = *id;
  std::string status = j.value("status", "");
  for (AddStatus s : {AddStatus::kAccepted, AddStatus::kDuplicate,
                      AddStatus::kInvalid, AddStatus::kFull})
    if (add_status_name(s) == status)
      a.status = s;
  a.reason = j.value("reason", "");
  return a;
}

TxAck submit_remote(const Address& node, const Transaction& tx,
                    std::chrono::milliseconds timeout) {
  LineSocket s = LineSocket::connect(node);
  s.write_line(tx_submit_line(tx));
  auto deadline = Clock::now() + timeout;
  Digest want = tx.id();
  for (;;) {
    auto line = s.read_line(left(deadline));
    if (!line)
      throw Error("timeout", "no tx-ack from " + node.to_string());
    // Gossip may interleave; only the ack for this tx counts.
    if (line->find("\"tx-ack\"") == std::string::npos)
      continue;
    TxAck ack = TxAck::from_line(*line);
    if (ack.tx_id == want)
      return ack;
  }
}

Chain fetch_chain(const Address& node, std::chrono::milliseconds timeout) {
  LineSocket s = LineSocket::connect(node);
  Message req = chain_request(Digest{});
  req.from = "client";
  req.to = node.to_string();
  s.write_line(message_to_line(req));
  auto deadline = Clock::now() + timeout;
  for (;;) {
    auto line = s.read_line(left(deadline));
    if (!line)
      throw Error("timeout", "no chain from " + node.to_string());
    if (line->find("\"chain-response\"") == std::string::npos)
      continue;
    Message m = message_from_line(*line);
    if (m.kind != MessageKind::kChainResponse)
      continue;
    std::vector<Block> blocks = decode_block_list(m.payload);
    uint8_t difficulty = blocks.size() > 1 ? blocks[1].header.difficulty : 0;
    ChainValidation v = Chain::validate(std::move(blocks), difficulty);
    if (!v.ok())
      throw Error("invalid-chain", "height " + std::to_string(v.failed_height) +
                                       ": " + v.failure.to_string());
    return std::move(*v.chain);
  }
}

}  // namespace bloff::node
