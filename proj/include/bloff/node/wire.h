#ifndef BLOFF_NODE_WIRE_H_
#define BLOFF_NODE_WIRE_H_

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

#include "bloff/consensus/mempool.h"
#include "bloff/ledger/chain.h"
#include "bloff/net/message.h"

namespace bloff::node {

// Live wire protocol: newline-delimited JSON over TCP. Peers exchange the
// four gossip message shapes (message_to_line). Clients may additionally
// send {"kind":"tx-submit","payload":<tx hex>} and get one
// {"kind":"tx-ack","tx_id":..,"status":..,"reason":..} back.

struct Address {
  std::string host;
  uint16_t port = 0;
  std::string to_string() const;
};

// "host:port" with a numeric port; nullopt otherwise.
std::optional<Address> parse_address(std::string_view text);

// A connected TCP socket read and written in whole lines.
class LineSocket {
 public:
  explicit LineSocket(int fd) : fd_(fd) {}
  ~LineSocket();
  LineSocket(const LineSocket&) = delete;
  LineSocket& operator=(const LineSocket&) = delete;

  // Throws Error("connect-failed").
  static LineSocket connect(const Address& address);

  // Throws Error("io-error") on a broken connection.
  void write_line(std::string_view line);
  // nullopt at EOF or on timeout (when given). Throws Error("io-error").
  std::optional<std::string> read_line(
      std::optional<std::chrono::milliseconds> timeout = {});
  // Unblocks a reader in another thread.
  void shutdown();
  int fd() const { return fd_; }
  // Gives up ownership of the descriptor.
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }

 private:
  int fd_;
  std::string buffer_;
};

std::string tx_submit_line(const Transaction& tx);

struct TxAck {
  Digest tx_id;
  AddStatus status = AddStatus::kInvalid;
  std::string reason;
  std::string to_line() const;
  // Throws Error("bad-message").
  static TxAck from_line(std::string_view line);
};

// Client side. Both throw Error("connect-failed"), Error("timeout") or
// Error("bad-message").
TxAck submit_remote(const Address& node, const Transaction& tx,
                    std::chrono::milliseconds timeout);
// Fetches the node's best chain and validates it locally. The difficulty
// is read from the received headers.
Chain fetch_chain(const Address& node, std::chrono::milliseconds timeout);

}  // namespace bloff::node

#endif  // BLOFF_NODE_WIRE_H_
