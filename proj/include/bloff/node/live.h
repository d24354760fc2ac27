#ifndef BLOFF_NODE_LIVE_H_
#define BLOFF_NODE_LIVE_H_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "bloff/net/peer.h"
#include "bloff/node/store.h"
#include "bloff/node/wire.h"

namespace bloff::node {

struct NodeConfig {
  Role role = Role::kStakeholder;
  KeyPair key;
  std::filesystem::path chain_file;
  std::string host = "127.0.0.1";
  // 0 picks a free port; see LiveNode::port().
  uint16_t port = 0;
  std::vector<Address> peers;
  // Miners try to seal a block this often while the mempool is non-empty.
  std::chrono::milliseconds mine_interval{500};
  NodeParams params;
  std::function<void(const std::string&)> log;
};

// A TCP node. One owner thread holds the Peer (and so the NodeState and
// the BlockStore); socket reader threads and the mining timer only post
// events to it. Readers of chain state get immutable snapshots.
class LiveNode {
 public:
  // Loads the chain file. Throws ChainLoadError when it does not validate
  // and Error("role-mismatch") when the key is registered with a different
  // role.
  explicit LiveNode(NodeConfig config);
  ~LiveNode();
  LiveNode(const LiveNode&) = delete;
  LiveNode& operator=(const LiveNode&) = delete;

  // Binds, starts the threads, dials the configured peers and asks each
  // for its chain. Throws Error("bind-failed").
  void start();
  void stop();

  uint16_t port() const { return port_; }
  std::shared_ptr<const Chain> snapshot() const;
  size_t mempool_size() const { return mempool_size_; }
  size_t connection_count() const;

 private:
  struct Conn {
    std::string id;
    std::unique_ptr<LineSocket> socket;
    std::mutex write_mu;
    std::thread reader;
  };
  struct Event {
    enum class Kind { kLine, kConnected, kClosed } kind;
    std::string conn;
    std::string line;
  };

  void accept_loop();
  void dial_loop(Address peer);
  void add_connection(int fd, bool dialed);
  void read_loop(std::shared_ptr<Conn> conn);
  void post(Event e);
  void owner_loop();
  void handle(const Event& e);
  void handle_line(const std::string& conn, const std::string& line);
  void maybe_mine();
  void route(std::vector<Outbound> out);
  void send_to(const std::string& conn, const Message& m);
  void send_raw(const std::string& conn, const std::string& line);
  void persist();
  void publish();
  void log(const std::string& text) const;

  NodeConfig config_;
  BlockStore store_;
  std::unique_ptr<Peer> peer_;
  uint16_t port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  bool started_ = false;

  mutable std::mutex conns_mu_;
  std::map<std::string, std::shared_ptr<Conn>> conns_;
  uint64_t next_conn_ = 0;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Event> queue_;

  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const Chain> snapshot_;
  std::atomic<size_t> mempool_size_{0};

  std::thread acceptor_;
  std::vector<std::thread> dialers_;
  std::thread owner_;
};

}  // namespace bloff::node

#endif  // BLOFF_NODE_LIVE_H_
