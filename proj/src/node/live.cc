#include "bloff/node/live.h"

#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <iostream>

#include "bloff/common/error.h"
#include "json.hpp"

namespace bloff::node {
namespace {

using SteadyClock = std::chrono::steady_clock;

uint64_t wall_seconds() {
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
}

NodeState initial_state(const BlockStore& store, const NodeParams& params) {
  NodeState state(store.chain(), params);
  // Losing branches seen before a restart still count for fork choice.
  for (const Block& b : store.load_forks())
    state.apply_block(b);
  return state;
}

}  // namespace

LiveNode::LiveNode(NodeConfig config)
    : config_(std::move(config)), store_(BlockStore::open(config_.chain_file)) {
  auto registered = store_.chain().role_of(config_.key.public_key);
  if (registered && *registered != config_.role)
    throw Error("role-mismatch",
                "key is registered as " + std::string(role_name(*registered)) +
                    ", not " + std::string(role_name(config_.role)));
  peer_ = std::make_unique<Peer>(node_short_id(config_.key.public_key),
                                 initial_state(store_, config_.params));
  persist();
  publish();
}

LiveNode::~LiveNode() {
  stop();
}

void LiveNode::log(const std::string& text) const {
  if (config_.log)
    config_.log(text);
  else
    std::cerr << "[" << peer_->id() << "] " << text << std::endl;
}

void LiveNode::start() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  std::string port = std::to_string(config_.port);
  if (int rc = ::getaddrinfo(config_.host.c_str(), port.c_str(), &hints, &res))
    throw Error("bind-failed", config_.host + ": " + ::gai_strerror(rc));
  for (addrinfo* a = res; a && listen_fd_ < 0; a = a->ai_next) {
    int fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
    if (fd < 0)
      continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 64) == 0)
      listen_fd_ = fd;
    else
      ::close(fd);
  }
  ::freeaddrinfo(res);
  if (listen_fd_ < 0)
    throw Error("bind-failed", config_.host + ":" + port + ": " +
                                   std::strerror(errno));
  sockaddr_storage bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.ss_family == AF_INET6
                    ? reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port
                    : reinterpret_cast<sockaddr_in*>(&bound)->sin_port);

  started_ = true;
  owner_ = std::thread([this] { owner_loop(); });
  acceptor_ = std::thread([this] { accept_loop(); });
  for (const Address& p : config_.peers)
    dialers_.emplace_back([this, p] { dial_loop(p); });
  log("listening on " + config_.host + ":" + std::to_string(port_) + " as " +
      std::string(role_name(config_.role)) + ", height " +
      std::to_string(store_.chain().tip_height()));
}

void LiveNode::stop() {
  if (!started_ || stopping_.exchange(true))
    return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  queue_cv_.notify_all();
  acceptor_.join();
  for (std::thread& t : dialers_)
    t.join();
  owner_.join();
  std::map<std::string, std::shared_ptr<Conn>> conns;
  {
    std::lock_guard lk(conns_mu_);
    conns.swap(conns_);
  }
  for (auto& [id, c] : conns)
    c->socket->shutdown();
  for (auto& [id, c] : conns)
    if (c->reader.joinable())
      c->reader.join();
  ::close(listen_fd_);
  listen_fd_ = -1;
}

std::shared_ptr<const Chain> LiveNode::snapshot() const {
  std::lock_guard lk(snapshot_mu_);
  return snapshot_;
}

size_t LiveNode::connection_count() const {
  std::lock_guard lk(conns_mu_);
  return conns_.size();
}

void LiveNode::accept_loop() {
  while (!stopping_) {
    int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED)
        continue;
      break;
    }
    add_connection(fd, false);
  }
}

void LiveNode::dial_loop(Address peer) {
  while (!stopping_) {
    try {
      LineSocket s = LineSocket::connect(peer);
      add_connection(s.release(), true);
      return;
    } catch (const Error&) {
    }
    for (int i = 0; i < 10 && !stopping_; ++i)
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

void LiveNode::add_connection(int fd, bool dialed) {
  auto conn = std::make_shared<Conn>();
  conn->socket = std::make_unique<LineSocket>(fd);
  {
    std::lock_guard lk(conns_mu_);
    if (stopping_)
      return;
    conn->id = "c" + std::to_string(next_conn_++);
    conns_[conn->id] = conn;
    conn->reader = std::thread([this, conn] { read_loop(conn); });
  }
  if (dialed)
    post({Event::Kind::kConnected, conn->id, {}});
}

void LiveNode::read_loop(std::shared_ptr<Conn> conn) {
  try {
    while (auto line = conn->socket->read_line())
      post({Event::Kind::kLine, conn->id, std::move(*line)});
  } catch (const Error&) {
  }
  post({Event::Kind::kClosed, conn->id, {}});
}

void LiveNode::post(Event e) {
  {
    std::lock_guard lk(queue_mu_);
    queue_.push_back(std::move(e));
  }
  queue_cv_.notify_one();
}

void LiveNode::owner_loop() {
  auto next_mine = SteadyClock::now() + config_.mine_interval;
  while (!stopping_) {
    std::deque<Event> batch;
    {
      std::unique_lock lk(queue_mu_);
      queue_cv_.wait_until(lk, next_mine,
                           [&] { return stopping_ || !queue_.empty(); });
      batch.swap(queue_);
    }
    for (const Event& e : batch) {
      try {
        handle(e);
      } catch (const std::exception& ex) {
        log(std::string("dropped input from ") + e.conn + ": " + ex.what());
      }
    }
    if (SteadyClock::now() >= next_mine) {
      maybe_mine();
      next_mine = SteadyClock::now() + config_.mine_interval;
    }
    persist();
    publish();
  }
}

void LiveNode::handle(const Event& e) {
  switch (e.kind) {
    case Event::Kind::kConnected: {
      std::vector<Outbound> out;
      peer_->request_chain(e.conn, out);
      route(std::move(out));
      break;
    }
    case Event::Kind::kClosed: {
      std::shared_ptr<Conn> c;
      {
        std::lock_guard lk(conns_mu_);
        auto it = conns_.find(e.conn);
        if (it == conns_.end())
          return;
        c = it->second;
        conns_.erase(it);
      }
      if (c->reader.joinable())
        c->reader.join();
      break;
    }
    case Event::Kind::kLine:
      handle_line(e.conn, e.line);
      break;
  }
}

void LiveNode::handle_line(const std::string& conn, const std::string& line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_object() && j.value("kind", "") == "tx-submit") {
    TxAck ack;
    try {
      auto raw = from_hex(j.value("payload", ""));
      if (!raw)
        throw Error("bad-message", "payload is not hex");
      Transaction tx = decode_tx(*raw);
      ack.tx_id = tx.id();
      std::vector<Outbound> out;
      AddResult r = peer_->submit(tx, out);
      ack.status = r.status;
      ack.reason = r.accepted() ? "" : r.reason.to_string();
      route(std::move(out));
    } catch (const Error& err) {
      ack.status = AddStatus::kInvalid;
      ack.reason = err.what();
    }
    send_raw(conn, ack.to_line());
    return;
  }
  Message m = message_from_line(line);
  m.from = conn;
  m.to = peer_->id();
  std::vector<Outbound> out;
  if (!peer_->receive(m, out))
    log("ignored " + std::string(message_kind_name(m.kind)) + " from " + conn);
  route(std::move(out));
}

void LiveNode::maybe_mine() {
  if (config_.role != Role::kCspMiner || peer_->state().mempool().empty())
    return;
  if (peer_->state().chain().role_of(config_.key.public_key) !=
      Role::kCspMiner)
    return;
  std::vector<Outbound> out;
  MiningStats stats;
  try {
    Block b = peer_->mine(config_.key, wall_seconds(), out, &stats);
    log("mined block " + b.hash().hex().substr(0, 16) + " height " +
        std::to_string(peer_->state().chain().tip_height()) + " with " +
        std::to_string(b.txs.size()) + " txs");
  } catch (const Error& e) {
    log(std::string("mining skipped: ") + e.what());
  }
  route(std::move(out));
}

void LiveNode::route(std::vector<Outbound> out) {
  for (const Outbound& o : out) {
    if (!o.to.empty()) {
      send_to(o.to, o.message);
      continue;
    }
    std::vector<std::string> ids;
    {
      std::lock_guard lk(conns_mu_);
      for (const auto& [id, c] : conns_)
        if (id != o.exclude)
          ids.push_back(id);
    }
    for (const std::string& id : ids)
      send_to(id, o.message);
  }
}

void LiveNode::send_to(const std::string& conn, const Message& m) {
  Message copy = m;
  copy.from = peer_->id();
  copy.to = conn;
  send_raw(conn, message_to_line(copy));
}

void LiveNode::send_raw(const std::string& conn, const std::string& line) {
  std::shared_ptr<Conn> c;
  {
    std::lock_guard lk(conns_mu_);
    auto it = conns_.find(conn);
    if (it == conns_.end())
      return;
    c = it->second;
  }
  std::lock_guard lk(c->write_mu);
  try {
    c->socket->write_line(line);
  } catch (const Error& e) {
    log("write to " + conn + " failed: " + e.what());
    c->socket->shutdown();
  }
}

void LiveNode::persist() {
  bool forks = false;
  for (const Peer::Applied& a : peer_->take_applied())
    forks = forks || a.result.status == BlockStatus::kStoredFork ||
            a.result.status == BlockStatus::kReorganized;
  try {
    store_.sync_to(peer_->state().chain());
    if (forks)
      for (const Block& b : peer_->state().fork_blocks())
        store_.record_fork(b);
  } catch (const Error& e) {
    // The store keeps its last good state; the next event retries.
    log(std::string("persist failed: ") + e.what());
  }
}

void LiveNode::publish() {
  mempool_size_ = peer_->state().mempool().size();
  std::lock_guard lk(snapshot_mu_);
  if (!snapshot_ || snapshot_->tip_hash() != peer_->state().chain().tip_hash())
    snapshot_ = std::make_shared<const Chain>(peer_->state().chain());
}

}  // namespace bloff::node
