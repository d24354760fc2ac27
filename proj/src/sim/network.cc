#include "bloff/sim/network.h"

#include "bloff/common/error.h"

namespace bloff::sim {

std::string TraceEvent::to_string() const {
  std::string s = std::to_string(tick) + " " + what;
  if (!from.empty() || !to.empty())
    s += " " + from + "->" + to;
  if (!detail.empty())
    s += " " + detail;
  return s;
}

Network::Network(SimConfig config)
    : config_(std::move(config)), rng_(config_.seed) {
  if (!(config_.drop_rate >= 0 && config_.drop_rate <= 1))
    throw Error("bad-drop-rate", std::to_string(config_.drop_rate));
}

void Network::add_peer(Peer peer) {
  std::string id = peer.id();
  if (peers_.contains(id))
    throw Error("duplicate-node", id);
  peers_.emplace(id, std::move(peer));
  adjacency_[id];
}

void Network::finalize() {
  for (const Edge& e : config_.edges) {
    if (!peers_.contains(e.a) || !peers_.contains(e.b))
      throw Error("unknown-node", "edge " + e.a + "-" + e.b);
    if (e.a == e.b)
      throw Error("bad-edge", "self loop at " + e.a);
    if (e.latency < 1)
      throw Error("bad-edge", "latency must be >= 1");
    adjacency_[e.a][e.b] = e.latency;
    adjacency_[e.b][e.a] = e.latency;
  }
}

Peer& Network::peer(const std::string& id) {
  auto it = peers_.find(id);
  if (it == peers_.end())
    throw Error("unknown-node", id);
  return it->second;
}

const Peer& Network::peer(const std::string& id) const {
  auto it = peers_.find(id);
  if (it == peers_.end())
    throw Error("unknown-node", id);
  return it->second;
}

std::vector<std::string> Network::node_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, p] : peers_)
    out.push_back(id);
  return out;
}

std::vector<std::string> Network::neighbors(const std::string& id) const {
  auto it = adjacency_.find(id);
  if (it == adjacency_.end())
    throw Error("unknown-node", id);
  std::vector<std::string> out;
  for (const auto& [n, lat] : it->second)
    out.push_back(n);
  return out;
}

uint32_t Network::latency(const std::string& a, const std::string& b) const {
  return adjacency_.at(a).at(b);
}

bool Network::severed(const std::string& a, const std::string& b) const {
  if (group_of_.empty())
    return false;
  auto ga = group_of_.find(a), gb = group_of_.find(b);
  int x = ga == group_of_.end() ? -1 : ga->second;
  int y = gb == group_of_.end() ? -1 : gb->second;
  return x != y;
}

bool Network::should_drop() {
  if (config_.drop_rate <= 0)
    return false;
  // 53 uniform bits in [0, 1); drop_rate 1 drops everything.
  double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  return u < config_.drop_rate;
}

void Network::send(const std::string& from, const std::string& to, Message m) {
  m.from = from;
  m.to = to;
  ++sent_;
  if (severed(from, to)) {
    ++cut_;
    record({now_, "cut", from, to, std::string(message_kind_name(m.kind))});
    return;
  }
  if (should_drop()) {
    ++dropped_;
    record({now_, "drop", from, to, std::string(message_kind_name(m.kind))});
    return;
  }
  queue_.push({now_ + latency(from, to), seq_++, std::move(m)});
}

void Network::broadcast(const std::string& origin, Message message) {
  for (const std::string& n : neighbors(origin))
    send(origin, n, message);
}

void Network::dispatch(const std::string& origin, std::vector<Outbound> out) {
  for (Outbound& o : out) {
    if (!o.to.empty()) {
      if (adjacency_.at(origin).contains(o.to))
        send(origin, o.to, std::move(o.message));
      continue;
    }
    for (const std::string& n : neighbors(origin))
      if (n != o.exclude)
        send(origin, n, o.message);
  }
}

size_t Network::step() {
  ++now_;
  size_t count = 0;
  while (!queue_.empty() && queue_.top().tick <= now_) {
    InFlight f = queue_.top();
    queue_.pop();
    const Message& m = f.message;
    // Links cut while the message was in flight lose it.
    if (severed(m.from, m.to)) {
      ++cut_;
      record({now_, "cut", m.from, m.to,
              std::string(message_kind_name(m.kind))});
      continue;
    }
    std::string detail(message_kind_name(m.kind));
    if (auto h = object_hash(m))
      detail += " " + h->hex().substr(0, 16);
    record({now_, "deliver", m.from, m.to, detail});
    ++delivered_;
    ++count;
    std::vector<Outbound> out;
    peer(m.to).receive(m, out);
    dispatch(m.to, std::move(out));
  }
  return count;
}

void Network::run_until_idle(uint64_t max_tick) {
  while (!queue_.empty() && now_ < max_tick)
    step();
}

void Network::set_partition(
    const std::vector<std::vector<std::string>>& groups) {
  std::map<std::string, int> assignment;
  for (size_t g = 0; g < groups.size(); ++g) {
    for (const std::string& id : groups[g]) {
      if (!peers_.contains(id))
        throw Error("unknown-node", id);
      if (!assignment.emplace(id, static_cast<int>(g)).second)
        throw Error("overlapping-groups", id + " is in more than one group");
    }
  }
  group_of_ = std::move(assignment);
  std::string detail;
  for (const auto& g : groups) {
    detail += "[";
    for (size_t i = 0; i < g.size(); ++i)
      detail += (i ? "," : "") + g[i];
    detail += "]";
  }
  record({now_, "partition", "", "", detail});
}

void Network::heal() {
  group_of_.clear();
  record({now_, "heal", "", "", ""});
  for (auto& [id, p] : peers_) {
    std::vector<Outbound> out;
    p.request_chain("", out);
    dispatch(id, std::move(out));
  }
}

void Network::record(TraceEvent e) {
  trace_.push_back(std::move(e));
}

std::string Network::trace_text() const {
  std::string out;
  for (const TraceEvent& e : trace_)
    out += e.to_string() + "\n";
  return out;
}

}  // namespace bloff::sim
