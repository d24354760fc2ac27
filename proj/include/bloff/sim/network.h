#ifndef BLOFF_SIM_NETWORK_H_
#define BLOFF_SIM_NETWORK_H_

#include <cstdint>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bloff/net/peer.h"

namespace bloff::sim {

struct Edge {
  std::string a;
  std::string b;
  // Delivery delay in ticks, >= 1.
  uint32_t latency = 1;
};

struct SimConfig {
  uint64_t seed = 0;
  // Probability in [0, 1] that any one message is lost.
  double drop_rate = 0;
  std::vector<Edge> edges;
};

struct TraceEvent {
  uint64_t tick = 0;
  // "deliver", "drop", "cut", or a scripted action name.
  std::string what;
  std::string from;
  std::string to;
  std::string detail;

  std::string to_string() const;
};

// Discrete-tick message fabric. Single-threaded and externally stepped; the
// receiving peer's logic runs inline during delivery. Everything random is
// drawn from one generator seeded from the config, so a fixed seed and
// script reproduce the full trace.
class Network {
 public:
  explicit Network(SimConfig config);

  // Throws Error("duplicate-node") on reuse of an id.
  void add_peer(Peer peer);
  // Validates the topology: known endpoints, latency >= 1, no self loops.
  // Call after all peers are added.
  void finalize();

  Peer& peer(const std::string& id);
  const Peer& peer(const std::string& id) const;
  std::vector<std::string> node_ids() const;
  std::vector<std::string> neighbors(const std::string& id) const;

  uint64_t now() const { return now_; }

  // Enqueues |message| from |origin| to each neighbor. Throws
  // Error("unknown-node") for an unknown origin.
  void broadcast(const std::string& origin, Message message);
  // Routes a peer's output.
  void dispatch(const std::string& origin, std::vector<Outbound> out);

  // Advances one tick and delivers every message due. Returns the count
  // delivered.
  size_t step();
  // Steps until nothing is in flight or |max_tick| is reached.
  void run_until_idle(uint64_t max_tick);
  bool idle() const { return queue_.empty(); }
  size_t in_flight() const { return queue_.size(); }

  // Severs every edge between different groups. Nodes not listed form one
  // more group together. Throws Error("overlapping-groups") if a node is
  // listed twice and Error("unknown-node") for unknown ids.
  void set_partition(const std::vector<std::vector<std::string>>& groups);
  // Restores all edges and has every node request its neighbors' chains.
  void heal();
  bool severed(const std::string& a, const std::string& b) const;

  void record(TraceEvent e);
  const std::vector<TraceEvent>& trace() const { return trace_; }
  std::string trace_text() const;
  // Every message handed to the fabric; each one is later delivered,
  // dropped, or lost to a cut link.
  uint64_t sent() const { return sent_; }
  uint64_t delivered() const { return delivered_; }
  uint64_t cut() const { return cut_; }
  uint64_t dropped() const { return dropped_; }

 private:
  struct InFlight {
    uint64_t tick;
    uint64_t seq;
    Message message;
    bool operator>(const InFlight& o) const {
      return tick != o.tick ? tick > o.tick : seq > o.seq;
    }
  };

  void send(const std::string& from, const std::string& to, Message m);
  uint32_t latency(const std::string& a, const std::string& b) const;
  bool should_drop();

  SimConfig config_;
  std::map<std::string, Peer> peers_;
  std::map<std::string, std::map<std::string, uint32_t>> adjacency_;
  std::map<std::string, int> group_of_;
  std::priority_queue<InFlight, std::vector<InFlight>, std::greater<>> queue_;
  std::mt19937_64 rng_;
  uint64_t now_ = 0;
  uint64_t seq_ = 0;
  uint64_t sent_ = 0;
  uint64_t delivered_ = 0;
  uint64_t cut_ = 0;
  uint64_t dropped_ = 0;
  std::vector<TraceEvent> trace_;
};

}  // namespace bloff::sim

#endif  // BLOFF_SIM_NETWORK_H_
