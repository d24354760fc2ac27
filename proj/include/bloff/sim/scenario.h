#ifndef BLOFF_SIM_SCENARIO_H_
#define BLOFF_SIM_SCENARIO_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bloff/sim/network.h"
#include "json.hpp"

namespace bloff::sim {

inline constexpr uint64_t kSimGenesisTime = 1'700'000'000;

struct NodeSpec {
  std::string id;
  Role role = Role::kDevice;
};

enum class Action { kSubmit, kMine, kPartition, kHeal };

struct ScenarioEvent {
  uint64_t tick = 0;
  Action action = Action::kSubmit;
  std::string node;
  // kSubmit: one anchor per entry.
  std::vector<std::string> logs;
  // kPartition.
  std::vector<std::vector<std::string>> groups;
};

// Scenario file (JSON):
//   {"seed": 7, "difficulty": 8, "drop_rate": 0, "max_ticks": 200,
//    "nodes": [{"id": "m1", "role": "csp-miner"}, ...],
//    "edges": [["m1", "d1", 1], ...],            // [a, b, latency]
//    "events": [{"tick": 0, "submit": "d1", "logs": ["..."]},
//               {"tick": 2, "mine": "m1"},
//               {"tick": 5, "partition": [["m1", "d1"], ["m2"]]},
//               {"tick": 40, "heal": true}]}
struct Scenario {
  uint64_t seed = 0;
  uint8_t difficulty = 8;
  double drop_rate = 0;
  uint64_t max_ticks = 1000;
  std::vector<NodeSpec> nodes;
  std::vector<Edge> edges;
  std::vector<ScenarioEvent> events;
};

// Throws Error("bad-scenario") with the offending field.
Scenario parse_scenario(std::string_view json_text);

// Node keys are sha256(seed_be8 | id) seeds, so a scenario is
// self-contained.
KeyPair sim_node_key(uint64_t seed, const std::string& id);

// Digest over the sorted anchor index, for cheap equality across nodes.
Digest anchor_index_digest(const Chain& chain);

struct NodeReport {
  std::string id;
  Role role;
  Digest tip;
  uint64_t height = 0;
  uint64_t anchored_txs = 0;
  Digest index_digest;
  size_t mempool = 0;
};

struct SimReport {
  uint64_t seed = 0;
  uint64_t ticks = 0;
  uint64_t delivered = 0;
  uint64_t dropped = 0;
  // All nodes share a best tip and anchor index at the end.
  bool converged = false;
  // Tick since which the nodes have agreed without interruption.
  std::optional<uint64_t> converged_since;
  std::optional<uint64_t> last_heal;
  std::vector<NodeReport> nodes;
  // Scripted actions that could not run (no work, role refused, ...).
  std::vector<std::string> notes;
  Digest trace_digest;

  nlohmann::json to_json() const;
};

class ScenarioRunner {
 public:
  explicit ScenarioRunner(Scenario scenario);

  // Runs the script to completion (all events applied and the network idle,
  // or max_ticks).
  SimReport run();
  // Applies events and steps until the clock reaches |tick| (capped at
  // max_ticks); events scheduled at |tick| itself are left for later.
  void run_until(uint64_t tick);
  SimReport report() const;

  struct Submitted {
    std::string node;
    Transaction tx;
  };
  const std::vector<Submitted>& submitted() const { return submitted_; }

  Network& network() { return *network_; }
  const Scenario& scenario() const { return scenario_; }
  const KeyPair& key(const std::string& id) const;
  const std::vector<Block>& initial_blocks() const { return initial_; }

 private:
  void apply(const ScenarioEvent& e);
  void apply_due();
  void track();
  bool agreed() const;

  Scenario scenario_;
  std::map<std::string, KeyPair> keys_;
  std::vector<Block> initial_;
  std::unique_ptr<Network> network_;
  std::optional<uint64_t> converged_since_;
  std::optional<uint64_t> last_heal_;
  std::vector<std::string> notes_;
  std::vector<Submitted> submitted_;
  size_t next_event_ = 0;
};

}  // namespace bloff::sim

#endif  // BLOFF_SIM_SCENARIO_H_
