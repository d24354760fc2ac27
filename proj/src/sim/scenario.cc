#include "bloff/sim/scenario.h"

#include <algorithm>
#include <set>

#include "bloff/common/error.h"
#include "bloff/consensus/miner.h"
#include "bloff/ledger/merkle.h"
#include "bloff/lpc/ingest.h"

namespace bloff::sim {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) {
  throw Error("bad-scenario", what);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key))
    return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("'") + key + "' has the wrong type");
  }
}

std::vector<std::string> string_list(const json& j, const std::string& what) {
  if (!j.is_array())
    bad(what + " must be an array of strings");
  std::vector<std::string> out;
  for (const json& s : j) {
    if (!s.is_string())
      bad(what + " must be an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

ScenarioEvent parse_event(const json& e) {
  if (!e.is_object())
    bad("event must be an object");
  ScenarioEvent ev;
  if (!e.contains("tick") || !e.at("tick").is_number_unsigned())
    bad("event needs a non-negative integer 'tick'");
  ev.tick = e.at("tick").get<uint64_t>();
  int actions = 0;
  if (e.contains("submit")) {
    ++actions;
    ev.action = Action::kSubmit;
    ev.node = get_or<std::string>(e, "submit", "");
    if (e.contains("logs"))
      ev.logs = string_list(e.at("logs"), "'logs'");
    if (e.contains("log"))
      ev.logs.push_back(get_or<std::string>(e, "log", ""));
    if (ev.logs.empty())
      bad("submit event at tick " + std::to_string(ev.tick) + " has no logs");
  }
  if (e.contains("mine")) {
    ++actions;
    ev.action = Action::kMine;
    ev.node = get_or<std::string>(e, "mine", "");
  }
  if (e.contains("partition")) {
    ++actions;
    ev.action = Action::kPartition;
    const json& groups = e.at("partition");
    if (!groups.is_array())
      bad("'partition' must be an array of groups");
    for (const json& g : groups)
      ev.groups.push_back(string_list(g, "partition group"));
  }
  if (e.contains("heal")) {
    ++actions;
    ev.action = Action::kHeal;
  }
  if (actions != 1)
    bad("event at tick " + std::to_string(ev.tick) +
        " must have exactly one of submit, mine, partition, heal");
  return ev;
}

// Submits into a peer and routes its gossip through the network.
class PeerTarget : public lpc::SubmitTarget {
 public:
  PeerTarget(Network& net, const std::string& id) : net_(net), id_(id) {}

  AddResult submit(const Transaction& tx) override {
    std::vector<Outbound> out;
    AddResult r = net_.peer(id_).submit(tx, out);
    net_.dispatch(id_, std::move(out));
    return r;
  }

 private:
  Network& net_;
  const std::string& id_;
};

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad(e.what());
  }
  if (!j.is_object())
    bad("scenario must be an object");
  Scenario s;
  s.seed = get_or<uint64_t>(j, "seed", 0);
  uint64_t difficulty = get_or<uint64_t>(j, "difficulty", 8);
  if (difficulty > 64)
    bad("'difficulty' above 64 is not minable");
  s.difficulty = static_cast<uint8_t>(difficulty);
  s.drop_rate = get_or<double>(j, "drop_rate", 0.0);
  if (!(s.drop_rate >= 0 && s.drop_rate <= 1))
    bad("'drop_rate' must be within [0, 1]");
  s.max_ticks = get_or<uint64_t>(j, "max_ticks", 1000);

  if (!j.contains("nodes") || !j.at("nodes").is_array())
    bad("'nodes' must be an array");
  std::set<std::string> ids;
  for (const json& n : j.at("nodes")) {
    if (!n.is_object())
      bad("node must be an object");
    NodeSpec spec;
    spec.id = get_or<std::string>(n, "id", "");
    if (spec.id.empty() || spec.id.size() > kMaxSourceIdBytes)
      bad("node id must be 1-64 bytes");
    auto role = parse_role(get_or<std::string>(n, "role", ""));
    if (!role)
      bad("node " + spec.id + " has an unknown role");
    spec.role = *role;
    if (!ids.insert(spec.id).second)
      bad("duplicate node id " + spec.id);
    s.nodes.push_back(spec);
  }
  if (std::none_of(s.nodes.begin(), s.nodes.end(), [](const NodeSpec& n) {
        return n.role == Role::kCspMiner;
      }))
    bad("at least one csp-miner is required");

  if (j.contains("edges")) {
    if (!j.at("edges").is_array())
      bad("'edges' must be an array");
    for (const json& e : j.at("edges")) {
      Edge edge;
      if (!e.is_array() || e.size() < 2 || e.size() > 3 ||
          !e[0].is_string() || !e[1].is_string() ||
          (e.size() == 3 && !e[2].is_number_unsigned()))
        bad("edge must be [a, b] or [a, b, latency]");
      edge.a = e[0].get<std::string>();
      edge.b = e[1].get<std::string>();
      if (e.size() == 3)
        edge.latency = e[2].get<uint32_t>();
      if (!ids.contains(edge.a) || !ids.contains(edge.b))
        bad("edge " + edge.a + "-" + edge.b + " names an unknown node");
      if (edge.latency < 1)
        bad("edge latency must be >= 1");
      s.edges.push_back(edge);
    }
  }
  if (j.contains("events")) {
    if (!j.at("events").is_array())
      bad("'events' must be an array");
    for (const json& e : j.at("events")) {
      ScenarioEvent ev = parse_event(e);
      if (!ev.node.empty() && !ids.contains(ev.node))
        bad("event names unknown node " + ev.node);
      s.events.push_back(std::move(ev));
    }
  }
  std::stable_sort(s.events.begin(), s.events.end(),
                   [](const ScenarioEvent& a, const ScenarioEvent& b) {
                     return a.tick < b.tick;
                   });
  return s;
}

KeyPair sim_node_key(uint64_t seed, const std::string& id) {
  ByteWriter w;
  w.u64be(seed);
  w.bytes(as_bytes(id));
  return generate_keypair(sha256_digest(std::move(w).take()).span());
}

Digest anchor_index_digest(const Chain& chain) {
  std::vector<std::pair<Digest, const std::vector<AnchorLocation>*>> entries;
  for (const auto& [hash, locs] : chain.anchor_index())
    entries.emplace_back(hash, &locs);
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  ByteWriter w;
  for (const auto& [hash, locs] : entries) {
    w.bytes(hash.span());
    w.u32be(static_cast<uint32_t>(locs->size()));
    for (const AnchorLocation& l : *locs) {
      w.u64be(l.height);
      w.u32be(l.tx_index);
    }
  }
  return sha256_digest(std::move(w).take());
}

json SimReport::to_json() const {
  json j;
  j["seed"] = seed;
  j["ticks"] = ticks;
  j["delivered"] = delivered;
  j["dropped"] = dropped;
  j["converged"] = converged;
  j["converged_since"] =
      converged_since ? json(*converged_since) : json(nullptr);
  j["last_heal"] = last_heal ? json(*last_heal) : json(nullptr);
  json node_list = json::array();
  for (const NodeReport& n : nodes) {
    json o;
    o["id"] = n.id;
    o["role"] = std::string(role_name(n.role));
    o["tip"] = n.tip.hex();
    o["height"] = n.height;
    o["anchored_txs"] = n.anchored_txs;
    o["index_digest"] = n.index_digest.hex();
    o["mempool"] = n.mempool;
    node_list.push_back(std::move(o));
  }
  j["nodes"] = std::move(node_list);
  j["notes"] = notes;
  j["trace_digest"] = trace_digest.hex();
  return j;
}

ScenarioRunner::ScenarioRunner(Scenario scenario)
    : scenario_(std::move(scenario)) {
  std::vector<KeyPair> authorities;
  std::vector<const NodeSpec*> others;
  for (const NodeSpec& n : scenario_.nodes) {
    KeyPair k = sim_node_key(scenario_.seed, n.id);
    keys_.emplace(n.id, k);
    if (n.role == Role::kCspMiner)
      authorities.push_back(k);
    else
      others.push_back(&n);
  }
  if (authorities.empty())
    throw Error("bad-scenario", "at least one csp-miner is required");

  // Everyone starts from the same chain with all nodes registered: genesis
  // for the miners, then one block registering the rest.
  initial_.push_back(make_genesis(authorities, kSimGenesisTime));
  ChainValidation v = Chain::validate(initial_, scenario_.difficulty);
  Chain chain = std::move(*v.chain);
  if (!others.empty()) {
    Mempool pool;
    for (const NodeSpec* n : others)
      pool.add(build_registration_tx(keys_.at(n->id).public_key, n->role,
                                     authorities.front()));
    Block b = mine_block(pool, chain.tip().header, scenario_.difficulty,
                         authorities.front(), kSimGenesisTime,
                         chain.registered_nodes(), nullptr, others.size());
    Validity ok = chain.extend(b);
    if (!ok)
      throw Error("bad-scenario", "registration block: " + ok.to_string());
    initial_.push_back(b);
  }

  SimConfig config;
  config.seed = scenario_.seed;
  config.drop_rate = scenario_.drop_rate;
  config.edges = scenario_.edges;
  network_ = std::make_unique<Network>(config);
  for (const NodeSpec& n : scenario_.nodes)
    network_->add_peer(Peer(n.id, NodeState(chain)));
  network_->finalize();
}

const KeyPair& ScenarioRunner::key(const std::string& id) const {
  auto it = keys_.find(id);
  if (it == keys_.end())
    throw Error("unknown-node", id);
  return it->second;
}

void ScenarioRunner::apply(const ScenarioEvent& e) {
  Network& net = *network_;
  uint64_t now = net.now();
  std::string at = "tick " + std::to_string(now) + " " + e.node + " ";
  switch (e.action) {
    case Action::kSubmit: {
      PeerTarget target(net, e.node);
      for (const std::string& log : e.logs) {
        try {
          lpc::LogRecord r;
          r.raw = lpc::canonicalize_record(log);
          r.source_id = e.node;
          r.capture_timestamp = kSimGenesisTime + now;
          Transaction tx = lpc::anchor_record(r, key(e.node), target);
          submitted_.push_back({e.node, tx});
          net.record({now, "submit", e.node, "",
                      tx.id().hex().substr(0, 16)});
        } catch (const Error& err) {
          notes_.push_back(at + "submit: " + err.what());
          net.record({now, "submit-refused", e.node, "", err.code()});
        }
      }
      break;
    }
    case Action::kMine: {
      std::vector<Outbound> out;
      try {
        Block b = net.peer(e.node).mine(key(e.node), kSimGenesisTime + now,
                                        out);
        net.record({now, "mine", e.node, "",
                    b.hash().hex().substr(0, 16) + " txs=" +
                        std::to_string(b.txs.size())});
      } catch (const Error& err) {
        notes_.push_back(at + "mine: " + err.code());
        net.record({now, "mine-refused", e.node, "", err.code()});
      }
      net.dispatch(e.node, std::move(out));
      break;
    }
    case Action::kPartition:
      net.set_partition(e.groups);
      break;
    case Action::kHeal:
      last_heal_ = now;
      net.heal();
      break;
  }
}

bool ScenarioRunner::agreed() const {
  std::optional<Digest> tip, index;
  for (const std::string& id : network_->node_ids()) {
    const Chain& c = network_->peer(id).state().chain();
    Digest t = c.tip_hash();
    Digest ix = anchor_index_digest(c);
    if (tip && (*tip != t || *index != ix))
      return false;
    tip = t;
    index = ix;
  }
  return true;
}

void ScenarioRunner::apply_due() {
  const auto& events = scenario_.events;
  while (next_event_ < events.size() &&
         events[next_event_].tick <= network_->now())
    apply(events[next_event_++]);
}

void ScenarioRunner::track() {
  if (agreed()) {
    if (!converged_since_)
      converged_since_ = network_->now();
  } else {
    converged_since_.reset();
  }
}

void ScenarioRunner::run_until(uint64_t tick) {
  Network& net = *network_;
  tick = std::min(tick, scenario_.max_ticks);
  while (net.now() < tick) {
    apply_due();
    track();
    net.step();
  }
  track();
}

SimReport ScenarioRunner::run() {
  Network& net = *network_;
  while (true) {
    apply_due();
    track();
    if ((next_event_ == scenario_.events.size() && net.idle()) ||
        net.now() >= scenario_.max_ticks)
      break;
    net.step();
  }
  return report();
}

SimReport ScenarioRunner::report() const {
  SimReport r;
  const Network& net = *network_;
  r.seed = scenario_.seed;
  r.ticks = net.now();
  r.delivered = net.delivered();
  r.dropped = net.dropped();
  r.converged = agreed();
  r.converged_since = converged_since_;
  r.last_heal = last_heal_;
  r.notes = notes_;
  for (const NodeSpec& n : scenario_.nodes) {
    const NodeState& s = net.peer(n.id).state();
    NodeReport nr;
    nr.id = n.id;
    nr.role = n.role;
    nr.tip = s.best_tip();
    nr.height = s.chain().tip_height();
    for (const auto& [hash, locs] : s.chain().anchor_index())
      nr.anchored_txs += locs.size();
    nr.index_digest = anchor_index_digest(s.chain());
    nr.mempool = s.mempool().size();
    r.nodes.push_back(nr);
  }
  r.trace_digest = sha256_digest(net.trace_text());
  return r;
}

}  // namespace bloff::sim
