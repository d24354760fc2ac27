// bloff: command-line front end for keys, chains, ingestion, verification,
// simulation and live nodes.
//
// Exit codes: 0 success (verify: Accepted), 1 a negative outcome (verify:
// Rejected, nothing to mine, records refused), 2 usage or runtime error.

#include <signal.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bloff/common/error.h"
#include "bloff/lpc/ingest.h"
#include "bloff/node/live.h"
#include "bloff/node/store.h"
#include "bloff/node/wire.h"
#include "bloff/sim/scenario.h"
#include "bloff/verify/verify.h"

namespace bloff {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kNegative = 1;
constexpr int kFailure = 2;
constexpr std::chrono::milliseconds kNetTimeout{10'000};

fs::path home_dir() {
  const char* h = std::getenv("BLOFF_HOME");
  return h && *h ? fs::path(h) : fs::path(".");
}
fs::path default_chain() { return home_dir() / "chain.jsonl"; }
fs::path default_key() { return home_dir() / "node.key"; }

std::string read_input(const std::string& path) {
  std::ostringstream s;
  if (path == "-") {
    s << std::cin.rdbuf();
    return std::move(s).str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("unreadable-source", path);
  s << in.rdbuf();
  return std::move(s).str();
}

void write_output(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text))
    throw Error("io-error", "cannot write " + path.string());
}

// A --chain value names a node when it parses as host:port and no such
// file exists.
std::optional<node::Address> as_node(const std::string& chain) {
  if (fs::exists(chain))
    return std::nullopt;
  return node::parse_address(chain);
}

Chain chain_from(const std::string& chain) {
  if (auto addr = as_node(chain))
    return node::fetch_chain(*addr, kNetTimeout);
  return node::load_chain(chain);
}

PublicKey pubkey_arg(const std::string& text) {
  if (auto pk = PublicKey::from_hex(text))
    return *pk;
  if (fs::exists(text))
    return read_key_file(text).public_key;
  throw Error("bad-pubkey", "expected 64 hex digits or a key file: " + text);
}

uint64_t now_seconds() { return lpc::wall_clock_seconds(); }

// Pending transactions of a file-mode chain: NodeState over the stored
// chain plus mempool.jsonl, with accepted submissions appended.
class FileTarget : public lpc::SubmitTarget {
 public:
  explicit FileTarget(const fs::path& chain)
      : store_(node::BlockStore::open(chain)), state_(store_.chain()) {
    for (const Transaction& tx : store_.load_mempool())
      state_.submit_tx(tx);
  }

  AddResult submit(const Transaction& tx) override {
    AddResult r = state_.submit_tx(tx);
    if (r.accepted())
      store_.append_mempool(tx);
    return r;
  }

 private:
  node::BlockStore store_;
  NodeState state_;
};

class RemoteTarget : public lpc::SubmitTarget {
 public:
  explicit RemoteTarget(node::Address addr) : addr_(std::move(addr)) {}

  AddResult submit(const Transaction& tx) override {
    node::TxAck ack = node::submit_remote(addr_, tx, kNetTimeout);
    if (ack.status != AddStatus::kAccepted && ack.status != AddStatus::kDuplicate)
      throw Error("submit-rejected", std::string(add_status_name(ack.status)) +
                                         (ack.reason.empty() ? "" : " (" + ack.reason + ")"));
    return {ack.status, {}};
  }

 private:
  node::Address addr_;
};

std::unique_ptr<lpc::SubmitTarget> target_for(const std::string& chain) {
  if (auto addr = as_node(chain))
    return std::make_unique<RemoteTarget>(*addr);
  return std::make_unique<FileTarget>(chain);
}

// Treats "already pending or anchored" as done: a record identical in
// bytes, source and second is the same transaction.
class DuplicateTolerant : public lpc::SubmitTarget {
 public:
  explicit DuplicateTolerant(lpc::SubmitTarget& inner) : inner_(inner) {}
  AddResult submit(const Transaction& tx) override {
    AddResult r = inner_.submit(tx);
    duplicate = r.status == AddStatus::kDuplicate;
    return duplicate ? AddResult{AddStatus::kAccepted, {}} : r;
  }
  bool duplicate = false;

 private:
  lpc::SubmitTarget& inner_;
};

// ---------------------------------------------------------------- keygen

struct KeygenOpts {
  std::string out;
  std::string seed;
  bool force = false;
};

int cmd_keygen(const KeygenOpts& o) {
  fs::path out = o.out.empty() ? default_key() : fs::path(o.out);
  if (fs::exists(out) && !o.force)
    throw Error("key-exists", out.string() + " (use --force to replace)");
  KeyPair k;
  if (o.seed.empty()) {
    k = generate_random_keypair();
  } else {
    auto seed = from_hex(o.seed);
    if (!seed)
      throw Error("bad-seed", "seed must be lowercase hex");
    k = generate_keypair(*seed);
  }
  write_key_file(out, k);
  std::cout << k.public_key.hex() << "\n";
  return kOk;
}

// --------------------------------------------------------------- genesis

struct GenesisOpts {
  std::vector<std::string> authorities;
  int difficulty = 12;
  std::string out;
  std::optional<uint64_t> timestamp;
};

int cmd_genesis(const GenesisOpts& o) {
  std::vector<KeyPair> keys;
  for (const std::string& a : o.authorities)
    keys.push_back(read_key_file(a));
  Block g = make_genesis(keys, o.timestamp.value_or(now_seconds()));
  ChainValidation v =
      Chain::validate({g}, static_cast<uint8_t>(o.difficulty));
  if (!v.ok())
    throw Error("bad-genesis", v.failure.to_string());
  fs::path out = o.out.empty() ? default_chain() : fs::path(o.out);
  node::BlockStore::create(out, *v.chain);
  std::cout << g.hash().hex() << "\n";
  return kOk;
}

// -------------------------------------------------------------- register

struct RegisterOpts {
  std::string key;
  std::string pubkey;
  std::string role;
  std::string chain;
};

int cmd_register(const RegisterOpts& o) {
  auto role = parse_role(o.role);
  if (!role)
    throw Error("bad-role", o.role);
  KeyPair sponsor = read_key_file(o.key.empty() ? default_key() : fs::path(o.key));
  Transaction tx = build_registration_tx(pubkey_arg(o.pubkey), *role, sponsor);
  auto target = target_for(o.chain.empty() ? default_chain().string() : o.chain);
  AddResult r = target->submit(tx);
  if (!r.accepted()) {
    std::cerr << "bloff: registration refused: " << add_status_name(r.status)
              << (r.reason.ok() ? "" : " (" + r.reason.to_string() + ")")
              << "\n";
    return kNegative;
  }
  std::cout << tx.id().hex() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- submit

struct SubmitOpts {
  std::string key;
  std::string chain;
  std::string log;
  std::string watch;
  bool from_start = false;
  std::string source_id;
  int poll_ms = 500;
};

volatile sig_atomic_t g_interrupted = 0;
void on_interrupt(int) { g_interrupted = 1; }

int cmd_submit(const SubmitOpts& o) {
  if (o.log.empty() == o.watch.empty())
    throw Error("usage", "give exactly one of --log or --watch");
  KeyPair key = read_key_file(o.key.empty() ? default_key() : fs::path(o.key));
  auto target = target_for(o.chain.empty() ? default_chain().string() : o.chain);
  DuplicateTolerant dedup(*target);

  lpc::LogSource src;
  src.source_id = o.source_id;
  if (!o.watch.empty()) {
    src.kind = lpc::SourceKind::kDirectoryWatch;
    src.location = o.watch;
    src.from_start = o.from_start;
  } else if (o.log == "-") {
    src.kind = lpc::SourceKind::kStdin;
  } else {
    src.location = o.log;
  }
  lpc::LogReader reader(src);
  if (src.kind == lpc::SourceKind::kDirectoryWatch) {
    ::signal(SIGINT, on_interrupt);
    ::signal(SIGTERM, on_interrupt);
  }

  int refused = 0;
  for (;;) {
    auto item = reader.next();
    if (!item) {
      if (src.kind != lpc::SourceKind::kDirectoryWatch || g_interrupted)
        break;
      std::this_thread::sleep_for(std::chrono::milliseconds(o.poll_ms));
      continue;
    }
    if (!item->record) {
      std::cerr << "bloff: " << item->file << ":" << item->line << ": skipped ("
                << item->error << ")\n";
      ++refused;
      continue;
    }
    try {
      Transaction tx = lpc::anchor_record(*item->record, key, dedup);
      std::cout << tx.id().hex() << " " << tx.anchor()->log_hash.hex() << "\n"
                << std::flush;
      if (dedup.duplicate)
        std::cerr << "bloff: " << item->file << ":" << item->line
                  << ": identical transaction already submitted\n";
    } catch (const Error& e) {
      if (e.code() != "submit-rejected")
        throw;
      std::cerr << "bloff: " << item->file << ":" << item->line << ": "
                << e.what() << "\n";
      ++refused;
    }
  }
  return refused ? kNegative : kOk;
}

// ------------------------------------------------------------------ mine

struct MineOpts {
  std::string key;
  std::string chain;
  size_t max_txs = kDefaultMaxBlockTxs;
  std::optional<uint64_t> timestamp;
};

int cmd_mine(const MineOpts& o) {
  KeyPair key = read_key_file(o.key.empty() ? default_key() : fs::path(o.key));
  fs::path path = o.chain.empty() ? default_chain() : fs::path(o.chain);
  node::BlockStore store = node::BlockStore::open(path);
  NodeParams params;
  params.max_block_txs = o.max_txs;
  NodeState state(store.chain(), params);
  for (const Transaction& tx : store.load_mempool())
    state.submit_tx(tx);
  MiningStats stats;
  Block b;
  try {
    b = state.mine(key, o.timestamp.value_or(now_seconds()), &stats);
  } catch (const Error& e) {
    if (e.code() != "no-work" && e.code() != "not-a-miner")
      throw;
    std::cerr << "bloff: " << e.what() << "\n";
    return kNegative;
  }
  Validity v = store.append(b);
  if (!v)
    throw Error("invalid-block", v.to_string());
  store.save_mempool(state.mempool().pending());
  std::cout << json{{"height", store.chain().tip_height()},
                    {"block_hash", b.hash().hex()},
                    {"txs", b.txs.size()},
                    {"attempts", stats.attempts}}
                   .dump()
            << "\n";
  return kOk;
}

// ---------------------------------------------------------------- verify

struct VerifyOpts {
  std::string chain;
  std::string log;
  uint64_t min_confirmations = 1;
  std::string custody;
  std::string proof_out;
  bool court = false;
  std::string expect_submitter;
};

int cmd_verify(const VerifyOpts& o) {
  Chain chain = chain_from(o.chain.empty() ? default_chain().string() : o.chain);
  std::string log = read_input(o.log);
  verify::VerifyOptions opt;
  opt.min_confirmations = o.min_confirmations;
  if (!o.expect_submitter.empty())
    opt.expect_submitter = pubkey_arg(o.expect_submitter);

  verify::Verdict verdict = o.court
                                ? verify::court_recheck(as_bytes(log), chain, opt)
                                : verify::verify_log(as_bytes(log), chain, opt);
  if (!o.proof_out.empty()) {
    json proofs = json::array();
    for (const verify::Match& m : verdict.matches)
      proofs.push_back(
          verify::make_inclusion_proof(chain, m.height, m.tx_id).to_json());
    if (verdict.accepted())
      write_output(o.proof_out, proofs.dump() + "\n");
    else
      std::cerr << "bloff: rejected, no proof written\n";
  }
  if (o.custody.empty()) {
    std::cout << verdict.to_json().dump() << "\n";
    return verdict.accepted() ? kOk : kNegative;
  }
  auto entries = verify::parse_attestation_file(read_input(o.custody));
  verify::CustodyReport r =
      verify::verify_custody(as_bytes(log), entries, chain, opt);
  if (o.court)
    r.verdict = verdict;
  r.pass = r.pass && verdict.accepted();
  std::cout << r.to_json().dump() << "\n";
  return r.pass ? kOk : kNegative;
}

// --------------------------------------------------------------- inspect

struct InspectOpts {
  std::string chain;
  bool blocks = false;
  std::optional<uint64_t> height;
  std::string log_hash;
};

int cmd_inspect(const InspectOpts& o) {
  Chain chain = chain_from(o.chain.empty() ? default_chain().string() : o.chain);
  if (o.blocks) {
    for (uint64_t h = 0; h < chain.length(); ++h)
      std::cout << block_to_json(chain.block(h)).dump() << "\n";
    return kOk;
  }
  if (o.height) {
    if (*o.height > chain.tip_height())
      throw Error("no-such-block", std::to_string(*o.height));
    std::cout << block_to_json(chain.block(*o.height)).dump() << "\n";
    return kOk;
  }
  if (!o.log_hash.empty()) {
    auto h = Digest::from_hex(o.log_hash);
    if (!h)
      throw Error("bad-digest", o.log_hash);
    json locs = json::array();
    for (const AnchorLocation& l : chain.find_anchor(*h))
      locs.push_back({{"height", l.height},
                      {"tx_index", l.tx_index},
                      {"tx_id", chain.block(l.height).txs[l.tx_index].id().hex()}});
    std::cout << json{{"log_hash", o.log_hash}, {"anchors", locs}}.dump()
              << "\n";
    return locs.empty() ? kNegative : kOk;
  }
  json nodes = json::array();
  for (const auto& [pk, role] : chain.registered_nodes())
    nodes.push_back({{"pubkey", pk.hex()}, {"role", role_name(role)}});
  std::cout << json{{"height", chain.tip_height()},
                    {"tip", chain.tip_hash().hex()},
                    {"genesis", chain.genesis_hash().hex()},
                    {"difficulty", chain.difficulty()},
                    {"txs", chain.tx_count()},
                    {"anchored_digests", chain.anchor_index().size()},
                    {"registered", nodes}}
                   .dump()
            << "\n";
  return kOk;
}

// -------------------------------------------------------------- simulate

struct SimulateOpts {
  std::string scenario;
  std::optional<uint64_t> seed;
  std::string trace;
};

int cmd_simulate(const SimulateOpts& o) {
  sim::Scenario s = sim::parse_scenario(read_input(o.scenario));
  if (o.seed)
    s.seed = *o.seed;
  sim::ScenarioRunner runner(std::move(s));
  sim::SimReport report = runner.run();
  if (!o.trace.empty())
    write_output(o.trace, runner.network().trace_text());
  std::cout << report.to_json().dump(2) << "\n";
  return report.converged ? kOk : kNegative;
}

// ------------------------------------------------------------------ node

struct NodeOpts {
  std::string role;
  std::string key;
  std::string chain;
  std::string listen = "127.0.0.1:0";
  std::vector<std::string> peers;
  int mine_interval_ms = 500;
};

int cmd_node(const NodeOpts& o) {
  node::NodeConfig c;
  auto role = parse_role(o.role);
  if (!role)
    throw Error("bad-role", o.role);
  c.role = *role;
  c.key = read_key_file(o.key.empty() ? default_key() : fs::path(o.key));
  c.chain_file = o.chain.empty() ? default_chain() : fs::path(o.chain);
  auto listen = node::parse_address(o.listen);
  if (!listen)
    throw Error("bad-address", o.listen);
  c.host = listen->host;
  c.port = listen->port;
  for (const std::string& p : o.peers) {
    auto a = node::parse_address(p);
    if (!a)
      throw Error("bad-address", p);
    c.peers.push_back(*a);
  }
  c.mine_interval = std::chrono::milliseconds(o.mine_interval_ms);
  if (c.role == Role::kStakeholder)
    std::cerr << "bloff: stakeholder nodes replicate and verify; they never "
                 "mine\n";

  // Block the stop signals before any thread starts so only sigwait sees
  // them.
  sigset_t stop_set;
  sigemptyset(&stop_set);
  sigaddset(&stop_set, SIGINT);
  sigaddset(&stop_set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_set, nullptr);

  node::LiveNode n(std::move(c));
  n.start();
  std::cout << "listening " << listen->host << ":" << n.port() << std::endl;
  int sig = 0;
  sigwait(&stop_set, &sig);
  n.stop();
  return kOk;
}

// ---------------------------------------------------------------- attest

struct AttestOpts {
  std::string key;
  std::string log;
  std::optional<uint64_t> timestamp;
};

int cmd_attest(const AttestOpts& o) {
  KeyPair key = read_key_file(o.key.empty() ? default_key() : fs::path(o.key));
  std::string log = read_input(o.log);
  Digest h = sha256_digest(lpc::canonicalize_record(as_bytes(log)));
  std::cout << verify::attestation_to_line(verify::make_attestation(
                   h, o.timestamp.value_or(now_seconds()), key))
            << "\n";
  return kOk;
}

int run(int argc, char** argv) {
  CLI::App app{"bloff: blockchain-anchored log integrity"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  std::function<int()> action;

  KeygenOpts kg;
  auto* keygen = app.add_subcommand("keygen", "Create an Ed25519 key file");
  keygen->add_option("--out", kg.out, "Key file (default $BLOFF_HOME/node.key)");
  keygen->add_option("--seed", kg.seed, "32-byte seed as hex (deterministic)");
  keygen->add_flag("--force", kg.force, "Overwrite an existing key file");
  keygen->callback([&] { action = [&] { return cmd_keygen(kg); }; });

  GenesisOpts gen;
  auto* genesis = app.add_subcommand("genesis", "Write a new chain file");
  genesis->add_option("--authority", gen.authorities,
                      "Key file of a founding csp-miner (repeatable)")
      ->required();
  genesis->add_option("--difficulty", gen.difficulty,
                      "Leading zero bits required of every block")
      ->check(CLI::Range(0, 255));
  genesis->add_option("--out,--chain", gen.out, "Chain file to create");
  genesis->add_option("--timestamp", gen.timestamp, "Unix seconds");
  genesis->callback([&] { action = [&] { return cmd_genesis(gen); }; });

  RegisterOpts reg;
  auto* regcmd = app.add_subcommand("register", "Sponsor a new node");
  regcmd->add_option("--key", reg.key, "Sponsoring csp-miner key file");
  regcmd->add_option("--pubkey", reg.pubkey, "New node: hex key or key file")
      ->required();
  regcmd->add_option("--role", reg.role, "csp-miner | device | stakeholder")
      ->required();
  regcmd->add_option("--chain", reg.chain, "Chain file or node host:port");
  regcmd->callback([&] { action = [&] { return cmd_register(reg); }; });

  SubmitOpts sub;
  auto* submit = app.add_subcommand("submit", "Anchor log records");
  submit->add_option("--key", sub.key, "Submitting key file");
  submit->add_option("--chain", sub.chain, "Chain file or node host:port");
  submit->add_option("--log", sub.log, "Log file, or - for standard input");
  submit->add_option("--watch", sub.watch, "Directory to follow");
  submit->add_flag("--from-start", sub.from_start,
                   "With --watch, also anchor lines already present");
  submit->add_option("--poll-ms", sub.poll_ms, "With --watch, poll interval");
  submit->add_option("--source-id", sub.source_id, "Producing device or layer")
      ->required();
  submit->callback([&] { action = [&] { return cmd_submit(sub); }; });

  MineOpts mo;
  auto* mine = app.add_subcommand("mine", "Seal pending transactions");
  mine->add_option("--key", mo.key, "csp-miner key file");
  mine->add_option("--chain", mo.chain, "Chain file");
  mine->add_option("--max-txs", mo.max_txs, "Transactions per block");
  mine->add_option("--timestamp", mo.timestamp, "Unix seconds");
  mine->callback([&] { action = [&] { return cmd_mine(mo); }; });

  VerifyOpts vo;
  auto* verify = app.add_subcommand("verify", "Check a presented log");
  verify->add_option("--chain", vo.chain, "Chain file or node host:port");
  verify->add_option("--log", vo.log, "Log file, or - for standard input")
      ->required();
  verify->add_option("--min-confirmations", vo.min_confirmations)
      ->check(CLI::PositiveNumber);
  verify->add_option("--custody", vo.custody, "Attestation JSON Lines file");
  verify->add_option("--proof-out", vo.proof_out,
                     "Write inclusion proofs here when accepted");
  verify->add_flag("--court", vo.court,
                   "Recompute by scanning every block instead of the index");
  verify->add_option("--expect-submitter", vo.expect_submitter,
                     "Only count anchors by this key (hex or key file)");
  verify->callback([&] { action = [&] { return cmd_verify(vo); }; });

  InspectOpts io;
  auto* inspect = app.add_subcommand("inspect", "Print chain contents as JSON");
  inspect->add_option("--chain", io.chain, "Chain file or node host:port");
  inspect->add_flag("--blocks", io.blocks, "Every block, one per line");
  inspect->add_option("--height", io.height, "One block");
  inspect->add_option("--log-hash", io.log_hash, "Where a digest is anchored");
  inspect->callback([&] { action = [&] { return cmd_inspect(io); }; });

  SimulateOpts so;
  auto* simulate = app.add_subcommand("simulate", "Run a network scenario");
  simulate->add_option("--scenario", so.scenario, "Scenario JSON file")
      ->required();
  simulate->add_option("--seed", so.seed, "Override the scenario seed");
  simulate->add_option("--trace", so.trace, "Write the message trace here");
  simulate->callback([&] { action = [&] { return cmd_simulate(so); }; });

  NodeOpts no;
  auto* nodecmd = app.add_subcommand("node", "Run a live TCP node");
  nodecmd->add_option("--role", no.role, "csp-miner | device | stakeholder")
      ->required();
  nodecmd->add_option("--key", no.key, "Node key file");
  nodecmd->add_option("--chain", no.chain, "Chain file");
  nodecmd->add_option("--listen", no.listen, "host:port (port 0 picks one)");
  nodecmd->add_option("--peer", no.peers, "Peer host:port (repeatable)");
  nodecmd->add_option("--mine-interval-ms", no.mine_interval_ms)
      ->check(CLI::PositiveNumber);
  nodecmd->callback([&] { action = [&] { return cmd_node(no); }; });

  AttestOpts ao;
  auto* attest = app.add_subcommand("attest", "Sign a custody hand-over");
  attest->add_option("--key", ao.key, "Holder key file");
  attest->add_option("--log", ao.log, "Log file, or - for standard input")
      ->required();
  attest->add_option("--timestamp", ao.timestamp, "Unix seconds received");
  attest->callback([&] { action = [&] { return cmd_attest(ao); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kFailure;
  }
  try {
    return action();
  } catch (const std::exception& e) {
    std::cerr << "bloff: error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace
}  // namespace bloff

int main(int argc, char** argv) {
  return bloff::run(argc, argv);
}
