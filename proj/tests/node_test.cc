#include <chrono>
#include <random>
#include <thread>

#include "bloff/common/error.h"
#include "bloff/node/live.h"
#include "bloff/node/store.h"
#include "bloff/verify/verify.h"
#include "doctest.h"
#include "support/fixtures.h"
#include "support/oracles.h"

namespace bloff::node {
namespace {

namespace fs = std::filesystem;
using namespace std::chrono_literals;
using testing::kGenesisTime;
using testing::TempDir;
using testing::TestNet;

template <typename F>
bool eventually(F pred, std::chrono::milliseconds limit = 10s) {
  auto end = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < end) {
    if (pred())
      return true;
    std::this_thread::sleep_for(10ms);
  }
  return pred();
}

// Extends |chain| by one block anchoring |lines| as the device.
Block grow(const TestNet& net, Chain& chain,
           const std::vector<std::string>& lines, uint64_t ts) {
  Block b = net.mine_on(chain.tip(), net.anchors(lines, ts), ts,
                        chain.registered_nodes());
  REQUIRE(chain.extend(b));
  return b;
}

TEST_CASE("create, append and reload give the same chain") {
  TestNet net;
  TempDir dir;
  Chain chain = net.base_chain();
  BlockStore store = BlockStore::create(dir / "chain.jsonl", chain);
  CHECK(load_chain(dir / "chain.jsonl") == chain);
  CHECK_THROWS_AS(BlockStore::create(dir / "chain.jsonl", chain), Error);

  for (int i = 0; i < 3; ++i) {
    Block b = grow(net, chain, {"rec " + std::to_string(i)}, kGenesisTime + 50 + i);
    CHECK(store.append(b));
  }
  CHECK(store.chain() == chain);
  Chain loaded = load_chain(dir / "chain.jsonl");
  CHECK(loaded == chain);
  CHECK(loaded.tip_hash() == chain.tip_hash());
  CHECK(testing::read_file(dir / "chain.jsonl") == serialize_chain(chain));
}

TEST_CASE("an invalid block is not written") {
  TestNet net;
  TempDir dir;
  Chain chain = net.base_chain();
  BlockStore store = BlockStore::create(dir / "chain.jsonl", chain);
  std::string before = testing::read_file(dir / "chain.jsonl");
  Block b = net.mine_on(chain.tip(), net.anchors({"x"}, 1), kGenesisTime + 50,
                        chain.registered_nodes());
  b.header.nonce ^= 1;  // breaks the work or the seal
  CHECK_FALSE(store.append(b));
  CHECK(testing::read_file(dir / "chain.jsonl") == before);
}

TEST_CASE("a failed disk write rolls back") {
  TestNet net;
  TempDir dir;
  Chain chain = net.base_chain();
  BlockStore store = BlockStore::create(dir / "chain.jsonl", chain);
  if (!fs::exists("/dev/full"))
    return;
  fs::remove(dir / "chain.jsonl");
  fs::create_symlink("/dev/full", dir / "chain.jsonl");
  Block b = grow(net, chain, {"lost"}, kGenesisTime + 50);
  try {
    store.append(b);
    FAIL("expected io-error");
  } catch (const Error& e) {
    CHECK(e.code() == "io-error");
  }
  CHECK(store.chain().tip_height() == 1);
}

TEST_CASE("reorg rewrites the file and keeps the losing blocks") {
  TestNet net;
  TempDir dir;
  Chain base = net.base_chain();
  Chain a = base, b = base;
  grow(net, a, {"a1"}, kGenesisTime + 50);
  BlockStore store = BlockStore::create(dir / "chain.jsonl", base);
  store.sync_to(a);
  CHECK(load_chain(dir / "chain.jsonl") == a);

  grow(net, b, {"b1"}, kGenesisTime + 51);
  grow(net, b, {"b2"}, kGenesisTime + 52);
  store.sync_to(b);
  CHECK(load_chain(dir / "chain.jsonl") == b);
  CHECK_FALSE(fs::exists(dir / "chain.jsonl.tmp"));
  auto forks = store.load_forks();
  REQUIRE(forks.size() == 1);
  CHECK(forks[0] == a.tip());

  store.record_fork(a.tip());
  CHECK(store.load_forks().size() == 1);
  CHECK(BlockStore::open(dir / "chain.jsonl").load_forks().size() == 1);

  Chain foreign = Chain::from_validated(
      {make_genesis(std::vector<KeyPair>{testing::test_key(77)}, 5)}, 4);
  CHECK_THROWS_AS(store.sync_to(foreign), Error);
}

TEST_CASE("persistence round trip over random node states") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 15; ++trial) {
    TestNet net;
    TempDir dir;
    NodeState state(net.base_chain());
    BlockStore store = BlockStore::create(dir / "chain.jsonl", state.chain());
    std::vector<Block> known = net.base_blocks();
    for (int i = 0; i < 8; ++i) {
      const Block& parent = known[1 + rng() % (known.size() - 1)];
      Chain ctx = net.base_chain();
      // Rebuild the registry context along the parent's branch.
      std::vector<Block> path{parent};
      while (path.back().hash() != ctx.tip_hash()) {
        for (const Block& k : known)
          if (k.hash() == path.back().header.prev_hash) {
            path.push_back(k);
            break;
          }
      }
      path.pop_back();
      for (auto it = path.rbegin(); it != path.rend(); ++it)
        REQUIRE(ctx.extend(*it));
      Block b = net.mine_on(ctx.tip(),
                            net.anchors({"t" + std::to_string(trial) + "-" +
                                         std::to_string(i)},
                                        kGenesisTime + 60 + i),
                            kGenesisTime + 60 + i, ctx.registered_nodes());
      known.push_back(b);
      state.apply_block(b);
      store.sync_to(state.chain());
      for (const Block& f : state.fork_blocks())
        store.record_fork(f);
      Chain loaded = load_chain(dir / "chain.jsonl");
      REQUIRE(loaded == state.chain());
      CHECK(loaded.tip_hash() == state.best_tip());
    }
    // A node rebuilt from the files picks the same tip.
    BlockStore reopened = BlockStore::open(dir / "chain.jsonl");
    NodeState again(reopened.chain());
    for (const Block& f : reopened.load_forks())
      again.apply_block(f);
    CHECK(again.best_tip() == state.best_tip());
    CHECK(again.fork_blocks().size() == state.fork_blocks().size());
  }
}

TEST_CASE("1000 appended blocks load in under 5 seconds") {
  TestNet net;
  TempDir dir;
  Chain chain = net.base_chain();
  BlockStore store = BlockStore::create(dir / "chain.jsonl", chain);
  for (int i = 0; i < 1000; ++i) {
    Block b = net.mine_on(store.chain().tip(),
                          net.anchors({"entry " + std::to_string(i)},
                                      kGenesisTime + 100 + i),
                          kGenesisTime + 100 + i,
                          store.chain().registered_nodes());
    REQUIRE(store.append(b));
  }
  auto t0 = std::chrono::steady_clock::now();
  Chain loaded = load_chain(dir / "chain.jsonl");
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
  MESSAGE("load of 1002 blocks took " << secs << " s");
  CHECK(secs < 5.0);
  CHECK(loaded == store.chain());
  // Index agrees with a linear scan.
  for (int i = 0; i < 1000; i += 37) {
    Digest h = sha256_digest("entry " + std::to_string(i));
    auto got = loaded.find_anchor(h);
    CHECK(std::vector<AnchorLocation>(got.begin(), got.end()) ==
          oracle::scan_anchor(loaded.blocks(), h));
  }
}

TEST_CASE("mutated chain files refuse to load with a location") {
  TestNet net;
  TempDir dir;
  Chain chain = net.base_chain();
  for (int i = 0; i < 3; ++i)
    grow(net, chain, {"m" + std::to_string(i)}, kGenesisTime + 40 + i);
  std::string text = serialize_chain(chain);
  std::mt19937_64 rng(5);
  int refused = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::string m = text;
    size_t pos;
    do {
      pos = rng() % m.size();
    } while (!std::isxdigit(static_cast<unsigned char>(m[pos])) ||
             std::isupper(static_cast<unsigned char>(m[pos])));
    const char* hex = "0123456789abcdef";
    char c;
    do {
      c = hex[rng() % 16];
    } while (c == m[pos]);
    m[pos] = c;
    testing::write_file(dir / "chain.jsonl", m);
    try {
      BlockStore::open(dir / "chain.jsonl");
    } catch (const ChainLoadError& e) {
      CHECK((e.line() || e.height()));
      ++refused;
    }
  }
  CHECK(refused == 300);

  testing::write_file(dir / "chain.jsonl", text.substr(0, text.size() - 10));
  try {
    load_chain(dir / "chain.jsonl");
    FAIL("expected a parse error");
  } catch (const ChainLoadError& e) {
    CHECK(e.line() == chain.length());
  }
  CHECK_THROWS_AS(load_chain(dir / "missing.jsonl"), Error);
}

TEST_CASE("mempool sidecar round trip") {
  TestNet net;
  TempDir dir;
  BlockStore store = BlockStore::create(dir / "chain.jsonl", net.base_chain());
  CHECK(store.load_mempool().empty());
  auto txs = net.anchors({"p1", "p2", "p3"}, 9);
  for (const auto& tx : txs)
    store.append_mempool(tx);
  CHECK(store.load_mempool() == txs);
  store.save_mempool(std::span(txs).first(1));
  CHECK(store.load_mempool().size() == 1);
  testing::write_file(store.paths().mempool, "{not json}\n");
  CHECK_THROWS_AS(store.load_mempool(), Error);
}

// ------------------------------------------------------------ live nodes

struct LiveFixture {
  TestNet net{8};
  TempDir dir;

  fs::path chain_for(const std::string& name) {
    fs::create_directories(dir / name);
    fs::path p = dir / name / "chain.jsonl";
    if (!fs::exists(p))
      BlockStore::create(p, net.base_chain());
    return p;
  }

  NodeConfig config(const std::string& name, Role role, const KeyPair& key,
                    std::vector<Address> peers = {}) {
    NodeConfig c;
    c.role = role;
    c.key = key;
    c.chain_file = chain_for(name);
    c.peers = std::move(peers);
    c.mine_interval = 30ms;
    c.log = [](const std::string&) {};
    return c;
  }
};

Address local(const LiveNode& n) { return {"127.0.0.1", n.port()}; }

TEST_CASE("live: device submits, miner mines, stakeholder verifies") {
  LiveFixture f;
  LiveNode miner(f.config("miner", Role::kCspMiner, f.net.miner));
  miner.start();
  LiveNode device(
      f.config("device", Role::kDevice, f.net.device, {local(miner)}));
  device.start();
  LiveNode holder(
      f.config("holder", Role::kStakeholder, f.net.stakeholder, {local(miner)}));
  holder.start();
  REQUIRE(eventually([&] { return miner.connection_count() == 2; }));

  std::vector<std::string> lines = {"auth failure uid=0", "link down eth1"};
  for (const auto& tx : f.net.anchors(lines, kGenesisTime + 500)) {
    TxAck ack = submit_remote(local(device), tx, 5s);
    CHECK(ack.status == AddStatus::kAccepted);
    CHECK(ack.tx_id == tx.id());
  }
  REQUIRE(eventually([&] {
    auto c = holder.snapshot();
    return !c->find_anchor(sha256_digest(lines[1])).empty() &&
           !c->find_anchor(sha256_digest(lines[0])).empty();
  }));
  auto view = holder.snapshot();
  CHECK(verify::verify_log(as_bytes(lines[0]), *view).accepted());
  CHECK_FALSE(verify::verify_log(as_bytes("auth failure uid=1"), *view)
                  .accepted());

  // Every node persisted the same chain.
  REQUIRE(eventually([&] {
    return device.snapshot()->tip_hash() == miner.snapshot()->tip_hash();
  }));
  holder.stop();
  device.stop();
  miner.stop();
  CHECK(load_chain(f.dir / "holder" / "chain.jsonl") == *miner.snapshot());
  CHECK(load_chain(f.dir / "device" / "chain.jsonl") == *miner.snapshot());
}

TEST_CASE("live: clients fetch a node's chain and garbage is ignored") {
  LiveFixture f;
  LiveNode miner(f.config("miner", Role::kCspMiner, f.net.miner));
  miner.start();
  {
    LineSocket s = LineSocket::connect(local(miner));
    s.write_line("this is not json");
    s.write_line(R"({"kind":"block-gossip","payload":"00","from":"x","to":"y"})");
  }
  Chain fetched = fetch_chain(local(miner), 5s);
  CHECK(fetched == *miner.snapshot());
  TxAck ack = submit_remote(local(miner),
                            build_anchor_tx(sha256_digest("o"), "s", 1,
                                            testing::test_key(99)),
                            5s);
  CHECK(ack.status == AddStatus::kInvalid);
  CHECK(ack.reason.find("unregistered") != std::string::npos);
}

TEST_CASE("live: a restarted node resumes from its file and resyncs") {
  LiveFixture f;
  LiveNode miner(f.config("miner", Role::kCspMiner, f.net.miner));
  miner.start();
  auto anchor = [&](const std::string& line) {
    auto tx = f.net.anchors({line}, kGenesisTime + 900)[0];
    REQUIRE(submit_remote(local(miner), tx, 5s).status == AddStatus::kAccepted);
    REQUIRE(eventually([&] {
      return !miner.snapshot()->find_anchor(sha256_digest(line)).empty();
    }));
  };
  uint64_t height_at_stop = 0;
  {
    LiveNode holder(f.config("holder", Role::kStakeholder, f.net.stakeholder,
                             {local(miner)}));
    holder.start();
    anchor("before restart");
    REQUIRE(eventually([&] {
      return holder.snapshot()->tip_hash() == miner.snapshot()->tip_hash();
    }));
    height_at_stop = holder.snapshot()->tip_height();
  }
  CHECK(load_chain(f.dir / "holder" / "chain.jsonl").tip_height() ==
        height_at_stop);
  anchor("while down 1");
  anchor("while down 2");
  REQUIRE(miner.snapshot()->tip_height() >= height_at_stop + 1);

  LiveNode holder(f.config("holder", Role::kStakeholder, f.net.stakeholder,
                           {local(miner)}));
  CHECK(holder.snapshot()->tip_height() == height_at_stop);
  holder.start();
  REQUIRE(eventually([&] {
    return holder.snapshot()->tip_hash() == miner.snapshot()->tip_hash();
  }));
  CHECK(verify::verify_log(as_bytes("while down 2"), *holder.snapshot())
            .accepted());
  holder.stop();
  CHECK(load_chain(f.dir / "holder" / "chain.jsonl") == *holder.snapshot());
}

TEST_CASE("live: stakeholder nodes never mine") {
  LiveFixture f;
  LiveNode holder(f.config("holder", Role::kStakeholder, f.net.stakeholder));
  holder.start();
  auto tx = f.net.anchors({"pending forever"}, kGenesisTime + 5)[0];
  CHECK(submit_remote(local(holder), tx, 5s).status == AddStatus::kAccepted);
  std::this_thread::sleep_for(400ms);  // >10 mining intervals
  CHECK(holder.snapshot()->tip_height() == 1);
  CHECK(holder.mempool_size() == 1);
}

TEST_CASE("live: startup refuses a wrong role or a corrupt chain") {
  LiveFixture f;
  CHECK_THROWS_AS(
      LiveNode(f.config("x", Role::kCspMiner, f.net.stakeholder)), Error);
  NodeConfig c = f.config("y", Role::kCspMiner, f.net.miner);
  std::string text = testing::read_file(c.chain_file);
  text[text.find("\"nonce\":") + 8] ^= 1;
  testing::write_file(c.chain_file, text);
  CHECK_THROWS_AS(LiveNode{c}, ChainLoadError);
}

}  // namespace
}  // namespace bloff::node
