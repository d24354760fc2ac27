// Drives the bloff executable as a user would: separate processes, files
// on disk, exit codes.

#include <algorithm>
#include <chrono>
#include <random>
#include <set>
#include <thread>

#include "bloff/node/store.h"
#include "doctest.h"
#include "json.hpp"
#include "support/fixtures.h"
#include "support/process.h"

namespace bloff {
namespace {

namespace fs = std::filesystem;
using namespace std::chrono_literals;
using nlohmann::json;
using testing::read_file;
using testing::RunResult;
using testing::TempDir;
using testing::write_file;

const std::string kCli = BLOFF_CLI;

RunResult cli(const std::vector<std::string>& args,
              const std::string& input = "", const fs::path& home = {}) {
  std::map<std::string, std::string> env;
  if (!home.empty())
    env["BLOFF_HOME"] = home.string();
  return testing::run_program(kCli, args, input, env);
}

std::string seed_hex(int n) {
  std::string s(64, '0');
  s[63] = static_cast<char>('0' + n);
  return s;
}

// A miner, a device and a stakeholder with keys on disk; genesis at
// difficulty 8 and one mined block registering the other two.
struct Workspace {
  TempDir dir;
  fs::path chain = dir / "chain.jsonl";
  fs::path miner = dir / "miner.key";
  fs::path device = dir / "device.key";
  fs::path stakeholder = dir / "stakeholder.key";

  Workspace() {
    REQUIRE(cli({"keygen", "--out", miner.string(), "--seed", seed_hex(1)})
                .exit_code == 0);
    REQUIRE(cli({"keygen", "--out", device.string(), "--seed", seed_hex(2)})
                .exit_code == 0);
    REQUIRE(cli({"keygen", "--out", stakeholder.string(), "--seed",
                 seed_hex(3)})
                .exit_code == 0);
    REQUIRE(cli({"genesis", "--authority", miner.string(), "--difficulty", "8",
                 "--out", chain.string()})
                .exit_code == 0);
    REQUIRE(cli({"register", "--key", miner.string(), "--pubkey",
                 device.string(), "--role", "device", "--chain", chain.string()})
                .exit_code == 0);
    REQUIRE(cli({"register", "--key", miner.string(), "--pubkey",
                 stakeholder.string(), "--role", "stakeholder", "--chain",
                 chain.string()})
                .exit_code == 0);
    REQUIRE(mine().exit_code == 0);
  }

  RunResult mine(const std::vector<std::string>& extra = {}) const {
    std::vector<std::string> args = {"mine", "--key", miner.string(),
                                     "--chain", chain.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return cli(args);
  }
  RunResult verify(const std::string& log,
                   const std::vector<std::string>& extra = {}) const {
    std::vector<std::string> args = {"verify", "--chain", chain.string(),
                                     "--log", "-"};
    args.insert(args.end(), extra.begin(), extra.end());
    return cli(args, log);
  }
};

TEST_CASE("keygen then genesis gives a loadable chain") {
  TempDir dir;
  RunResult k = cli({"keygen", "--out", (dir / "k.key").string()});
  REQUIRE(k.exit_code == 0);
  std::string pubkey = k.out.substr(0, 64);
  REQUIRE(cli({"genesis", "--authority", (dir / "k.key").string(), "--out",
               (dir / "chain.jsonl").string()})
              .exit_code == 0);
  Chain c = node::load_chain(dir / "chain.jsonl");
  CHECK(c.length() == 1);
  CHECK(c.difficulty() == 12);
  auto pk = PublicKey::from_hex(pubkey);
  REQUIRE(pk);
  CHECK(c.role_of(*pk) == Role::kCspMiner);

  // Defaults come from BLOFF_HOME.
  REQUIRE(cli({"keygen"}, "", dir.path()).exit_code == 0);
  CHECK(fs::exists(dir / "node.key"));
  CHECK(cli({"keygen"}, "", dir.path()).exit_code == 2);  // no overwrite
  RunResult summary = cli({"inspect"}, "", dir.path());
  REQUIRE(summary.exit_code == 0);
  CHECK(json::parse(summary.out)["height"] == 0);
}

TEST_CASE("unknown commands and flags exit 2 with usage") {
  RunResult r = cli({"frobnicate"});
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(cli({}).exit_code == 2);
  CHECK(cli({"verify", "--no-such-flag"}).exit_code == 2);
  CHECK(cli({"verify"}).exit_code == 2);  // --log is required
  CHECK(cli({"verify", "--log", "x", "--min-confirmations", "0"}).exit_code == 2);
  TempDir dir;
  CHECK(cli({"verify", "--chain", (dir / "missing").string(), "--log", "-"},
            "x")
            .exit_code == 2);
  CHECK(cli({"--help"}).exit_code == 0);
}

TEST_CASE("simulate twice gives byte-identical reports") {
  std::string scenario = std::string(BLOFF_SOURCE_DIR) +
                         "/scenarios/partition_heal.json";
  RunResult a = cli({"simulate", "--scenario", scenario, "--seed", "7"});
  RunResult b = cli({"simulate", "--scenario", scenario, "--seed", "7"});
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(json::parse(a.out)["converged"] == true);

  TempDir dir;
  cli({"simulate", "--scenario", scenario, "--trace", (dir / "t1").string()});
  cli({"simulate", "--scenario", scenario, "--trace", (dir / "t2").string()});
  CHECK(read_file(dir / "t1") == read_file(dir / "t2"));
  CHECK_FALSE(read_file(dir / "t1").empty());
}

TEST_CASE("pipeline: genesis, submit 100 lines, mine, verify") {
  Workspace ws;
  std::vector<std::string> lines;
  std::string file;
  for (int i = 0; i < 100; ++i) {
    lines.push_back("2026-10-15T08:" + std::to_string(10 + i / 60) + ":" +
                    std::to_string(i % 60) + " sensor-" + std::to_string(i % 7) +
                    " reading=" + std::to_string(i * 37 % 1000));
    file += lines.back() + "\n";
  }
  write_file(ws.dir / "device.log", file);
  RunResult sub = cli({"submit", "--key", ws.device.string(), "--chain",
                       ws.chain.string(), "--log", (ws.dir / "device.log").string(),
                       "--source-id", "gateway-1"});
  REQUIRE(sub.exit_code == 0);
  CHECK(std::count(sub.out.begin(), sub.out.end(), '\n') == 100);

  int blocks = 0;
  while (ws.mine({"--max-txs", "30"}).exit_code == 0)
    ++blocks;
  CHECK(blocks == 4);
  CHECK(ws.mine().exit_code == 1);  // nothing left

  std::set<std::string> originals(lines.begin(), lines.end());
  std::mt19937_64 rng(2024);
  int accepted = 0, rejected = 0;
  for (const std::string& line : lines) {
    if (ws.verify(line).exit_code == 0)
      ++accepted;
    std::string mutated = line;
    size_t pos = rng() % mutated.size();
    do {
      mutated[pos] = static_cast<char>(' ' + rng() % 95);
    } while (originals.count(mutated));
    RunResult r = ws.verify(mutated);
    if (r.exit_code == 1 &&
        json::parse(r.out)["outcome"] == "rejected")
      ++rejected;
  }
  CHECK(accepted == 100);
  CHECK(rejected == 100);

  // The file also verifies with a trailing newline; confirmations count.
  CHECK(ws.verify(lines[0] + "\n").exit_code == 0);
  CHECK(ws.verify(lines[0], {"--min-confirmations", "4"}).exit_code == 0);
  CHECK(ws.verify(lines[99], {"--min-confirmations", "2"}).exit_code == 1);
}

TEST_CASE("role checks: stakeholders neither anchor nor mine") {
  Workspace ws;
  write_file(ws.dir / "l.log", "a line\n");
  RunResult sub = cli({"submit", "--key", ws.stakeholder.string(), "--chain",
                       ws.chain.string(), "--log", (ws.dir / "l.log").string(),
                       "--source-id", "x"});
  CHECK(sub.exit_code == 1);
  CHECK(sub.err.find("role-not-permitted") != std::string::npos);

  REQUIRE(cli({"submit", "--key", ws.device.string(), "--chain",
               ws.chain.string(), "--log", (ws.dir / "l.log").string(),
               "--source-id", "x"})
              .exit_code == 0);
  RunResult mine = cli({"mine", "--key", ws.stakeholder.string(), "--chain",
                        ws.chain.string()});
  CHECK(mine.exit_code == 1);
  CHECK(mine.err.find("not-a-miner") != std::string::npos);
  CHECK(ws.mine().exit_code == 0);
}

TEST_CASE("investigator accepts, court rejects a substituted log") {
  Workspace ws;
  std::string genuine = "2026-10-14T22:41:07 door-3 unlock badge=1187";
  std::string forged = "2026-10-14T22:41:07 door-3 unlock badge=1188";
  write_file(ws.dir / "evidence.log", genuine + "\n");
  REQUIRE(cli({"submit", "--key", ws.device.string(), "--chain",
               ws.chain.string(), "--log", (ws.dir / "evidence.log").string(),
               "--source-id", "door-3"})
              .exit_code == 0);
  REQUIRE(ws.mine().exit_code == 0);

  fs::path proofs = ws.dir / "proofs.json";
  RunResult bob = ws.verify(genuine, {"--proof-out", proofs.string()});
  CHECK(bob.exit_code == 0);
  CHECK(json::parse(bob.out)["outcome"] == "accepted");
  CHECK(json::parse(read_file(proofs)).size() == 1);

  RunResult court = ws.verify(forged, {"--court"});
  CHECK(court.exit_code == 1);
  CHECK(json::parse(court.out)["reason"] == "not-found");
  CHECK(ws.verify(genuine, {"--court"}).exit_code == 0);

  // Custody: device hands to Bob, Bob to the court.
  std::string att;
  for (auto [key, ts] : {std::pair{ws.device, "1800000000"},
                         std::pair{ws.stakeholder, "1800000100"}}) {
    RunResult a = cli({"attest", "--key", key.string(), "--log", "-",
                       "--timestamp", ts},
                      genuine);
    REQUIRE(a.exit_code == 0);
    att += a.out;
  }
  write_file(ws.dir / "custody.jsonl", att);
  CHECK(ws.verify(genuine, {"--custody", (ws.dir / "custody.jsonl").string()})
            .exit_code == 0);
  RunResult swapped =
      ws.verify(forged, {"--custody", (ws.dir / "custody.jsonl").string()});
  CHECK(swapped.exit_code == 1);
  CHECK(json::parse(swapped.out)["pass"] == false);
}

// Three node processes on localhost: device submits, miner mines,
// stakeholder verifies.
TEST_CASE("live: three-process smoke test") {
  Workspace ws;
  std::map<std::string, fs::path> dirs;
  for (const char* n : {"miner", "device", "stakeholder"}) {
    dirs[n] = ws.dir / n;
    fs::create_directory(dirs[n]);
    fs::copy_file(ws.chain, dirs[n] / "chain.jsonl");
  }
  auto start = [&](const std::string& role, const std::string& name,
                   const fs::path& key, const std::vector<std::string>& peers) {
    std::vector<std::string> args = {
        "node", "--role", role, "--key", key.string(), "--chain",
        (dirs[name] / "chain.jsonl").string(), "--mine-interval-ms", "100"};
    for (const std::string& p : peers) {
      args.push_back("--peer");
      args.push_back(p);
    }
    return std::make_unique<testing::Background>(
        kCli, args, dirs[name] / "out.txt", dirs[name] / "err.txt");
  };

  auto miner = start("csp-miner", "miner", ws.miner, {});
  std::string miner_addr = miner->wait_for_line("listening ", 10s);
  REQUIRE_FALSE(miner_addr.empty());
  auto device = start("device", "device", ws.device, {miner_addr});
  auto stake = start("stakeholder", "stakeholder", ws.stakeholder, {miner_addr});
  std::string device_addr = device->wait_for_line("listening ", 10s);
  std::string stake_addr = stake->wait_for_line("listening ", 10s);
  REQUIRE_FALSE(device_addr.empty());
  REQUIRE_FALSE(stake_addr.empty());

  std::string line = "2026-10-15T09:00:00 plc-2 setpoint changed 40->55";
  write_file(ws.dir / "plc.log", line + "\n");
  RunResult sub = cli({"submit", "--key", ws.device.string(), "--chain",
                       device_addr, "--log", (ws.dir / "plc.log").string(),
                       "--source-id", "plc-2"});
  REQUIRE(sub.exit_code == 0);

  auto end = std::chrono::steady_clock::now() + 30s;
  int code = -1;
  while (std::chrono::steady_clock::now() < end) {
    code = cli({"verify", "--chain", stake_addr, "--log", "-"}, line).exit_code;
    if (code == 0)
      break;
    std::this_thread::sleep_for(100ms);
  }
  CHECK(code == 0);
  CHECK(cli({"verify", "--chain", stake_addr, "--log", "-"}, line + "!")
            .exit_code == 1);

  CHECK(stake->stop() == 0);
  CHECK(device->stop() == 0);
  CHECK(miner->stop() == 0);
  // The stakeholder persisted the block it received.
  CHECK(cli({"verify", "--chain", (dirs["stakeholder"] / "chain.jsonl").string(),
             "--log", "-"},
            line)
            .exit_code == 0);
  CHECK(read_file(dirs["stakeholder"] / "err.txt").find("never mine") !=
        std::string::npos);
}

}  // namespace
}  // namespace bloff
