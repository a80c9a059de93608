#include <doctest.h>

#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "lanecoll/bench.hpp"
#include "lanecoll/thread_transport.hpp"
#include "lanecoll/topology.hpp"
#include "support.hpp"

using namespace lanecoll;
using namespace lanecoll::bench;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::istringstream cs(line);
    std::string cell;
    while (std::getline(cs, cell, ',')) cells.push_back(cell);
    out.push_back(cells);
  }
  return out;
}

BenchConfig small(Kind kind, int n, int N) {
  BenchConfig cfg;
  cfg.kind = kind;
  cfg.ppn = n;
  cfg.nodes = N;
  cfg.count = 64;
  cfg.reps = 8;
  cfg.warmup = 2;
  cfg.inner_iters = 3;
  return cfg;
}

}  // namespace

TEST_CASE("lane pattern partners") {
  CHECK(lane_send_partner(1, 2, 6) == 3);
  CHECK(lane_recv_partner(1, 2, 6) == 5);
  for (int n = 1; n <= 5; ++n) {
    for (int N = 1; N <= 5; ++N) {
      const int p = n * N;
      for (int r = 0; r < p; ++r) {
        CHECK(lane_send_partner(r, n, p) == (r + n) % p);
        CHECK(lane_recv_partner(lane_send_partner(r, n, p), n, p) == r);
        CHECK(lane_send_partner(r, n, p) % n == r % n);
      }
    }
  }
}

TEST_CASE("lane pattern split") {
  CHECK(lane_share(10, 4, 0) == 4);
  CHECK(lane_share(10, 4, 1) == 2);
  CHECK(lane_share(10, 4, 3) == 2);
  CHECK(lane_share(10, 4, 4) == 0);
  for (std::size_t c : {0u, 1u, 7u, 100u, 1001u}) {
    for (int k = 1; k <= 8; ++k) {
      std::size_t total = 0;
      for (int i = 0; i < 10; ++i) total += lane_share(c, k, i);
      CHECK(total == c);
    }
  }
}

TEST_CASE("k=1 sends everything through noderank 0") {
  BenchConfig cfg = small(Kind::lane, 3, 2);
  cfg.lanes = 1;
  std::mutex mu;
  CostLedger ledger;
  run_threads(testing::world(3, 2), [&](Communicator& comm) {
    reset_ledger(comm);
    lane_pattern_on(comm, cfg);
    barrier(comm);
    CostLedger l = ledger_snapshot(comm);
    std::lock_guard<std::mutex> lock(mu);
    if (comm.rank() == 0) ledger = l;
  });
  for (int r = 0; r < 6; ++r) {
    const std::uint64_t want = r % 3 == 0 ? 64u * 3u * 8u : 0u;
    CHECK(ledger.at(r).sent_elems == want);
    CHECK(ledger.at(r).offnode_sent == want);
  }
}

TEST_CASE("k lanes move the split counts") {
  BenchConfig cfg = small(Kind::lane, 4, 2);
  cfg.lanes = 4;
  cfg.count = 10;
  cfg.reps = 3;
  cfg.warmup = 1;
  cfg.inner_iters = 1;
  std::mutex mu;
  CostLedger ledger;
  run_threads(testing::world(4, 2), [&](Communicator& comm) {
    reset_ledger(comm);
    lane_pattern_on(comm, cfg);
    barrier(comm);
    CostLedger l = ledger_snapshot(comm);
    std::lock_guard<std::mutex> lock(mu);
    if (comm.rank() == 0) ledger = l;
  });
  const std::vector<std::uint64_t> per_rep{4, 2, 2, 2};
  for (int r = 0; r < 8; ++r) CHECK(ledger.at(r).sent_elems == 3 * per_rep[static_cast<std::size_t>(r % 4)]);
}

TEST_CASE("summary drops warmup") {
  const Timing t = summarize({1000.0, 5.0, 3.0, 4.0}, 1);
  CHECK(t.avg_us == doctest::Approx(4.0));
  CHECK(t.min_us == 3.0);
  CHECK_THROWS_AS(summarize({1.0}, 1), ContractViolation);
}

TEST_CASE("slow warmup repetitions never show") {
  auto run = [](int warmup) {
    BenchConfig cfg = small(Kind::coll, 2, 2);
    cfg.coll = Coll::allgather;
    cfg.impl = Impl::lane;
    cfg.reps = 4;
    cfg.warmup = warmup;
    cfg.rep_hook = [](int rep, int rank) {
      if (rep == 0 && rank == 3) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    };
    return run_collective(cfg).at(0);
  };
  const Row with = run(1);
  CHECK(with.avg_us < 100000.0);
  CHECK(with.min_us < 100000.0);
  const Row without = run(0);
  CHECK(without.avg_us >= 50000.0);
}

TEST_CASE("completion time is the slowest rank") {
  std::vector<double> times;
  std::mutex mu;
  run_threads(testing::world(2, 2), [&](Communicator& comm) {
    auto t = time_reps(comm, 3, [](int) {}, [](int rep, int rank) {
      if (rank == 2 && rep == 1) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    });
    std::lock_guard<std::mutex> lock(mu);
    if (comm.rank() == 0) times = t;
  });
  REQUIRE(times.size() == 3);
  CHECK(times[1] >= 50000.0);
}

TEST_CASE("collective rows: verified, ordered, avg >= min") {
  BenchConfig cfg = small(Kind::coll, 2, 4);
  cfg.count = 1024;
  cfg.coll = Coll::bcast;
  const auto rows = run_collective(cfg);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].impl == "base");
  CHECK(rows[1].impl == "lane");
  CHECK(rows[2].impl == "hier");
  for (const Row& r : rows) {
    CHECK(r.verified);
    CHECK(r.p == 8);
    CHECK(r.avg_us >= r.min_us);
  }
  cfg.coll = Coll::alltoall;
  cfg.count = 0;
  const auto a2a = run_collective(cfg);
  CHECK(a2a.size() == 2);
  for (const Row& r : a2a) CHECK(r.impl != "hier");
}

TEST_CASE("every benchmark kind keeps avg >= min") {
  for (Kind kind : {Kind::lane, Kind::multicoll, Kind::coll}) {
    BenchConfig cfg = small(kind, 3, 2);
    cfg.coll = Coll::allreduce;
    std::vector<Row> rows = kind == Kind::lane        ? run_lane_pattern(cfg)
                            : kind == Kind::multicoll ? run_multicoll(cfg)
                                                      : run_collective(cfg);
    CHECK_FALSE(rows.empty());
    for (const Row& r : rows) CHECK(r.avg_us >= r.min_us);
    if (kind != Kind::coll) {
      REQUIRE(rows.size() == 3);
      for (int k = 1; k <= 3; ++k) CHECK(rows[static_cast<std::size_t>(k - 1)].k == k);
    }
  }
}

TEST_CASE("a wrong result stops the benchmark before timing") {
  BenchConfig cfg = small(Kind::coll, 2, 2);
  cfg.coll = Coll::allreduce;
  cfg.count = 4;
  int timed = 0;
  std::mutex mu;
  cfg.rep_hook = [&](int, int) {
    std::lock_guard<std::mutex> lock(mu);
    ++timed;
  };
  cfg.verify_hook = [](int rank, std::span<elem_t> out) {
    if (rank == 1 && !out.empty()) out[0] += 1;
  };
  std::vector<Row> rows;
  CHECK_THROWS_AS(rows = run_collective(cfg), VerificationFailure);
  CHECK(rows.empty());
  CHECK(timed == 0);
}

TEST_CASE("config validation") {
  BenchConfig cfg;
  cfg.lanes = 3;
  cfg.ppn = 2;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg.lanes = 0;
  cfg.reps = 5;
  cfg.warmup = 5;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg.reps = 6;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("CSV matches the golden file") {
  const std::vector<Row> rows{
      {"base", 2, 2, 4, 8, 1024, 153.25, 97.0, true},
      {"lane", 2, 2, 4, 8, 1024, 88.13, 61.99, true},
      {"hier", 2, 2, 4, 8, 1024, 120.0, 0.0149, true},
      {"lane-pattern", 1, 4, 2, 8, 0, 0.0, 0.0, true},
  };
  CHECK(emit_csv(rows) == read_file(std::string(LANECOLL_GOLDEN_DIR) + "/bench.csv"));
  CHECK(emit_csv({}) == std::string(kCsvHeader) + "\n");
}

TEST_CASE("CSV round-trips through a parser with a fixed column set") {
  BenchConfig cfg = small(Kind::multicoll, 2, 2);
  const auto rows = run_multicoll(cfg);
  const auto table = parse_csv(emit_csv(rows));
  REQUIRE(table.size() == rows.size() + 1);
  CHECK(table[0] == std::vector<std::string>{"impl", "k", "n", "N", "p", "c", "avg_us", "min_us", "verified"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& cells = table[i + 1];
    REQUIRE(cells.size() == 9);
    CHECK(cells[0] == rows[i].impl);
    CHECK(std::stoi(cells[1]) == rows[i].k);
    CHECK(std::stod(cells[6]) >= std::stod(cells[7]));
    CHECK(cells[6].find('.') == cells[6].size() - 3);
    CHECK(cells[8] == "true");
  }
  CHECK(emit_table(rows).find("avg (us)") != std::string::npos);
}
