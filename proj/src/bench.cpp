#include "lanecoll/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>

#include "lanecoll/reference.hpp"
#include "lanecoll/thread_transport.hpp"
#include "lanecoll/topology.hpp"

namespace lanecoll::bench {

void BenchConfig::validate() const {
  LANECOLL_REQUIRE(nodes >= 1 && ppn >= 1, "need at least one node and one process per node");
  LANECOLL_REQUIRE(lanes >= 0 && lanes <= ppn, "lanes must satisfy 0 <= k <= n");
  LANECOLL_REQUIRE(reps > warmup && warmup >= 0, "reps must exceed warmup");
  LANECOLL_REQUIRE(inner_iters >= 1, "inner iterations must be positive");
  LANECOLL_REQUIRE(root >= 0 && root < p(), "root out of range");
}

int lane_send_partner(int rank, int n, int p) { return (rank + n) % p; }
int lane_recv_partner(int rank, int n, int p) { return ((rank - n) % p + p) % p; }

std::size_t lane_share(std::size_t c, int k, int noderank) {
  LANECOLL_REQUIRE(k >= 1, "at least one lane");
  if (noderank >= k) return 0;
  const auto uk = static_cast<std::size_t>(k);
  return c / uk + (noderank == 0 ? c % uk : 0);
}

Timing summarize(const std::vector<double>& completion_us, int warmup) {
  LANECOLL_REQUIRE(warmup >= 0 && static_cast<std::size_t>(warmup) < completion_us.size(),
                   "no repetitions left after warmup");
  const auto first = completion_us.begin() + warmup;
  Timing t;
  t.avg_us = std::accumulate(first, completion_us.end(), 0.0) /
             static_cast<double>(completion_us.end() - first);
  t.min_us = *std::min_element(first, completion_us.end());
  return t;
}

std::vector<double> time_reps(const Communicator& world, int reps,
                              const std::function<void(int rep)>& body,
                              const std::function<void(int rep, int rank)>& hook) {
  using clock = std::chrono::steady_clock;
  std::vector<elem_t> mine;
  mine.reserve(static_cast<std::size_t>(reps) * 2);
  for (int rep = 0; rep < reps; ++rep) {
    barrier(world);
    const auto t0 = clock::now();
    if (hook) hook(rep, world.rank());
    body(rep);
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0).count();
    mine.push_back(static_cast<elem_t>(ns & 0x7fffffff));
    mine.push_back(static_cast<elem_t>(ns >> 31));
  }
  // Times travel after the last repetition so they never perturb it.
  const auto all = world.allgather_control(mine);
  std::vector<double> completion(static_cast<std::size_t>(reps), 0.0);
  for (const auto& v : all) {
    for (std::size_t rep = 0; rep < completion.size(); ++rep) {
      const long long ns = static_cast<long long>(v[2 * rep]) |
                           (static_cast<long long>(v[2 * rep + 1]) << 31);
      completion[rep] = std::max(completion[rep], static_cast<double>(ns) / 1000.0);
    }
  }
  return completion;
}

namespace {

std::vector<int> lane_sweep(const BenchConfig& cfg) {
  std::vector<int> ks;
  if (cfg.lanes > 0) {
    ks.push_back(cfg.lanes);
  } else {
    for (int k = 1; k <= cfg.ppn; ++k) ks.push_back(k);
  }
  return ks;
}

Row make_row(const BenchConfig& cfg, const std::string& impl, int k, const Timing& t, bool verified) {
  return Row{impl, k, cfg.ppn, cfg.nodes, cfg.p(), cfg.count, t.avg_us, t.min_us, verified};
}

void check_world(const Communicator& world, const BenchConfig& cfg) {
  cfg.validate();
  LANECOLL_REQUIRE(world.size() == cfg.p(), "world size does not match nodes*ppn");
}

}  // namespace

std::vector<Row> lane_pattern_on(const Communicator& world, const BenchConfig& cfg) {
  check_world(world, cfg);
  const Communicator comm = world.dup();
  const int p = comm.size();
  const int n = cfg.ppn;
  const int me = comm.rank();
  const int noderank = me % n;
  std::vector<Row> rows;
  for (int k : lane_sweep(cfg)) {
    const std::size_t share = lane_share(cfg.count, k, noderank);
    std::vector<elem_t> sendbuf(share, me), recvbuf(share);
    const int to = lane_send_partner(me, n, p);
    const int from = lane_recv_partner(me, n, p);
    auto body = [&](int) {
      const std::uint32_t tag = comm.next_tag();
      if (noderank >= k) return;
      for (int it = 0; it < cfg.inner_iters; ++it) {
        comm.sendrecv(to, CMsg(sendbuf, share), from, Msg(recvbuf, share), tag);
      }
    };
    const auto times = time_reps(comm, cfg.reps, body, cfg.rep_hook);
    rows.push_back(make_row(cfg, "lane-pattern", k, summarize(times, cfg.warmup), true));
  }
  return rows;
}

std::vector<Row> multicoll_on(const Communicator& world, const BenchConfig& cfg) {
  check_world(world, cfg);
  const LaneDecomposition d = decompose(world, WorldShape::regular(cfg.nodes, cfg.ppn));
  LANECOLL_REQUIRE(d.regular, "multi-collective benchmark needs a regular world");
  const std::size_t block = cfg.count / static_cast<std::size_t>(cfg.nodes);
  const std::size_t total = block * static_cast<std::size_t>(cfg.nodes);
  std::vector<elem_t> sendbuf(total, world.rank()), recvbuf(total);
  std::vector<Row> rows;
  for (int k : lane_sweep(cfg)) {
    auto body = [&](int) {
      if (d.noderank() < k) base::alltoall(d.lanecomm, CMsg(sendbuf, block), Msg(recvbuf, block));
    };
    const auto times = time_reps(world, cfg.reps, body, cfg.rep_hook);
    rows.push_back(make_row(cfg, "multicoll", k, summarize(times, cfg.warmup), true));
  }
  return rows;
}

std::vector<Row> collective_on(const Communicator& world, const BenchConfig& cfg) {
  check_world(world, cfg);
  const int p = world.size();
  const int me = world.rank();
  const ReduceOp op = ReduceOp::by_name(cfg.op);
  const Coll coll = cfg.coll;
  const std::size_t c = cfg.count;
  const int k = cfg.lanes == 0 ? cfg.ppn : cfg.lanes;

  std::vector<Impl> impls;
  if (cfg.impl) {
    LANECOLL_REQUIRE(supported(*cfg.impl, coll),
                     to_string(*cfg.impl) + " has no " + to_string(coll) + " implementation");
    impls.push_back(*cfg.impl);
  } else {
    for (Impl impl : all_impls()) {
      if (supported(impl, coll)) impls.push_back(impl);
    }
  }

  std::vector<std::vector<elem_t>> inputs;
  for (int r = 0; r < p; ++r) inputs.push_back(reference::input_for(coll, p, c, r, cfg.root, cfg.seed));
  const std::vector<elem_t>& send = inputs[static_cast<std::size_t>(me)];
  auto fresh_recv = [&]() {
    std::vector<elem_t> recv = reference::make_recv_init(me, recv_length(coll, p, c, me, cfg.root));
    if (coll == Coll::bcast && me == cfg.root) std::copy(send.begin(), send.end(), recv.begin());
    return recv;
  };

  // Every implementation is verified before any of them is timed.
  for (Impl impl : impls) {
    std::vector<elem_t> recv = fresh_recv();
    const std::vector<elem_t> init = recv;
    invoke(impl, coll, world, send, recv, c, cfg.root, op);
    if (cfg.verify_hook) cfg.verify_hook(me, recv);
    const bool ok = recv == reference::expected(coll, inputs, init, me, c, cfg.root, op);
    const auto all = world.allgather_control({ok ? 1 : 0});
    for (std::size_t r = 0; r < all.size(); ++r) {
      if (all[r].at(0) != 1) {
        throw VerificationFailure(to_string(impl) + " " + to_string(coll) +
                                  " output differs from the reference at rank " + std::to_string(r));
      }
    }
  }

  std::vector<Row> rows;
  for (Impl impl : impls) {
    std::vector<elem_t> recv = fresh_recv();
    auto body = [&](int) { invoke(impl, coll, world, send, recv, c, cfg.root, op); };
    const auto times = time_reps(world, cfg.reps, body, cfg.rep_hook);
    rows.push_back(make_row(cfg, to_string(impl), k, summarize(times, cfg.warmup), true));
  }
  return rows;
}

std::vector<Row> run_on(const Communicator& world, const BenchConfig& cfg) {
  switch (cfg.kind) {
    case Kind::lane: return lane_pattern_on(world, cfg);
    case Kind::multicoll: return multicoll_on(world, cfg);
    case Kind::coll: return collective_on(world, cfg);
  }
  return {};
}

namespace {

std::vector<Row> run_threaded(BenchConfig cfg, Kind kind) {
  cfg.kind = kind;
  cfg.validate();
  std::vector<Row> rows;
  std::mutex mu;
  run_threads(regular_world(cfg.nodes, cfg.ppn), [&](Communicator& world) {
    auto mine = run_on(world, cfg);
    if (world.rank() == 0) {
      std::lock_guard<std::mutex> lock(mu);
      rows = std::move(mine);
    }
  });
  return rows;
}

}  // namespace

std::vector<Row> run_lane_pattern(const BenchConfig& cfg) { return run_threaded(cfg, Kind::lane); }
std::vector<Row> run_multicoll(const BenchConfig& cfg) { return run_threaded(cfg, Kind::multicoll); }
std::vector<Row> run_collective(const BenchConfig& cfg) { return run_threaded(cfg, Kind::coll); }

namespace {
std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
}  // namespace

std::string emit_csv(const std::vector<Row>& rows) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const Row& r : rows) {
    os << r.impl << ',' << r.k << ',' << r.n << ',' << r.N << ',' << r.p << ',' << r.c << ','
       << fixed2(r.avg_us) << ',' << fixed2(r.min_us) << ',' << (r.verified ? "true" : "false")
       << '\n';
  }
  return os.str();
}

std::string emit_table(const std::vector<Row>& rows) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %4s %4s %4s %5s %10s %14s %14s %8s\n", "impl", "k", "n",
                "N", "p", "c", "avg (us)", "min (us)", "verified");
  os << line;
  for (const Row& r : rows) {
    std::snprintf(line, sizeof line, "%-14s %4d %4d %4d %5d %10zu %14.2f %14.2f %8s\n",
                  r.impl.c_str(), r.k, r.n, r.N, r.p, r.c, r.avg_us, r.min_us,
                  r.verified ? "true" : "false");
    os << line;
  }
  return os.str();
}

}  // namespace lanecoll::bench
