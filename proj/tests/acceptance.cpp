// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "lanecoll/bench.hpp"
#include "lanecoll/hiercoll.hpp"
#include "lanecoll/klanesim.hpp"
#include "lanecoll/lanecoll.hpp"
#include "lanecoll/reference.hpp"
#include "support.hpp"

using namespace lanecoll;
using testing::CallSpec;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

std::vector<std::pair<int, int>> shapes_up_to(int pmax) {
  std::vector<std::pair<int, int>> out;
  for (int n = 1; n <= pmax; ++n) {
    for (int N = 1; n * N <= pmax; ++N) out.emplace_back(n, N);
  }
  return out;
}

std::string shape_str(int n, int N) { return "n=" + std::to_string(n) + " N=" + std::to_string(N); }

// 1. Every collective and implementation against the sequential reference.
Outcome oracle_grid() {
  Outcome o;
  testing::GridSpec spec;
  long long cases = 0;
  for (int n = 1; n <= 4; ++n) {
    for (int N = 1; N <= 4; ++N) {
      const auto res = testing::run_grid(n, N, spec);
      cases += res.cases;
      if (!res.failures.empty()) o.fail(res.failures.front());
    }
  }
  if (o.pass) o.detail = std::to_string(cases) + " cases on 16 shapes";
  return o;
}

// 2. Exact traffic of the full-lane decompositions.
Outcome traffic_formulas() {
  Outcome o;
  int shapes = 0;
  for (auto [n, N] : shapes_up_to(64)) {
    const int p = n * N;
    const std::uint64_t c = 5, cb = 7;
    const auto up = static_cast<std::uint64_t>(p), un = static_cast<std::uint64_t>(n),
               uN = static_cast<std::uint64_t>(N);
    const int root = p - 1;
    const auto recs = testing::record_calls(
        testing::world(n, N), {CallSpec{Impl::lane, Coll::allgather, c, 0},
                               CallSpec{Impl::lane, Coll::alltoall, c, 0},
                               CallSpec{Impl::lane, Coll::scatter, c, root},
                               CallSpec{Impl::lane, Coll::bcast, cb, root}});
    const std::string where = shape_str(n, N);
    for (int r = 0; r < p; ++r) {
      const auto& ag = recs[0].ledger.at(r);
      if (ag.sent_elems != (up - 1) * c || ag.recv_elems != (up - 1) * c) {
        o.fail("allgather per-rank traffic at " + where);
      }
      const auto& a2a = recs[1].ledger.at(r);
      const std::uint64_t want = 2 * up * c - (uN + un) * c;
      if (a2a.sent_elems != want || a2a.recv_elems != want) o.fail("alltoall per-rank traffic at " + where);
    }
    const auto egress = recs[2].ledger.node_egress();
    const std::uint64_t root_egress = egress.count(N - 1) ? egress.at(N - 1) : 0;
    if (root_egress != (up - un) * c) o.fail("scatter root-node egress at " + where);
    const auto ingress = recs[3].ledger.node_ingress();
    for (int j = 0; j < N; ++j) {
      if (j == root / n) continue;
      if (!ingress.count(j) || ingress.at(j) != cb) o.fail("bcast node ingress at " + where);
    }
    ++shapes;
  }
  if (o.pass) o.detail = std::to_string(shapes) + " shapes, p <= 64";
  return o;
}

// Prefix over whole nodes before j, then over the node up to and including i.
std::vector<elem_t> double_sum(const std::vector<std::vector<elem_t>>& x, int n, int j, int i,
                               bool inclusive) {
  std::vector<elem_t> s(x.front().size(), 0);
  auto add = [&](int r) {
    for (std::size_t e = 0; e < s.size(); ++e) s[e] += x[static_cast<std::size_t>(r)][e];
  };
  for (int jj = 0; jj < j; ++jj) {
    for (int ii = 0; ii < n; ++ii) add(jj * n + ii);
  }
  for (int ii = 0; ii < (inclusive ? i + 1 : i); ++ii) add(j * n + ii);
  return s;
}

// 3. Scans against the double sum evaluated directly.
Outcome scan_double_sum() {
  Outcome o;
  int shapes = 0;
  for (auto [n, N] : shapes_up_to(48)) {
    const int p = n * N;
    std::vector<std::vector<elem_t>> x;
    std::mt19937 rng(static_cast<unsigned>(p * 131 + n));
    std::uniform_int_distribution<elem_t> dist(-100000, 100000);
    for (int r = 0; r < p; ++r) {
      std::vector<elem_t> v(4);
      for (auto& e : v) e = dist(rng);
      x.push_back(v);
    }
    std::mutex mu;
    std::vector<std::string> bad;
    run_threads(testing::world(n, N), [&](Communicator& comm) {
      const int r = comm.rank();
      const int j = r / n, i = r % n;
      const auto& mine = x[static_cast<std::size_t>(r)];
      const ReduceOp sum = ReduceOp::sum();
      std::vector<elem_t> ls(4), hs(4), le(4, -1), he(4, -1);
      lane::scan(comm, std::span<const elem_t>(mine), ls, 4, sum);
      hier::scan(comm, std::span<const elem_t>(mine), hs, 4, sum);
      lane::exscan(comm, std::span<const elem_t>(mine), le, 4, sum);
      hier::exscan(comm, std::span<const elem_t>(mine), he, 4, sum);
      const auto want = double_sum(x, n, j, i, true);
      const auto want_ex = r == 0 ? std::vector<elem_t>(4, -1) : double_sum(x, n, j, i, false);
      std::lock_guard<std::mutex> lock(mu);
      if (ls != want) bad.push_back("lane scan rank " + std::to_string(r));
      if (hs != want) bad.push_back("hier scan rank " + std::to_string(r));
      if (le != want_ex) bad.push_back("lane exscan rank " + std::to_string(r));
      if (he != want_ex) bad.push_back("hier exscan rank " + std::to_string(r));
    });
    if (!bad.empty()) o.fail(bad.front() + " at " + shape_str(n, N));
    ++shapes;
  }
  if (o.pass) o.detail = std::to_string(shapes) + " shapes, p <= 48";
  return o;
}

// 4. Pipelined k-lane broadcast length against the closed form.
Outcome simulator_closed_form() {
  Outcome o;
  int runs = 0;
  for (int k : {1, 2, 4}) {
    for (int m = 2; m <= 16; ++m) {
      for (long long B = 1; B <= 32; ++B) {
        for (long long C : {1LL, 4LL}) {
          const int p = m * k;
          const long long c = B * k * C;
          const sim::KLaneConfig cfg{p, k, c, C};
          const sim::StepTrace tr = sim::simulate_broadcast(sim::build_pipeline_replica(p, k), cfg);
          ++runs;
          if (!tr.complete) o.fail("incomplete broadcast p=" + std::to_string(p) + " k=" + std::to_string(k));
          if (tr.step_count != sim::t_klane(p, k, c, C)) {
            o.fail("p=" + std::to_string(p) + " k=" + std::to_string(k) + " c=" + std::to_string(c) +
                   " C=" + std::to_string(C) + ": simulated " + std::to_string(tr.step_count) +
                   " vs " + std::to_string(sim::t_klane(p, k, c, C)));
          }
        }
      }
    }
  }
  const long long ts = sim::t_single(16, 1024, 1), tk = sim::t_klane(16, 2, 1024, 1);
  if (ts != 1038 || tk != 521) o.fail("t_single/t_klane at p=16: " + std::to_string(ts) + "/" + std::to_string(tk));
  if (static_cast<double>(ts) / static_cast<double>(tk) < 0.95 * 2) o.fail("speed-up below 0.95 k");
  if (o.pass) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d simulations; 1038/521 = %.3f", runs,
                  static_cast<double>(ts) / static_cast<double>(tk));
    o.detail = buf;
  }
  return o;
}

// 5. Non-pipelined transform within twice the k-ported step count.
Outcome transform_bound() {
  Outcome o;
  double worst = 0;
  for (int k : {2, 4}) {
    for (int p = k; p <= 64; p += k) {
      const sim::StepTrace tr = sim::simulate_kported_transform(p, k, 8);
      const int ref = sim::kported_steps(p, k);
      if (!tr.complete) o.fail("incomplete at p=" + std::to_string(p));
      if (tr.step_count > 2LL * ref) {
        o.fail("p=" + std::to_string(p) + " k=" + std::to_string(k) + ": " +
               std::to_string(tr.step_count) + " > 2*" + std::to_string(ref));
      }
      if (ref > 0) worst = std::max(worst, static_cast<double>(tr.step_count) / ref);
    }
  }
  if (o.pass) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "worst ratio %.2f", worst);
    o.detail = buf;
  }
  return o;
}

// 6. Hierarchical collectives: one off-node rank per node.
Outcome one_rank_per_node() {
  Outcome o;
  int checked = 0;
  for (auto [n, N] : shapes_up_to(32)) {
    if (N < 2) continue;
    const int p = n * N;
    std::vector<CallSpec> specs;
    for (Coll coll : all_colls()) {
      if (!supported(Impl::hier, coll)) continue;
      specs.push_back(CallSpec{Impl::hier, coll, 3, 0});
      if (is_rooted(coll)) specs.push_back(CallSpec{Impl::hier, coll, 3, p - 1});
    }
    const auto recs = testing::record_calls(testing::world(n, N), specs);
    for (std::size_t s = 0; s < specs.size(); ++s) {
      std::map<int, std::set<int>> per_node;
      for (int r : recs[s].ledger.offnode_ranks()) per_node[r / n].insert(r);
      bool ok = per_node.size() == static_cast<std::size_t>(N);
      for (const auto& [node, ranks] : per_node) ok = ok && ranks.size() == 1;
      if (!ok) {
        o.fail(to_string(specs[s].coll) + " root=" + std::to_string(specs[s].root) + " at " + shape_str(n, N));
      }
      ++checked;
    }
  }
  if (o.pass) o.detail = std::to_string(checked) + " calls, p <= 32";
  return o;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 7. Benchmark harness rules.
Outcome harness_fidelity() {
  Outcome o;
  for (auto [n, N] : shapes_up_to(64)) {
    const int p = n * N;
    for (int r = 0; r < p; ++r) {
      if (bench::lane_send_partner(r, n, p) != (r + n) % p) o.fail("send partner");
      if (bench::lane_recv_partner(r, n, p) != ((r - n) % p + p) % p) o.fail("recv partner");
    }
  }
  for (std::size_t c = 0; c <= 200; ++c) {
    for (int k = 1; k <= 8; ++k) {
      for (int i = 0; i < 10; ++i) {
        const std::size_t want = i >= k ? 0 : c / static_cast<std::size_t>(k) + (i == 0 ? c % static_cast<std::size_t>(k) : 0);
        if (bench::lane_share(c, k, i) != want) o.fail("lane split c=" + std::to_string(c));
      }
    }
  }

  const std::vector<bench::Row> golden_rows{
      {"base", 2, 2, 4, 8, 1024, 153.25, 97.0, true},
      {"lane", 2, 2, 4, 8, 1024, 88.13, 61.99, true},
      {"hier", 2, 2, 4, 8, 1024, 120.0, 0.0149, true},
      {"lane-pattern", 1, 4, 2, 8, 0, 0.0, 0.0, true},
  };
  if (bench::emit_csv(golden_rows) != read_file(std::string(LANECOLL_GOLDEN_DIR) + "/bench.csv")) {
    o.fail("CSV differs from the golden file");
  }

  // avg >= min on every row of every kind.
  int rows = 0;
  for (bench::Kind kind : {bench::Kind::lane, bench::Kind::multicoll, bench::Kind::coll}) {
    bench::BenchConfig cfg;
    cfg.nodes = 2;
    cfg.ppn = 3;
    cfg.count = 96;
    cfg.reps = 10;
    cfg.warmup = 2;
    cfg.inner_iters = 5;
    const std::vector<Coll> colls = kind == bench::Kind::coll ? all_colls() : std::vector<Coll>{Coll::bcast};
    for (Coll coll : colls) {
      cfg.coll = coll;
      std::vector<bench::Row> out = kind == bench::Kind::lane        ? bench::run_lane_pattern(cfg)
                                    : kind == bench::Kind::multicoll ? bench::run_multicoll(cfg)
                                                                     : bench::run_collective(cfg);
      for (const bench::Row& r : out) {
        ++rows;
        if (!(r.avg_us >= r.min_us)) o.fail("avg < min in a " + r.impl + " row");
        if (!r.verified) o.fail("unverified row");
      }
    }
  }

  // An injected slow first repetition must not reach the statistics.
  bench::BenchConfig slow;
  slow.kind = bench::Kind::coll;
  slow.nodes = 2;
  slow.ppn = 2;
  slow.count = 16;
  slow.coll = Coll::allreduce;
  slow.impl = Impl::lane;
  slow.reps = 6;
  slow.warmup = 1;
  slow.rep_hook = [](int rep, int rank) {
    if (rep == 0 && rank == 0) std::this_thread::sleep_for(std::chrono::milliseconds(300));
  };
  const bench::Row row = bench::run_collective(slow).at(0);
  if (row.avg_us >= 100000.0 || row.min_us >= 100000.0) o.fail("warmup repetition leaked into avg/min");

  if (o.pass) o.detail = std::to_string(rows) + " rows, golden CSV, warmup exclusion";
  return o;
}

// 8. Thread and TCP transports: same results, same traffic.
Outcome transport_equivalence() {
  Outcome o;
  int calls = 0;
  for (auto [n, N] : shapes_up_to(8)) {
    const int p = n * N;
    std::vector<CallSpec> specs;
    for (Coll coll : all_colls()) {
      for (Impl impl : all_impls()) {
        if (!supported(impl, coll)) continue;
        for (std::size_t c : {std::size_t{0}, std::size_t{3}, std::size_t{17}}) {
          specs.push_back(CallSpec{impl, coll, c, (p - 1) / 2 + static_cast<int>(c) % p, "sum", c + 1});
          specs.back().root %= p;
        }
      }
    }
    const auto th = testing::record_calls(testing::world(n, N), specs);
    const auto tcp = testing::record_calls_tcp(n, N, specs);
    for (std::size_t s = 0; s < specs.size(); ++s) {
      const std::string what = to_string(specs[s].impl) + " " + to_string(specs[s].coll) + " at " + shape_str(n, N);
      if (th[s].outputs != tcp[s].outputs) o.fail("results differ: " + what);
      if (!th[s].ledger.same_traffic(tcp[s].ledger)) o.fail("ledgers differ: " + what);
      ++calls;
    }
  }
  if (o.pass) o.detail = std::to_string(calls) + " calls on " + std::to_string(shapes_up_to(8).size()) + " shapes";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"oracle equivalence", oracle_grid},
      {"traffic formulas", traffic_formulas},
      {"scan double sum", scan_double_sum},
      {"simulator vs closed forms", simulator_closed_form},
      {"non-pipelined transform bound", transform_bound},
      {"one off-node rank per node", one_rank_per_node},
      {"harness fidelity", harness_fidelity},
      {"transport equivalence", transport_equivalence},
  };
  int failed = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s (%.1f s): %s\n", out.pass ? "PASS" : "FAIL", index, c.name, secs,
                out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
