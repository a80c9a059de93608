// Command-line harness: lane-pattern, multi-collective and collective
// benchmarks over the thread or TCP transport, and the k-lane simulator.

#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "lanecoll/bench.hpp"
#include "lanecoll/klanesim.hpp"
#include "lanecoll/tcp_transport.hpp"
#include "lanecoll/thread_transport.hpp"

using namespace lanecoll;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTransport = 1;
constexpr int kExitVerify = 2;

struct BenchArgs {
  std::string kind;
  std::string coll = "bcast";
  std::string impl;
  std::string transport = "thread";
  std::string output = "csv";
  int rank = -1;
};

void print_rows(const std::vector<bench::Row>& rows, const std::string& output) {
  std::cout << (output == "table" ? bench::emit_table(rows) : bench::emit_csv(rows));
  std::cout.flush();
}

void print_metadata(const bench::BenchConfig& cfg, const std::string& transport) {
  std::cerr << "# transport=" << transport << " p=" << cfg.p() << " n=" << cfg.ppn
            << " N=" << cfg.nodes << " reps=" << cfg.reps << " warmup=" << cfg.warmup
            << " seed=" << cfg.seed << "\n"
            << "# timings are desk-scale, not comparable to cluster measurements\n"
            << "# process pinning not applied\n";
}

// One rank of a TCP world. Returns the exit code.
int tcp_rank(const bench::BenchConfig& cfg, const TcpConfig& tcfg, TcpListener listener,
             const std::string& output) {
  try {
    auto ep = connect_tcp(tcfg, std::move(listener));
    Communicator world = Communicator::world(ep);
    auto rows = bench::run_on(world, cfg);
    barrier(world);
    if (world.rank() == 0) print_rows(rows, output);
    return kExitOk;
  } catch (const bench::VerificationFailure& e) {
    if (tcfg.rank == 0) std::cerr << "verification failed: " << e.what() << "\n";
    return kExitVerify;
  } catch (const std::exception& e) {
    std::cerr << "rank " << tcfg.rank << ": " << e.what() << "\n";
    return kExitTransport;
  }
}

int run_tcp(const bench::BenchConfig& cfg, const BenchArgs& args) {
  std::string where = cfg.rendezvous.empty() ? rendezvous_from_env() : cfg.rendezvous;
  TcpConfig tcfg;
  tcfg.node_of = regular_world(cfg.nodes, cfg.ppn).node_of;

  if (args.rank >= 0) {
    // A single rank of a world launched elsewhere.
    LANECOLL_REQUIRE(!where.empty(), "--rank needs --rendezvous or LANECOLL_RENDEZVOUS");
    tcfg.rendezvous = parse_host_port(where);
    tcfg.rank = args.rank;
    return tcp_rank(cfg, tcfg, TcpListener{}, args.output);
  }

  // Local launch: bind the rendezvous first so children know the port,
  // then fork one process per non-zero rank.
  HostPort hp = where.empty() ? HostPort{"127.0.0.1", 0} : parse_host_port(where);
  TcpListener listener = TcpListener::bind(hp.host, hp.port);
  tcfg.rendezvous = HostPort{hp.host, listener.port()};
  std::cout.flush();
  std::vector<pid_t> children;
  for (int r = 1; r < cfg.p(); ++r) {
    const pid_t pid = fork();
    if (pid < 0) {
      std::perror("fork");
      return kExitTransport;
    }
    if (pid == 0) {
      ::close(listener.release());
      TcpConfig mine = tcfg;
      mine.rank = r;
      std::_Exit(tcp_rank(cfg, mine, TcpListener{}, args.output));
    }
    children.push_back(pid);
  }
  tcfg.rank = 0;
  int code = tcp_rank(cfg, tcfg, std::move(listener), args.output);
  for (pid_t pid : children) {
    int status = 0;
    waitpid(pid, &status, 0);
    const int child = WIFEXITED(status) ? WEXITSTATUS(status) : kExitTransport;
    if (child == kExitVerify) code = kExitVerify;
    if (child != kExitOk && code == kExitOk) code = child;
  }
  return code;
}

int run_bench(bench::BenchConfig cfg, const BenchArgs& args) {
  if (args.kind == "lane") cfg.kind = bench::Kind::lane;
  if (args.kind == "multicoll") cfg.kind = bench::Kind::multicoll;
  if (args.kind == "coll") cfg.kind = bench::Kind::coll;
  cfg.coll = coll_from_string(args.coll);
  if (!args.impl.empty()) cfg.impl = impl_from_string(args.impl);
  cfg.validate();
  print_metadata(cfg, args.transport);

  if (args.transport == "tcp") {
    cfg.transport = bench::TransportKind::tcp;
    return run_tcp(cfg, args);
  }
  try {
    std::vector<bench::Row> rows;
    switch (cfg.kind) {
      case bench::Kind::lane: rows = bench::run_lane_pattern(cfg); break;
      case bench::Kind::multicoll: rows = bench::run_multicoll(cfg); break;
      case bench::Kind::coll: rows = bench::run_collective(cfg); break;
    }
    print_rows(rows, args.output);
    return kExitOk;
  } catch (const bench::VerificationFailure& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kExitVerify;
  }
}

int run_sim(const sim::KLaneConfig& cfg) {
  const sim::CommGraph g = sim::build_pipeline_replica(cfg.p, cfg.k);
  const sim::StepTrace tr = sim::simulate_broadcast(g, cfg);
  std::cout << sim::pipeline_csv(cfg, tr);
  std::cerr << "# t_single=" << sim::t_single(cfg.p, cfg.c, cfg.C)
            << " complete=" << (tr.complete ? "true" : "false");
  if (tr.short_pipeline) std::cerr << " short-pipeline";
  if (tr.idle_phases) std::cerr << " idle-phases";
  std::cerr << "\n";
  return tr.complete ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full-lane and hierarchical collectives: benchmarks and k-lane simulator"};
  app.require_subcommand(1);

  bench::BenchConfig cfg;
  BenchArgs args;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark");
  bench_cmd->add_option("kind", args.kind, "Benchmark")
      ->required()
      ->check(CLI::IsMember({"lane", "multicoll", "coll"}));
  bench_cmd->add_option("--nodes", cfg.nodes, "Nodes N")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--ppn", cfg.ppn, "Processes per node n")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--lanes", cfg.lanes, "Virtual lanes k (default: sweep 1..n)");
  bench_cmd->add_option("--count", cfg.count, "Element count c");
  bench_cmd->add_option("--coll", args.coll, "Collective")
      ->check(CLI::IsMember({"bcast", "gather", "scatter", "allgather", "alltoall", "reduce",
                             "allreduce", "reduce_scatter_block", "scan", "exscan"}));
  bench_cmd->add_option("--impl", args.impl, "Implementation (default: all)")
      ->check(CLI::IsMember({"base", "lane", "hier"}));
  bench_cmd->add_option("--op", cfg.op, "Reduction operator");
  bench_cmd->add_option("--root", cfg.root, "Root rank");
  bench_cmd->add_option("--reps", cfg.reps, "Repetitions");
  bench_cmd->add_option("--warmup", cfg.warmup, "Untimed leading repetitions");
  bench_cmd->add_option("--inner", cfg.inner_iters, "Lane pattern iterations per repetition");
  bench_cmd->add_option("--transport", args.transport, "Transport")
      ->check(CLI::IsMember({"thread", "tcp"}));
  bench_cmd->add_option("--rendezvous", cfg.rendezvous, "Rank 0 address host:port");
  bench_cmd->add_option("--rank", args.rank, "Run only this rank (TCP)");
  bench_cmd->add_option("--seed", cfg.seed, "Input seed");
  bench_cmd->add_option("--output", args.output, "Output format")
      ->check(CLI::IsMember({"csv", "table"}));

  sim::KLaneConfig scfg;
  auto* sim_cmd = app.add_subcommand("sim", "k-lane model simulator");
  auto* pipe_cmd = sim_cmd->add_subcommand("pipeline", "Pipelined replica broadcast");
  sim_cmd->require_subcommand(1);
  pipe_cmd->add_option("--p", scfg.p, "Processors")->required();
  pipe_cmd->add_option("--k", scfg.k, "Lanes per node")->required();
  pipe_cmd->add_option("--c", scfg.c, "Message size")->required();
  pipe_cmd->add_option("--block", scfg.C, "Pipeline block size")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench_cmd) return run_bench(cfg, args);
    if (*pipe_cmd) return run_sim(scfg);
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTransport;
  }
  return kExitOk;
}
