#include "support.hpp"

#include <mutex>
#include <thread>

#include "lanecoll/hiercoll.hpp"
#include "lanecoll/lanecoll.hpp"
#include "lanecoll/reference.hpp"
#include "lanecoll/tcp_transport.hpp"
#include "lanecoll/topology.hpp"

namespace lanecoll::testing {

WorldConfig world(int n, int N, std::uint64_t schedule_seed) {
  WorldConfig cfg = regular_world(N, n);
  cfg.schedule_seed = schedule_seed;
  cfg.recv_timeout = std::chrono::seconds(20);
  return cfg;
}

GridResult run_grid(int n, int N, const GridSpec& spec) {
  const int p = n * N;
  GridResult result;
  std::mutex mu;
  run_threads(world(n, N), [&](Communicator& comm) {
    const int me = comm.rank();
    long long cases = 0;
    for (Coll coll : spec.colls) {
      const std::vector<std::string> ops =
          is_reduction(coll) ? spec.ops : std::vector<std::string>{spec.ops.front()};
      for (Impl impl : spec.impls) {
        if (!supported(impl, coll)) continue;
        for (std::size_t c : spec.counts) {
          for (int seed = 0; seed < spec.seeds; ++seed) {
            const int root = is_rooted(coll) ? (seed * 7 + 3) % p : 0;
            std::vector<std::vector<elem_t>> inputs;
            for (int r = 0; r < p; ++r) {
              inputs.push_back(reference::input_for(coll, p, c, r, root, static_cast<std::uint64_t>(seed)));
            }
            for (const std::string& name : ops) {
              const ReduceOp op = ReduceOp::by_name(name);
              std::vector<elem_t> recv = reference::make_recv_init(me, recv_length(coll, p, c, me, root));
              const auto& send = inputs[static_cast<std::size_t>(me)];
              if (coll == Coll::bcast && me == root) std::copy(send.begin(), send.end(), recv.begin());
              const std::vector<elem_t> init = recv;
              invoke(impl, coll, comm, send, recv, c, root, op);
              ++cases;
              if (recv != reference::expected(coll, inputs, init, me, c, root, op)) {
                std::lock_guard<std::mutex> lock(mu);
                result.failures.push_back(to_string(impl) + " " + to_string(coll) + " n=" +
                                          std::to_string(n) + " N=" + std::to_string(N) +
                                          " c=" + std::to_string(c) + " seed=" +
                                          std::to_string(seed) + " op=" + name + " rank=" +
                                          std::to_string(me));
              }
            }
          }
        }
      }
    }
    if (me == 0) {
      std::lock_guard<std::mutex> lock(mu);
      result.cases = cases;
    }
  });
  return result;
}

std::vector<std::vector<elem_t>> run_calls(const Communicator& comm,
                                           const std::vector<CallSpec>& specs,
                                           std::vector<CostLedger>& ledgers) {
  const int p = comm.size();
  const int me = comm.rank();
  // Split before counting so only the collectives' own traffic shows.
  decompose(comm);
  std::vector<std::vector<elem_t>> outputs;
  ledgers.clear();
  for (const CallSpec& s : specs) {
    const auto send = reference::input_for(s.coll, p, s.count, me, s.root, s.seed);
    std::vector<elem_t> recv = reference::make_recv_init(me, recv_length(s.coll, p, s.count, me, s.root));
    if (s.coll == Coll::bcast && me == s.root) std::copy(send.begin(), send.end(), recv.begin());
    reset_ledger(comm);
    invoke(s.impl, s.coll, comm, send, recv, s.count, s.root, ReduceOp::by_name(s.op));
    barrier(comm);
    ledgers.push_back(ledger_snapshot(comm));
    outputs.push_back(std::move(recv));
  }
  return outputs;
}

namespace {

using RankBody = std::function<void(Communicator&)>;

std::vector<CallRecord> collect(int p, const std::vector<CallSpec>& specs,
                                const std::function<void(const RankBody&)>& launch) {
  std::vector<CallRecord> recs(specs.size());
  for (auto& r : recs) r.outputs.resize(static_cast<std::size_t>(p));
  std::mutex mu;
  launch([&](Communicator& comm) {
    std::vector<CostLedger> ledgers;
    auto outs = run_calls(comm, specs, ledgers);
    std::lock_guard<std::mutex> lock(mu);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      recs[i].outputs[static_cast<std::size_t>(comm.rank())] = std::move(outs[i]);
      if (comm.rank() == 0) recs[i].ledger = std::move(ledgers[i]);
    }
  });
  return recs;
}

}  // namespace

std::vector<CallRecord> record_calls(const WorldConfig& cfg, const std::vector<CallSpec>& specs) {
  return collect(cfg.size(), specs, [&](const RankBody& body) { run_threads(cfg, body); });
}

std::vector<CallRecord> record_calls_tcp(int n, int N, const std::vector<CallSpec>& specs) {
  return collect(n * N, specs, [&](const RankBody& body) { run_tcp_world(n, N, body); });
}

CallRecord record_call(Impl impl, Coll coll, int n, int N, std::size_t count, int root,
                       const ReduceOp& op, std::uint64_t seed) {
  return record_calls(world(n, N), {CallSpec{impl, coll, count, root, op.name(), seed}}).front();
}

void run_tcp_world(int n, int N, const std::function<void(Communicator&)>& body) {
  const int p = n * N;
  TcpListener listener = TcpListener::bind("127.0.0.1", 0);
  TcpConfig base;
  base.rendezvous = HostPort{"127.0.0.1", listener.port()};
  base.node_of = regular_world(N, n).node_of;
  base.recv_timeout = std::chrono::seconds(20);
  std::vector<std::thread> threads;
  std::mutex mu;
  std::string error;
  for (int r = 0; r < p; ++r) {
    TcpListener mine = r == 0 ? std::move(listener) : TcpListener{};
    threads.emplace_back([&, r, l = std::move(mine)]() mutable {
      try {
        TcpConfig cfg = base;
        cfg.rank = r;
        Communicator comm = Communicator::world(connect_tcp(cfg, std::move(l)));
        body(comm);
        barrier(comm);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        if (error.empty()) error = "rank " + std::to_string(r) + ": " + e.what();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (!error.empty()) throw std::runtime_error(error);
}

namespace {

void call_in_place(Impl impl, Coll coll, const Communicator& comm, std::span<elem_t> recv,
                   std::size_t c, int root, const ReduceOp& op) {
  const bool lane = impl == Impl::lane;
  const bool at_root = comm.rank() == root;
  switch (coll) {
    case Coll::allgather:
      return lane ? lane::allgather(comm, in_place, recv, c) : hier::allgather(comm, in_place, recv, c);
    case Coll::allreduce:
      return lane ? lane::allreduce(comm, in_place, recv, c, op)
                  : hier::allreduce(comm, in_place, recv, c, op);
    case Coll::reduce_scatter_block:
      return lane ? lane::reduce_scatter_block(comm, in_place, recv, c, op)
                  : hier::reduce_scatter_block(comm, in_place, recv, c, op);
    case Coll::scan:
      return lane ? lane::scan(comm, in_place, recv, c, op) : hier::scan(comm, in_place, recv, c, op);
    case Coll::exscan:
      return lane ? lane::exscan(comm, in_place, recv, c, op) : hier::exscan(comm, in_place, recv, c, op);
    default: break;
  }
  LANECOLL_REQUIRE(at_root, "rooted in-place forms are only tested at the root");
  switch (coll) {
    case Coll::reduce:
      return lane ? lane::reduce(comm, in_place, recv, c, op, root)
                  : hier::reduce(comm, in_place, recv, c, op, root);
    case Coll::gather:
      return lane ? lane::gather(comm, in_place, recv, c, root)
                  : hier::gather(comm, in_place, recv, c, root);
    case Coll::scatter:
      return lane ? lane::scatter(comm, recv, in_place, c, root)
                  : hier::scatter(comm, recv, in_place, c, root);
    default: break;
  }
  throw ContractViolation("no in-place form");
}

}  // namespace

std::vector<std::string> run_in_place_grid(Impl impl, int n, int N,
                                           const std::vector<std::size_t>& counts, int seeds) {
  const int p = n * N;
  std::vector<std::string> failures;
  std::mutex mu;
  const std::vector<Coll> colls{Coll::allgather, Coll::allreduce, Coll::reduce_scatter_block,
                                Coll::scan,      Coll::exscan,    Coll::reduce,
                                Coll::gather,    Coll::scatter};
  run_threads(world(n, N), [&](Communicator& comm) {
    const int me = comm.rank();
    const auto ume = static_cast<std::size_t>(me);
    const ReduceOp op = ReduceOp::sum();
    for (Coll coll : colls) {
      for (std::size_t c : counts) {
        for (int seed = 0; seed < seeds; ++seed) {
          const int root = (seed * 5 + 1) % p;
          std::vector<std::vector<elem_t>> inputs;
          for (int r = 0; r < p; ++r) {
            inputs.push_back(reference::input_for(coll, p, c, r, root, static_cast<std::uint64_t>(seed)));
          }
          const auto& send = inputs[ume];
          std::vector<elem_t> recv = reference::make_recv_init(me, recv_length(coll, p, c, me, root));
          const auto init = recv;
          const bool rooted = is_rooted(coll);
          // Place the caller's contribution where the in-place form expects it.
          switch (coll) {
            case Coll::allgather:
              std::copy(send.begin(), send.end(), recv.begin() + static_cast<std::ptrdiff_t>(ume * c));
              break;
            case Coll::gather:
              if (me == root) std::copy(send.begin(), send.end(), recv.begin() + static_cast<std::ptrdiff_t>(ume * c));
              break;
            case Coll::reduce_scatter_block:
              recv = send;
              break;
            case Coll::scatter:
              recv = send;  // the root's full send buffer, its block stays put
              break;
            default:
              if (!rooted || me == root) recv = send;
              break;
          }
          if (rooted && me != root) {
            // Non-roots use the regular form.
            std::vector<elem_t> buf = init;
            invoke(impl, coll, comm, send, buf, c, root, op);
            recv = buf;
          } else {
            call_in_place(impl, coll, comm, recv, c, root, op);
          }
          std::vector<elem_t> want = reference::expected(coll, inputs, init, me, c, root, op);
          bool ok = false;
          if (coll == Coll::reduce_scatter_block) {
            ok = std::equal(want.begin(), want.end(), recv.begin());
          } else if (coll == Coll::scatter && me == root) {
            // The root's block is already in place; nothing else changes.
            ok = recv == send;
          } else if (coll == Coll::exscan && me == 0) {
            ok = recv == send;  // untouched
          } else {
            ok = recv == want;
          }
          if (!ok) {
            std::lock_guard<std::mutex> lock(mu);
            failures.push_back(to_string(impl) + " in-place " + to_string(coll) + " n=" +
                               std::to_string(n) + " N=" + std::to_string(N) + " c=" +
                               std::to_string(c) + " seed=" + std::to_string(seed) + " rank=" +
                               std::to_string(me));
          }
        }
      }
    }
  });
  return failures;
}

}  // namespace lanecoll::testing
