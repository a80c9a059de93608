#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lanecoll/collective.hpp"
#include "lanecoll/ledger.hpp"
#include "lanecoll/thread_transport.hpp"

namespace lanecoll::testing {

/// n processes on each of N nodes, short receive timeout so a hung
/// collective fails instead of stalling the suite.
WorldConfig world(int n, int N, std::uint64_t schedule_seed = 0);

struct GridSpec {
  std::vector<Coll> colls = all_colls();
  std::vector<Impl> impls = all_impls();
  std::vector<std::size_t> counts{0, 1, 3, 8, 17, 64};
  int seeds = 10;
  std::vector<std::string> ops{"sum", "max"};
};

struct GridResult {
  long long cases = 0;  // (coll, impl, count, seed, op) tuples per shape
  std::vector<std::string> failures;
};

/// Every (coll, impl, count, seed, op) of `spec` on one n x N world inside
/// a single thread launch, compared against the sequential reference on
/// every rank. Non-reductions run once per seed regardless of `ops`.
GridResult run_grid(int n, int N, const GridSpec& spec);

/// The in-place forms (allgather, allreduce, reduce, reduce_scatter_block,
/// scan, exscan, and gather/scatter at the root) of `impl` on one world,
/// against the reference. Returns failure descriptions.
std::vector<std::string> run_in_place_grid(Impl impl, int n, int N,
                                           const std::vector<std::size_t>& counts, int seeds);

/// Outputs and traffic of one collective call.
struct CallRecord {
  std::vector<std::vector<elem_t>> outputs;  // per rank
  CostLedger ledger;
};

struct CallSpec {
  Impl impl = Impl::base;
  Coll coll = Coll::bcast;
  std::size_t count = 0;
  int root = 0;
  std::string op = "sum";
  std::uint64_t seed = 1;
};

/// Rank-level: run each call with its own ledger window. Returns this
/// rank's output per call; `ledgers` gets one snapshot per call.
std::vector<std::vector<elem_t>> run_calls(const Communicator& comm,
                                           const std::vector<CallSpec>& specs,
                                           std::vector<CostLedger>& ledgers);

/// Every call of `specs` in one launch of the given world.
std::vector<CallRecord> record_calls(const WorldConfig& cfg, const std::vector<CallSpec>& specs);
std::vector<CallRecord> record_calls_tcp(int n, int N, const std::vector<CallSpec>& specs);

/// One call on a fresh n x N thread world.
CallRecord record_call(Impl impl, Coll coll, int n, int N, std::size_t count, int root,
                       const ReduceOp& op, std::uint64_t seed);

/// One thread per rank, each with its own TCP endpoint on loopback.
void run_tcp_world(int n, int N, const std::function<void(Communicator&)>& body);

/// Node of each rank under consecutive placement.
inline int node_of(int rank, int n) { return rank / n; }

}  // namespace lanecoll::testing
