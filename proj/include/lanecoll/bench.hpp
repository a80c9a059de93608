#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lanecoll/collective.hpp"

namespace lanecoll::bench {

enum class Kind { lane, multicoll, coll };
enum class TransportKind { thread, tcp };

/// A collective produced output that differs from the reference.
class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchConfig {
  Kind kind = Kind::lane;
  int nodes = 2;         // N
  int ppn = 2;           // n
  int lanes = 0;         // k; 0 sweeps 1..n for lane/multicoll, means n for coll
  std::size_t count = 1024;
  int reps = 100;
  int inner_iters = 50;  // lane pattern only
  int warmup = 5;
  TransportKind transport = TransportKind::thread;
  std::string rendezvous;
  Coll coll = Coll::bcast;
  std::optional<Impl> impl;  // unset: every implementation of the collective
  std::string op = "sum";
  int root = 0;
  std::uint64_t seed = 1;
  /// Called by every rank inside the timed region of each repetition.
  std::function<void(int rep, int rank)> rep_hook;
  /// Sees each rank's output of the verification call before it is checked.
  std::function<void(int rank, std::span<elem_t> out)> verify_hook;

  int p() const { return nodes * ppn; }
  /// Throws ContractViolation.
  void validate() const;
};

struct Row {
  std::string impl;
  int k = 0;
  int n = 0;
  int N = 0;
  int p = 0;
  std::size_t c = 0;
  double avg_us = 0;
  double min_us = 0;
  bool verified = false;
};

/// Lane pattern: rank i sends to (i+n) mod p and receives from (i-n) mod p.
int lane_send_partner(int rank, int n, int p);
int lane_recv_partner(int rank, int n, int p);
/// Elements moved by noderank i when c is split over the first k
/// processes of a node: floor(c/k), plus c mod k for the first; 0 if i >= k.
std::size_t lane_share(std::size_t c, int k, int noderank);

struct Timing {
  double avg_us = 0;
  double min_us = 0;
};
/// Statistics over completion times with the first `warmup` dropped.
Timing summarize(const std::vector<double>& completion_us, int warmup);

/// Collective over `world`: every rank's time per repetition reduced by
/// max. `body(rep)` runs between a barrier and the rank's stop time.
std::vector<double> time_reps(const Communicator& world, int reps,
                              const std::function<void(int rep)>& body,
                              const std::function<void(int rep, int rank)>& hook = {});

/// Rank-level drivers: every rank of `world` calls them, every rank gets
/// the same rows.
std::vector<Row> lane_pattern_on(const Communicator& world, const BenchConfig& cfg);
std::vector<Row> multicoll_on(const Communicator& world, const BenchConfig& cfg);
/// Throws VerificationFailure (on every rank) before timing anything if an
/// implementation's output differs from the reference.
std::vector<Row> collective_on(const Communicator& world, const BenchConfig& cfg);
std::vector<Row> run_on(const Communicator& world, const BenchConfig& cfg);

/// Thread-transport runs: one thread per rank, rows from rank 0.
std::vector<Row> run_lane_pattern(const BenchConfig& cfg);
std::vector<Row> run_multicoll(const BenchConfig& cfg);
std::vector<Row> run_collective(const BenchConfig& cfg);

inline constexpr const char* kCsvHeader = "impl,k,n,N,p,c,avg_us,min_us,verified";
std::string emit_csv(const std::vector<Row>& rows);
std::string emit_table(const std::vector<Row>& rows);

}  // namespace lanecoll::bench
