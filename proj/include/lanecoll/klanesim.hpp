#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

/// Synchronous-step simulator of the k-lane model: processors sit on nodes
/// of k; in one step a processor does at most one off-node send and one
/// off-node receive, and at the same time exchanges with the other
/// processors of its node.
namespace lanecoll::sim {

/// A schedule broke the step rules.
class ScheduleViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct KLaneConfig {
  int p = 1;
  int k = 1;
  long long c = 1;  // message size, elements
  long long C = 1;  // pipeline block size, elements
};

/// Closed forms, in element-steps.
long long t_single(int p, long long c, long long C);
long long t_klane(int p, int k, long long c, long long C);

/// Serialization factor for n virtual lanes on k physical lanes.
int self_simulation_factor(int n, int k);

enum class TreeFamily { path, binary };
/// Extra pipeline slots the replica construction adds on top of
/// t_single(p/k, c/k).
int replica_overhead_slots(TreeFamily family);

struct Vertex {
  int id = 0;       // base * k + replica
  int node = 0;     // equal to base
  int base = 0;     // vertex of the base tree
  int replica = 0;  // i in 0..k-1
};

struct Edge {
  int from = 0;
  int to = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct CommGraph {
  int p = 1;
  int k = 1;
  std::vector<Vertex> vertices;
  std::vector<Edge> tree_edges;    // replica paths, parent to child
  std::vector<Edge> clique_edges;  // unordered pairs on one node, from < to
  std::vector<Edge> back_edges;    // leaf^i to root^i, i >= 1

  int nodes() const { return k == 0 ? 0 : p / k; }
  int vertex(int base, int replica) const { return base * k + replica; }
  int root(int replica) const { return vertex(0, replica); }
};

/// Replica construction over a path of p/k base vertices.
CommGraph build_pipeline_replica(int p, int k);

struct Transfer {
  int from = 0;
  int to = 0;
  int stripe = -1;  // replica index of the block, -1 when not pipelined
  int block = -1;   // block index within the stripe
  long long elements = 0;
  bool offnode = false;
};

struct StepRecord {
  int step = 0;  // 1-based
  std::vector<Transfer> transfers;
  std::vector<int> held;  // blocks held per vertex after the step
};

struct StepTrace {
  std::vector<StepRecord> steps;
  int block_steps = 0;          // schedule length in steps
  int delivery_steps = 0;       // step of the last transfer
  long long step_count = 0;     // block_steps scaled to element-steps
  long long last_delivery = 0;  // delivery_steps scaled to element-steps
  bool complete = false;        // every vertex holds every block
  bool short_pipeline = false;  // p/k == 2: leaf is the root's successor
  bool idle_phases = false;     // k == 1: construction slots carry no traffic
  std::vector<long long> node_ingress;  // off-node elements per node
  std::vector<long long> node_egress;
  std::vector<long long> node_local;    // on-node elements per node
};

/// Pipelined k-lane broadcast over a replica graph. Throws
/// ScheduleViolation if the schedule breaks the model, ContractViolation
/// on divisibility errors.
StepTrace simulate_broadcast(const CommGraph& graph, const KLaneConfig& cfg);

/// Single-ported linear pipeline over p processors, one per node.
StepTrace simulate_linear_pipeline(int p, long long c, long long C);

enum class Pattern { broadcast, scatter, gather };

/// Non-pipelined transform of a k-ported tree algorithm into the k-lane
/// model, p processors on p/k nodes. For scatter/gather `c` is the block
/// per processor; gather is the time-reversed scatter.
StepTrace simulate_kported_transform(int p, int k, long long c,
                                     Pattern pattern = Pattern::broadcast);

/// Steps of a k-ported broadcast over p processors: each informed processor
/// reaches k new ones per step.
int kported_steps(int p, int k);

/// Check the per-step rules of a trace against a node placement of k
/// processors per node. Throws ScheduleViolation.
void check_legality(const StepTrace& trace, int p, int k);

/// CSV of a pipeline run: one header line, one data line.
std::string pipeline_csv(const KLaneConfig& cfg, const StepTrace& trace);

}  // namespace lanecoll::sim
