#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "lanecoll/error.hpp"

namespace lanecoll {

/// Traffic counters kept by one rank's endpoint. Only data messages are
/// counted; control traffic (barriers, splits, snapshots) is not.
struct RankCounters {
  std::uint64_t sent_elems = 0;
  std::uint64_t recv_elems = 0;
  std::uint64_t sent_msgs = 0;
  std::uint64_t recv_msgs = 0;
  std::uint64_t offnode_sent = 0;
  std::uint64_t offnode_recv = 0;
  std::map<int, std::uint64_t> egress_to_node;     // destination node -> elems
  std::map<int, std::uint64_t> ingress_from_node;  // source node -> elems
  /// Logical round clock: a send happens one round after the sender's
  /// latest event, a receive completes no earlier than the send's round.
  std::uint64_t clock = 0;

  friend bool operator==(const RankCounters&, const RankCounters&) = default;
};

struct RankLedger {
  int rank = 0;
  int world_rank = 0;
  int node = 0;
  RankCounters counters;
};

/// Consistent view of every rank's counters in a communicator, taken at a
/// quiescent point.
class CostLedger {
 public:
  CostLedger() = default;
  explicit CostLedger(std::vector<RankLedger> ranks) : ranks_(std::move(ranks)) {}

  const std::vector<RankLedger>& ranks() const { return ranks_; }
  const RankCounters& at(int rank) const { return ranks_.at(static_cast<std::size_t>(rank)).counters; }

  std::uint64_t total_sent() const;
  std::uint64_t total_received() const;
  /// Off-node elements entering / leaving each node.
  std::map<int, std::uint64_t> node_ingress() const;
  std::map<int, std::uint64_t> node_egress() const;
  /// Elements sent from src_node to dst_node, as counted by the senders.
  std::uint64_t node_to_node(int src_node, int dst_node) const;
  /// Ranks that sent or received any off-node element.
  std::vector<int> offnode_ranks() const;
  /// Length of the longest causal chain of messages.
  std::uint64_t rounds() const;

  /// Element and message counters equal; round clocks are not compared.
  bool same_traffic(const CostLedger& other) const;

 private:
  std::vector<RankLedger> ranks_;
};

std::vector<elem_t> serialize_counters(const RankCounters& c);
RankCounters deserialize_counters(std::span<const elem_t> data);

}  // namespace lanecoll
