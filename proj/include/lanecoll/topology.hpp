#pragma once

#include <cstddef>
#include <vector>

#include "lanecoll/transport.hpp"

namespace lanecoll {

/// Declared process placement: p processes on N nodes, n per node.
struct WorldShape {
  int p = 1;
  int N = 1;  // nodes
  int n = 1;  // processes per node

  static WorldShape regular(int nodes, int ppn);
  bool valid() const { return n >= 1 && N >= 1 && p == n * N; }
  friend bool operator==(const WorldShape&, const WorldShape&) = default;
};

/// Position of a rank in a regular, consecutively ranked communicator.
struct RankCoords {
  int rank = 0;
  int noderank = 0;  // rank in nodecomm
  int lanerank = 0;  // rank in lanecomm (the node index)

  friend bool operator==(const RankCoords&, const RankCoords&) = default;
};

RankCoords coords_of(int rank, int ppn);

/// Node and lane communicators of a parent communicator.
///
/// Regular: nodecomm holds the n processes of the caller's node, lanecomm
/// the N processes sharing the caller's noderank. Irregular: lanecomm is a
/// duplicate of the parent and nodecomm a self-communicator, so every lane
/// and hierarchical collective still works, just without decomposition.
struct LaneDecomposition {
  Communicator parent;
  Communicator nodecomm;
  Communicator lanecomm;
  bool regular = false;

  int noderank() const { return nodecomm.rank(); }
  int nodesize() const { return nodecomm.size(); }
  int lanerank() const { return lanecomm.rank(); }
  int lanesize() const { return lanecomm.size(); }
};

/// Collective. Verifies regularity with one agreement round, splits, and
/// caches the result on the parent; later calls return the cached
/// subcommunicators without splitting again.
LaneDecomposition decompose(const Communicator& comm, const WorldShape& shape);

/// Collective. Shape inferred from the fabric's node map: n is the number
/// of members sharing rank 0's node. Result cached like decompose().
LaneDecomposition decompose(const Communicator& comm);

/// Node index and node-local rank of a root under consecutive ranking.
struct RootCoords {
  int rootnode = 0;
  int noderoot = 0;
  friend bool operator==(const RootCoords&, const RootCoords&) = default;
};
RootCoords root_coords(int root, int ppn, int p);

/// Even split of `count` over `parts`, remainder on the last part.
struct Partition {
  std::vector<std::size_t> counts;
  std::vector<std::size_t> displs;
};
Partition partition_counts(std::size_t count, int parts);

}  // namespace lanecoll
