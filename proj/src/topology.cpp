#include "lanecoll/topology.hpp"

#include <set>
#include <string>

namespace lanecoll {

WorldShape WorldShape::regular(int nodes, int ppn) { return WorldShape{nodes * ppn, nodes, ppn}; }

RankCoords coords_of(int rank, int ppn) {
  LANECOLL_REQUIRE(ppn >= 1 && rank >= 0, "invalid rank or node size");
  return RankCoords{rank, rank % ppn, rank / ppn};
}

RootCoords root_coords(int root, int ppn, int p) {
  LANECOLL_REQUIRE(ppn >= 1, "node size must be positive");
  LANECOLL_REQUIRE(root >= 0 && root < p, "root " + std::to_string(root) + " out of range");
  return RootCoords{root / ppn, root % ppn};
}

Partition partition_counts(std::size_t count, int parts) {
  LANECOLL_REQUIRE(parts >= 1, "partition needs at least one part");
  const auto np = static_cast<std::size_t>(parts);
  Partition out;
  const std::size_t block = count / np;
  out.counts.assign(np, block);
  out.counts[np - 1] += count % np;
  out.displs.assign(np, 0);
  for (std::size_t i = 1; i < np; ++i) out.displs[i] = out.displs[i - 1] + out.counts[i - 1];
  return out;
}

namespace {

struct CachedSplit {
  Communicator nodecomm;
  Communicator lanecomm;
  bool regular = false;
};

bool is_regular(const std::vector<int>& node, const WorldShape& shape) {
  if (!shape.valid() || static_cast<int>(node.size()) != shape.p) return false;
  std::set<int> leaders;
  for (int j = 0; j < shape.N; ++j) {
    const int leader = node[static_cast<std::size_t>(j * shape.n)];
    if (!leaders.insert(leader).second) return false;
    for (int i = 1; i < shape.n; ++i) {
      if (node[static_cast<std::size_t>(j * shape.n + i)] != leader) return false;
    }
  }
  return true;
}

std::vector<int> gather_nodes(const Communicator& comm) {
  const auto all = comm.allgather_control({comm.node_of(comm.rank())});
  std::vector<int> node;
  node.reserve(all.size());
  for (const auto& v : all) node.push_back(v.at(0));
  return node;
}

}  // namespace

LaneDecomposition decompose(const Communicator& comm, const WorldShape& shape) {
  const std::string key =
      "lanecoll.decomposition." + std::to_string(shape.n) + "x" + std::to_string(shape.N);
  if (auto cached = std::static_pointer_cast<CachedSplit>(comm.attribute(key))) {
    return LaneDecomposition{comm, cached->nodecomm, cached->lanecomm, cached->regular};
  }
  // Agreement round: every rank sees the same node map and so reaches the
  // same verdict.
  const std::vector<int> node = gather_nodes(comm);
  auto split = std::make_shared<CachedSplit>();
  split->regular = comm.size() == shape.p && is_regular(node, shape);
  if (split->regular) {
    const RankCoords rc = coords_of(comm.rank(), shape.n);
    split->nodecomm = comm.split(rc.lanerank, rc.noderank);
    split->lanecomm = comm.split(rc.noderank, rc.lanerank);
  } else {
    split->lanecomm = comm.dup();
    split->nodecomm = comm.self();
  }
  comm.set_attribute(key, split);
  return LaneDecomposition{comm, split->nodecomm, split->lanecomm, split->regular};
}

LaneDecomposition decompose(const Communicator& comm) {
  const std::string key = "lanecoll.inferred_shape";
  auto shape = std::static_pointer_cast<WorldShape>(comm.attribute(key));
  if (!shape) {
    const std::vector<int> node = gather_nodes(comm);
    int n = 0;
    for (int x : node) n += x == node[0] ? 1 : 0;
    const int p = comm.size();
    shape = std::make_shared<WorldShape>(WorldShape{p, p % n == 0 ? p / n : 1, n});
    comm.set_attribute(key, shape);
  }
  return decompose(comm, *shape);
}

}  // namespace lanecoll
