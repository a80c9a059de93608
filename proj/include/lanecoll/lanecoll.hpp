#pragma once

#include <cstddef>
#include <span>

#include "lanecoll/basecoll.hpp"
#include "lanecoll/topology.hpp"

/// Full-lane collectives: every process on a node takes part in off-node
/// communication over its own lane communicator, carrying 1/n of the data
/// (or all of it, for the rooted and personalized collectives).
///
/// All buffers are contiguous element spans in global rank order. The
/// decomposition is taken from the communicator's node map and cached. On
/// an irregular communicator each call is exactly one baseline collective
/// on the duplicated communicator.
///
/// Reductions require a commutative operator and throw
/// UnsupportedOperation otherwise.
namespace lanecoll::lane {

struct LaneOptions {
  /// Use scatter/allgather/reduce_scatter_block on the node when the
  /// node size divides the count, instead of the vector variants.
  bool regular = false;
};

void bcast(const Communicator& comm, std::span<elem_t> buf, std::size_t count, int root,
           const LaneOptions& opts = {});

/// recv: p*c elements at the root. send may be in_place at the root.
void gather(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t c, int root);
/// send: p*c elements at the root. recv may be in_place at the root.
void scatter(const Communicator& comm, std::span<const elem_t> send, const RecvSpan& recv,
             std::size_t c, int root);

void allgather(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
               std::size_t c);

/// Stages through a p*c temporary buffer.
void alltoall(const Communicator& comm, std::span<const elem_t> send, std::span<elem_t> recv,
              std::size_t c);

void allreduce(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
               std::size_t count, const ReduceOp& op, const LaneOptions& opts = {});
void reduce(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t count, const ReduceOp& op, int root, const LaneOptions& opts = {});

/// Input p*c elements (recv when in_place); output c elements.
void reduce_scatter_block(const Communicator& comm, const SendSpan& send,
                          std::span<elem_t> recv, std::size_t c, const ReduceOp& op);

void scan(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
          std::size_t count, const ReduceOp& op, const LaneOptions& opts = {});
/// Global rank 0's recv is left untouched.
void exscan(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t count, const ReduceOp& op, const LaneOptions& opts = {});

/// Layouts used for tiling lane blocks into rank-ordered buffers.
/// One c-element block with extent n*c.
Layout lane_block_type(std::size_t c, std::size_t n);
/// N blocks of c elements, n*c apart, extent c.
Layout node_strided_type(std::size_t N, std::size_t c, std::size_t n);
/// Reorders p blocks of c from rank order to lane-major order when packed.
Layout lane_major_permutation(std::size_t N, std::size_t c, std::size_t n);

}  // namespace lanecoll::lane
