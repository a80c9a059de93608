#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lanecoll/lanecoll.hpp"
#include "lanecoll/reduce_op.hpp"

namespace lanecoll {

enum class Coll {
  bcast,
  gather,
  scatter,
  allgather,
  alltoall,
  reduce,
  allreduce,
  reduce_scatter_block,
  scan,
  exscan,
};

enum class Impl { base, lane, hier };

const std::vector<Coll>& all_colls();
const std::vector<Impl>& all_impls();
std::string to_string(Coll c);
std::string to_string(Impl i);
Coll coll_from_string(const std::string& s);
Impl impl_from_string(const std::string& s);

bool is_reduction(Coll c);
bool is_rooted(Coll c);
/// No hierarchical alltoall exists.
bool supported(Impl impl, Coll c);

/// Buffer lengths of one rank for a collective with per-rank count `count`
/// (the block size for gather/scatter/allgather/alltoall/reduce_scatter,
/// the vector length otherwise). Zero where the rank passes no buffer.
std::size_t send_length(Coll c, int p, std::size_t count, int rank, int root);
std::size_t recv_length(Coll c, int p, std::size_t count, int rank, int root);

/// One collective call with contiguous buffers. For bcast the buffer is
/// `recv`; the root's data must already be there.
void invoke(Impl impl, Coll c, const Communicator& comm, std::span<const elem_t> send,
            std::span<elem_t> recv, std::size_t count, int root, const ReduceOp& op,
            const lane::LaneOptions& opts = {});

}  // namespace lanecoll
