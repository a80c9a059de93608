#pragma once

#include <cstdint>
#include <vector>

#include "lanecoll/collective.hpp"

/// Sequential semantics of every collective, computed from all ranks'
/// inputs at once. Used to verify benchmark runs before they are timed.
namespace lanecoll::reference {

/// Deterministic input of one rank: values in [-1000, 1000].
std::vector<elem_t> make_input(std::uint64_t seed, int rank, std::size_t length);

/// Recv buffer contents before the call (recognizable filler).
std::vector<elem_t> make_recv_init(int rank, std::size_t length);

/// Rank `rank`'s recv buffer after the collective, given every rank's send
/// buffer and its own initial recv buffer. For bcast the root's data is
/// inputs[root] taken at length `count`.
std::vector<elem_t> expected(Coll c, const std::vector<std::vector<elem_t>>& inputs,
                             const std::vector<elem_t>& recv_init, int rank, std::size_t count,
                             int root, const ReduceOp& op);

/// Send buffer of `rank` for a collective, or the bcast payload at the root.
std::vector<elem_t> input_for(Coll c, int p, std::size_t count, int rank, int root,
                              std::uint64_t seed);

}  // namespace lanecoll::reference
