#pragma once

#include <cstddef>
#include <span>
#include <variant>

#include "lanecoll/reduce_op.hpp"
#include "lanecoll/transport.hpp"

namespace lanecoll {

/// Typed buffer without a count; used where per-rank counts come separately.
struct Buf {
  std::span<elem_t> data;
  Layout type;
};

struct CBuf {
  std::span<const elem_t> data;
  Layout type;
  CBuf() = default;
  CBuf(std::span<const elem_t> d, Layout t = Layout()) : data(d), type(std::move(t)) {}
  CBuf(const Buf& b) : data(b.data), type(b.type) {}  // NOLINT
};

using RecvSpan = std::variant<InPlace, std::span<elem_t>>;
inline bool is_in_place(const RecvSpan& s) { return std::holds_alternative<InPlace>(s); }

/// Cross-rank agreement checks (equal counts, equal roots). They cost one
/// control round per call, so they default to on only in debug builds.
void set_consistency_checks(bool enabled);
bool consistency_checks();

/// Debug-only check that every rank passed the same value.
void check_agreement(const Communicator& comm, long long value, const char* what);

}  // namespace lanecoll

/// Baseline single-ported collectives, usable on any communicator. These
/// stand in for the message-passing library itself: the lane and
/// hierarchical decompositions call them on node and lane communicators.
///
/// Algorithms are fixed so that traffic is exact:
///   bcast            binomial tree
///   scatter(v)       linear from the root
///   gather(v)        linear to the root
///   allgather(v)     ring, each rank receives total - own
///   alltoall         pairwise exchange, (p-1) blocks each way
///   reduce_scatter   ring for commutative ops, rank-order chain otherwise
///   reduce/allreduce reduce_scatter followed by gather/allgather
///   scan/exscan      linear chain
namespace lanecoll::base {

void bcast(const Communicator& comm, const Msg& buf, int root);

/// Root sends units [displs[i], displs[i]+counts[i]) of `send` to rank i.
/// `recv` may be in_place at the root only.
void scatterv(const Communicator& comm, const CBuf& send, std::span<const std::size_t> counts,
              std::span<const std::size_t> displs, const RecvMsg& recv, int root);
void scatter(const Communicator& comm, const CMsg& send, const RecvMsg& recv, int root);

/// Inverse of scatterv. `send` may be in_place at the root only.
void gatherv(const Communicator& comm, const SendMsg& send, const Buf& recv,
             std::span<const std::size_t> counts, std::span<const std::size_t> displs, int root);
void gather(const Communicator& comm, const SendMsg& send, const Msg& recv, int root);

/// in_place: the caller's block already sits at its displacement in recv.
void allgatherv(const Communicator& comm, const SendMsg& send, const Buf& recv,
                std::span<const std::size_t> counts, std::span<const std::size_t> displs);
/// `recv.count` units per rank.
void allgather(const Communicator& comm, const SendMsg& send, const Msg& recv);

/// `send.count` / `recv.count` units per destination / source rank.
void alltoall(const Communicator& comm, const CMsg& send, const Msg& recv);

/// Input is sum(counts) elements (recv itself when in_place); rank r gets
/// the reduced segment r at the start of recv.
void reduce_scatterv(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
                     std::span<const std::size_t> counts, const ReduceOp& op);
void reduce_scatter_block(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
                          std::size_t count, const ReduceOp& op);

/// `recv` is only written at the root. in_place is valid at the root only.
void reduce(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t count, const ReduceOp& op, int root);
void allreduce(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
               std::size_t count, const ReduceOp& op);

/// Inclusive prefix in rank order.
void scan(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
          std::size_t count, const ReduceOp& op);
/// Exclusive prefix; rank 0's recv is left untouched.
void exscan(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t count, const ReduceOp& op);

/// inout = in (+) inout, elementwise.
void reduce_local(std::span<const elem_t> in, std::span<elem_t> inout, std::size_t count,
                  const ReduceOp& op);

/// Reduce-scatter with explicit input and output; output may alias input.
void reduce_scatterv_into(const Communicator& comm, std::span<const elem_t> input,
                          std::span<elem_t> output, std::span<const std::size_t> counts,
                          const ReduceOp& op);

}  // namespace lanecoll::base
