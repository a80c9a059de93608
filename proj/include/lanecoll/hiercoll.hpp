#pragma once

#include <cstddef>
#include <span>

#include "lanecoll/basecoll.hpp"
#include "lanecoll/topology.hpp"

/// Hierarchical collectives: one representative per node does all off-node
/// communication over a single lane communicator.
///
/// Representatives:
///   bcast, gather, scatter, reduce         noderank of the root
///   allgather, allreduce, reduce_scatter   noderank 0
///   scan, exscan                           noderank n-1
///
/// Buffer conventions match lanecoll::lane. There is no alltoall.
namespace lanecoll::hier {

void bcast(const Communicator& comm, std::span<elem_t> buf, std::size_t count, int root);

void gather(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t c, int root);
void scatter(const Communicator& comm, std::span<const elem_t> send, const RecvSpan& recv,
             std::size_t c, int root);

void allgather(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
               std::size_t c);

void allreduce(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
               std::size_t count, const ReduceOp& op);
void reduce(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t count, const ReduceOp& op, int root);

void reduce_scatter_block(const Communicator& comm, const SendSpan& send,
                          std::span<elem_t> recv, std::size_t c, const ReduceOp& op);

void scan(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
          std::size_t count, const ReduceOp& op);
void exscan(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t count, const ReduceOp& op);

}  // namespace lanecoll::hier
