#include "lanecoll/lanecoll.hpp"

#include <vector>

namespace lanecoll::lane {

Layout lane_block_type(std::size_t c, std::size_t n) {
  return Layout::resized(Layout::contiguous(c), n * c);
}

Layout node_strided_type(std::size_t N, std::size_t c, std::size_t n) {
  return Layout::resized(Layout::vector(N, c, n * c), c);
}

Layout lane_major_permutation(std::size_t N, std::size_t c, std::size_t n) {
  return Layout::contiguous(n, node_strided_type(N, c, n));
}

namespace {

struct Shape {
  LaneDecomposition d;
  std::size_t n;  // nodesize
  std::size_t N;  // lanesize
  std::size_t i;  // noderank
  std::size_t j;  // lanerank
};

Shape shape_of(const Communicator& comm) {
  LaneDecomposition d = decompose(comm);
  const auto n = static_cast<std::size_t>(d.nodesize());
  const auto N = static_cast<std::size_t>(d.lanesize());
  const auto i = static_cast<std::size_t>(d.noderank());
  const auto j = static_cast<std::size_t>(d.lanerank());
  return Shape{std::move(d), n, N, i, j};
}

void require_commutative(const ReduceOp& op) {
  if (!op.commutative()) {
    throw UnsupportedOperation("full-lane reductions need a commutative operator, got '" +
                               op.name() + "'");
  }
}

bool use_regular(const LaneOptions& opts, std::size_t count, std::size_t n) {
  return opts.regular && count % n == 0;
}

std::span<const elem_t> input_of(const SendSpan& send, std::span<const elem_t> recv) {
  if (is_in_place(send)) return recv;
  return std::get<std::span<const elem_t>>(send);
}

// Node-level reduce-scatter and allgather in their vector or block form.
void node_reduce_scatter(const Shape& s, std::span<const elem_t> input, std::span<elem_t> out,
                         const Partition& part, const ReduceOp& op, bool regular) {
  if (regular) {
    base::reduce_scatter_block(s.d.nodecomm, input, out, part.counts[0], op);
  } else {
    base::reduce_scatterv_into(s.d.nodecomm, input, out, part.counts, op);
  }
}

void node_allgather(const Shape& s, const SendMsg& send, std::span<elem_t> buf,
                    const Partition& part, bool regular) {
  if (regular) {
    base::allgather(s.d.nodecomm, send, Msg(buf, part.counts[0]));
  } else {
    base::allgatherv(s.d.nodecomm, send, Buf{buf, Layout()}, part.counts, part.displs);
  }
}

}  // namespace

void bcast(const Communicator& comm, std::span<elem_t> buf, std::size_t count, int root,
           const LaneOptions& opts) {
  check_agreement(comm, static_cast<long long>(count), "bcast count");
  const Shape s = shape_of(comm);
  if (!s.d.regular) return base::bcast(s.d.lanecomm, Msg(buf, count), root);
  LANECOLL_REQUIRE(buf.size() >= count, "bcast buffer too short");
  const RootCoords rc = root_coords(root, static_cast<int>(s.n), comm.size());
  const Partition part = partition_counts(count, static_cast<int>(s.n));
  const bool regular = use_regular(opts, count, s.n);
  const std::size_t mine = part.counts[s.i];
  const std::span<elem_t> block = buf.subspan(part.displs[s.i]);

  if (s.d.lanerank() == rc.rootnode) {
    const RecvMsg recv = s.d.noderank() == rc.noderoot ? RecvMsg(in_place) : RecvMsg(Msg(block, mine));
    if (regular) {
      base::scatter(s.d.nodecomm, CMsg(buf, part.counts[0]), recv, rc.noderoot);
    } else {
      base::scatterv(s.d.nodecomm, CBuf(buf), part.counts, part.displs, recv, rc.noderoot);
    }
  }
  base::bcast(s.d.lanecomm, Msg(block, mine), rc.rootnode);
  node_allgather(s, in_place, buf, part, regular);
}

void gather(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t c, int root) {
  check_agreement(comm, static_cast<long long>(c), "gather count");
  const Shape s = shape_of(comm);
  const int me = comm.rank();
  auto own = [&]() -> std::span<const elem_t> {
    if (!is_in_place(send)) return std::get<std::span<const elem_t>>(send);
    LANECOLL_REQUIRE(me == root, "in_place send is only valid at the root");
    return std::span<const elem_t>(recv).subspan(static_cast<std::size_t>(me) * c, c);
  };
  if (!s.d.regular) {
    const SendMsg sm = is_in_place(send) ? SendMsg(in_place) : SendMsg(CMsg(own(), c));
    return base::gather(s.d.lanecomm, sm, Msg(recv, c), root);
  }
  const RootCoords rc = root_coords(root, static_cast<int>(s.n), comm.size());
  if (s.d.lanerank() != rc.rootnode) {
    base::gather(s.d.lanecomm, CMsg(own(), c), Msg(), rc.rootnode);
    return;
  }
  if (s.d.noderank() == rc.noderoot) {
    LANECOLL_REQUIRE(recv.size() >= comm.size() * c, "gather receive buffer too short");
    const SendMsg sm = is_in_place(send) ? SendMsg(in_place) : SendMsg(CMsg(own(), c));
    base::gather(s.d.lanecomm, sm, Msg(recv.subspan(s.i * c), 1, lane_block_type(c, s.n)),
                 rc.rootnode);
    base::gather(s.d.nodecomm, in_place, Msg(recv, 1, node_strided_type(s.N, c, s.n)),
                 rc.noderoot);
  } else {
    std::vector<elem_t> tempbuf(s.N * c);
    base::gather(s.d.lanecomm, CMsg(own(), c), Msg(tempbuf, c), rc.rootnode);
    base::gather(s.d.nodecomm, CMsg(tempbuf, s.N * c), Msg(), rc.noderoot);
  }
}

void scatter(const Communicator& comm, std::span<const elem_t> send, const RecvSpan& recv,
             std::size_t c, int root) {
  check_agreement(comm, static_cast<long long>(c), "scatter count");
  const Shape s = shape_of(comm);
  const int me = comm.rank();
  LANECOLL_REQUIRE(me == root || !is_in_place(recv), "in_place receive is only valid at the root");
  auto out = [&]() -> RecvMsg {
    if (is_in_place(recv)) return in_place;
    return Msg(std::get<std::span<elem_t>>(recv), c);
  };
  if (!s.d.regular) return base::scatter(s.d.lanecomm, CMsg(send, c), out(), root);
  const RootCoords rc = root_coords(root, static_cast<int>(s.n), comm.size());
  if (s.d.lanerank() != rc.rootnode) {
    base::scatter(s.d.lanecomm, CMsg(), out(), rc.rootnode);
    return;
  }
  if (s.d.noderank() == rc.noderoot) {
    LANECOLL_REQUIRE(send.size() >= comm.size() * c, "scatter send buffer too short");
    base::scatter(s.d.nodecomm, CMsg(send, 1, node_strided_type(s.N, c, s.n)), in_place,
                  rc.noderoot);
    base::scatter(s.d.lanecomm, CMsg(send.subspan(s.i * c), 1, lane_block_type(c, s.n)), out(),
                  rc.rootnode);
  } else {
    std::vector<elem_t> tempbuf(s.N * c);
    base::scatter(s.d.nodecomm, CMsg(), Msg(tempbuf, s.N * c), rc.noderoot);
    base::scatter(s.d.lanecomm, CMsg(tempbuf, c), out(), rc.rootnode);
  }
}

void allgather(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
               std::size_t c) {
  check_agreement(comm, static_cast<long long>(c), "allgather count");
  const Shape s = shape_of(comm);
  const int me = comm.rank();
  const auto ume = static_cast<std::size_t>(me);
  if (!s.d.regular) {
    const SendMsg sm = is_in_place(send) ? SendMsg(in_place)
                                         : SendMsg(CMsg(std::get<std::span<const elem_t>>(send), c));
    return base::allgather(s.d.lanecomm, sm, Msg(recv, c));
  }
  LANECOLL_REQUIRE(recv.size() >= comm.size() * c, "allgather receive buffer too short");
  const std::uint32_t tag = comm.next_tag();
  if (!is_in_place(send)) {
    comm.sendrecv(me, CMsg(std::get<std::span<const elem_t>>(send), c), me,
                  Msg(recv.subspan(ume * c), c), tag);
  }
  base::allgather(s.d.lanecomm, in_place, Msg(recv.subspan(s.i * c), 1, lane_block_type(c, s.n)));
  base::allgather(s.d.nodecomm, in_place, Msg(recv, 1, node_strided_type(s.N, c, s.n)));
}

void alltoall(const Communicator& comm, std::span<const elem_t> send, std::span<elem_t> recv,
              std::size_t c) {
  check_agreement(comm, static_cast<long long>(c), "alltoall count");
  const Shape s = shape_of(comm);
  if (!s.d.regular) return base::alltoall(s.d.lanecomm, CMsg(send, c), Msg(recv, c));
  const std::size_t total = static_cast<std::size_t>(comm.size()) * c;
  LANECOLL_REQUIRE(send.size() >= total && recv.size() >= total, "alltoall buffers too short");
  std::vector<elem_t> tempbuf(total);
  base::alltoall(s.d.lanecomm, CMsg(send, s.n * c), Msg(tempbuf, s.n * c));
  const Layout nodetype = node_strided_type(s.N, c, s.n);
  base::alltoall(s.d.nodecomm, CMsg(tempbuf, 1, nodetype), Msg(recv, 1, nodetype));
}

void allreduce(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
               std::size_t count, const ReduceOp& op, const LaneOptions& opts) {
  require_commutative(op);
  check_agreement(comm, static_cast<long long>(count), "allreduce count");
  const Shape s = shape_of(comm);
  if (!s.d.regular) return base::allreduce(s.d.lanecomm, send, recv, count, op);
  LANECOLL_REQUIRE(recv.size() >= count, "allreduce receive buffer too short");
  const Partition part = partition_counts(count, static_cast<int>(s.n));
  const bool regular = use_regular(opts, count, s.n);
  const std::span<elem_t> block = recv.subspan(part.displs[s.i], part.counts[s.i]);
  node_reduce_scatter(s, input_of(send, recv), block, part, op, regular);
  base::allreduce(s.d.lanecomm, in_place, block, block.size(), op);
  node_allgather(s, in_place, recv, part, regular);
}

void reduce(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t count, const ReduceOp& op, int root, const LaneOptions& opts) {
  require_commutative(op);
  check_agreement(comm, static_cast<long long>(count), "reduce count");
  const Shape s = shape_of(comm);
  if (!s.d.regular) return base::reduce(s.d.lanecomm, send, recv, count, op, root);
  const int me = comm.rank();
  LANECOLL_REQUIRE(me == root || !is_in_place(send), "in_place send is only valid at the root");
  const RootCoords rc = root_coords(root, static_cast<int>(s.n), comm.size());
  const Partition part = partition_counts(count, static_cast<int>(s.n));
  const bool regular = use_regular(opts, count, s.n);
  const std::size_t mine = part.counts[s.i];

  // The root reduces straight into its slot of recvbuf; every other rank
  // needs a block-sized staging buffer.
  std::vector<elem_t> tempbuf;
  std::span<elem_t> block;
  if (me == root) {
    LANECOLL_REQUIRE(recv.size() >= count, "reduce receive buffer too short");
    block = recv.subspan(part.displs[s.i], mine);
  } else {
    tempbuf.resize(mine);
    block = tempbuf;
  }
  node_reduce_scatter(s, input_of(send, recv), block, part, op, regular);
  if (s.d.lanerank() == rc.rootnode) {
    base::reduce(s.d.lanecomm, in_place, block, mine, op, rc.rootnode);
    const SendMsg sm = me == root ? SendMsg(in_place) : SendMsg(CMsg(block, mine));
    if (regular) {
      base::gather(s.d.nodecomm, sm, Msg(recv, part.counts[0]), rc.noderoot);
    } else {
      base::gatherv(s.d.nodecomm, sm, Buf{recv, Layout()}, part.counts, part.displs, rc.noderoot);
    }
  } else {
    base::reduce(s.d.lanecomm, std::span<const elem_t>(block), {}, mine, op, rc.rootnode);
  }
}

void reduce_scatter_block(const Communicator& comm, const SendSpan& send,
                          std::span<elem_t> recv, std::size_t c, const ReduceOp& op) {
  require_commutative(op);
  check_agreement(comm, static_cast<long long>(c), "reduce_scatter_block count");
  const Shape s = shape_of(comm);
  if (!s.d.regular) return base::reduce_scatter_block(s.d.lanecomm, send, recv, c, op);
  const std::size_t total = static_cast<std::size_t>(comm.size()) * c;
  const std::span<const elem_t> input = input_of(send, recv);
  LANECOLL_REQUIRE(input.size() >= total, "reduce_scatter_block input too short");
  LANECOLL_REQUIRE(recv.size() >= c, "reduce_scatter_block receive buffer too short");
  const int me = comm.rank();
  std::vector<elem_t> permbuf(total);
  comm.sendrecv(me, CMsg(input, 1, lane_major_permutation(s.N, c, s.n)), me,
                Msg(permbuf, total), comm.next_tag());
  std::vector<elem_t> tempbuf(s.N * c);
  base::reduce_scatter_block(s.d.nodecomm, std::span<const elem_t>(permbuf), tempbuf, s.N * c, op);
  base::reduce_scatter_block(s.d.lanecomm, std::span<const elem_t>(tempbuf), recv, c, op);
}

void scan(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
          std::size_t count, const ReduceOp& op, const LaneOptions& opts) {
  require_commutative(op);
  check_agreement(comm, static_cast<long long>(count), "scan count");
  const Shape s = shape_of(comm);
  if (!s.d.regular) return base::scan(s.d.lanecomm, send, recv, count, op);
  LANECOLL_REQUIRE(recv.size() >= count, "scan receive buffer too short");
  const Partition part = partition_counts(count, static_cast<int>(s.n));
  const bool regular = use_regular(opts, count, s.n);
  std::vector<elem_t> tempbuf(count);
  const std::span<elem_t> block = std::span<elem_t>(tempbuf).subspan(part.displs[s.i], part.counts[s.i]);

  node_reduce_scatter(s, input_of(send, recv), block, part, op, regular);
  base::exscan(s.d.lanecomm, in_place, block, block.size(), op);
  // In place, recvbuf is the node scan's input as well as its output.
  base::scan(s.d.nodecomm, send, recv, count, op);
  if (s.d.lanerank() > 0) {
    node_allgather(s, in_place, tempbuf, part, regular);
    base::reduce_local(tempbuf, recv, count, op);
  }
}

void exscan(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t count, const ReduceOp& op, const LaneOptions& opts) {
  require_commutative(op);
  check_agreement(comm, static_cast<long long>(count), "exscan count");
  const Shape s = shape_of(comm);
  if (!s.d.regular) return base::exscan(s.d.lanecomm, send, recv, count, op);
  const Partition part = partition_counts(count, static_cast<int>(s.n));
  const bool regular = use_regular(opts, count, s.n);
  std::vector<elem_t> tempbuf(count);
  const std::span<elem_t> block = std::span<elem_t>(tempbuf).subspan(part.displs[s.i], part.counts[s.i]);

  node_reduce_scatter(s, input_of(send, recv), block, part, op, regular);
  base::exscan(s.d.lanecomm, in_place, block, block.size(), op);
  base::exscan(s.d.nodecomm, send, recv, count, op);
  if (s.d.lanerank() == 0) return;
  LANECOLL_REQUIRE(recv.size() >= count, "exscan receive buffer too short");
  // Noderank 0 has no node prefix to combine with, so it collects the lane
  // prefix directly into recvbuf.
  if (s.d.noderank() == 0) {
    node_allgather(s, CMsg(block, block.size()), recv, part, regular);
  } else {
    node_allgather(s, in_place, tempbuf, part, regular);
    base::reduce_local(tempbuf, recv, count, op);
  }
}

}  // namespace lanecoll::lane
