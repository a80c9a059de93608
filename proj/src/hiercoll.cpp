#include "lanecoll/hiercoll.hpp"

#include <vector>

namespace lanecoll::hier {

namespace {

std::span<const elem_t> input_of(const SendSpan& send, std::span<const elem_t> recv) {
  if (is_in_place(send)) return recv;
  return std::get<std::span<const elem_t>>(send);
}

SendMsg send_msg(const SendSpan& send, std::size_t count) {
  if (is_in_place(send)) return in_place;
  return CMsg(std::get<std::span<const elem_t>>(send), count);
}

}  // namespace

void bcast(const Communicator& comm, std::span<elem_t> buf, std::size_t count, int root) {
  check_agreement(comm, static_cast<long long>(count), "bcast count");
  const LaneDecomposition d = decompose(comm);
  if (!d.regular) return base::bcast(d.lanecomm, Msg(buf, count), root);
  const RootCoords rc = root_coords(root, d.nodesize(), comm.size());
  if (d.noderank() == rc.noderoot) base::bcast(d.lanecomm, Msg(buf, count), rc.rootnode);
  base::bcast(d.nodecomm, Msg(buf, count), rc.noderoot);
}

void gather(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t c, int root) {
  check_agreement(comm, static_cast<long long>(c), "gather count");
  const LaneDecomposition d = decompose(comm);
  if (!d.regular) return base::gather(d.lanecomm, send_msg(send, c), Msg(recv, c), root);
  LANECOLL_REQUIRE(comm.rank() == root || !is_in_place(send),
                   "in_place send is only valid at the root");
  const RootCoords rc = root_coords(root, d.nodesize(), comm.size());
  const auto n = static_cast<std::size_t>(d.nodesize());
  const auto j = static_cast<std::size_t>(d.lanerank());
  const bool rep = d.noderank() == rc.noderoot;
  const bool rootnode = d.lanerank() == rc.rootnode;

  std::vector<elem_t> tempbuf;
  if (rootnode) {
    base::gather(d.nodecomm, send_msg(send, c), rep ? Msg(recv.subspan(j * n * c), c) : Msg(),
                 rc.noderoot);
  } else {
    if (rep) tempbuf.resize(n * c);
    base::gather(d.nodecomm, send_msg(send, c), Msg(tempbuf, c), rc.noderoot);
  }
  if (!rep) return;
  if (rootnode) {
    base::gather(d.lanecomm, in_place, Msg(recv, n * c), rc.rootnode);
  } else {
    base::gather(d.lanecomm, CMsg(tempbuf, n * c), Msg(), rc.rootnode);
  }
}

void scatter(const Communicator& comm, std::span<const elem_t> send, const RecvSpan& recv,
             std::size_t c, int root) {
  check_agreement(comm, static_cast<long long>(c), "scatter count");
  const LaneDecomposition d = decompose(comm);
  LANECOLL_REQUIRE(comm.rank() == root || !is_in_place(recv),
                   "in_place receive is only valid at the root");
  const RecvMsg out = is_in_place(recv) ? RecvMsg(in_place)
                                        : RecvMsg(Msg(std::get<std::span<elem_t>>(recv), c));
  if (!d.regular) return base::scatter(d.lanecomm, CMsg(send, c), out, root);
  const RootCoords rc = root_coords(root, d.nodesize(), comm.size());
  const auto n = static_cast<std::size_t>(d.nodesize());
  const auto j = static_cast<std::size_t>(d.lanerank());
  const bool rep = d.noderank() == rc.noderoot;
  const bool rootnode = d.lanerank() == rc.rootnode;

  std::vector<elem_t> tempbuf;
  if (rep) {
    if (rootnode) {
      base::scatter(d.lanecomm, CMsg(send, n * c), in_place, rc.rootnode);
    } else {
      tempbuf.resize(n * c);
      base::scatter(d.lanecomm, CMsg(), Msg(tempbuf, n * c), rc.rootnode);
    }
  }
  const std::span<const elem_t> source =
      !rep ? std::span<const elem_t>() : rootnode ? send.subspan(j * n * c) : std::span<const elem_t>(tempbuf);
  base::scatter(d.nodecomm, CMsg(source, c), out, rc.noderoot);
}

void allgather(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
               std::size_t c) {
  check_agreement(comm, static_cast<long long>(c), "allgather count");
  const LaneDecomposition d = decompose(comm);
  if (!d.regular) return base::allgather(d.lanecomm, send_msg(send, c), Msg(recv, c));
  const auto n = static_cast<std::size_t>(d.nodesize());
  const auto j = static_cast<std::size_t>(d.lanerank());
  const auto p = static_cast<std::size_t>(comm.size());
  LANECOLL_REQUIRE(recv.size() >= p * c, "allgather receive buffer too short");

  // Off the representative, an in-place contribution is read from recvbuf.
  SendMsg take = send_msg(send, c);
  if (is_in_place(send) && d.noderank() != 0) {
    take = CMsg(std::span<const elem_t>(recv).subspan(static_cast<std::size_t>(comm.rank()) * c, c), c);
  }
  base::gather(d.nodecomm, take, Msg(recv.subspan(j * n * c), c), 0);
  if (d.noderank() == 0) base::allgather(d.lanecomm, in_place, Msg(recv, n * c));
  base::bcast(d.nodecomm, Msg(recv, p * c), 0);
}

void allreduce(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
               std::size_t count, const ReduceOp& op) {
  check_agreement(comm, static_cast<long long>(count), "allreduce count");
  const LaneDecomposition d = decompose(comm);
  if (!d.regular) return base::allreduce(d.lanecomm, send, recv, count, op);
  SendSpan take = send;
  if (is_in_place(send) && d.noderank() != 0) take = std::span<const elem_t>(recv);
  base::reduce(d.nodecomm, take, recv, count, op, 0);
  if (d.noderank() == 0) base::allreduce(d.lanecomm, in_place, recv, count, op);
  base::bcast(d.nodecomm, Msg(recv, count), 0);
}

void reduce(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t count, const ReduceOp& op, int root) {
  check_agreement(comm, static_cast<long long>(count), "reduce count");
  const LaneDecomposition d = decompose(comm);
  if (!d.regular) return base::reduce(d.lanecomm, send, recv, count, op, root);
  const int me = comm.rank();
  LANECOLL_REQUIRE(me == root || !is_in_place(send), "in_place send is only valid at the root");
  const RootCoords rc = root_coords(root, d.nodesize(), comm.size());
  const bool rep = d.noderank() == rc.noderoot;

  // The root's representative works in recvbuf, the others in tempbuf.
  std::vector<elem_t> tempbuf;
  std::span<elem_t> partial;
  if (me == root) {
    partial = recv;
  } else if (rep) {
    tempbuf.resize(count);
    partial = tempbuf;
  }
  base::reduce(d.nodecomm, send, partial, count, op, rc.noderoot);
  if (!rep) return;
  if (me == root) {
    base::reduce(d.lanecomm, in_place, recv, count, op, rc.rootnode);
  } else {
    base::reduce(d.lanecomm, std::span<const elem_t>(tempbuf), {}, count, op, rc.rootnode);
  }
}

void reduce_scatter_block(const Communicator& comm, const SendSpan& send,
                          std::span<elem_t> recv, std::size_t c, const ReduceOp& op) {
  check_agreement(comm, static_cast<long long>(c), "reduce_scatter_block count");
  const LaneDecomposition d = decompose(comm);
  if (!d.regular) return base::reduce_scatter_block(d.lanecomm, send, recv, c, op);
  const auto n = static_cast<std::size_t>(d.nodesize());
  const auto p = static_cast<std::size_t>(comm.size());
  std::vector<elem_t> tempbuf;
  if (d.noderank() == 0) tempbuf.resize(p * c);
  base::reduce(d.nodecomm, input_of(send, recv), tempbuf, p * c, op, 0);
  if (d.noderank() == 0) base::reduce_scatter_block(d.lanecomm, in_place, tempbuf, n * c, op);
  base::scatter(d.nodecomm, CMsg(tempbuf, c), Msg(recv, c), 0);
}

void scan(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
          std::size_t count, const ReduceOp& op) {
  check_agreement(comm, static_cast<long long>(count), "scan count");
  const LaneDecomposition d = decompose(comm);
  if (!d.regular) return base::scan(d.lanecomm, send, recv, count, op);
  const int last = d.nodesize() - 1;
  std::vector<elem_t> tempbuf(count);
  base::scan(d.nodecomm, send, recv, count, op);
  if (d.noderank() == last) {
    base::exscan(d.lanecomm, std::span<const elem_t>(recv), tempbuf, count, op);
  }
  if (d.lanerank() > 0) {
    base::bcast(d.nodecomm, Msg(tempbuf, count), last);
    base::reduce_local(tempbuf, recv, count, op);
  }
}

void exscan(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t count, const ReduceOp& op) {
  check_agreement(comm, static_cast<long long>(count), "exscan count");
  const LaneDecomposition d = decompose(comm);
  if (!d.regular) return base::exscan(d.lanecomm, send, recv, count, op);
  const int last = d.nodesize() - 1;
  const int i = d.noderank();
  const std::span<const elem_t> x = input_of(send, recv);
  LANECOLL_REQUIRE(x.size() >= count, "exscan input too short");

  // The last rank needs its own input after the node exscan has
  // overwritten recvbuf, so it keeps it in staging when in place.
  std::vector<elem_t> total;
  if (i == last) total.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(count));
  base::exscan(d.nodecomm, send, recv, count, op);
  if (i == last && i > 0) base::reduce_local(std::span<const elem_t>(recv), total, count, op);

  std::vector<elem_t> tempbuf;
  if (i != 0) tempbuf.resize(count);
  const std::span<elem_t> prefix = i == 0 ? recv : std::span<elem_t>(tempbuf);
  if (i == last) base::exscan(d.lanecomm, std::span<const elem_t>(total), prefix, count, op);
  if (d.lanerank() > 0) {
    base::bcast(d.nodecomm, Msg(prefix, count), last);
    if (i != 0) base::reduce_local(tempbuf, recv, count, op);
  }
}

}  // namespace lanecoll::hier
