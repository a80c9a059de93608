#include "lanecoll/collective.hpp"

#include "lanecoll/basecoll.hpp"
#include "lanecoll/hiercoll.hpp"

namespace lanecoll {

const std::vector<Coll>& all_colls() {
  static const std::vector<Coll> v{Coll::bcast,     Coll::gather,  Coll::scatter,
                                   Coll::allgather, Coll::alltoall, Coll::reduce,
                                   Coll::allreduce, Coll::reduce_scatter_block,
                                   Coll::scan,      Coll::exscan};
  return v;
}

const std::vector<Impl>& all_impls() {
  static const std::vector<Impl> v{Impl::base, Impl::lane, Impl::hier};
  return v;
}

std::string to_string(Coll c) {
  switch (c) {
    case Coll::bcast: return "bcast";
    case Coll::gather: return "gather";
    case Coll::scatter: return "scatter";
    case Coll::allgather: return "allgather";
    case Coll::alltoall: return "alltoall";
    case Coll::reduce: return "reduce";
    case Coll::allreduce: return "allreduce";
    case Coll::reduce_scatter_block: return "reduce_scatter_block";
    case Coll::scan: return "scan";
    case Coll::exscan: return "exscan";
  }
  return "?";
}

std::string to_string(Impl i) {
  switch (i) {
    case Impl::base: return "base";
    case Impl::lane: return "lane";
    case Impl::hier: return "hier";
  }
  return "?";
}

Coll coll_from_string(const std::string& s) {
  for (Coll c : all_colls()) {
    if (to_string(c) == s) return c;
  }
  throw ContractViolation("unknown collective '" + s + "'");
}

Impl impl_from_string(const std::string& s) {
  for (Impl i : all_impls()) {
    if (to_string(i) == s) return i;
  }
  throw ContractViolation("unknown implementation '" + s + "'");
}

bool is_reduction(Coll c) {
  return c == Coll::reduce || c == Coll::allreduce || c == Coll::reduce_scatter_block ||
         c == Coll::scan || c == Coll::exscan;
}

bool is_rooted(Coll c) {
  return c == Coll::bcast || c == Coll::gather || c == Coll::scatter || c == Coll::reduce;
}

bool supported(Impl impl, Coll c) { return !(impl == Impl::hier && c == Coll::alltoall); }

std::size_t send_length(Coll c, int p, std::size_t count, int rank, int root) {
  const auto up = static_cast<std::size_t>(p);
  switch (c) {
    case Coll::bcast: return 0;
    case Coll::scatter: return rank == root ? up * count : 0;
    case Coll::alltoall:
    case Coll::reduce_scatter_block: return up * count;
    default: return count;
  }
}

std::size_t recv_length(Coll c, int p, std::size_t count, int rank, int root) {
  const auto up = static_cast<std::size_t>(p);
  switch (c) {
    case Coll::gather: return rank == root ? up * count : 0;
    case Coll::reduce: return rank == root ? count : 0;
    case Coll::allgather:
    case Coll::alltoall: return up * count;
    default: return count;
  }
}

namespace {

void invoke_base(Coll c, const Communicator& comm, std::span<const elem_t> send,
                 std::span<elem_t> recv, std::size_t count, int root, const ReduceOp& op) {
  switch (c) {
    case Coll::bcast: return base::bcast(comm, Msg(recv, count), root);
    case Coll::gather: return base::gather(comm, CMsg(send, count), Msg(recv, count), root);
    case Coll::scatter: return base::scatter(comm, CMsg(send, count), Msg(recv, count), root);
    case Coll::allgather: return base::allgather(comm, CMsg(send, count), Msg(recv, count));
    case Coll::alltoall: return base::alltoall(comm, CMsg(send, count), Msg(recv, count));
    case Coll::reduce: return base::reduce(comm, send, recv, count, op, root);
    case Coll::allreduce: return base::allreduce(comm, send, recv, count, op);
    case Coll::reduce_scatter_block: return base::reduce_scatter_block(comm, send, recv, count, op);
    case Coll::scan: return base::scan(comm, send, recv, count, op);
    case Coll::exscan: return base::exscan(comm, send, recv, count, op);
  }
}

void invoke_lane(Coll c, const Communicator& comm, std::span<const elem_t> send,
                 std::span<elem_t> recv, std::size_t count, int root, const ReduceOp& op,
                 const lane::LaneOptions& opts) {
  switch (c) {
    case Coll::bcast: return lane::bcast(comm, recv, count, root, opts);
    case Coll::gather: return lane::gather(comm, send, recv, count, root);
    case Coll::scatter: return lane::scatter(comm, send, recv, count, root);
    case Coll::allgather: return lane::allgather(comm, send, recv, count);
    case Coll::alltoall: return lane::alltoall(comm, send, recv, count);
    case Coll::reduce: return lane::reduce(comm, send, recv, count, op, root, opts);
    case Coll::allreduce: return lane::allreduce(comm, send, recv, count, op, opts);
    case Coll::reduce_scatter_block: return lane::reduce_scatter_block(comm, send, recv, count, op);
    case Coll::scan: return lane::scan(comm, send, recv, count, op, opts);
    case Coll::exscan: return lane::exscan(comm, send, recv, count, op, opts);
  }
}

void invoke_hier(Coll c, const Communicator& comm, std::span<const elem_t> send,
                 std::span<elem_t> recv, std::size_t count, int root, const ReduceOp& op) {
  switch (c) {
    case Coll::bcast: return hier::bcast(comm, recv, count, root);
    case Coll::gather: return hier::gather(comm, send, recv, count, root);
    case Coll::scatter: return hier::scatter(comm, send, recv, count, root);
    case Coll::allgather: return hier::allgather(comm, send, recv, count);
    case Coll::alltoall: throw UnsupportedOperation("no hierarchical alltoall");
    case Coll::reduce: return hier::reduce(comm, send, recv, count, op, root);
    case Coll::allreduce: return hier::allreduce(comm, send, recv, count, op);
    case Coll::reduce_scatter_block: return hier::reduce_scatter_block(comm, send, recv, count, op);
    case Coll::scan: return hier::scan(comm, send, recv, count, op);
    case Coll::exscan: return hier::exscan(comm, send, recv, count, op);
  }
}

}  // namespace

void invoke(Impl impl, Coll c, const Communicator& comm, std::span<const elem_t> send,
            std::span<elem_t> recv, std::size_t count, int root, const ReduceOp& op,
            const lane::LaneOptions& opts) {
  switch (impl) {
    case Impl::base: return invoke_base(c, comm, send, recv, count, root, op);
    case Impl::lane: return invoke_lane(c, comm, send, recv, count, root, op, opts);
    case Impl::hier: return invoke_hier(c, comm, send, recv, count, root, op);
  }
}

}  // namespace lanecoll
