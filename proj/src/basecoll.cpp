#include "lanecoll/basecoll.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <string>
#include <vector>

#include "lanecoll/topology.hpp"

namespace lanecoll {

namespace {
#ifdef NDEBUG
std::atomic<bool> g_checks{false};
#else
std::atomic<bool> g_checks{true};
#endif
}  // namespace

void set_consistency_checks(bool enabled) { g_checks.store(enabled); }
bool consistency_checks() { return g_checks.load(); }

void check_agreement(const Communicator& comm, long long value, const char* what) {
  if (!consistency_checks() || comm.size() == 1) return;
  const auto lo = static_cast<elem_t>(value & 0x7fffffff);
  const auto hi = static_cast<elem_t>(value >> 31);
  const auto all = comm.allgather_control({lo, hi});
  for (const auto& v : all) {
    if (v != all[0]) throw ContractViolation(std::string("inconsistent ") + what + " across ranks");
  }
}

}  // namespace lanecoll

namespace lanecoll::base {

namespace {

void check_root(const Communicator& comm, int root) {
  LANECOLL_REQUIRE(root >= 0 && root < comm.size(),
                   "root " + std::to_string(root) + " out of range");
  check_agreement(comm, root, "root");
}

/// `units` units of b starting at unit `first`.
CMsg block(std::span<const elem_t> buf, const Layout& type, std::size_t first, std::size_t units) {
  if (units == 0) return CMsg({}, 0, type);
  const std::size_t off = first * type.extent();
  LANECOLL_REQUIRE(off <= buf.size(), "block offset beyond buffer");
  return CMsg(buf.subspan(off), units, type);
}

Msg block(std::span<elem_t> buf, const Layout& type, std::size_t first, std::size_t units) {
  if (units == 0) return Msg({}, 0, type);
  const std::size_t off = first * type.extent();
  LANECOLL_REQUIRE(off <= buf.size(), "block offset beyond buffer");
  return Msg(buf.subspan(off), units, type);
}

void check_vectors(const Communicator& comm, std::span<const std::size_t> counts,
                   std::span<const std::size_t> displs) {
  const auto p = static_cast<std::size_t>(comm.size());
  LANECOLL_REQUIRE(counts.size() == p && displs.size() == p,
                   "counts/displs need one entry per rank");
}

std::span<const elem_t> input_of(const SendSpan& send, std::span<const elem_t> recv) {
  if (is_in_place(send)) return recv;
  return std::get<std::span<const elem_t>>(send);
}

void library_copy(std::span<const elem_t> from, std::span<elem_t> to) {
  LANECOLL_REQUIRE(to.size() >= from.size(), "destination too short");
  if (from.data() != to.data()) std::copy(from.begin(), from.end(), to.begin());
  copy_counters().library += from.size();
}

}  // namespace

void bcast(const Communicator& comm, const Msg& buf, int root) {
  check_root(comm, root);
  const int p = comm.size();
  const std::uint32_t tag = comm.next_tag();
  if (p == 1) return;
  const int vr = (comm.rank() - root + p) % p;
  int mask = 1;
  while (mask < p) {
    if (vr & mask) {
      comm.recv((vr - mask + root) % p, tag, buf);
      break;
    }
    mask <<= 1;
  }
  mask >>= 1;
  while (mask > 0) {
    if (vr + mask < p) comm.send((vr + mask + root) % p, tag, buf);
    mask >>= 1;
  }
}

void scatterv(const Communicator& comm, const CBuf& send, std::span<const std::size_t> counts,
              std::span<const std::size_t> displs, const RecvMsg& recv, int root) {
  check_root(comm, root);
  const std::uint32_t tag = comm.next_tag();
  const int me = comm.rank();
  if (me != root) {
    LANECOLL_REQUIRE(!is_in_place(recv), "in_place receive is only valid at the root");
    comm.recv(root, tag, std::get<Msg>(recv));
    return;
  }
  check_vectors(comm, counts, displs);
  for (int i = 0; i < comm.size(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const CMsg out = block(send.data, send.type, displs[ui], counts[ui]);
    if (i != me) {
      comm.send(i, tag, out);
    } else if (!is_in_place(recv)) {
      comm.sendrecv(me, out, me, std::get<Msg>(recv), tag);
    }
  }
}

void scatter(const Communicator& comm, const CMsg& send, const RecvMsg& recv, int root) {
  const auto p = static_cast<std::size_t>(comm.size());
  std::vector<std::size_t> counts(p, send.count), displs(p);
  for (std::size_t i = 0; i < p; ++i) displs[i] = i * send.count;
  scatterv(comm, CBuf(send.buf, send.type), counts, displs, recv, root);
}

void gatherv(const Communicator& comm, const SendMsg& send, const Buf& recv,
             std::span<const std::size_t> counts, std::span<const std::size_t> displs, int root) {
  check_root(comm, root);
  const std::uint32_t tag = comm.next_tag();
  const int me = comm.rank();
  if (me != root) {
    LANECOLL_REQUIRE(!is_in_place(send), "in_place send is only valid at the root");
    comm.send(root, tag, std::get<CMsg>(send));
    return;
  }
  check_vectors(comm, counts, displs);
  for (int i = 0; i < comm.size(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const Msg in = block(recv.data, recv.type, displs[ui], counts[ui]);
    if (i != me) {
      comm.recv(i, tag, in);
    } else if (!is_in_place(send)) {
      comm.sendrecv(me, std::get<CMsg>(send), me, in, tag);
    }
  }
}

void gather(const Communicator& comm, const SendMsg& send, const Msg& recv, int root) {
  const auto p = static_cast<std::size_t>(comm.size());
  std::vector<std::size_t> counts(p, recv.count), displs(p);
  for (std::size_t i = 0; i < p; ++i) displs[i] = i * recv.count;
  gatherv(comm, send, Buf{recv.buf, recv.type}, counts, displs, root);
}

void allgatherv(const Communicator& comm, const SendMsg& send, const Buf& recv,
                std::span<const std::size_t> counts, std::span<const std::size_t> displs) {
  check_vectors(comm, counts, displs);
  const std::uint32_t tag = comm.next_tag();
  const int p = comm.size();
  const int r = comm.rank();
  auto blk = [&](int i) {
    const auto ui = static_cast<std::size_t>(i);
    return block(recv.data, recv.type, displs[ui], counts[ui]);
  };
  if (!is_in_place(send)) comm.sendrecv(r, std::get<CMsg>(send), r, blk(r), tag);
  const int right = (r + 1) % p;
  const int left = (r - 1 + p) % p;
  for (int s = 0; s < p - 1; ++s) {
    const int out = (r - s + p) % p;
    const int in = (r - s - 1 + p) % p;
    comm.sendrecv(right, blk(out), left, blk(in), tag);
  }
}

void allgather(const Communicator& comm, const SendMsg& send, const Msg& recv) {
  const auto p = static_cast<std::size_t>(comm.size());
  std::vector<std::size_t> counts(p, recv.count), displs(p);
  for (std::size_t i = 0; i < p; ++i) displs[i] = i * recv.count;
  allgatherv(comm, send, Buf{recv.buf, recv.type}, counts, displs);
}

void alltoall(const Communicator& comm, const CMsg& send, const Msg& recv) {
  const std::uint32_t tag = comm.next_tag();
  check_agreement(comm, static_cast<long long>(send.elements()), "alltoall block size");
  LANECOLL_REQUIRE(send.elements() == recv.elements(), "alltoall send/recv block sizes differ");
  const int p = comm.size();
  const int r = comm.rank();
  auto sblk = [&](int i) { return block(send.buf, send.type, static_cast<std::size_t>(i) * send.count, send.count); };
  auto rblk = [&](int i) { return block(recv.buf, recv.type, static_cast<std::size_t>(i) * recv.count, recv.count); };
  comm.sendrecv(r, sblk(r), r, rblk(r), tag);
  for (int s = 1; s < p; ++s) {
    const int dst = (r + s) % p;
    const int src = (r - s + p) % p;
    comm.sendrecv(dst, sblk(dst), src, rblk(src), tag);
  }
}

void reduce_scatterv_into(const Communicator& comm, std::span<const elem_t> input,
                          std::span<elem_t> output, std::span<const std::size_t> counts,
                          const ReduceOp& op) {
  const int p = comm.size();
  const int r = comm.rank();
  const auto up = static_cast<std::size_t>(p);
  LANECOLL_REQUIRE(counts.size() == up, "counts need one entry per rank");
  std::vector<std::size_t> displs(up, 0);
  for (std::size_t i = 1; i < up; ++i) displs[i] = displs[i - 1] + counts[i - 1];
  const std::size_t total = displs[up - 1] + counts[up - 1];
  const auto ur = static_cast<std::size_t>(r);
  LANECOLL_REQUIRE(input.size() >= total, "reduce-scatter input too short");
  LANECOLL_REQUIRE(output.size() >= counts[ur], "reduce-scatter output too short");
  const std::uint32_t tag = comm.next_tag();

  std::vector<elem_t> acc(input.begin(), input.begin() + static_cast<std::ptrdiff_t>(total));
  copy_counters().library += total;
  auto seg = [&](int i) {
    const auto ui = static_cast<std::size_t>(i);
    return std::span<elem_t>(acc).subspan(displs[ui], counts[ui]);
  };

  if (op.commutative()) {
    const int right = (r + 1) % p;
    const int left = (r - 1 + p) % p;
    std::vector<elem_t> tmp;
    for (int s = 1; s < p; ++s) {
      const int out = (r - s + p) % p;
      const int in = (r - s - 1 + p) % p;
      tmp.resize(seg(in).size());
      comm.sendrecv(right, CMsg(seg(out), seg(out).size()), left, Msg(tmp, tmp.size()), tag);
      op.apply(tmp, seg(in));
    }
    library_copy(seg(r), output);
    return;
  }

  // Rank-order chain: the running prefix moves from rank 0 to rank p-1,
  // which then scatters the result.
  if (r > 0) {
    std::vector<elem_t> partial(total);
    comm.recv(r - 1, tag, Msg(partial, total));
    op.apply(partial, acc, acc);
  }
  if (r < p - 1) comm.send(r + 1, tag, CMsg(acc, total));
  const std::vector<std::size_t> cnt(counts.begin(), counts.end());
  if (r == p - 1) {
    scatterv(comm, CBuf(acc), cnt, displs, Msg(output, counts[ur]), p - 1);
  } else {
    scatterv(comm, CBuf(), cnt, displs, Msg(output, counts[ur]), p - 1);
  }
}

void reduce_scatterv(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
                     std::span<const std::size_t> counts, const ReduceOp& op) {
  reduce_scatterv_into(comm, input_of(send, recv), recv, counts, op);
}

void reduce_scatter_block(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
                          std::size_t count, const ReduceOp& op) {
  check_agreement(comm, static_cast<long long>(count), "reduce_scatter_block count");
  const std::vector<std::size_t> counts(static_cast<std::size_t>(comm.size()), count);
  reduce_scatterv(comm, send, recv, counts, op);
}

void reduce(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t count, const ReduceOp& op, int root) {
  check_root(comm, root);
  check_agreement(comm, static_cast<long long>(count), "reduce count");
  const int r = comm.rank();
  LANECOLL_REQUIRE(r == root || !is_in_place(send), "in_place send is only valid at the root");
  if (r == root) LANECOLL_REQUIRE(recv.size() >= count, "reduce receive buffer too short");
  const Partition part = partition_counts(count, comm.size());
  const auto ur = static_cast<std::size_t>(r);
  const std::span<const elem_t> input = input_of(send, recv);
  LANECOLL_REQUIRE(input.size() >= count, "reduce input too short");
  if (r == root) {
    reduce_scatterv_into(comm, input, recv.subspan(part.displs[ur]), part.counts, op);
    gatherv(comm, in_place, Buf{recv, Layout()}, part.counts, part.displs, root);
  } else {
    std::vector<elem_t> mine(part.counts[ur]);
    reduce_scatterv_into(comm, input, mine, part.counts, op);
    gatherv(comm, CMsg(mine, mine.size()), Buf{}, part.counts, part.displs, root);
  }
}

void allreduce(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
               std::size_t count, const ReduceOp& op) {
  check_agreement(comm, static_cast<long long>(count), "allreduce count");
  LANECOLL_REQUIRE(recv.size() >= count, "allreduce receive buffer too short");
  const Partition part = partition_counts(count, comm.size());
  const auto ur = static_cast<std::size_t>(comm.rank());
  const std::span<const elem_t> input = input_of(send, recv);
  LANECOLL_REQUIRE(input.size() >= count, "allreduce input too short");
  reduce_scatterv_into(comm, input, recv.subspan(part.displs[ur]), part.counts, op);
  allgatherv(comm, in_place, Buf{recv, Layout()}, part.counts, part.displs);
}

void scan(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
          std::size_t count, const ReduceOp& op) {
  check_agreement(comm, static_cast<long long>(count), "scan count");
  const std::uint32_t tag = comm.next_tag();
  const int p = comm.size();
  const int r = comm.rank();
  LANECOLL_REQUIRE(recv.size() >= count, "scan receive buffer too short");
  const std::span<const elem_t> x = input_of(send, recv).first(count);
  const std::span<elem_t> out = recv.first(count);
  if (r == 0) {
    library_copy(x, out);
  } else {
    std::vector<elem_t> prefix(count);
    comm.recv(r - 1, tag, Msg(prefix, count));
    op.apply(prefix, x, out);
  }
  if (r < p - 1) comm.send(r + 1, tag, CMsg(out, count));
}

void exscan(const Communicator& comm, const SendSpan& send, std::span<elem_t> recv,
            std::size_t count, const ReduceOp& op) {
  check_agreement(comm, static_cast<long long>(count), "exscan count");
  const std::uint32_t tag = comm.next_tag();
  const int p = comm.size();
  const int r = comm.rank();
  const std::span<const elem_t> input = input_of(send, recv);
  LANECOLL_REQUIRE(input.size() >= count, "exscan input too short");
  const std::span<const elem_t> x = input.first(count);
  if (r == 0) {
    if (p > 1) comm.send(1, tag, CMsg(x, count));
    return;
  }
  LANECOLL_REQUIRE(recv.size() >= count, "exscan receive buffer too short");
  std::vector<elem_t> prefix(count);
  comm.recv(r - 1, tag, Msg(prefix, count));
  if (r < p - 1) {
    std::vector<elem_t> next(count);
    op.apply(prefix, x, next);
    comm.send(r + 1, tag, CMsg(next, count));
  }
  library_copy(prefix, recv.first(count));
}

void reduce_local(std::span<const elem_t> in, std::span<elem_t> inout, std::size_t count,
                  const ReduceOp& op) {
  LANECOLL_REQUIRE(in.size() >= count && inout.size() >= count, "reduce_local operands too short");
  op.apply(in.first(count), inout.first(count));
}

}  // namespace lanecoll::base
