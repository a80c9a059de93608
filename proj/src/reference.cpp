#include "lanecoll/reference.hpp"

#include <random>

namespace lanecoll::reference {

std::vector<elem_t> make_input(std::uint64_t seed, int rank, std::size_t length) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(rank) + 1);
  std::uniform_int_distribution<elem_t> dist(-1000, 1000);
  std::vector<elem_t> v(length);
  for (auto& x : v) x = dist(rng);
  return v;
}

std::vector<elem_t> make_recv_init(int rank, std::size_t length) {
  std::vector<elem_t> v(length);
  for (std::size_t i = 0; i < length; ++i) {
    v[i] = -7000000 - rank * 1000 - static_cast<elem_t>(i % 1000);
  }
  return v;
}

std::vector<elem_t> input_for(Coll c, int p, std::size_t count, int rank, int root,
                              std::uint64_t seed) {
  if (c == Coll::bcast) return rank == root ? make_input(seed, rank, count) : std::vector<elem_t>{};
  return make_input(seed, rank, send_length(c, p, count, rank, root));
}

namespace {

// Elementwise reduction of ranks [lo, hi) over elements [off, off+len).
std::vector<elem_t> fold(const std::vector<std::vector<elem_t>>& in, int lo, int hi,
                         std::size_t off, std::size_t len, const ReduceOp& op) {
  std::vector<elem_t> acc(in[static_cast<std::size_t>(lo)].begin() + static_cast<std::ptrdiff_t>(off),
                          in[static_cast<std::size_t>(lo)].begin() + static_cast<std::ptrdiff_t>(off + len));
  for (int r = lo + 1; r < hi; ++r) {
    const auto& x = in[static_cast<std::size_t>(r)];
    for (std::size_t e = 0; e < len; ++e) acc[e] = op.combine(acc[e], x[off + e]);
  }
  return acc;
}

}  // namespace

std::vector<elem_t> expected(Coll c, const std::vector<std::vector<elem_t>>& inputs,
                             const std::vector<elem_t>& recv_init, int rank, std::size_t count,
                             int root, const ReduceOp& op) {
  const int p = static_cast<int>(inputs.size());
  const auto ur = static_cast<std::size_t>(rank);
  std::vector<elem_t> out = recv_init;
  auto put = [&](std::size_t at, const std::vector<elem_t>& v, std::size_t from, std::size_t len) {
    for (std::size_t e = 0; e < len; ++e) out[at + e] = v[from + e];
  };
  switch (c) {
    case Coll::bcast:
      put(0, inputs[static_cast<std::size_t>(root)], 0, count);
      break;
    case Coll::gather:
      if (rank == root) {
        for (int r = 0; r < p; ++r) put(static_cast<std::size_t>(r) * count, inputs[static_cast<std::size_t>(r)], 0, count);
      }
      break;
    case Coll::scatter:
      put(0, inputs[static_cast<std::size_t>(root)], ur * count, count);
      break;
    case Coll::allgather:
      for (int r = 0; r < p; ++r) put(static_cast<std::size_t>(r) * count, inputs[static_cast<std::size_t>(r)], 0, count);
      break;
    case Coll::alltoall:
      for (int r = 0; r < p; ++r) put(static_cast<std::size_t>(r) * count, inputs[static_cast<std::size_t>(r)], ur * count, count);
      break;
    case Coll::reduce:
      if (rank == root && p > 0) put(0, fold(inputs, 0, p, 0, count, op), 0, count);
      break;
    case Coll::allreduce:
      put(0, fold(inputs, 0, p, 0, count, op), 0, count);
      break;
    case Coll::reduce_scatter_block:
      put(0, fold(inputs, 0, p, ur * count, count, op), 0, count);
      break;
    case Coll::scan:
      put(0, fold(inputs, 0, rank + 1, 0, count, op), 0, count);
      break;
    case Coll::exscan:
      if (rank > 0) put(0, fold(inputs, 0, rank, 0, count, op), 0, count);
      break;
  }
  return out;
}

}  // namespace lanecoll::reference
