#include "lanecoll/reduce_op.hpp"

#include <cstdint>
#include <limits>

namespace lanecoll {

namespace {
// Wrapping arithmetic: overflow is defined on the unsigned representation.
elem_t wrap_add(elem_t a, elem_t b) {
  return static_cast<elem_t>(static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
}
elem_t wrap_mul(elem_t a, elem_t b) {
  return static_cast<elem_t>(static_cast<std::uint32_t>(a) * static_cast<std::uint32_t>(b));
}
}  // namespace

ReduceOp ReduceOp::sum() { return {"sum", wrap_add, true, 0}; }
ReduceOp ReduceOp::prod() { return {"prod", wrap_mul, true, 1}; }
ReduceOp ReduceOp::max() {
  return {"max", [](elem_t a, elem_t b) { return a < b ? b : a; }, true,
          std::numeric_limits<elem_t>::min()};
}
ReduceOp ReduceOp::min() {
  return {"min", [](elem_t a, elem_t b) { return b < a ? b : a; }, true,
          std::numeric_limits<elem_t>::max()};
}
ReduceOp ReduceOp::band() { return {"band", [](elem_t a, elem_t b) { return a & b; }, true, -1}; }
ReduceOp ReduceOp::bor() { return {"bor", [](elem_t a, elem_t b) { return a | b; }, true, 0}; }
ReduceOp ReduceOp::bxor() { return {"bxor", [](elem_t a, elem_t b) { return a ^ b; }, true, 0}; }
ReduceOp ReduceOp::first() {
  return {"first", [](elem_t a, elem_t) { return a; }, false, std::nullopt};
}

ReduceOp ReduceOp::by_name(const std::string& name) {
  for (auto op : {sum(), prod(), max(), min(), band(), bor(), bxor(), first()}) {
    if (op.name() == name) return op;
  }
  throw ContractViolation("unknown reduction operator '" + name + "'");
}

void ReduceOp::apply(std::span<const elem_t> in, std::span<elem_t> inout) const {
  LANECOLL_REQUIRE(in.size() == inout.size(), "reduction operand lengths differ");
  for (std::size_t i = 0; i < in.size(); ++i) inout[i] = fn_(in[i], inout[i]);
}

void ReduceOp::apply(std::span<const elem_t> a, std::span<const elem_t> b, std::span<elem_t> out) const {
  LANECOLL_REQUIRE(a.size() == b.size() && a.size() == out.size(), "reduction operand lengths differ");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn_(a[i], b[i]);
}

}  // namespace lanecoll
