#pragma once

#include <optional>
#include <span>
#include <string>

#include "lanecoll/error.hpp"

namespace lanecoll {

/// Associative elementwise operator on elem_t. `combine(a, b)` has `a` as
/// the operand from the lower rank.
class ReduceOp {
 public:
  using Fn = elem_t (*)(elem_t, elem_t);

  ReduceOp(std::string name, Fn fn, bool commutative, std::optional<elem_t> identity)
      : name_(std::move(name)), fn_(fn), commutative_(commutative), identity_(identity) {}

  static ReduceOp sum();
  static ReduceOp prod();
  static ReduceOp max();
  static ReduceOp min();
  static ReduceOp band();
  static ReduceOp bor();
  static ReduceOp bxor();
  /// a (+) b = a. Associative, not commutative; used to check rank order.
  static ReduceOp first();
  /// Look up by name ("sum", "max", ...). Throws ContractViolation.
  static ReduceOp by_name(const std::string& name);

  const std::string& name() const { return name_; }
  bool commutative() const { return commutative_; }
  const std::optional<elem_t>& identity() const { return identity_; }
  elem_t combine(elem_t a, elem_t b) const { return fn_(a, b); }

  /// inout[i] = in[i] (+) inout[i]
  void apply(std::span<const elem_t> in, std::span<elem_t> inout) const;
  /// out[i] = a[i] (+) b[i]; out may alias either input.
  void apply(std::span<const elem_t> a, std::span<const elem_t> b, std::span<elem_t> out) const;

 private:
  std::string name_;
  Fn fn_;
  bool commutative_;
  std::optional<elem_t> identity_;
};

}  // namespace lanecoll
