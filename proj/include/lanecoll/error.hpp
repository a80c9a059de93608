#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lanecoll {

/// Element type carried by every payload.
using elem_t = std::int32_t;

/// A caller broke an operation's precondition (bad rank, short buffer, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The messaging layer failed: peer disconnect, abort, timeout.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was asked to do something it does not support, e.g. a
/// lane reduction with a non-commutative operator.
class UnsupportedOperation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {
[[noreturn]] inline void contract_failed(const char* expr, const char* file,
                                         int line, const std::string& msg) {
  throw ContractViolation(std::string(file) + ":" + std::to_string(line) +
                          ": requirement '" + expr + "' failed" +
                          (msg.empty() ? std::string() : ": " + msg));
}
}  // namespace detail

}  // namespace lanecoll

#define LANECOLL_REQUIRE(cond, msg)                                        \
  do {                                                                     \
    if (!(cond)) {                                                         \
      ::lanecoll::detail::contract_failed(#cond, __FILE__, __LINE__, msg); \
    }                                                                      \
  } while (0)
