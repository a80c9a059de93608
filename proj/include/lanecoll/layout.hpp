#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "lanecoll/error.hpp"

namespace lanecoll {

/// Strided element-placement descriptor, the in-process analogue of an MPI
/// derived datatype restricted to the constructors the collectives need.
///
/// A layout describes where the elements of one *unit* live relative to a
/// base offset, in pack order, and an extent. Unit q of a message starts at
/// q * extent(). All quantities are in elements, never bytes.
class Layout {
 public:
  enum class Kind { elementary, contiguous, vector, resized };

  /// One element, extent one.
  Layout();

  static Layout elementary() { return Layout(); }
  static Layout contiguous(std::size_t count, const Layout& base = Layout());
  /// blockcount blocks of blocklen base units, block starts stride base
  /// extents apart.
  static Layout vector(std::size_t blockcount, std::size_t blocklen,
                       std::size_t stride, const Layout& base = Layout());
  /// Same offsets as base, new extent.
  static Layout resized(const Layout& base, std::size_t extent);

  Kind kind() const { return node_->kind; }
  std::size_t extent() const { return node_->extent; }
  /// Elements per unit.
  std::size_t size() const { return node_->offsets.size(); }
  /// Offsets of unit 0 in pack order.
  std::span<const std::size_t> offsets() const { return node_->offsets; }
  std::vector<std::size_t> offsets(std::size_t unit) const;
  /// Smallest buffer length that holds `units` consecutive units.
  std::size_t required_length(std::size_t units) const;
  /// Offsets are 0..size()-1 in order and extent()==size().
  bool is_contiguous() const { return node_->dense; }

  friend bool operator==(const Layout& a, const Layout& b);

 private:
  struct Node {
    Kind kind = Kind::elementary;
    std::size_t extent = 1;
    std::size_t max_offset = 0;
    bool dense = true;
    std::vector<std::size_t> offsets;
  };
  explicit Layout(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Layout finish(Node node);

  std::shared_ptr<const Node> node_;
};

/// Per-thread element copy accounting. One thread drives one rank, so the
/// counters are per rank in the in-process transport.
struct CopyCounters {
  std::uint64_t marshal = 0;   // transport pack/unpack (incl. self-copies)
  std::uint64_t strided = 0;   // subset of marshal that went through a
                               // non-contiguous layout
  std::uint64_t library = 0;   // basecoll-internal working copies
  std::uint64_t explicit_copies = 0;  // copy_through calls
};

CopyCounters& copy_counters();
void reset_copy_counters();

/// Append `units` units of `layout` read from `buf` to `out` (marshaling).
void pack(std::span<const elem_t> buf, const Layout& layout, std::size_t units,
          std::vector<elem_t>& out);
/// Scatter `packed` into `buf` through `layout` (marshaling).
void unpack(std::span<const elem_t> packed, std::span<elem_t> buf,
            const Layout& layout, std::size_t units);

/// Element-for-element copy in pack order from one layout to another. The
/// source is staged first, so `src` and `dst` may alias.
void copy_through(std::span<const elem_t> src, const Layout& src_layout,
                  std::span<elem_t> dst, const Layout& dst_layout,
                  std::size_t units);

}  // namespace lanecoll
