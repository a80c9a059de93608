#include "lanecoll/layout.hpp"

#include <algorithm>
#include <cstring>

namespace lanecoll {

Layout::Layout() : node_(std::make_shared<const Node>(Node{Kind::elementary, 1, 0, true, {0}})) {}

Layout Layout::finish(Node node) {
  if (!node.offsets.empty()) {
    node.max_offset = *std::max_element(node.offsets.begin(), node.offsets.end());
    std::vector<std::size_t> sorted = node.offsets;
    std::sort(sorted.begin(), sorted.end());
    LANECOLL_REQUIRE(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
                     "layout offsets overlap within one unit");
  }
  node.dense = node.extent == node.offsets.size();
  for (std::size_t i = 0; node.dense && i < node.offsets.size(); ++i) {
    node.dense = node.offsets[i] == i;
  }
  return Layout(std::make_shared<const Node>(std::move(node)));
}

Layout Layout::contiguous(std::size_t count, const Layout& base) {
  Node node;
  node.kind = Kind::contiguous;
  node.extent = count * base.extent();
  node.offsets.reserve(count * base.size());
  for (std::size_t q = 0; q < count; ++q) {
    for (std::size_t off : base.offsets()) {
      node.offsets.push_back(q * base.extent() + off);
    }
  }
  return finish(std::move(node));
}

Layout Layout::vector(std::size_t blockcount, std::size_t blocklen,
                      std::size_t stride, const Layout& base) {
  Node node;
  node.kind = Kind::vector;
  node.extent = blockcount == 0 ? 0 : ((blockcount - 1) * stride + blocklen) * base.extent();
  node.offsets.reserve(blockcount * blocklen * base.size());
  for (std::size_t b = 0; b < blockcount; ++b) {
    for (std::size_t e = 0; e < blocklen; ++e) {
      for (std::size_t off : base.offsets()) {
        node.offsets.push_back((b * stride + e) * base.extent() + off);
      }
    }
  }
  return finish(std::move(node));
}

Layout Layout::resized(const Layout& base, std::size_t extent) {
  Node node;
  node.kind = Kind::resized;
  node.extent = extent;
  node.offsets.assign(base.offsets().begin(), base.offsets().end());
  return finish(std::move(node));
}

std::vector<std::size_t> Layout::offsets(std::size_t unit) const {
  std::vector<std::size_t> out(node_->offsets.begin(), node_->offsets.end());
  for (auto& o : out) o += unit * extent();
  return out;
}

std::size_t Layout::required_length(std::size_t units) const {
  if (units == 0 || size() == 0) return 0;
  return (units - 1) * extent() + node_->max_offset + 1;
}

bool operator==(const Layout& a, const Layout& b) {
  return a.node_ == b.node_ ||
         (a.extent() == b.extent() && std::equal(a.offsets().begin(), a.offsets().end(),
                                                 b.offsets().begin(), b.offsets().end()));
}

CopyCounters& copy_counters() {
  thread_local CopyCounters counters;
  return counters;
}

void reset_copy_counters() { copy_counters() = CopyCounters{}; }

void pack(std::span<const elem_t> buf, const Layout& layout, std::size_t units,
          std::vector<elem_t>& out) {
  const std::size_t n = units * layout.size();
  if (n == 0) return;
  LANECOLL_REQUIRE(layout.required_length(units) <= buf.size(),
                   "source buffer too small for layout");
  auto& cc = copy_counters();
  cc.marshal += n;
  const std::size_t start = out.size();
  out.resize(start + n);
  if (layout.is_contiguous()) {
    std::memcpy(out.data() + start, buf.data(), n * sizeof(elem_t));
    return;
  }
  cc.strided += n;
  elem_t* dst = out.data() + start;
  const auto offs = layout.offsets();
  for (std::size_t u = 0; u < units; ++u) {
    const elem_t* base = buf.data() + u * layout.extent();
    for (std::size_t off : offs) *dst++ = base[off];
  }
}

void unpack(std::span<const elem_t> packed, std::span<elem_t> buf,
            const Layout& layout, std::size_t units) {
  const std::size_t n = units * layout.size();
  LANECOLL_REQUIRE(packed.size() == n, "packed length does not match layout signature");
  if (n == 0) return;
  LANECOLL_REQUIRE(layout.required_length(units) <= buf.size(),
                   "destination buffer too small for layout");
  auto& cc = copy_counters();
  cc.marshal += n;
  if (layout.is_contiguous()) {
    std::memmove(buf.data(), packed.data(), n * sizeof(elem_t));
    return;
  }
  cc.strided += n;
  const elem_t* src = packed.data();
  const auto offs = layout.offsets();
  for (std::size_t u = 0; u < units; ++u) {
    elem_t* base = buf.data() + u * layout.extent();
    for (std::size_t off : offs) base[off] = *src++;
  }
}

void copy_through(std::span<const elem_t> src, const Layout& src_layout,
                  std::span<elem_t> dst, const Layout& dst_layout,
                  std::size_t units) {
  LANECOLL_REQUIRE(src_layout.size() == dst_layout.size(),
                   "layouts describe different per-unit element counts");
  LANECOLL_REQUIRE(src_layout.required_length(units) <= src.size(),
                   "source footprint overflows buffer");
  LANECOLL_REQUIRE(dst_layout.required_length(units) <= dst.size(),
                   "destination footprint overflows buffer");
  const std::size_t n = units * src_layout.size();
  std::vector<elem_t> staging;
  staging.reserve(n);
  const auto outer = copy_counters();
  pack(src, src_layout, units, staging);
  unpack(staging, dst, dst_layout, units);
  auto& cc = copy_counters();
  cc.marshal = outer.marshal;
  cc.strided = outer.strided;
  cc.explicit_copies += n;
}

}  // namespace lanecoll
