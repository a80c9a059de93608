#include "lanecoll/ledger.hpp"

#include <algorithm>

namespace lanecoll {

std::uint64_t CostLedger::total_sent() const {
  std::uint64_t s = 0;
  for (const auto& r : ranks_) s += r.counters.sent_elems;
  return s;
}

std::uint64_t CostLedger::total_received() const {
  std::uint64_t s = 0;
  for (const auto& r : ranks_) s += r.counters.recv_elems;
  return s;
}

std::map<int, std::uint64_t> CostLedger::node_ingress() const {
  std::map<int, std::uint64_t> m;
  for (const auto& r : ranks_) m[r.node] += r.counters.offnode_recv;
  return m;
}

std::map<int, std::uint64_t> CostLedger::node_egress() const {
  std::map<int, std::uint64_t> m;
  for (const auto& r : ranks_) m[r.node] += r.counters.offnode_sent;
  return m;
}

std::uint64_t CostLedger::node_to_node(int src_node, int dst_node) const {
  std::uint64_t s = 0;
  for (const auto& r : ranks_) {
    if (r.node != src_node) continue;
    auto it = r.counters.egress_to_node.find(dst_node);
    if (it != r.counters.egress_to_node.end()) s += it->second;
  }
  return s;
}

std::vector<int> CostLedger::offnode_ranks() const {
  std::vector<int> out;
  for (const auto& r : ranks_) {
    if (r.counters.offnode_sent > 0 || r.counters.offnode_recv > 0) out.push_back(r.rank);
  }
  return out;
}

std::uint64_t CostLedger::rounds() const {
  std::uint64_t m = 0;
  for (const auto& r : ranks_) m = std::max(m, r.counters.clock);
  return m;
}

bool CostLedger::same_traffic(const CostLedger& other) const {
  if (ranks_.size() != other.ranks_.size()) return false;
  for (std::size_t i = 0; i < ranks_.size(); ++i) {
    auto a = ranks_[i].counters;
    auto b = other.ranks_[i].counters;
    a.clock = b.clock = 0;
    if (!(a == b) || ranks_[i].node != other.ranks_[i].node) return false;
  }
  return true;
}

namespace {

void put_u64(std::vector<elem_t>& out, std::uint64_t v) {
  out.push_back(static_cast<elem_t>(static_cast<std::uint32_t>(v >> 32)));
  out.push_back(static_cast<elem_t>(static_cast<std::uint32_t>(v & 0xffffffffu)));
}

std::uint64_t get_u64(std::span<const elem_t> data, std::size_t& pos) {
  LANECOLL_REQUIRE(pos + 2 <= data.size(), "truncated counter record");
  const auto hi = static_cast<std::uint32_t>(data[pos]);
  const auto lo = static_cast<std::uint32_t>(data[pos + 1]);
  pos += 2;
  return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

void put_map(std::vector<elem_t>& out, const std::map<int, std::uint64_t>& m) {
  out.push_back(static_cast<elem_t>(m.size()));
  for (const auto& [k, v] : m) {
    out.push_back(k);
    put_u64(out, v);
  }
}

std::map<int, std::uint64_t> get_map(std::span<const elem_t> data, std::size_t& pos) {
  LANECOLL_REQUIRE(pos < data.size(), "truncated counter record");
  const auto n = static_cast<std::size_t>(data[pos++]);
  std::map<int, std::uint64_t> m;
  for (std::size_t i = 0; i < n; ++i) {
    LANECOLL_REQUIRE(pos < data.size(), "truncated counter record");
    const int key = data[pos++];
    m[key] = get_u64(data, pos);
  }
  return m;
}

}  // namespace

std::vector<elem_t> serialize_counters(const RankCounters& c) {
  std::vector<elem_t> out;
  for (auto v : {c.sent_elems, c.recv_elems, c.sent_msgs, c.recv_msgs, c.offnode_sent,
                 c.offnode_recv, c.clock}) {
    put_u64(out, v);
  }
  put_map(out, c.egress_to_node);
  put_map(out, c.ingress_from_node);
  return out;
}

RankCounters deserialize_counters(std::span<const elem_t> data) {
  RankCounters c;
  std::size_t pos = 0;
  c.sent_elems = get_u64(data, pos);
  c.recv_elems = get_u64(data, pos);
  c.sent_msgs = get_u64(data, pos);
  c.recv_msgs = get_u64(data, pos);
  c.offnode_sent = get_u64(data, pos);
  c.offnode_recv = get_u64(data, pos);
  c.clock = get_u64(data, pos);
  c.egress_to_node = get_map(data, pos);
  c.ingress_from_node = get_map(data, pos);
  return c;
}

}  // namespace lanecoll
