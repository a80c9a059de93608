#include "lanecoll/transport.hpp"

#include <algorithm>
#include <atomic>

namespace lanecoll {

// ---------------------------------------------------------------- framing

namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_be32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Envelope& env) {
  const std::size_t body = kFrameHeaderBytes + 4 * env.payload.size();
  LANECOLL_REQUIRE(body <= 0xffffffffu, "frame too large");
  std::vector<std::uint8_t> out;
  out.reserve(4 + body);
  put_be32(out, static_cast<std::uint32_t>(body));
  put_be32(out, env.comm_id);
  put_be32(out, env.tag);
  put_be32(out, env.src);
  for (elem_t x : env.payload) {
    const auto u = static_cast<std::uint32_t>(x);
    out.push_back(static_cast<std::uint8_t>(u));
    out.push_back(static_cast<std::uint8_t>(u >> 8));
    out.push_back(static_cast<std::uint8_t>(u >> 16));
    out.push_back(static_cast<std::uint8_t>(u >> 24));
  }
  return out;
}

Envelope decode_frame_body(std::span<const std::uint8_t> body) {
  if (body.size() < kFrameHeaderBytes || (body.size() - kFrameHeaderBytes) % 4 != 0) {
    throw TransportError("malformed frame of " + std::to_string(body.size()) + " bytes");
  }
  Envelope env;
  env.comm_id = get_be32(body.data());
  env.tag = get_be32(body.data() + 4);
  env.src = get_be32(body.data() + 8);
  const std::size_t n = (body.size() - kFrameHeaderBytes) / 4;
  env.payload.resize(n);
  const std::uint8_t* p = body.data() + kFrameHeaderBytes;
  for (std::size_t i = 0; i < n; ++i, p += 4) {
    const std::uint32_t u = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                            (static_cast<std::uint32_t>(p[2]) << 16) |
                            (static_cast<std::uint32_t>(p[3]) << 24);
    env.payload[i] = static_cast<elem_t>(u);
  }
  return env;
}

// ---------------------------------------------------------------- mailbox

void Mailbox::push(Envelope env) {
  {
    std::lock_guard lock(mu_);
    queues_[Key{env.comm_id, env.src, env.tag}].push_back(std::move(env));
  }
  cv_.notify_all();
}

Envelope Mailbox::take(std::uint32_t comm_id, std::uint32_t src, std::uint32_t tag,
                       std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  const Key key{comm_id, src, tag};
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    auto it = queues_.find(key);
    if (it != queues_.end() && !it->second.empty()) {
      Envelope env = std::move(it->second.front());
      it->second.pop_front();
      if (it->second.empty()) queues_.erase(it);
      return env;
    }
    if (aborted_) throw TransportError(*aborted_);
    if (cv_.wait_until(lock, deadline) == std::cv_status::timeout) {
      throw TransportError("receive timed out (comm " + std::to_string(comm_id) + ", src " +
                           std::to_string(src) + ", tag " + std::to_string(tag) + ")");
    }
  }
}

void Mailbox::abort(const std::string& reason) {
  {
    std::lock_guard lock(mu_);
    if (!aborted_) aborted_ = reason;
  }
  cv_.notify_all();
}

std::size_t Mailbox::pending() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [k, q] : queues_) n += q.size();
  return n;
}

// ---------------------------------------------------------------- communicator

namespace detail {

struct CommState {
  std::shared_ptr<Endpoint> endpoint;
  std::uint32_t id = 0;
  int rank = 0;
  std::vector<int> members;  // world ranks
  mutable std::atomic<std::uint32_t> epoch{0};
  mutable std::atomic<std::uint64_t> splits{0};
  mutable std::mutex attr_mu;
  mutable std::map<std::string, std::shared_ptr<void>> attributes;
};

}  // namespace detail

namespace {

std::uint32_t mix_id(std::uint32_t parent, std::uint64_t seq, std::int64_t salt) {
  std::uint64_t z = (static_cast<std::uint64_t>(parent) << 32) ^ (seq * 0x9e3779b97f4a7c15ull) ^
                    static_cast<std::uint64_t>(salt + 0x632be59bd9b4e019ll);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  auto id = static_cast<std::uint32_t>(z ^ (z >> 32));
  return id == 0 ? 1u : id;
}

}  // namespace

Communicator Communicator::world(std::shared_ptr<Endpoint> endpoint) {
  auto s = std::make_shared<detail::CommState>();
  s->rank = endpoint->world_rank();
  s->members.resize(static_cast<std::size_t>(endpoint->world_size()));
  for (std::size_t i = 0; i < s->members.size(); ++i) s->members[i] = static_cast<int>(i);
  s->id = 1;
  s->endpoint = std::move(endpoint);
  return Communicator(std::move(s));
}

const detail::CommState& Communicator::st() const {
  LANECOLL_REQUIRE(state_ != nullptr, "operation on a null communicator");
  return *state_;
}

int Communicator::rank() const { return st().rank; }
int Communicator::size() const { return static_cast<int>(st().members.size()); }
std::uint32_t Communicator::id() const { return st().id; }
const std::vector<int>& Communicator::members() const { return st().members; }
Endpoint& Communicator::endpoint() const { return *st().endpoint; }

int Communicator::world_rank(int rank) const {
  LANECOLL_REQUIRE(rank >= 0 && rank < size(), "rank out of range");
  return st().members[static_cast<std::size_t>(rank)];
}

int Communicator::node_of(int rank) const { return endpoint().node_of(world_rank(rank)); }

std::uint32_t Communicator::next_tag() const {
  return st().epoch.fetch_add(1, std::memory_order_relaxed) & ~kControlTag;
}

std::uint64_t Communicator::split_count() const { return st().splits.load(); }

void Communicator::send(int dst, std::uint32_t tag, const CMsg& m) const {
  LANECOLL_REQUIRE(dst >= 0 && dst < size(), "destination rank out of range");
  LANECOLL_REQUIRE(dst != rank(), "self-send outside sendrecv self-copy");
  LANECOLL_REQUIRE((tag & kControlTag) == 0, "data tag uses the control bit");
  Envelope env;
  env.comm_id = id();
  env.tag = tag;
  env.src = static_cast<std::uint32_t>(rank());
  pack(m.buf, m.type, m.count, env.payload);

  auto& c = endpoint().counters();
  const std::uint64_t n = env.payload.size();
  c.sent_elems += n;
  c.sent_msgs += 1;
  const int my_node = node_of(rank());
  const int dst_node = node_of(dst);
  if (dst_node != my_node) {
    c.offnode_sent += n;
    c.egress_to_node[dst_node] += n;
  }
  c.clock += 1;
  env.round = c.clock;
  endpoint().deliver(world_rank(dst), std::move(env));
}

namespace {

void account_receive(const Communicator& comm, int src, const Envelope& env) {
  auto& ep = comm.endpoint();
  auto& c = ep.counters();
  const std::uint64_t n = env.payload.size();
  c.recv_elems += n;
  c.recv_msgs += 1;
  const int src_node = comm.node_of(src);
  if (src_node != comm.node_of(comm.rank())) {
    c.offnode_recv += n;
    c.ingress_from_node[src_node] += n;
  }
  if (ep.carries_rounds()) c.clock = std::max(c.clock, env.round);
}

}  // namespace

void Communicator::recv(int src, std::uint32_t tag, const Msg& m) const {
  LANECOLL_REQUIRE(src >= 0 && src < size(), "source rank out of range");
  LANECOLL_REQUIRE(src != rank(), "self-receive outside sendrecv self-copy");
  Envelope env = endpoint().mailbox().take(id(), static_cast<std::uint32_t>(src), tag,
                                           endpoint().recv_timeout());
  account_receive(*this, src, env);
  LANECOLL_REQUIRE(env.payload.size() == m.elements(),
                   "message of " + std::to_string(env.payload.size()) +
                       " elements does not match receive signature of " +
                       std::to_string(m.elements()));
  unpack(env.payload, m.buf, m.type, m.count);
}

std::vector<elem_t> Communicator::recv_vector(int src, std::uint32_t tag) const {
  LANECOLL_REQUIRE(src >= 0 && src < size() && src != rank(), "invalid source rank");
  Envelope env = endpoint().mailbox().take(id(), static_cast<std::uint32_t>(src), tag,
                                           endpoint().recv_timeout());
  account_receive(*this, src, env);
  return std::move(env.payload);
}

void Communicator::sendrecv(int dst, const CMsg& out, int src, const Msg& in,
                            std::uint32_t tag) const {
  const int me = rank();
  if (dst == me || src == me) {
    LANECOLL_REQUIRE(dst == me && src == me, "partial self-exchange in sendrecv");
    LANECOLL_REQUIRE(out.elements() == in.elements(), "self-copy signature mismatch");
    std::vector<elem_t> staging;
    staging.reserve(out.elements());
    pack(out.buf, out.type, out.count, staging);
    unpack(staging, in.buf, in.type, in.count);
    return;
  }
  // Sends are buffered by the fabric, so send-then-receive cannot deadlock
  // in cyclic patterns.
  send(dst, tag, out);
  recv(src, tag, in);
}

void Communicator::send_control(int dst, std::uint32_t tag, std::vector<elem_t> payload) const {
  LANECOLL_REQUIRE(dst >= 0 && dst < size() && dst != rank(), "invalid control destination");
  Envelope env;
  env.comm_id = id();
  env.tag = tag | kControlTag;
  env.src = static_cast<std::uint32_t>(rank());
  env.payload = std::move(payload);
  endpoint().deliver(world_rank(dst), std::move(env));
}

std::vector<elem_t> Communicator::recv_control(int src, std::uint32_t tag) const {
  LANECOLL_REQUIRE(src >= 0 && src < size() && src != rank(), "invalid control source");
  return endpoint()
      .mailbox()
      .take(id(), static_cast<std::uint32_t>(src), tag | kControlTag, endpoint().recv_timeout())
      .payload;
}

std::vector<std::vector<elem_t>> Communicator::allgather_control(const std::vector<elem_t>& mine) const {
  const int p = size();
  const int me = rank();
  const std::uint32_t tag = next_tag();
  std::vector<std::vector<elem_t>> all(static_cast<std::size_t>(p));
  all[static_cast<std::size_t>(me)] = mine;
  if (p == 1) return all;
  if (me == 0) {
    for (int r = 1; r < p; ++r) all[static_cast<std::size_t>(r)] = recv_control(r, tag);
    std::vector<elem_t> flat;
    for (const auto& v : all) {
      flat.push_back(static_cast<elem_t>(v.size()));
      flat.insert(flat.end(), v.begin(), v.end());
    }
    for (int r = 1; r < p; ++r) send_control(r, tag, flat);
  } else {
    send_control(0, tag, mine);
    const auto flat = recv_control(0, tag);
    std::size_t pos = 0;
    for (auto& v : all) {
      LANECOLL_REQUIRE(pos < flat.size(), "truncated control allgather");
      const auto n = static_cast<std::size_t>(flat[pos++]);
      LANECOLL_REQUIRE(pos + n <= flat.size(), "truncated control allgather");
      v.assign(flat.begin() + static_cast<std::ptrdiff_t>(pos),
               flat.begin() + static_cast<std::ptrdiff_t>(pos + n));
      pos += n;
    }
  }
  return all;
}

Communicator Communicator::split(int color, int key) const {
  const auto& s = st();
  const std::uint64_t seq = s.splits.fetch_add(1);
  const auto all = allgather_control({color, key});
  struct Entry {
    int key;
    int old_rank;
  };
  std::vector<Entry> group;
  for (int r = 0; r < size(); ++r) {
    const auto& v = all[static_cast<std::size_t>(r)];
    if (v.at(0) == color) group.push_back({v.at(1), r});
  }
  std::stable_sort(group.begin(), group.end(), [](const Entry& a, const Entry& b) {
    return a.key != b.key ? a.key < b.key : a.old_rank < b.old_rank;
  });
  auto ns = std::make_shared<detail::CommState>();
  ns->endpoint = s.endpoint;
  ns->id = mix_id(s.id, seq, color);
  for (std::size_t i = 0; i < group.size(); ++i) {
    ns->members.push_back(s.members[static_cast<std::size_t>(group[i].old_rank)]);
    if (group[i].old_rank == s.rank) ns->rank = static_cast<int>(i);
  }
  return Communicator(std::move(ns));
}

Communicator Communicator::dup() const { return split(0, rank()); }

Communicator Communicator::self() const {
  const auto& s = st();
  const std::uint64_t seq = s.splits.fetch_add(1);
  auto ns = std::make_shared<detail::CommState>();
  ns->endpoint = s.endpoint;
  ns->id = mix_id(s.id, seq, -1 - static_cast<std::int64_t>(s.members[static_cast<std::size_t>(s.rank)]));
  ns->rank = 0;
  ns->members = {s.members[static_cast<std::size_t>(s.rank)]};
  return Communicator(std::move(ns));
}

std::shared_ptr<void> Communicator::attribute(const std::string& key) const {
  const auto& s = st();
  std::lock_guard lock(s.attr_mu);
  auto it = s.attributes.find(key);
  return it == s.attributes.end() ? nullptr : it->second;
}

void Communicator::set_attribute(const std::string& key, std::shared_ptr<void> value) const {
  const auto& s = st();
  std::lock_guard lock(s.attr_mu);
  s.attributes[key] = std::move(value);
}

// ---------------------------------------------------------------- collectives on control plane

void barrier(const Communicator& comm) {
  const int p = comm.size();
  if (p == 1) return;
  const int me = comm.rank();
  const std::uint32_t tag = comm.next_tag();
  // Dissemination barrier.
  for (int dist = 1; dist < p; dist <<= 1) {
    comm.send_control((me + dist) % p, tag, {});
    comm.recv_control((me - dist + p) % p, tag);
  }
}

CostLedger ledger_snapshot(const Communicator& comm) {
  const auto all = comm.allgather_control(serialize_counters(comm.endpoint().counters()));
  std::vector<RankLedger> ranks;
  for (int r = 0; r < comm.size(); ++r) {
    RankLedger rl;
    rl.rank = r;
    rl.world_rank = comm.world_rank(r);
    rl.node = comm.node_of(r);
    rl.counters = deserialize_counters(all[static_cast<std::size_t>(r)]);
    ranks.push_back(std::move(rl));
  }
  return CostLedger(std::move(ranks));
}

void reset_ledger(const Communicator& comm) {
  barrier(comm);
  comm.endpoint().counters() = RankCounters{};
  barrier(comm);
}

}  // namespace lanecoll
