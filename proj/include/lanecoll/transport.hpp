#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "lanecoll/error.hpp"
#include "lanecoll/layout.hpp"
#include "lanecoll/ledger.hpp"

namespace lanecoll {

/// One message in flight. `src` is the sender's rank in the communicator
/// identified by `comm_id`.
struct Envelope {
  std::uint32_t comm_id = 0;
  std::uint32_t tag = 0;
  std::uint32_t src = 0;
  std::vector<elem_t> payload;
  std::uint64_t round = 0;  // logical clock stamp, in-process only
};

/// Tags with this bit set carry control traffic that bypasses the ledger.
inline constexpr std::uint32_t kControlTag = 0x80000000u;

/// Wire frame: u32 BE length of everything after the length field, then
/// comm_id, tag, src as u32 BE, then the payload as little-endian i32.
inline constexpr std::size_t kFrameHeaderBytes = 12;
std::vector<std::uint8_t> encode_frame(const Envelope& env);
/// Decode the part of a frame following the length prefix.
Envelope decode_frame_body(std::span<const std::uint8_t> body);

/// Per-rank receive queue with exact (comm_id, src, tag) matching and FIFO
/// order within a triple. Safe for concurrent producers.
class Mailbox {
 public:
  void push(Envelope env);
  Envelope take(std::uint32_t comm_id, std::uint32_t src, std::uint32_t tag,
                std::chrono::milliseconds timeout);
  /// Wake every waiter with a TransportError. Later takes still drain queued
  /// messages but fail instead of blocking.
  void abort(const std::string& reason);
  std::size_t pending() const;

 private:
  using Key = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<Key, std::deque<Envelope>> queues_;
  std::optional<std::string> aborted_;
};

/// A rank's attachment to a fabric. Owned by that rank's thread.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  Endpoint(const Endpoint&) = delete;
  Endpoint& operator=(const Endpoint&) = delete;

  int world_rank() const { return rank_; }
  int world_size() const { return static_cast<int>(node_of_.size()); }
  int node_of(int world_rank) const { return node_of_.at(static_cast<std::size_t>(world_rank)); }
  const std::vector<int>& node_map() const { return node_of_; }

  /// Hand a message to world rank `dst`. Never blocks on the receiver.
  virtual void deliver(int dst, Envelope env) = 0;
  /// Whether round stamps survive delivery (false over TCP).
  virtual bool carries_rounds() const = 0;

  Mailbox& mailbox() { return mailbox_; }
  RankCounters& counters() { return counters_; }
  std::chrono::milliseconds recv_timeout() const { return timeout_; }
  void set_recv_timeout(std::chrono::milliseconds t) { timeout_ = t; }

 protected:
  Endpoint(int rank, std::vector<int> node_of) : rank_(rank), node_of_(std::move(node_of)) {}

 private:
  int rank_;
  std::vector<int> node_of_;
  Mailbox mailbox_;
  RankCounters counters_;
  std::chrono::milliseconds timeout_{std::chrono::seconds(60)};
};

/// Mutable message view: `count` units of `type`, unit q at q*type.extent().
struct Msg {
  std::span<elem_t> buf;
  std::size_t count = 0;
  Layout type;

  Msg() = default;
  Msg(std::span<elem_t> b, std::size_t c, Layout t = Layout()) : buf(b), count(c), type(std::move(t)) {}
  std::size_t elements() const { return count * type.size(); }
};

struct CMsg {
  std::span<const elem_t> buf;
  std::size_t count = 0;
  Layout type;

  CMsg() = default;
  CMsg(std::span<const elem_t> b, std::size_t c, Layout t = Layout()) : buf(b), count(c), type(std::move(t)) {}
  CMsg(const Msg& m) : buf(m.buf), count(m.count), type(m.type) {}  // NOLINT
  std::size_t elements() const { return count * type.size(); }
};

/// Marker for MPI_IN_PLACE semantics.
struct InPlace {};
inline constexpr InPlace in_place{};

using SendMsg = std::variant<InPlace, CMsg>;
using RecvMsg = std::variant<InPlace, Msg>;
using SendSpan = std::variant<InPlace, std::span<const elem_t>>;

inline bool is_in_place(const SendMsg& s) { return std::holds_alternative<InPlace>(s); }
inline bool is_in_place(const RecvMsg& s) { return std::holds_alternative<InPlace>(s); }
inline bool is_in_place(const SendSpan& s) { return std::holds_alternative<InPlace>(s); }

namespace detail {
struct CommState;
}

/// Ordered group of endpoints with a private tag space. A Communicator is a
/// handle: copies share the underlying group and its epoch counter.
class Communicator {
 public:
  Communicator() = default;
  static Communicator world(std::shared_ptr<Endpoint> endpoint);

  bool valid() const { return state_ != nullptr; }
  int rank() const;
  int size() const;
  std::uint32_t id() const;
  int world_rank(int rank) const;
  int node_of(int rank) const;
  const std::vector<int>& members() const;
  Endpoint& endpoint() const;

  /// Next tag of this communicator's epoch counter. Every member draws tags
  /// in the same order because collectives are called in the same order.
  std::uint32_t next_tag() const;
  /// Number of split/dup/self calls made on this communicator.
  std::uint64_t split_count() const;

  void send(int dst, std::uint32_t tag, const CMsg& m) const;
  void recv(int src, std::uint32_t tag, const Msg& m) const;
  std::vector<elem_t> recv_vector(int src, std::uint32_t tag) const;
  /// Send and receive without ordering deadlock. With dst == src == rank()
  /// this is a local self-copy through the two layouts.
  void sendrecv(int dst, const CMsg& out, int src, const Msg& in, std::uint32_t tag) const;

  void send_control(int dst, std::uint32_t tag, std::vector<elem_t> payload) const;
  std::vector<elem_t> recv_control(int src, std::uint32_t tag) const;
  /// Every rank receives every rank's vector, indexed by rank.
  std::vector<std::vector<elem_t>> allgather_control(const std::vector<elem_t>& mine) const;

  /// Collective: ranks with equal color form a new communicator ordered by
  /// (key, old rank).
  Communicator split(int color, int key) const;
  Communicator dup() const;
  /// Single-member communicator holding only the caller.
  Communicator self() const;

  /// Attribute cache bound to this communicator's identity.
  std::shared_ptr<void> attribute(const std::string& key) const;
  void set_attribute(const std::string& key, std::shared_ptr<void> value) const;

  friend bool operator==(const Communicator& a, const Communicator& b) { return a.state_ == b.state_; }

 private:
  explicit Communicator(std::shared_ptr<detail::CommState> s) : state_(std::move(s)) {}
  const detail::CommState& st() const;
  std::shared_ptr<detail::CommState> state_;
};

/// No rank leaves before every rank has entered.
void barrier(const Communicator& comm);

/// Collective snapshot of every member's counters. Call at a quiescent point.
CostLedger ledger_snapshot(const Communicator& comm);
/// Collective: zero the counters (and round clocks) of every member.
void reset_ledger(const Communicator& comm);

}  // namespace lanecoll
