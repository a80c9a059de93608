#include "lanecoll/tcp_transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

namespace lanecoll {

namespace {

// Reserved frame announcing an orderly close; comm id 0 is never allocated.
constexpr std::uint32_t kByeTag = kControlTag | 0x7fffffffu;

[[noreturn]] void sys_fail(const std::string& what) {
  throw TransportError(what + ": " + std::strerror(errno));
}

void write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      sys_fail("send");
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

/// False on clean EOF before any byte was read.
bool read_all(int fd, std::uint8_t* data, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, data + got, n - got, 0);
    if (r == 0) {
      if (got == 0) return false;
      throw TransportError("connection closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      sys_fail("recv");
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

void put_u32(int fd, std::uint32_t v) {
  const std::uint32_t be = htonl(v);
  write_all(fd, reinterpret_cast<const std::uint8_t*>(&be), 4);
}

std::uint32_t get_u32(int fd) {
  std::uint32_t be = 0;
  if (!read_all(fd, reinterpret_cast<std::uint8_t*>(&be), 4)) {
    throw TransportError("connection closed during handshake");
  }
  return ntohl(be);
}

in_addr resolve_ipv4(const std::string& host) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw TransportError("cannot resolve host '" + host + "'");
  }
  const in_addr addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

int connect_with_retry(in_addr addr, std::uint16_t port, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) sys_fail("socket");
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(port);
    sa.sin_addr = addr;
    if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) == 0) {
      set_nodelay(fd);
      return fd;
    }
    const int err = errno;
    ::close(fd);
    if (std::chrono::steady_clock::now() > deadline) {
      errno = err;
      sys_fail("connect to port " + std::to_string(port));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

int accept_with_timeout(int listen_fd, std::chrono::milliseconds timeout) {
  pollfd pfd{listen_fd, POLLIN, 0};
  const int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (rc == 0) throw TransportError("timed out waiting for peers to connect");
  if (rc < 0) sys_fail("poll");
  const int fd = ::accept(listen_fd, nullptr, nullptr);
  if (fd < 0) sys_fail("accept");
  set_nodelay(fd);
  return fd;
}

class TcpEndpoint final : public Endpoint {
 public:
  TcpEndpoint(int rank, std::vector<int> node_of) : Endpoint(rank, std::move(node_of)) {
    peers_.resize(static_cast<std::size_t>(world_size()));
  }

  ~TcpEndpoint() override {
    closing_ = true;
    for (std::size_t r = 0; r < peers_.size(); ++r) {
      auto& peer = peers_[r];
      if (peer.fd < 0) continue;
      try {
        Envelope bye;
        bye.tag = kByeTag;
        bye.src = static_cast<std::uint32_t>(world_rank());
        const auto frame = encode_frame(bye);
        std::lock_guard lock(peer.write_mu);
        write_all(peer.fd, frame.data(), frame.size());
      } catch (const TransportError&) {
      }
      ::shutdown(peer.fd, SHUT_WR);
    }
    for (auto& t : readers_) {
      if (t.joinable()) t.join();
    }
    for (auto& peer : peers_) {
      if (peer.fd >= 0) ::close(peer.fd);
    }
  }

  void attach(int peer_rank, int fd) { peers_.at(static_cast<std::size_t>(peer_rank)).fd = fd; }

  void start_readers() {
    for (std::size_t r = 0; r < peers_.size(); ++r) {
      if (peers_[r].fd < 0) continue;
      readers_.emplace_back([this, r] { read_loop(static_cast<int>(r)); });
    }
  }

  void deliver(int dst, Envelope env) override {
    LANECOLL_REQUIRE(dst >= 0 && dst < world_size() && dst != world_rank(), "invalid destination rank");
    auto& peer = peers_[static_cast<std::size_t>(dst)];
    const auto frame = encode_frame(env);
    std::lock_guard lock(peer.write_mu);
    write_all(peer.fd, frame.data(), frame.size());
  }

  bool carries_rounds() const override { return false; }

 private:
  struct Peer {
    int fd = -1;
    std::mutex write_mu;
  };

  void read_loop(int peer_rank) {
    const int fd = peers_[static_cast<std::size_t>(peer_rank)].fd;
    bool said_bye = false;
    try {
      for (;;) {
        std::uint32_t be = 0;
        if (!read_all(fd, reinterpret_cast<std::uint8_t*>(&be), 4)) break;
        std::vector<std::uint8_t> body(ntohl(be));
        if (!read_all(fd, body.data(), body.size())) throw TransportError("connection closed mid-frame");
        Envelope env = decode_frame_body(body);
        if (env.comm_id == 0 && env.tag == kByeTag) {
          said_bye = true;
          continue;
        }
        mailbox().push(std::move(env));
      }
      if (!said_bye && !closing_) {
        mailbox().abort("peer " + std::to_string(peer_rank) + " disconnected");
      }
    } catch (const std::exception& e) {
      if (!closing_) mailbox().abort("peer " + std::to_string(peer_rank) + ": " + e.what());
    }
  }

  std::deque<Peer> peers_;
  std::vector<std::thread> readers_;
  std::atomic<bool> closing_{false};
};

}  // namespace

HostPort parse_host_port(const std::string& text) {
  const auto colon = text.rfind(':');
  LANECOLL_REQUIRE(colon != std::string::npos && colon > 0 && colon + 1 < text.size(),
                   "expected host:port, got '" + text + "'");
  HostPort hp;
  hp.host = text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  char* end = nullptr;
  const long v = std::strtol(port.c_str(), &end, 10);
  LANECOLL_REQUIRE(end != nullptr && *end == '\0' && v >= 0 && v <= 65535, "bad port '" + port + "'");
  hp.port = static_cast<std::uint16_t>(v);
  return hp;
}

std::string rendezvous_from_env() {
  const char* v = std::getenv("LANECOLL_RENDEZVOUS");
  return v ? std::string(v) : std::string();
}

TcpListener TcpListener::bind(const std::string& host, std::uint16_t port) {
  TcpListener l;
  l.fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (l.fd_ < 0) sys_fail("socket");
  int one = 1;
  ::setsockopt(l.fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  sa.sin_addr = resolve_ipv4(host);
  if (::bind(l.fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) sys_fail("bind " + host);
  if (::listen(l.fd_, 128) != 0) sys_fail("listen");
  socklen_t len = sizeof(sa);
  ::getsockname(l.fd_, reinterpret_cast<sockaddr*>(&sa), &len);
  l.port_ = ntohs(sa.sin_port);
  return l;
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

TcpListener::TcpListener(TcpListener&& o) noexcept : fd_(o.fd_), port_(o.port_) { o.fd_ = -1; }

TcpListener& TcpListener::operator=(TcpListener&& o) noexcept {
  if (this != &o) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = o.fd_;
    port_ = o.port_;
    o.fd_ = -1;
  }
  return *this;
}

int TcpListener::release() {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

std::shared_ptr<Endpoint> connect_tcp(const TcpConfig& cfg, TcpListener rendezvous_listener) {
  const int p = static_cast<int>(cfg.node_of.size());
  LANECOLL_REQUIRE(p >= 1 && cfg.rank >= 0 && cfg.rank < p, "rank out of range for TCP world");
  auto ep = std::make_shared<TcpEndpoint>(cfg.rank, cfg.node_of);
  ep->set_recv_timeout(cfg.recv_timeout);
  if (p == 1) return ep;

  const in_addr rdv_addr = resolve_ipv4(cfg.rendezvous.host);
  // Data listener on an ephemeral port of the same interface.
  TcpListener data = TcpListener::bind(cfg.rank == 0 ? cfg.rendezvous.host : "0.0.0.0", 0);

  std::vector<std::uint32_t> ips(static_cast<std::size_t>(p));
  std::vector<std::uint32_t> ports(static_cast<std::size_t>(p));
  if (cfg.rank == 0) {
    TcpListener rdv = rendezvous_listener.fd() >= 0
                          ? std::move(rendezvous_listener)
                          : TcpListener::bind(cfg.rendezvous.host, cfg.rendezvous.port);
    ips[0] = rdv_addr.s_addr;
    ports[0] = data.port();
    std::vector<int> clients;
    for (int i = 1; i < p; ++i) {
      const int fd = accept_with_timeout(rdv.fd(), cfg.connect_timeout);
      clients.push_back(fd);
      const auto r = static_cast<int>(get_u32(fd));
      const auto port = get_u32(fd);
      LANECOLL_REQUIRE(r > 0 && r < p, "rendezvous from invalid rank " + std::to_string(r));
      sockaddr_in sa{};
      socklen_t len = sizeof(sa);
      ::getpeername(fd, reinterpret_cast<sockaddr*>(&sa), &len);
      ips[static_cast<std::size_t>(r)] = sa.sin_addr.s_addr;
      ports[static_cast<std::size_t>(r)] = port;
    }
    for (int fd : clients) {
      for (int r = 0; r < p; ++r) {
        put_u32(fd, ntohl(ips[static_cast<std::size_t>(r)]));
        put_u32(fd, ports[static_cast<std::size_t>(r)]);
      }
      ::close(fd);
    }
  } else {
    const int fd = connect_with_retry(rdv_addr, cfg.rendezvous.port, cfg.connect_timeout);
    put_u32(fd, static_cast<std::uint32_t>(cfg.rank));
    put_u32(fd, data.port());
    for (int r = 0; r < p; ++r) {
      ips[static_cast<std::size_t>(r)] = htonl(get_u32(fd));
      ports[static_cast<std::size_t>(r)] = get_u32(fd);
    }
    ::close(fd);
  }

  // Mesh: connect to lower ranks, accept higher ranks.
  for (int r = 0; r < cfg.rank; ++r) {
    in_addr a{};
    a.s_addr = ips[static_cast<std::size_t>(r)];
    const int fd = connect_with_retry(a, static_cast<std::uint16_t>(ports[static_cast<std::size_t>(r)]),
                                      cfg.connect_timeout);
    put_u32(fd, static_cast<std::uint32_t>(cfg.rank));
    ep->attach(r, fd);
  }
  for (int i = cfg.rank + 1; i < p; ++i) {
    const int fd = accept_with_timeout(data.fd(), cfg.connect_timeout);
    const auto r = static_cast<int>(get_u32(fd));
    LANECOLL_REQUIRE(r > cfg.rank && r < p, "unexpected mesh peer " + std::to_string(r));
    ep->attach(r, fd);
  }
  ep->start_readers();
  return ep;
}

}  // namespace lanecoll
