#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lanecoll/transport.hpp"

namespace lanecoll {

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
};

/// Parse "host:port". Throws ContractViolation on malformed input.
HostPort parse_host_port(const std::string& text);
/// Value of LANECOLL_RENDEZVOUS, or empty.
std::string rendezvous_from_env();

/// A bound, listening TCP socket. Rank 0 uses one for the rendezvous; tests
/// bind port 0 and hand the chosen port to the other ranks.
class TcpListener {
 public:
  TcpListener() = default;
  static TcpListener bind(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(TcpListener&& o) noexcept;
  TcpListener& operator=(TcpListener&& o) noexcept;

  std::uint16_t port() const { return port_; }
  int fd() const { return fd_; }
  int release();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

struct TcpConfig {
  HostPort rendezvous;
  int rank = 0;
  std::vector<int> node_of;  // one entry per world rank
  std::chrono::milliseconds connect_timeout{std::chrono::seconds(20)};
  std::chrono::milliseconds recv_timeout{std::chrono::seconds(60)};
};

/// Join a TCP world: rendezvous through rank 0, then a full mesh of
/// connections. Rank 0 binds the rendezvous address itself unless a
/// pre-bound listener is passed.
std::shared_ptr<Endpoint> connect_tcp(const TcpConfig& cfg, TcpListener rendezvous_listener = {});

}  // namespace lanecoll
