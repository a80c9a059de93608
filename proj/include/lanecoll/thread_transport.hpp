#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "lanecoll/transport.hpp"

namespace lanecoll {

/// Process placement for an in-process world.
struct WorldConfig {
  std::vector<int> node_of;  // node id of each world rank
  /// Nonzero: perturb thread interleaving with seeded yields on delivery.
  std::uint64_t schedule_seed = 0;
  std::chrono::milliseconds recv_timeout{std::chrono::seconds(60)};

  int size() const { return static_cast<int>(node_of.size()); }
};

/// N nodes with n consecutively ranked processes each.
WorldConfig regular_world(int nodes, int ppn);

/// Mailbox fabric shared by the threads of one in-process world.
class ThreadFabric : public std::enable_shared_from_this<ThreadFabric> {
 public:
  static std::shared_ptr<ThreadFabric> create(const WorldConfig& cfg);

  std::shared_ptr<Endpoint> endpoint(int rank);
  void abort(const std::string& reason);

 private:
  class ThreadEndpoint;
  explicit ThreadFabric(const WorldConfig& cfg) : cfg_(cfg) {}

  WorldConfig cfg_;
  std::vector<std::weak_ptr<ThreadEndpoint>> endpoints_;
};

/// Run `body` once per rank, one thread each, and rethrow the first failure
/// after all threads have finished. A failing rank aborts the fabric so
/// peers blocked in receives fail fast instead of hanging.
void run_threads(const WorldConfig& cfg, const std::function<void(Communicator&)>& body);

}  // namespace lanecoll
