#include "lanecoll/thread_transport.hpp"

#include <exception>
#include <mutex>
#include <random>
#include <thread>

namespace lanecoll {

WorldConfig regular_world(int nodes, int ppn) {
  LANECOLL_REQUIRE(nodes >= 1 && ppn >= 1, "world needs at least one node and process");
  WorldConfig cfg;
  for (int j = 0; j < nodes; ++j) {
    for (int i = 0; i < ppn; ++i) cfg.node_of.push_back(j);
  }
  return cfg;
}

class ThreadFabric::ThreadEndpoint final : public Endpoint {
 public:
  ThreadEndpoint(std::shared_ptr<ThreadFabric> fabric, int rank)
      : Endpoint(rank, fabric->cfg_.node_of),
        fabric_(std::move(fabric)),
        rng_(fabric_->cfg_.schedule_seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(rank + 1))) {
    set_recv_timeout(fabric_->cfg_.recv_timeout);
  }

  void deliver(int dst, Envelope env) override {
    LANECOLL_REQUIRE(dst >= 0 && dst < world_size(), "unknown destination rank");
    auto peer = fabric_->endpoints_[static_cast<std::size_t>(dst)].lock();
    if (!peer) throw TransportError("destination endpoint " + std::to_string(dst) + " is gone");
    peer->mailbox().push(std::move(env));
    if (fabric_->cfg_.schedule_seed != 0 && (rng_() & 3u) == 0) std::this_thread::yield();
  }

  bool carries_rounds() const override { return true; }

 private:
  std::shared_ptr<ThreadFabric> fabric_;
  std::mt19937_64 rng_;
};

std::shared_ptr<ThreadFabric> ThreadFabric::create(const WorldConfig& cfg) {
  LANECOLL_REQUIRE(cfg.size() >= 1, "empty world");
  auto f = std::shared_ptr<ThreadFabric>(new ThreadFabric(cfg));
  f->endpoints_.resize(static_cast<std::size_t>(cfg.size()));
  return f;
}

std::shared_ptr<Endpoint> ThreadFabric::endpoint(int rank) {
  LANECOLL_REQUIRE(rank >= 0 && rank < cfg_.size(), "rank out of range");
  auto& slot = endpoints_[static_cast<std::size_t>(rank)];
  LANECOLL_REQUIRE(slot.expired(), "endpoint already attached");
  auto ep = std::make_shared<ThreadEndpoint>(shared_from_this(), rank);
  slot = ep;
  return ep;
}

void ThreadFabric::abort(const std::string& reason) {
  for (auto& w : endpoints_) {
    if (auto ep = w.lock()) ep->mailbox().abort(reason);
  }
}

void run_threads(const WorldConfig& cfg, const std::function<void(Communicator&)>& body) {
  auto fabric = ThreadFabric::create(cfg);
  const int p = cfg.size();
  // Attach all endpoints before any rank starts sending.
  std::vector<std::shared_ptr<Endpoint>> eps;
  for (int r = 0; r < p; ++r) eps.push_back(fabric->endpoint(r));

  std::mutex mu;
  std::exception_ptr first;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(p));
  for (int r = 0; r < p; ++r) {
    threads.emplace_back([&, r] {
      try {
        Communicator world = Communicator::world(eps[static_cast<std::size_t>(r)]);
        body(world);
      } catch (...) {
        {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
        }
        fabric->abort("rank " + std::to_string(r) + " failed");
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace lanecoll
