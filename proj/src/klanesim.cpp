#include "lanecoll/klanesim.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "lanecoll/error.hpp"

namespace lanecoll::sim {

long long t_single(int p, long long c, long long C) {
  LANECOLL_REQUIRE(p >= 1 && c >= 1 && C >= 1, "t_single needs p, c, C >= 1");
  LANECOLL_REQUIRE(c % C == 0, "block size must divide the message size");
  if (p == 1) return 0;
  return (p - 1) * C + (c / C - 1) * C;
}

long long t_klane(int p, int k, long long c, long long C) {
  LANECOLL_REQUIRE(p >= 1 && k >= 1 && c >= 1 && C >= 1, "t_klane needs p, k, c, C >= 1");
  LANECOLL_REQUIRE(p % k == 0, "k must divide p");
  LANECOLL_REQUIRE(c % (k * C) == 0, "k*C must divide c");
  const long long m = p / k;
  return (m - 1 + 3) * C + (c / k / C - 1) * C;
}

int self_simulation_factor(int n, int k) {
  LANECOLL_REQUIRE(n >= 1 && k >= 1, "self-simulation needs n, k >= 1");
  return (n + k - 1) / k;
}

int replica_overhead_slots(TreeFamily family) {
  switch (family) {
    case TreeFamily::path: return 3;
    case TreeFamily::binary: return 2;
  }
  return 0;
}

CommGraph build_pipeline_replica(int p, int k) {
  LANECOLL_REQUIRE(p >= 1 && k >= 1 && p % k == 0, "k must divide p");
  CommGraph g;
  g.p = p;
  g.k = k;
  const int m = p / k;
  for (int b = 0; b < m; ++b) {
    for (int i = 0; i < k; ++i) g.vertices.push_back(Vertex{g.vertex(b, i), b, b, i});
  }
  for (int i = 0; i < k; ++i) {
    for (int b = 0; b + 1 < m; ++b) g.tree_edges.push_back(Edge{g.vertex(b, i), g.vertex(b + 1, i)});
  }
  for (int b = 0; b < m; ++b) {
    for (int i = 0; i < k; ++i) {
      for (int i2 = i + 1; i2 < k; ++i2) g.clique_edges.push_back(Edge{g.vertex(b, i), g.vertex(b, i2)});
    }
  }
  if (m >= 2) {
    for (int i = 1; i < k; ++i) g.back_edges.push_back(Edge{g.vertex(m - 1, i), g.root(i)});
  }
  return g;
}

void check_legality(const StepTrace& trace, int p, int k) {
  for (const StepRecord& rec : trace.steps) {
    std::vector<int> off_sends(static_cast<std::size_t>(p), 0);
    std::vector<int> off_recvs(static_cast<std::size_t>(p), 0);
    std::set<std::pair<int, int>> local_pairs;
    for (const Transfer& t : rec.transfers) {
      if (t.from < 0 || t.from >= p || t.to < 0 || t.to >= p || t.from == t.to) {
        throw ScheduleViolation("step " + std::to_string(rec.step) + ": invalid endpoints");
      }
      const bool same_node = t.from / k == t.to / k;
      if (same_node == t.offnode) {
        throw ScheduleViolation("step " + std::to_string(rec.step) + ": transfer " +
                                std::to_string(t.from) + "->" + std::to_string(t.to) +
                                " mislabeled on/off node");
      }
      if (t.offnode) {
        if (++off_sends[static_cast<std::size_t>(t.from)] > 1) {
          throw ScheduleViolation("step " + std::to_string(rec.step) + ": processor " +
                                  std::to_string(t.from) + " sends off-node twice");
        }
        if (++off_recvs[static_cast<std::size_t>(t.to)] > 1) {
          throw ScheduleViolation("step " + std::to_string(rec.step) + ": processor " +
                                  std::to_string(t.to) + " receives off-node twice");
        }
      } else if (!local_pairs.insert({t.from, t.to}).second) {
        throw ScheduleViolation("step " + std::to_string(rec.step) + ": two on-node messages " +
                                std::to_string(t.from) + "->" + std::to_string(t.to));
      }
    }
  }
}

namespace {

using Schedule = std::map<int, std::vector<Transfer>>;

void finish_volumes(StepTrace& tr, int p, int k) {
  const int nodes = p / k;
  tr.node_ingress.assign(static_cast<std::size_t>(nodes), 0);
  tr.node_egress.assign(static_cast<std::size_t>(nodes), 0);
  tr.node_local.assign(static_cast<std::size_t>(nodes), 0);
  for (const StepRecord& rec : tr.steps) {
    for (const Transfer& t : rec.transfers) {
      const auto fn = static_cast<std::size_t>(t.from / k);
      const auto tn = static_cast<std::size_t>(t.to / k);
      if (t.offnode) {
        tr.node_egress[fn] += t.elements;
        tr.node_ingress[tn] += t.elements;
      } else {
        tr.node_local[fn] += t.elements;
      }
    }
  }
}

// Runs a block schedule: senders must hold the block before the step, every
// block reaches every vertex exactly once.
StepTrace run_blocks(const Schedule& sched, int p, int k, int stripes, int blocks, long long C,
                     int length, const std::vector<int>& initial_owners) {
  const int total = stripes * blocks;
  std::vector<std::vector<char>> held(static_cast<std::size_t>(p),
                                      std::vector<char>(static_cast<std::size_t>(total), 0));
  for (int v : initial_owners) std::fill(held[static_cast<std::size_t>(v)].begin(), held[static_cast<std::size_t>(v)].end(), 1);

  StepTrace tr;
  int last = 0;
  for (int step = 1; step <= length; ++step) {
    StepRecord rec;
    rec.step = step;
    auto it = sched.find(step);
    if (it != sched.end()) rec.transfers = it->second;
    std::vector<std::pair<int, int>> arrivals;
    for (const Transfer& t : rec.transfers) {
      const int id = t.stripe * blocks + t.block;
      if (!held[static_cast<std::size_t>(t.from)][static_cast<std::size_t>(id)]) {
        throw ScheduleViolation("step " + std::to_string(step) + ": processor " +
                                std::to_string(t.from) + " sends block (" + std::to_string(t.stripe) +
                                "," + std::to_string(t.block) + ") it does not hold");
      }
      arrivals.emplace_back(t.to, id);
      last = step;
    }
    for (auto [v, id] : arrivals) {
      char& h = held[static_cast<std::size_t>(v)][static_cast<std::size_t>(id)];
      if (h) {
        throw ScheduleViolation("step " + std::to_string(step) + ": processor " + std::to_string(v) +
                                " receives a block twice");
      }
      h = 1;
    }
    rec.held.resize(static_cast<std::size_t>(p));
    for (int v = 0; v < p; ++v) {
      const auto& hv = held[static_cast<std::size_t>(v)];
      rec.held[static_cast<std::size_t>(v)] = static_cast<int>(std::count(hv.begin(), hv.end(), 1));
    }
    tr.steps.push_back(std::move(rec));
  }
  if (!sched.empty() && sched.rbegin()->first > length) {
    throw ScheduleViolation("transfers scheduled past the schedule length");
  }
  tr.block_steps = length;
  tr.delivery_steps = last;
  tr.step_count = length * C;
  tr.last_delivery = last * C;
  tr.complete = true;
  for (const auto& hv : held) {
    tr.complete = tr.complete && std::all_of(hv.begin(), hv.end(), [](char h) { return h == 1; });
  }
  check_legality(tr, p, k);
  finish_volumes(tr, p, k);
  return tr;
}

}  // namespace

StepTrace simulate_broadcast(const CommGraph& g, const KLaneConfig& cfg) {
  LANECOLL_REQUIRE(cfg.p == g.p && cfg.k == g.k, "configuration does not match the graph");
  const int p = g.p;
  const int k = g.k;
  const int m = g.nodes();
  const long long C = cfg.C;
  LANECOLL_REQUIRE(C >= 1 && cfg.c >= 1 && cfg.c % (k * C) == 0, "k*C must divide c");
  const int B = static_cast<int>(cfg.c / (k * C));

  Schedule sched;
  auto add = [&](int step, int from, int to, int stripe, int block) {
    sched[step].push_back(Transfer{from, to, stripe, block, C, from / k != to / k});
  };

  int length = 0;
  if (m == 1) {
    // Single node: the root hands out stripes, the replicas exchange, then
    // the root's own stripe follows.
    for (int b = 0; b < B; ++b) {
      for (int i = 1; i < k; ++i) add(b + 1, g.root(0), g.root(i), i, b);
      for (int i = 1; i < k; ++i) {
        for (int i2 = 1; i2 < k; ++i2) {
          if (i != i2) add(b + 2, g.root(i), g.root(i2), i, b);
        }
      }
      for (int i = 1; i < k; ++i) add(B + b + 1, g.root(0), g.root(i), 0, b);
    }
    length = k == 1 ? 0 : 2 * B;
  } else {
    for (int b = 0; b < B; ++b) {
      // The root's special step: one block of each other stripe on-node.
      for (int i = 1; i < k; ++i) add(b + 1, g.root(0), g.root(i), i, b);
      // Stripe 0 leaves the root immediately; the others one step later.
      for (int j = 0; j + 1 < m; ++j) add(b + j + 1, g.vertex(j, 0), g.vertex(j + 1, 0), 0, b);
      for (int i = 1; i < k; ++i) {
        for (int j = 0; j + 1 < m; ++j) add(b + j + 2, g.vertex(j, i), g.vertex(j + 1, i), i, b);
      }
      // Clique exchange of the previous block; on the root node without r^0.
      for (int j = 0; j < m; ++j) {
        const int first = j == 0 ? 1 : 0;
        for (int i = first; i < k; ++i) {
          for (int i2 = first; i2 < k; ++i2) {
            if (i != i2) add(b + j + 2, g.vertex(j, i), g.vertex(j, i2), i, b);
          }
        }
      }
      // The leaves return stripe 0 to the root replicas.
      for (int i = 1; i < k; ++i) add(b + m + 2, g.vertex(m - 1, i), g.root(i), 0, b);
    }
    length = m + B + 1;
  }
  StepTrace tr = run_blocks(sched, p, k, k, B, C, length, {g.root(0)});
  tr.short_pipeline = m == 2;
  tr.idle_phases = k == 1 && m >= 2;
  return tr;
}

StepTrace simulate_linear_pipeline(int p, long long c, long long C) {
  LANECOLL_REQUIRE(p >= 1 && C >= 1 && c >= 1 && c % C == 0, "block size must divide c");
  const int B = static_cast<int>(c / C);
  Schedule sched;
  for (int b = 0; b < B; ++b) {
    for (int j = 0; j + 1 < p; ++j) sched[b + j + 1].push_back(Transfer{j, j + 1, 0, b, C, true});
  }
  const int length = p == 1 ? 0 : p - 1 + B - 1;
  return run_blocks(sched, p, 1, 1, B, C, length, {0});
}

int kported_steps(int p, int k) {
  LANECOLL_REQUIRE(p >= 1 && k >= 1, "kported_steps needs p, k >= 1");
  long long informed = 1;
  int steps = 0;
  while (informed < p) {
    informed += informed * k;
    ++steps;
  }
  return steps;
}

StepTrace simulate_kported_transform(int p, int k, long long c, Pattern pattern) {
  LANECOLL_REQUIRE(p >= 1 && k >= 1 && p % k == 0, "k must divide p");
  LANECOLL_REQUIRE(c >= 0, "negative message size");
  const int nodes = p / k;
  std::vector<int> informed_at(static_cast<std::size_t>(p), -1);
  std::vector<int> parent(static_cast<std::size_t>(p), -1);
  informed_at[0] = 0;
  std::vector<std::vector<Transfer>> steps;

  auto node_state = [&](int nd, bool& any, bool& all) {
    any = false;
    all = true;
    for (int v = nd * k; v < (nd + 1) * k; ++v) {
      const bool in = informed_at[static_cast<std::size_t>(v)] >= 0;
      any = any || in;
      all = all && in;
    }
  };

  int step = 0;
  while (std::count(informed_at.begin(), informed_at.end(), -1) > 0) {
    ++step;
    std::vector<Transfer> ts;
    std::vector<int> senders;
    for (int v = 0; v < p; ++v) {
      if (informed_at[static_cast<std::size_t>(v)] >= 0) senders.push_back(v);
    }
    std::vector<int> newly;
    // On-node fan-out from the lowest informed processor of each partly
    // informed node.
    for (int nd = 0; nd < nodes; ++nd) {
      bool any = false, all = false;
      node_state(nd, any, all);
      if (!any || all) continue;
      int src = nd * k;
      while (informed_at[static_cast<std::size_t>(src)] < 0) ++src;
      for (int v = nd * k; v < (nd + 1) * k; ++v) {
        if (informed_at[static_cast<std::size_t>(v)] < 0) {
          ts.push_back(Transfer{src, v, -1, -1, c, false});
          newly.push_back(v);
          parent[static_cast<std::size_t>(v)] = src;
        }
      }
    }
    // Off-node: one port per informed processor, first to the first
    // processor of untouched nodes, leftovers fill those nodes further.
    std::vector<int> targets;
    std::vector<int> fresh_nodes;
    for (int nd = 0; nd < nodes; ++nd) {
      bool any = false, all = false;
      node_state(nd, any, all);
      if (!any) fresh_nodes.push_back(nd);
    }
    for (std::size_t q = 0; q < fresh_nodes.size() && targets.size() < senders.size(); ++q) {
      targets.push_back(fresh_nodes[q] * k);
    }
    const std::size_t reached = targets.size();
    for (std::size_t q = 0; q < reached && targets.size() < senders.size(); ++q) {
      for (int v = targets[q] + 1; v < targets[q] + k && targets.size() < senders.size(); ++v) {
        targets.push_back(v);
      }
    }
    for (std::size_t q = 0; q < targets.size(); ++q) {
      ts.push_back(Transfer{senders[q], targets[q], -1, -1, c, true});
      newly.push_back(targets[q]);
      parent[static_cast<std::size_t>(targets[q])] = senders[q];
    }
    for (int v : newly) informed_at[static_cast<std::size_t>(v)] = step;
    steps.push_back(std::move(ts));
  }

  if (pattern != Pattern::broadcast) {
    // A message carries the blocks of the receiver's whole subtree.
    std::vector<long long> subtree(static_cast<std::size_t>(p), 1);
    std::vector<int> order(static_cast<std::size_t>(p));
    for (int v = 0; v < p; ++v) order[static_cast<std::size_t>(v)] = v;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return informed_at[static_cast<std::size_t>(a)] > informed_at[static_cast<std::size_t>(b)];
    });
    for (int v : order) {
      const int par = parent[static_cast<std::size_t>(v)];
      if (par >= 0) subtree[static_cast<std::size_t>(par)] += subtree[static_cast<std::size_t>(v)];
    }
    for (auto& ts : steps) {
      for (Transfer& t : ts) t.elements = subtree[static_cast<std::size_t>(t.to)] * c;
    }
    if (pattern == Pattern::gather) {
      std::reverse(steps.begin(), steps.end());
      for (auto& ts : steps) {
        for (Transfer& t : ts) std::swap(t.from, t.to);
      }
    }
  }

  StepTrace tr;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    StepRecord rec;
    rec.step = static_cast<int>(s) + 1;
    rec.transfers = std::move(steps[s]);
    tr.steps.push_back(std::move(rec));
  }
  tr.block_steps = step;
  tr.delivery_steps = step;
  tr.step_count = step;
  tr.last_delivery = step;
  tr.complete = std::count(informed_at.begin(), informed_at.end(), -1) == 0;
  check_legality(tr, p, k);
  finish_volumes(tr, p, k);
  return tr;
}

std::string pipeline_csv(const KLaneConfig& cfg, const StepTrace& trace) {
  std::ostringstream os;
  os << "p,k,c,C,steps,predicted,last_delivery,node,ingress,egress,local\n";
  const long long predicted = t_klane(cfg.p, cfg.k, cfg.c, cfg.C);
  for (std::size_t nd = 0; nd < trace.node_ingress.size(); ++nd) {
    os << cfg.p << ',' << cfg.k << ',' << cfg.c << ',' << cfg.C << ',' << trace.step_count << ','
       << predicted << ',' << trace.last_delivery << ',' << nd << ',' << trace.node_ingress[nd]
       << ',' << trace.node_egress[nd] << ',' << trace.node_local[nd] << '\n';
  }
  return os.str();
}

}  // namespace lanecoll::sim
