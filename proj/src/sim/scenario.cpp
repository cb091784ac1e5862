#include "pmac/sim/scenario.hpp"

#include <algorithm>
#include <string>

#include "pmac/core/error.hpp"

namespace pmac {

void Scenario::validate() const {
  if (links.size() != nodes.size()) throw ValidationError("scenario needs one link per node");
  for (std::size_t i = 0; i < links.size(); ++i) {
    const Link& l = links[i];
    if (l.source != static_cast<NodeId>(i) || l.destination < 0 || l.destination >= size() || l.destination == l.source) {
      throw ValidationError("malformed link for node " + std::to_string(i));
    }
    if (distance(nodes[static_cast<std::size_t>(l.source)], nodes[static_cast<std::size_t>(l.destination)]) > d_m + 1e-9) {
      throw ValidationError("link from node " + std::to_string(i) + " exceeds d_m");
    }
  }
  for (const Position& p : nodes) {
    if (!arena.contains(p)) throw ValidationError("node outside the arena");
  }
}

namespace {

bool has_peer(const std::vector<Position>& pos, std::size_t i, double d_m) {
  for (std::size_t j = 0; j < pos.size(); ++j) {
    if (j != i && distance(pos[i], pos[j]) <= d_m) return true;
  }
  return false;
}

}  // namespace

Scenario place_nodes(int n, Arena arena, double d_m, std::uint64_t seed) {
  if (n < 2) throw ValidationError("need at least two nodes");
  if (!(d_m > 0.0)) throw ValidationError("d_m must be positive");
  if (!(arena.width > 0.0) || !(arena.height > 0.0)) throw ValidationError("arena must have positive size");
  CounterRng rng(seed, 0);
  Scenario sc;
  sc.arena = arena;
  sc.d_m = d_m;
  sc.seed = seed;
  auto draw = [&] { return Position{rng.uniform() * arena.width, rng.uniform() * arena.height}; };
  sc.nodes.resize(static_cast<std::size_t>(n));
  for (Position& p : sc.nodes) p = draw();

  std::vector<int> retries(sc.nodes.size(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < sc.nodes.size(); ++i) {
      while (!has_peer(sc.nodes, i, d_m)) {
        if (++retries[i] > kPlacementRetries) {
          throw ValidationError("could not place node " + std::to_string(i) + " within d_m of a peer");
        }
        sc.nodes[i] = draw();
        changed = true;
      }
    }
  }

  CounterRng pick(seed, 1);
  std::vector<NodeId> peers;
  for (std::size_t i = 0; i < sc.nodes.size(); ++i) {
    peers.clear();
    for (std::size_t j = 0; j < sc.nodes.size(); ++j) {
      if (j != i && distance(sc.nodes[i], sc.nodes[j]) <= d_m) peers.push_back(static_cast<NodeId>(j));
    }
    const NodeId d = peers[pick.uniform_int(peers.size())];
    sc.links.push_back({static_cast<NodeId>(i), d, distance(sc.nodes[i], sc.nodes[static_cast<std::size_t>(d)])});
  }
  return sc;
}

std::vector<Arrival> generate_traffic(const std::vector<Link>& links, double load, double duration, std::uint64_t seed) {
  if (!(load >= 0.0)) throw ValidationError("load must be non-negative");
  if (!(duration >= 0.0)) throw ValidationError("duration must be non-negative");
  std::vector<Arrival> out;
  if (load == 0.0 || links.empty()) return out;
  const double rate = load / static_cast<double>(links.size());
  out.reserve(static_cast<std::size_t>(load * duration * 1.1) + 16);
  const CounterRng base(seed, 2);
  for (const Link& l : links) {
    CounterRng r = base.split(static_cast<std::uint64_t>(l.source));
    for (double t = r.exponential(rate); t < duration; t += r.exponential(rate)) out.push_back({t, l.source});
  }
  std::sort(out.begin(), out.end(), [](const Arrival& a, const Arrival& b) {
    return a.time != b.time ? a.time < b.time : a.source < b.source;
  });
  return out;
}

}  // namespace pmac
