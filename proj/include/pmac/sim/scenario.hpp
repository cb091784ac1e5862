#pragma once

#include <cstdint>
#include <vector>

#include "pmac/core/geometry.hpp"
#include "pmac/core/rng.hpp"

namespace pmac {

struct Link {
  NodeId source = 0;
  NodeId destination = 0;
  double distance = 0.0;
};

struct Scenario {
  Arena arena;
  double d_m = 20.0;
  std::vector<Position> nodes;
  std::vector<Link> links;  // one per node, links[i].source == i
  std::uint64_t seed = 0;

  [[nodiscard]] int size() const { return static_cast<int>(nodes.size()); }
  /// Throws ValidationError when a link is longer than d_m or malformed.
  void validate() const;
};

inline constexpr int kPlacementRetries = 100;

/// Uniform placement; every node gets a destination drawn uniformly among the
/// nodes within d_m. Nodes without any peer in range are re-drawn.
Scenario place_nodes(int n, Arena arena, double d_m, std::uint64_t seed);

struct Arrival {
  double time = 0.0;  // s
  NodeId source = 0;
};

/// Independent Poisson streams, one per link, each at load / links.size().
/// Sorted by time, then by source.
std::vector<Arrival> generate_traffic(const std::vector<Link>& links, double load, double duration, std::uint64_t seed);

}  // namespace pmac
