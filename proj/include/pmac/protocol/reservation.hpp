#pragma once

#include <optional>
#include <vector>

#include "pmac/core/channel.hpp"
#include "pmac/core/geometry.hpp"

namespace pmac {

/// Coordinators take part in reservations as receivers of piggybacked
/// headers; they get negative ids so they never clash with node ids.
constexpr NodeId coordinator_node(CellId cell) { return -1 - cell; }

/// A protected receiver: no other transmitter may sit strictly inside.
struct Disc {
  NodeId owner = 0;
  Position center;
  double radius = 0.0;

  [[nodiscard]] bool covers(Position p) const { return distance(center, p) < radius; }
};

struct ReservationId {
  CellId origin = 0;
  long long frame = 0;
  int slot = 0;
  NodeId source = 0;

  friend bool operator==(const ReservationId&, const ReservationId&) = default;
  friend auto operator<=>(const ReservationId&, const ReservationId&) = default;
};

struct Reservation {
  int slot = 0;
  NodeId source = 0;
  NodeId destination = 0;
  Position tx;
  Disc rx;                    // disc around the destination
  std::optional<Disc> header;  // disc around the coordinator for the piggybacked request
  CellId origin = 0;
  long long frame = 0;        // frame in which the transmission happens
  long long made_frame = 0;   // frame in which it was committed
  int announce_slot = 0;      // scheduling slot of the origin in made_frame

  [[nodiscard]] ReservationId id() const { return {origin, frame, slot, source}; }
  [[nodiscard]] bool involves(NodeId n) const { return source == n || destination == n; }
};

/// Same slot of the same frame and either a shared participant or one
/// transmitter inside a protected disc of the other.
bool interferes(const Reservation& a, const Reservation& b);

/// True when `a` wins a conflict against `b`: earlier commit frame, then
/// earlier announcing slot, then lower origin cell id.
bool takes_precedence(const Reservation& a, const Reservation& b);

/// Pairs (i, j), i < j, of mutually interfering reservations.
std::vector<std::pair<std::size_t, std::size_t>> conflicting_pairs(const std::vector<Reservation>& rs);

}  // namespace pmac
