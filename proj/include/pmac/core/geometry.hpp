#pragma once

#include <cstdint>
#include <vector>

namespace pmac {

using NodeId = std::int32_t;
using CellId = std::int32_t;

struct Position {
  double x = 0.0;  // meters
  double y = 0.0;  // meters

  friend bool operator==(const Position&, const Position&) = default;
};

double distance(Position a, Position b);
double distance_sq(Position a, Position b);

struct Arena {
  double width = 0.0;
  double height = 0.0;

  [[nodiscard]] bool contains(Position p) const;
  [[nodiscard]] Position center() const { return {width / 2.0, height / 2.0}; }
};

/// Number of colors used for scheduling slots (one group per slot).
inline constexpr int kSlotGroups = 7;

struct HexCell {
  CellId id = 0;
  int q = 0;  // axial coordinates, flat-top orientation
  int r = 0;
  Position center;
  int group = 0;  // in [0, kSlotGroups)
};

/// Hexagonal partition of a rectangular arena.
///
/// Flat-top hexagons of circumradius `r_g`, with one cell centered on the
/// arena center. Only cells that overlap the arena with positive area are
/// kept. Cell ids are ordered bottom-to-top, then left-to-right.
/// Groups form a 7-coloring in which cells within hex distance 2 never share a
/// group.
class HexCellMap {
 public:
  HexCellMap(Arena arena, double r_g, std::vector<HexCell> cells);

  [[nodiscard]] double r_g() const { return r_g_; }
  [[nodiscard]] const Arena& arena() const { return arena_; }
  [[nodiscard]] const std::vector<HexCell>& cells() const { return cells_; }
  [[nodiscard]] std::size_t size() const { return cells_.size(); }
  [[nodiscard]] const HexCell& cell(CellId id) const { return cells_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] const std::vector<CellId>& neighbors(CellId id) const {
    return adjacency_.at(static_cast<std::size_t>(id));
  }
  [[nodiscard]] int group_of(CellId id) const { return cell(id).group; }
  [[nodiscard]] int hex_distance(CellId a, CellId b) const;

  /// Cell whose hexagon contains p. Points on shared edges or vertices go to
  /// the lowest cell id among the equidistant candidates.
  /// Throws ValidationError when p lies outside the arena.
  [[nodiscard]] CellId assign(Position p) const;

 private:
  [[nodiscard]] CellId find_axial(int q, int r) const;

  Arena arena_;
  double r_g_;
  std::vector<HexCell> cells_;
  std::vector<std::vector<CellId>> adjacency_;
  int q_min_ = 0, r_min_ = 0, q_span_ = 0, r_span_ = 0;
  std::vector<CellId> lookup_;  // dense (q, r) -> id, -1 when absent
};

HexCellMap build_hex_tiling(double arena_width, double arena_height, double r_g);
CellId assign_cell(Position p, const HexCellMap& map);

/// Group color of an axial coordinate: (q + 3r) mod 7.
int hex_group(int q, int r);

}  // namespace pmac
