#include "pmac/core/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "pmac/core/error.hpp"

namespace pmac {
namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr std::array<std::array<int, 2>, 6> kDirections{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}}};

Position axial_center(Position origin, double r_g, int q, int r) {
  return {origin.x + 1.5 * r_g * q, origin.y + kSqrt3 * r_g * (r + 0.5 * q)};
}

// Separating-axis test: does the flat-top hexagon overlap the arena with
// positive area?
bool hex_overlaps_arena(Position c, double r_g, const Arena& arena) {
  constexpr double kEps = 1e-9;
  struct Axis {
    double ux, uy, hex_extent;
  };
  const double apothem = r_g * kSqrt3 / 2.0;
  // Arena normals (0 and 90 degrees) plus the hexagon edge normals (30, 90, 150).
  const std::array<Axis, 4> axes{{
      {1.0, 0.0, r_g},
      {0.0, 1.0, apothem},
      {kSqrt3 / 2.0, 0.5, apothem},
      {-kSqrt3 / 2.0, 0.5, apothem},
  }};
  const std::array<Position, 4> corners{{{0.0, 0.0}, {arena.width, 0.0}, {0.0, arena.height}, {arena.width, arena.height}}};
  for (const Axis& a : axes) {
    const double hc = c.x * a.ux + c.y * a.uy;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Position& p : corners) {
      const double v = p.x * a.ux + p.y * a.uy;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double overlap = std::min(hi, hc + a.hex_extent) - std::max(lo, hc - a.hex_extent);
    if (overlap <= kEps * std::max(1.0, r_g)) return false;
  }
  return true;
}

void cube_round(double qf, double rf, int& q, int& r) {
  const double sf = -qf - rf;
  double rq = std::round(qf);
  double rr = std::round(rf);
  const double rs = std::round(sf);
  const double dq = std::abs(rq - qf);
  const double dr = std::abs(rr - rf);
  const double ds = std::abs(rs - sf);
  if (dq > dr && dq > ds) {
    rq = -rr - rs;
  } else if (dr > ds) {
    rr = -rq - rs;
  }
  q = static_cast<int>(rq);
  r = static_cast<int>(rr);
}

}  // namespace

double distance_sq(Position a, Position b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

double distance(Position a, Position b) { return std::sqrt(distance_sq(a, b)); }

bool Arena::contains(Position p) const {
  return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0.0 && p.y >= 0.0 && p.x <= width && p.y <= height;
}

int hex_group(int q, int r) { return ((q + 3 * r) % kSlotGroups + kSlotGroups) % kSlotGroups; }

HexCellMap::HexCellMap(Arena arena, double r_g, std::vector<HexCell> cells)
    : arena_(arena), r_g_(r_g), cells_(std::move(cells)), adjacency_(cells_.size()) {
  if (cells_.empty()) throw ValidationError("hex map needs at least one cell");
  int q_max = cells_.front().q, r_max = cells_.front().r;
  q_min_ = q_max;
  r_min_ = r_max;
  for (const HexCell& c : cells_) {
    q_min_ = std::min(q_min_, c.q);
    r_min_ = std::min(r_min_, c.r);
    q_max = std::max(q_max, c.q);
    r_max = std::max(r_max, c.r);
  }
  q_span_ = q_max - q_min_ + 1;
  r_span_ = r_max - r_min_ + 1;
  lookup_.assign(static_cast<std::size_t>(q_span_) * static_cast<std::size_t>(r_span_), -1);
  for (const HexCell& c : cells_) {
    lookup_[static_cast<std::size_t>((c.q - q_min_) * r_span_ + (c.r - r_min_))] = c.id;
  }
  for (const HexCell& c : cells_) {
    auto& adj = adjacency_[static_cast<std::size_t>(c.id)];
    for (const auto& d : kDirections) {
      const CellId n = find_axial(c.q + d[0], c.r + d[1]);
      if (n >= 0) adj.push_back(n);
    }
    std::sort(adj.begin(), adj.end());
  }
}

CellId HexCellMap::find_axial(int q, int r) const {
  if (q < q_min_ || r < r_min_ || q >= q_min_ + q_span_ || r >= r_min_ + r_span_) return -1;
  return lookup_[static_cast<std::size_t>((q - q_min_) * r_span_ + (r - r_min_))];
}

int HexCellMap::hex_distance(CellId a, CellId b) const {
  const HexCell& ca = cell(a);
  const HexCell& cb = cell(b);
  const int dq = ca.q - cb.q;
  const int dr = ca.r - cb.r;
  return (std::abs(dq) + std::abs(dr) + std::abs(dq + dr)) / 2;
}

CellId HexCellMap::assign(Position p) const {
  if (!arena_.contains(p)) {
    throw ValidationError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") is outside the arena");
  }
  const Position o = arena_.center();
  const double dx = p.x - o.x;
  const double dy = p.y - o.y;
  const double qf = (2.0 / 3.0 * dx) / r_g_;
  const double rf = (-1.0 / 3.0 * dx + kSqrt3 / 3.0 * dy) / r_g_;
  int q0 = 0, r0 = 0;
  cube_round(qf, rf, q0, r0);

  const double tie = 1e-9 * r_g_;
  CellId best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  auto consider = [&](int q, int r) {
    const CellId id = find_axial(q, r);
    if (id < 0) return;
    const double d = distance(p, cells_[static_cast<std::size_t>(id)].center);
    if (d < best_d - tie || (std::abs(d - best_d) <= tie && id < best)) {
      best_d = std::min(best_d, d);
      best = id;
    }
  };
  consider(q0, r0);
  for (const auto& dir : kDirections) consider(q0 + dir[0], r0 + dir[1]);
  if (best < 0) {
    // Only reachable for points whose nearest lattice cell was dropped as a
    // zero-area overlap; fall back to a full scan.
    for (const HexCell& c : cells_) consider(c.q, c.r);
  }
  return best;
}

HexCellMap build_hex_tiling(double arena_width, double arena_height, double r_g) {
  if (!(arena_width > 0.0) || !(arena_height > 0.0)) throw ValidationError("arena dimensions must be positive");
  if (!(r_g > 0.0)) throw ValidationError("cell radius r_g must be positive");
  const Arena arena{arena_width, arena_height};
  const Position origin = arena.center();
  const int k = static_cast<int>(std::ceil(std::max(arena_width, arena_height) / r_g)) + 2;

  std::vector<HexCell> cells;
  for (int q = -k; q <= k; ++q) {
    for (int r = -2 * k; r <= 2 * k; ++r) {
      const Position c = axial_center(origin, r_g, q, r);
      if (!hex_overlaps_arena(c, r_g, arena)) continue;
      cells.push_back(HexCell{0, q, r, c, hex_group(q, r)});
    }
  }
  // Bottom-to-top (y grows with 2r + q), then left-to-right.
  std::sort(cells.begin(), cells.end(), [](const HexCell& a, const HexCell& b) {
    const int ya = 2 * a.r + a.q;
    const int yb = 2 * b.r + b.q;
    return ya != yb ? ya < yb : a.q < b.q;
  });
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i].id = static_cast<CellId>(i);
  return HexCellMap(arena, r_g, std::move(cells));
}

CellId assign_cell(Position p, const HexCellMap& map) { return map.assign(p); }

}  // namespace pmac
