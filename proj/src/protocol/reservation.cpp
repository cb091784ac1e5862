#include "pmac/protocol/reservation.hpp"

#include <tuple>

namespace pmac {

namespace {

bool shares_participant(const Reservation& a, const Reservation& b) {
  const NodeId pa[3] = {a.source, a.destination, a.header ? a.header->owner : a.source};
  const NodeId pb[3] = {b.source, b.destination, b.header ? b.header->owner : b.source};
  for (NodeId x : pa) {
    for (NodeId y : pb) {
      if (x == y) return true;
    }
  }
  return false;
}

bool tx_inside(const Reservation& victim, Position tx) {
  return victim.rx.covers(tx) || (victim.header && victim.header->covers(tx));
}

}  // namespace

bool interferes(const Reservation& a, const Reservation& b) {
  if (a.frame != b.frame || a.slot != b.slot) return false;
  return shares_participant(a, b) || tx_inside(a, b.tx) || tx_inside(b, a.tx);
}

bool takes_precedence(const Reservation& a, const Reservation& b) {
  return std::tie(a.made_frame, a.announce_slot, a.origin, a.source) <
         std::tie(b.made_frame, b.announce_slot, b.origin, b.source);
}

std::vector<std::pair<std::size_t, std::size_t>> conflicting_pairs(const std::vector<Reservation>& rs) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    for (std::size_t j = i + 1; j < rs.size(); ++j) {
      if (interferes(rs[i], rs[j])) out.emplace_back(i, j);
    }
  }
  return out;
}

}  // namespace pmac
