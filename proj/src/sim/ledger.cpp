#include "pmac/sim/ledger.hpp"

#include <algorithm>
#include <string>

#include "pmac/core/error.hpp"

namespace pmac {

double transmit_draw(double radiated_w) {
  const double p = std::clamp(radiated_w, 0.1, 0.18);
  return 2.25 + (p - 0.1) / 0.08 * 0.9;
}

RadioLedger::RadioLedger(std::size_t nodes, PowerTable power)
    : time_(nodes, {0, 0, 0, 0}), tx_draw_(nodes, power.transmit), power_(power) {}

void RadioLedger::add(std::size_t node, RadioMode mode, std::int64_t us) {
  if (us < 0) throw IntegrityError("negative time added to the radio ledger");
  time_.at(node)[static_cast<std::size_t>(mode)] += us;
}

void RadioLedger::set_transmit_draw(std::size_t node, double watts) { tx_draw_.at(node) = watts; }

std::int64_t RadioLedger::total_us(std::size_t node) const {
  const auto& t = time_[node];
  return t[0] + t[1] + t[2] + t[3];
}

EnergyReport account_energy(const RadioLedger& ledger, std::int64_t duration_us) {
  EnergyReport rep;
  rep.per_node.resize(ledger.size());
  const PowerTable& pw = ledger.power();
  for (std::size_t n = 0; n < ledger.size(); ++n) {
    if (ledger.total_us(n) != duration_us) {
      throw IntegrityError("radio ledger of node " + std::to_string(n) + " covers " + std::to_string(ledger.total_us(n)) +
                           " us instead of " + std::to_string(duration_us));
    }
    const double j = 1e-6 * (static_cast<double>(ledger.time_us(n, RadioMode::transmit)) * ledger.transmit_draw_of(n) +
                             static_cast<double>(ledger.time_us(n, RadioMode::receive)) * pw.receive +
                             static_cast<double>(ledger.time_us(n, RadioMode::idle)) * pw.idle +
                             static_cast<double>(ledger.time_us(n, RadioMode::sleep)) * pw.sleep);
    rep.per_node[n] = j;
    rep.total += j;
  }
  return rep;
}

}  // namespace pmac
