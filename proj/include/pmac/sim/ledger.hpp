#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace pmac {

enum class RadioMode : std::uint8_t { transmit = 0, receive = 1, idle = 2, sleep = 3 };

struct PowerTable {
  double transmit = 2.25;  // W at 100 mW radiated
  double receive = 1.15;
  double idle = 1.15;
  double sleep = 0.075;

  friend bool operator==(const PowerTable&, const PowerTable&) = default;
};

/// Transmit draw grows linearly from 2.25 W at 100 mW radiated to 3.15 W at 180 mW.
double transmit_draw(double radiated_w);

/// Per-node time in each radio mode, kept in whole microseconds so the
/// per-node sum can be checked exactly against the run duration.
class RadioLedger {
 public:
  RadioLedger() = default;
  RadioLedger(std::size_t nodes, PowerTable power);

  void add(std::size_t node, RadioMode mode, std::int64_t us);
  /// Overrides the transmit draw for one node (coordinators radiating above P_d).
  void set_transmit_draw(std::size_t node, double watts);

  [[nodiscard]] std::size_t size() const { return time_.size(); }
  [[nodiscard]] std::int64_t time_us(std::size_t node, RadioMode mode) const {
    return time_[node][static_cast<std::size_t>(mode)];
  }
  [[nodiscard]] std::int64_t total_us(std::size_t node) const;
  [[nodiscard]] std::int64_t awake_us(std::size_t node) const {
    return total_us(node) - time_us(node, RadioMode::sleep);
  }
  [[nodiscard]] const PowerTable& power() const { return power_; }
  [[nodiscard]] double transmit_draw_of(std::size_t node) const { return tx_draw_[node]; }

 private:
  std::vector<std::array<std::int64_t, 4>> time_;
  std::vector<double> tx_draw_;
  PowerTable power_;
};

struct EnergyReport {
  std::vector<double> per_node;  // J
  double total = 0.0;
};

/// Σ mode time × draw per node. Throws IntegrityError unless every node's
/// mode times sum to `duration_us` exactly.
EnergyReport account_energy(const RadioLedger& ledger, std::int64_t duration_us);

}  // namespace pmac
