#pragma once

#include <span>
#include <vector>

#include "pmac/core/geometry.hpp"

namespace pmac {

double db_to_linear(double db);
double linear_to_db(double linear);

/// Path-loss channel with SINR thresholds. All thresholds are linear ratios.
struct ChannelModel {
  double c = 1e-4;        // path-gain constant
  double alpha = 3.4;     // path-loss exponent
  double n0 = 1e-13;      // noise power, W
  double p_d = 0.1;       // data power, W
  double p_s = 0.1;       // control/scheduling power, W
  double gamma_d = 7.943282347242815;  // 9 dB
  double gamma_s = 3.981071705534972;  // 6 dB
  double c_prime = 3.0;   // reservation factor

  /// Throws ValidationError unless alpha > 2, powers/thresholds > 0, c' >= 1.
  void validate() const;

  friend bool operator==(const ChannelModel&, const ChannelModel&) = default;
};

/// c * d^-alpha. Throws ValidationError for d <= 0.
double path_gain(double d, const ChannelModel& cm);

struct ActiveTransmitter {
  NodeId node = 0;
  Position position;
  double power = 0.0;  // W
};

/// Set of transmitters active in one slot; each node appears at most once.
class TransmissionVector {
 public:
  void add(NodeId node, Position position, double power);
  [[nodiscard]] bool contains(NodeId node) const;
  [[nodiscard]] std::span<const ActiveTransmitter> active() const { return active_; }
  [[nodiscard]] std::size_t size() const { return active_.size(); }
  [[nodiscard]] bool empty() const { return active_.empty(); }
  void clear() { active_.clear(); }

 private:
  std::vector<ActiveTransmitter> active_;
};

/// SINR at `rx` for the signal of `tx`, with every other member of `txs`
/// counted as interference. Throws ValidationError if `tx` is not active or
/// shares the receiver's position.
double sinr(Position rx, NodeId tx, const TransmissionVector& txs, const ChannelModel& cm);

enum class RadiusMode { exact, approx };

/// Upper bound on interference from transmitters outside a reserved disc of
/// radius r: c' * c * P_d / r^alpha.
double interference_bound(double r, const ChannelModel& cm);

/// Radius of the disc around a receiver at distance d from its transmitter
/// that keeps SINR >= gamma_d under the interference bound.
///
/// exact:  (c' c P_d / (c P_d / (d^alpha gamma_d) - N0))^(1/alpha)
/// approx: (c' gamma_d)^(1/alpha) * d, valid when the bound dominates N0.
///
/// Throws InfeasibleLinkError when the exact denominator is not positive.
double reserved_radius(double d, const ChannelModel& cm, RadiusMode mode);

/// Lower bound on SINR for a link of length d when all interference is
/// confined outside radius r.
double sinr_lower_bound(double d, double r, const ChannelModel& cm);

/// Smallest transmit power that reaches distance `d` at SINR >= gamma with
/// noise only.
double min_power_for_range(double d, double gamma, const ChannelModel& cm);

}  // namespace pmac
