#include "pmac/core/channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmac/core/error.hpp"

namespace pmac {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

void ChannelModel::validate() const {
  if (!(alpha > 2.0)) throw ValidationError("path-loss exponent alpha must exceed 2");
  if (!(c > 0.0)) throw ValidationError("path-gain constant c must be positive");
  if (!(n0 > 0.0)) throw ValidationError("noise power N0 must be positive");
  if (!(p_d > 0.0) || !(p_s > 0.0)) throw ValidationError("transmit powers must be positive");
  if (!(gamma_d > 0.0) || !(gamma_s > 0.0)) throw ValidationError("SINR thresholds must be positive");
  if (!(c_prime >= 1.0)) throw ValidationError("reservation factor c' must be at least 1");
}

double path_gain(double d, const ChannelModel& cm) {
  if (!(d > 0.0)) throw ValidationError("path gain undefined for co-located transceivers (d = " + std::to_string(d) + ")");
  return cm.c * std::pow(d, -cm.alpha);
}

void TransmissionVector::add(NodeId node, Position position, double power) {
  if (contains(node)) throw ValidationError("node " + std::to_string(node) + " already transmitting in this slot");
  active_.push_back({node, position, power});
}

bool TransmissionVector::contains(NodeId node) const {
  return std::any_of(active_.begin(), active_.end(), [node](const ActiveTransmitter& t) { return t.node == node; });
}

double sinr(Position rx, NodeId tx, const TransmissionVector& txs, const ChannelModel& cm) {
  double signal = -1.0;
  double interference = 0.0;
  for (const ActiveTransmitter& t : txs.active()) {
    const double g = path_gain(distance(rx, t.position), cm);
    if (t.node == tx) {
      signal = t.power * g;
    } else {
      interference += t.power * g;
    }
  }
  if (signal < 0.0) throw ValidationError("transmitter " + std::to_string(tx) + " is not active");
  return signal / (cm.n0 + interference);
}

double interference_bound(double r, const ChannelModel& cm) {
  return cm.c_prime * cm.c * cm.p_d / std::pow(r, cm.alpha);
}

double reserved_radius(double d, const ChannelModel& cm, RadiusMode mode) {
  if (!(d > 0.0)) throw ValidationError("reserved radius needs a positive link length");
  if (mode == RadiusMode::approx) return std::pow(cm.c_prime * cm.gamma_d, 1.0 / cm.alpha) * d;
  const double denom = cm.c * cm.p_d / (std::pow(d, cm.alpha) * cm.gamma_d) - cm.n0;
  if (!(denom > 0.0)) {
    throw InfeasibleLinkError("link of " + std::to_string(d) + " m cannot reach gamma_d even without interference");
  }
  return std::pow(cm.c_prime * cm.c * cm.p_d / denom, 1.0 / cm.alpha);
}

double sinr_lower_bound(double d, double r, const ChannelModel& cm) {
  return (cm.c * cm.p_d / std::pow(d, cm.alpha)) / (cm.n0 + interference_bound(r, cm));
}

double min_power_for_range(double d, double gamma, const ChannelModel& cm) {
  return gamma * cm.n0 / path_gain(d, cm);
}

}  // namespace pmac
