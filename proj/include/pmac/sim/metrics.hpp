#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pmac/core/geometry.hpp"
#include "pmac/sim/scenario.hpp"

namespace pmac {

enum class EventKind : std::uint8_t {
  data_sent,
  data_delivered,
  data_collided,
  ack_lost,
  control_sent,
  control_lost,
  request_delivered,
  request_lost,
};

const char* to_string(EventKind k);

struct TraceEvent {
  std::int64_t time_us = 0;
  NodeId node = 0;  // transmitter
  NodeId peer = 0;  // intended receiver
  EventKind kind = EventKind::data_sent;
  int slot = 0;     // frame slot, or 0 for unslotted protocols
  std::uint64_t packet = 0;
};

/// One line per event: time_us,node,peer,kind,slot,packet
std::string format_trace(const std::vector<TraceEvent>& trace);

struct Counters {
  std::uint64_t sent = 0;       // data transmissions, retries included
  std::uint64_t delivered = 0;  // distinct packets received
  std::uint64_t collided = 0;   // data receptions that failed the SINR test
  double delivered_distance = 0.0;  // Σ link length over delivered packets, m
};

struct Metrics {
  double throughput = 0.0;                 // packet·m/s
  std::optional<double> energy_per_packet;  // J, empty when nothing was delivered
  double collision_rate = 0.0;
  double energy_total = 0.0;  // J
  Counters counts;
};

Metrics metrics_from_counts(const Counters& c, double energy_total, double duration);

/// Counters rebuilt from a trace: data_delivered events count once per packet.
Metrics compute_metrics(const std::vector<TraceEvent>& trace, const Scenario& scenario, double energy_total,
                        double duration);

}  // namespace pmac
