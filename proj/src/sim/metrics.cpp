#include "pmac/sim/metrics.hpp"

#include <sstream>
#include <unordered_set>

#include "pmac/core/error.hpp"

namespace pmac {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::data_sent: return "data_sent";
    case EventKind::data_delivered: return "data_delivered";
    case EventKind::data_collided: return "data_collided";
    case EventKind::ack_lost: return "ack_lost";
    case EventKind::control_sent: return "control_sent";
    case EventKind::control_lost: return "control_lost";
    case EventKind::request_delivered: return "request_delivered";
    case EventKind::request_lost: return "request_lost";
  }
  return "unknown";
}

std::string format_trace(const std::vector<TraceEvent>& trace) {
  std::ostringstream os;
  for (const TraceEvent& e : trace) {
    os << e.time_us << ',' << e.node << ',' << e.peer << ',' << to_string(e.kind) << ',' << e.slot << ',' << e.packet
       << '\n';
  }
  return os.str();
}

Metrics metrics_from_counts(const Counters& c, double energy_total, double duration) {
  if (!(duration > 0.0)) throw ValidationError("duration must be positive");
  if (c.delivered > c.sent) throw IntegrityError("more packets delivered than sent");
  Metrics m;
  m.counts = c;
  m.energy_total = energy_total;
  m.throughput = c.delivered_distance / duration;
  if (c.delivered > 0) m.energy_per_packet = energy_total / static_cast<double>(c.delivered);
  m.collision_rate = c.sent > 0 ? static_cast<double>(c.collided) / static_cast<double>(c.sent) : 0.0;
  return m;
}

Metrics compute_metrics(const std::vector<TraceEvent>& trace, const Scenario& scenario, double energy_total,
                        double duration) {
  Counters c;
  std::unordered_set<std::uint64_t> seen;
  for (const TraceEvent& e : trace) {
    switch (e.kind) {
      case EventKind::data_sent: ++c.sent; break;
      case EventKind::data_collided: ++c.collided; break;
      case EventKind::data_delivered:
        if (seen.insert(e.packet).second) {
          ++c.delivered;
          c.delivered_distance += scenario.links.at(static_cast<std::size_t>(e.node)).distance;
        }
        break;
      default: break;
    }
  }
  return metrics_from_counts(c, energy_total, duration);
}

}  // namespace pmac
