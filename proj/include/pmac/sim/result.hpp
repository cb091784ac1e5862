#pragma once

#include <cstdint>
#include <vector>

#include "pmac/sim/ledger.hpp"
#include "pmac/sim/metrics.hpp"

namespace pmac {

/// Violation counters filled by the engines; all zero on a clean run.
struct Audit {
  std::uint64_t frames = 0;
  std::uint64_t coloring = 0;            // two-hop cells sharing a group
  std::uint64_t rotation = 0;            // group missing a slot over 7 frames
  std::uint64_t knowledge_conflicts = 0;  // interfering pair left in a coordinator's schedule
  std::uint64_t wake = 0;                // awake slot without a role
  std::uint64_t ledger = 0;              // node times not summing to the duration
  std::uint64_t adjudication = 0;        // delivery disagreeing with the SINR test

  [[nodiscard]] std::uint64_t total() const {
    return coloring + rotation + knowledge_conflicts + wake + ledger + adjudication;
  }
};

struct SimResult {
  Metrics metrics;
  RadioLedger ledger;  // nodes first, then coordinators (PMAC)
  std::vector<TraceEvent> trace;
  Audit audit;
  std::uint64_t dropped = 0;             // packets abandoned after the retry limit
  std::uint64_t requests_delivered = 0;  // PMAC contention requests
  std::uint64_t requests_sent = 0;
  std::uint64_t scheduling_overflow = 0;  // scheduling packets longer than a slot
  std::size_t coordinators = 0;
};

}  // namespace pmac
