#pragma once

#include <map>
#include <span>
#include <vector>

#include "pmac/core/channel.hpp"
#include "pmac/core/rng.hpp"
#include "pmac/protocol/coordinator.hpp"

namespace pmac {

struct ContentionRequest {
  NodeId node = 0;
  Position position;
  CellId cell = 0;
  Position coordinator;
  int window = 1;
  DemandEntry entry;
};

struct ContentionTiming {
  int period_us = 2000;   // total contention time
  int mini_slot_us = 20;
  int request_us = 240;
};

/// What one coordinator saw of the contention period.
struct ContentionObservation {
  int idle = 0;
  int success = 0;
  int collision = 0;
};

struct ContentionOutcome {
  std::vector<bool> delivered;   // per request
  std::vector<int> start_us;     // per request, -1 when the backoff never expired
  std::map<CellId, ContentionObservation> observed;
};

/// Mini-slot CSMA over the contention period. Each contender draws a backoff
/// in [0, W-1], counts it down over mini-slots in which no transmitter within
/// r_c is active, then sends one request. The request is delivered when the
/// coordinator's SINR stays at or above gamma_s for its whole duration and it
/// ends inside the period. Each coordinator's observation covers requests
/// sent within monitor_range of it; r_c when monitor_range is not positive.
ContentionOutcome contention_access(std::span<const ContentionRequest> requests, const ContentionTiming& timing,
                                    double r_c, const ChannelModel& cm, CounterRng& rng, double monitor_range = 0.0);

}  // namespace pmac
