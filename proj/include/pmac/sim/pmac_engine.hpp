#pragma once

#include <cstdint>

#include "pmac/core/channel.hpp"
#include "pmac/protocol/frame.hpp"
#include "pmac/sim/ledger.hpp"
#include "pmac/sim/result.hpp"
#include "pmac/sim/scenario.hpp"

namespace pmac {

struct PmacConfig {
  double h = 1.5;  // r_g = h * d_m
  double q = 1.5;  // r_a = q * r_g
  FrameLayout layout;
  RadiusMode radius_mode = RadiusMode::exact;
  bool adaptive_window = true;
  int initial_window = 32;
  double estimator_weight = 0.5;
  int request_staleness = 3;  // frames without a report before a node contends again
  int preamble_us = 192;
  int entry_bits = 200;       // per announced link or cancellation
  double control_rate = 6e6;  // bit/s
  int data_us = 729;          // data airtime; data + SIFS + ACK + DIFS fills the slot
  int sifs_us = 10;
  int ack_us = 211;
  double p_s_min = 0.1;       // W
  double p_s_max = 0.18;

  void validate() const;

  friend bool operator==(const PmacConfig&, const PmacConfig&) = default;
};

struct PmacRun {
  const Scenario* scenario = nullptr;
  const ChannelModel* channel = nullptr;
  PowerTable power;
  double load = 0.0;       // aggregate packets/s
  double duration = 20.0;  // s, a whole number of frames
  std::uint64_t seed = 0;
  bool record_trace = false;
};

/// Ledger rows: scenario nodes first, then one coordinator per hex cell.
SimResult run_pmac(const PmacRun& run, const PmacConfig& cfg);

}  // namespace pmac
