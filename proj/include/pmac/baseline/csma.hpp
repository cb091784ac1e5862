#pragma once

#include <cstdint>
#include <vector>

#include "pmac/core/channel.hpp"
#include "pmac/sim/ledger.hpp"
#include "pmac/sim/result.hpp"
#include "pmac/sim/scenario.hpp"

namespace pmac {

/// Airtimes in microseconds: 192 us preamble plus the frame at its rate.
struct CsmaTiming {
  int slot = 20;
  int sifs = 10;
  int difs = 50;
  int rts = 219;       // 160 bits at 6 Mbps
  int cts = 211;       // 112 bits at 6 Mbps
  int ack = 211;
  int data = 729;      // DATA + SIFS + ACK + DIFS = 1 ms
  int atim = 230;      // 224 bits at 6 Mbps
  int atim_ack = 211;

  friend bool operator==(const CsmaTiming&, const CsmaTiming&) = default;
};

struct DcfConfig {
  double r_c = 40.0;  // carrier-sense range, m
  int cw_min = 15;
  int cw_max = 1023;
  bool rts_cts = true;
  int retry_limit = 7;
  CsmaTiming timing;

  void validate() const;

  friend bool operator==(const DcfConfig&, const DcfConfig&) = default;
};

struct PsmConfig {
  double beacon_interval = 0.1;  // s
  double atim_window = 0.004;    // s
  DcfConfig inner;

  void validate() const;

  friend bool operator==(const PsmConfig&, const PsmConfig&) = default;
};

struct CsmaRun {
  const Scenario* scenario = nullptr;
  const ChannelModel* channel = nullptr;
  PowerTable power;
  double load = 0.0;       // aggregate packets/s
  double duration = 20.0;  // s
  std::uint64_t seed = 0;
  bool record_trace = false;
};

SimResult run_dcf(const CsmaRun& run, const DcfConfig& cfg);
SimResult run_psm(const CsmaRun& run, const PsmConfig& cfg);

enum class Scheme { dcf, psm };

struct TunePoint {
  double value = 0.0;  // r_c in m, or ATIM window in s
  double throughput = 0.0;
  double energy_per_packet = 0.0;  // mean over runs that delivered
  double collision_rate = 0.0;
  std::vector<Metrics> runs;
};

struct TuneResult {
  double best_value = 0.0;
  std::size_t best_index = 0;
  std::vector<TunePoint> points;
};

/// Runs every grid value over every scenario and keeps the value with the
/// highest mean throughput; ties go to the earlier grid entry.
TuneResult tune_best(Scheme scheme, const std::vector<double>& grid, const std::vector<Scenario>& scenarios,
                     const ChannelModel& cm, const PowerTable& power, double load, double duration,
                     std::uint64_t seed, const DcfConfig& base_dcf = {}, const PsmConfig& base_psm = {});

}  // namespace pmac
