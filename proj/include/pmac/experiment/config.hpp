#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pmac/baseline/csma.hpp"
#include "pmac/core/channel.hpp"
#include "pmac/sim/pmac_engine.hpp"
#include "pmac/sim/simulation.hpp"

namespace pmac {

/// Everything a sweep needs. Grids hold one entry per swept value; single
/// runs take the first entry of each.
struct ExperimentConfig {
  // scenario
  std::vector<int> nodes{100};
  double d_m = 20.0;          // m
  double arena_factor = 6.0;  // square side in units of d_m

  ChannelModel channel;
  PowerTable power;

  std::vector<Protocol> protocols{Protocol::pmac, Protocol::dcf, Protocol::psm};
  std::vector<double> loads{500, 1000, 2000, 4000, 8000};  // packets/s
  double duration = 20.0;                                  // s
  int replications = 10;
  std::uint64_t seed = 1;
  int parallel = 1;

  // PMAC; h and q here override the ones in `pmac`.
  std::vector<double> h{1.5};
  std::vector<double> q{1.5};
  PmacConfig pmac;

  // DCF; r_c in units of d_m.
  std::vector<double> r_c_factor{1.8, 2.0, 2.2, 2.4, 2.6, 2.8, 3.0};
  DcfConfig dcf;

  // PSM; runs with the best DCF r_c of its node count when DCF is swept too.
  std::vector<double> atim_window{0.002, 0.004, 0.006, 0.008, 0.010};  // s
  double psm_r_c_factor = 2.0;
  PsmConfig psm;

  // contention curves
  std::vector<int> n_prime{2, 5, 10, 20, 40};
  std::vector<int> windows{8, 16, 32, 64, 128};
  std::vector<double> t_cp{0.001, 0.002, 0.004};                                   // s
  std::vector<double> t_cp_curve{0.001, 0.002, 0.003, 0.004, 0.005, 0.006, 0.008, 0.010};  // s
  int contention_replications = 10000;
  double t_r = 240e-6;  // s

  [[nodiscard]] Arena arena() const { return {arena_factor * d_m, arena_factor * d_m}; }

  /// Throws ValidationError naming the offending key.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Flat `key = value` text, `#` comments, dotted namespaces, comma-separated
/// lists. Values may carry a unit: dB for ratios; W, mW or dBm for powers;
/// s, ms or us for times; m for lengths. Missing keys keep their defaults.
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Every key with its value in base units; parses back to the same config.
std::string echo_config(const ExperimentConfig& cfg);

/// Sorted list of recognised keys.
std::vector<std::string> config_keys();

}  // namespace pmac
