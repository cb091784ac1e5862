#pragma once

#include <cstdint>
#include <string_view>

#include "pmac/baseline/csma.hpp"
#include "pmac/core/channel.hpp"
#include "pmac/sim/pmac_engine.hpp"

namespace pmac {

enum class Protocol { pmac, dcf, psm };

const char* to_string(Protocol p);
/// Throws ValidationError for anything but pmac, dcf or psm.
Protocol parse_protocol(std::string_view name);

struct SimConfig {
  Protocol protocol = Protocol::pmac;
  PmacConfig pmac;
  DcfConfig dcf;
  PsmConfig psm;
  ChannelModel channel;
  PowerTable power;
  double load = 0.0;       // aggregate packets/s
  double duration = 20.0;  // s
  std::uint64_t seed = 0;
  bool record_trace = false;

  /// Checks every part against the scenario before anything runs.
  void validate(const Scenario& scenario) const;
};

SimResult run_simulation(const Scenario& scenario, const SimConfig& cfg);

}  // namespace pmac
