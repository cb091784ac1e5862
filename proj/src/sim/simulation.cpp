#include "pmac/sim/simulation.hpp"

#include <string>

#include "pmac/core/error.hpp"

namespace pmac {

const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::pmac: return "pmac";
    case Protocol::dcf: return "dcf";
    case Protocol::psm: return "psm";
  }
  return "unknown";
}

Protocol parse_protocol(std::string_view name) {
  if (name == "pmac") return Protocol::pmac;
  if (name == "dcf") return Protocol::dcf;
  if (name == "psm") return Protocol::psm;
  throw ValidationError("unknown protocol '" + std::string(name) + "'");
}

void SimConfig::validate(const Scenario& scenario) const {
  scenario.validate();
  channel.validate();
  if (load < 0.0) throw ValidationError("load must be non-negative");
  if (!(duration > 0.0)) throw ValidationError("duration must be positive");
  switch (protocol) {
    case Protocol::pmac: {
      pmac.validate();
      const double r_g = pmac.h * scenario.d_m;
      for (const Link& l : scenario.links) {
        if (l.distance > r_g + 1e-9) throw ValidationError("r_g is shorter than the longest link");
      }
      break;
    }
    case Protocol::dcf: dcf.validate(); break;
    case Protocol::psm: psm.validate(); break;
  }
}

SimResult run_simulation(const Scenario& scenario, const SimConfig& cfg) {
  cfg.validate(scenario);
  switch (cfg.protocol) {
    case Protocol::pmac:
      return run_pmac({&scenario, &cfg.channel, cfg.power, cfg.load, cfg.duration, cfg.seed, cfg.record_trace}, cfg.pmac);
    case Protocol::dcf:
      return run_dcf({&scenario, &cfg.channel, cfg.power, cfg.load, cfg.duration, cfg.seed, cfg.record_trace}, cfg.dcf);
    case Protocol::psm:
      return run_psm({&scenario, &cfg.channel, cfg.power, cfg.load, cfg.duration, cfg.seed, cfg.record_trace}, cfg.psm);
  }
  throw ValidationError("unknown protocol");
}

}  // namespace pmac
