#include "pmac/experiment/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "pmac/core/error.hpp"

namespace pmac {

namespace {

enum class Unit { none, ratio, power, time, length };

const char* unit_help(Unit u) {
  switch (u) {
    case Unit::ratio: return "a ratio (linear or dB)";
    case Unit::power: return "a power (W, mW or dBm)";
    case Unit::time: return "a time (s, ms or us)";
    case Unit::length: return "a length (m)";
    case Unit::none: break;
  }
  return "a plain value without unit";
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = v.find(',', start);
    out.push_back(trim(v.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail(std::string_view key, const std::string& what) {
  throw ValidationError(std::string(key) + ": " + what);
}

double parse_real(std::string_view key, std::string_view token, Unit unit) {
  double x = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc{} || ptr == first) fail(key, "'" + std::string(token) + "' is not a number");
  const std::string u(trim(std::string_view(ptr, static_cast<std::size_t>(last - ptr))));
  if (!std::isfinite(x)) fail(key, "value must be finite");
  auto wrong = [&]() -> double { fail(key, "inconsistent units: '" + u + "' given, expected " + unit_help(unit)); };
  switch (unit) {
    case Unit::none:
      return u.empty() ? x : wrong();
    case Unit::ratio:
      if (u.empty()) return x;
      return u == "dB" ? db_to_linear(x) : wrong();
    case Unit::power:
      if (u.empty() || u == "W") return x;
      if (u == "mW") return x * 1e-3;
      return u == "dBm" ? db_to_linear(x - 30.0) : wrong();
    case Unit::time:
      if (u.empty() || u == "s") return x;
      if (u == "ms") return x * 1e-3;
      return u == "us" ? x * 1e-6 : wrong();
    case Unit::length:
      return u.empty() || u == "m" ? x : wrong();
  }
  return x;
}

long long parse_integer(std::string_view key, std::string_view token) {
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), x);
  if (ec != std::errc{} || ptr != token.data() + token.size()) fail(key, "'" + std::string(token) + "' is not an integer");
  return x;
}

bool parse_bool(std::string_view key, std::string_view token) {
  if (token == "true" || token == "yes" || token == "on" || token == "1") return true;
  if (token == "false" || token == "no" || token == "off" || token == "0") return false;
  fail(key, "'" + std::string(token) + "' is not a boolean");
}

std::string fmt(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += f(v[i]);
  }
  return out;
}

struct Key {
  Unit unit = Unit::none;
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

using Table = std::map<std::string, Key, std::less<>>;

template <class Ref>
Key real(Unit u, Ref ref) {
  return {u,
          [u, ref](ExperimentConfig& c, std::string_view k, std::string_view v) {
            if (split_list(v).size() != 1) fail(k, "expects a single value");
            ref(c) = parse_real(k, v, u);
          },
          [ref](const ExperimentConfig& c) { return fmt(ref(const_cast<ExperimentConfig&>(c))); }};
}

template <class Ref>
Key reals(Unit u, Ref ref) {
  return {u,
          [u, ref](ExperimentConfig& c, std::string_view k, std::string_view v) {
            std::vector<double> out;
            for (std::string_view t : split_list(v)) out.push_back(parse_real(k, t, u));
            ref(c) = std::move(out);
          },
          [ref](const ExperimentConfig& c) { return join(ref(const_cast<ExperimentConfig&>(c)), fmt); }};
}

template <class Ref>
Key integer(Ref ref) {
  return {Unit::none,
          [ref](ExperimentConfig& c, std::string_view k, std::string_view v) {
            using T = std::remove_reference_t<decltype(ref(c))>;
            if constexpr (std::is_unsigned_v<T>) {
              T x = 0;
              const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
              if (ec != std::errc{} || ptr != v.data() + v.size()) {
                fail(k, "'" + std::string(v) + "' is not a non-negative integer");
              }
              ref(c) = x;
            } else {
              ref(c) = static_cast<T>(parse_integer(k, v));
            }
          },
          [ref](const ExperimentConfig& c) { return std::to_string(ref(const_cast<ExperimentConfig&>(c))); }};
}

template <class Ref>
Key integers(Ref ref) {
  return {Unit::none,
          [ref](ExperimentConfig& c, std::string_view k, std::string_view v) {
            std::vector<int> out;
            for (std::string_view t : split_list(v)) out.push_back(static_cast<int>(parse_integer(k, t)));
            ref(c) = std::move(out);
          },
          [ref](const ExperimentConfig& c) {
            return join(ref(const_cast<ExperimentConfig&>(c)), [](int x) { return std::to_string(x); });
          }};
}

template <class Ref>
Key boolean(Ref ref) {
  return {Unit::none,
          [ref](ExperimentConfig& c, std::string_view k, std::string_view v) { ref(c) = parse_bool(k, v); },
          [ref](const ExperimentConfig& c) { return std::string(ref(const_cast<ExperimentConfig&>(c)) ? "true" : "false"); }};
}

const Table& table() {
  using C = ExperimentConfig;
  static const Table t = [] {
    Table k;
    k["scenario.nodes"] = integers([](C& c) -> auto& { return c.nodes; });
    k["scenario.d_m"] = real(Unit::length, [](C& c) -> auto& { return c.d_m; });
    k["scenario.arena_factor"] = real(Unit::none, [](C& c) -> auto& { return c.arena_factor; });

    k["channel.c"] = real(Unit::none, [](C& c) -> auto& { return c.channel.c; });
    k["channel.alpha"] = real(Unit::none, [](C& c) -> auto& { return c.channel.alpha; });
    k["channel.n0"] = real(Unit::power, [](C& c) -> auto& { return c.channel.n0; });
    k["channel.p_d"] = real(Unit::power, [](C& c) -> auto& { return c.channel.p_d; });
    k["channel.p_s"] = real(Unit::power, [](C& c) -> auto& { return c.channel.p_s; });
    k["channel.gamma_d"] = real(Unit::ratio, [](C& c) -> auto& { return c.channel.gamma_d; });
    k["channel.gamma_s"] = real(Unit::ratio, [](C& c) -> auto& { return c.channel.gamma_s; });
    k["channel.c_prime"] = real(Unit::none, [](C& c) -> auto& { return c.channel.c_prime; });

    k["power.transmit"] = real(Unit::power, [](C& c) -> auto& { return c.power.transmit; });
    k["power.receive"] = real(Unit::power, [](C& c) -> auto& { return c.power.receive; });
    k["power.idle"] = real(Unit::power, [](C& c) -> auto& { return c.power.idle; });
    k["power.sleep"] = real(Unit::power, [](C& c) -> auto& { return c.power.sleep; });

    k["sweep.protocols"] = {Unit::none,
                            [](C& c, std::string_view key, std::string_view v) {
                              std::vector<Protocol> out;
                              for (std::string_view t : split_list(v)) {
                                try {
                                  out.push_back(parse_protocol(t));
                                } catch (const ValidationError& e) {
                                  fail(key, e.what());
                                }
                              }
                              c.protocols = std::move(out);
                            },
                            [](const C& c) { return join(c.protocols, [](Protocol p) { return std::string(to_string(p)); }); }};
    k["sweep.loads"] = reals(Unit::none, [](C& c) -> auto& { return c.loads; });
    k["sweep.duration"] = real(Unit::time, [](C& c) -> auto& { return c.duration; });
    k["sweep.replications"] = integer([](C& c) -> auto& { return c.replications; });
    k["sweep.seed"] = integer([](C& c) -> auto& { return c.seed; });
    k["sweep.parallel"] = integer([](C& c) -> auto& { return c.parallel; });

    k["pmac.h"] = reals(Unit::none, [](C& c) -> auto& { return c.h; });
    k["pmac.q"] = reals(Unit::none, [](C& c) -> auto& { return c.q; });
    k["pmac.radius_mode"] = {Unit::none,
                             [](C& c, std::string_view key, std::string_view v) {
                               if (v == "exact") {
                                 c.pmac.radius_mode = RadiusMode::exact;
                               } else if (v == "approx") {
                                 c.pmac.radius_mode = RadiusMode::approx;
                               } else {
                                 fail(key, "expected exact or approx");
                               }
                             },
                             [](const C& c) {
                               return std::string(c.pmac.radius_mode == RadiusMode::exact ? "exact" : "approx");
                             }};
    k["pmac.adaptive_window"] = boolean([](C& c) -> auto& { return c.pmac.adaptive_window; });
    k["pmac.initial_window"] = integer([](C& c) -> auto& { return c.pmac.initial_window; });
    k["pmac.estimator_weight"] = real(Unit::none, [](C& c) -> auto& { return c.pmac.estimator_weight; });
    k["pmac.request_staleness"] = integer([](C& c) -> auto& { return c.pmac.request_staleness; });
    k["pmac.contention_slots"] = integer([](C& c) -> auto& { return c.pmac.layout.contention_slots; });
    k["pmac.p_s_min"] = real(Unit::power, [](C& c) -> auto& { return c.pmac.p_s_min; });
    k["pmac.p_s_max"] = real(Unit::power, [](C& c) -> auto& { return c.pmac.p_s_max; });

    k["dcf.r_c_factor"] = reals(Unit::none, [](C& c) -> auto& { return c.r_c_factor; });
    k["dcf.cw_min"] = integer([](C& c) -> auto& { return c.dcf.cw_min; });
    k["dcf.cw_max"] = integer([](C& c) -> auto& { return c.dcf.cw_max; });
    k["dcf.rts_cts"] = boolean([](C& c) -> auto& { return c.dcf.rts_cts; });
    k["dcf.retry_limit"] = integer([](C& c) -> auto& { return c.dcf.retry_limit; });

    k["psm.atim_window"] = reals(Unit::time, [](C& c) -> auto& { return c.atim_window; });
    k["psm.beacon_interval"] = real(Unit::time, [](C& c) -> auto& { return c.psm.beacon_interval; });
    k["psm.r_c_factor"] = real(Unit::none, [](C& c) -> auto& { return c.psm_r_c_factor; });

    k["contention.n_prime"] = integers([](C& c) -> auto& { return c.n_prime; });
    k["contention.window"] = integers([](C& c) -> auto& { return c.windows; });
    k["contention.t_cp"] = reals(Unit::time, [](C& c) -> auto& { return c.t_cp; });
    k["contention.t_cp_curve"] = reals(Unit::time, [](C& c) -> auto& { return c.t_cp_curve; });
    k["contention.replications"] = integer([](C& c) -> auto& { return c.contention_replications; });
    k["contention.t_r"] = real(Unit::time, [](C& c) -> auto& { return c.t_r; });
    return k;
  }();
  return t;
}

template <class T, class P>
void each(std::string_view key, const std::vector<T>& v, P ok, const char* what) {
  if (v.empty()) fail(key, "grid must not be empty");
  for (const T& x : v) {
    if (!ok(x)) fail(key, what);
  }
}

template <class F>
void nested(std::string_view key, F f) {
  try {
    f();
  } catch (const ValidationError& e) {
    fail(key, e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  each("scenario.nodes", nodes, [](int n) { return n >= 2; }, "needs at least 2 nodes");
  if (!(d_m > 0.0)) fail("scenario.d_m", "must be positive");
  if (!(arena_factor > 0.0)) fail("scenario.arena_factor", "must be positive");
  nested("channel", [&] { channel.validate(); });
  if (!(power.transmit > 0.0 && power.receive > 0.0 && power.idle > 0.0 && power.sleep >= 0.0)) {
    fail("power", "draws must be positive (sleep may be zero)");
  }

  each("sweep.protocols", protocols, [](Protocol) { return true; }, "");
  if (std::set<Protocol>(protocols.begin(), protocols.end()).size() != protocols.size()) {
    fail("sweep.protocols", "lists a protocol twice");
  }
  each("sweep.loads", loads, [](double l) { return l >= 0.0; }, "loads must be non-negative");
  const double frames = duration / pmac.layout.t_f;
  if (!(duration > 0.0) || std::abs(frames - std::round(frames)) > 1e-9) {
    fail("sweep.duration", "must be a positive whole number of frames");
  }
  if (replications < 1) fail("sweep.replications", "must be at least 1");
  if (parallel < 1) fail("sweep.parallel", "must be at least 1");

  each("pmac.h", h, [](double x) { return x >= 1.0; }, "r_g = h * d_m must be at least d_m (h >= 1)");
  each("pmac.q", q, [](double x) { return x >= 1.0; }, "r_a = q * r_g must be at least r_g (q >= 1)");
  nested("pmac", [&] { pmac.validate(); });

  each("dcf.r_c_factor", r_c_factor, [](double x) { return x > 0.0; }, "must be positive");
  nested("dcf", [&] { dcf.validate(); });

  each("psm.atim_window", atim_window, [&](double a) { return a > 0.0 && a < psm.beacon_interval; },
       "ATIM window must lie inside the beacon interval");
  if (!(psm_r_c_factor > 0.0)) fail("psm.r_c_factor", "must be positive");
  nested("psm", [&] { psm.validate(); });

  each("contention.n_prime", n_prime, [](int n) { return n >= 1; }, "must be at least 1");
  each("contention.window", windows, [](int w) { return w >= 1; }, "must be at least 1");
  each("contention.t_cp", t_cp, [](double t) { return t > 0.0; }, "must be positive");
  each("contention.t_cp_curve", t_cp_curve, [](double t) { return t > 0.0; }, "must be positive");
  if (contention_replications < 1) fail("contention.replications", "must be at least 1");
  if (!(t_r > 0.0)) fail("contention.t_r", "must be positive");
}

ExperimentConfig parse_config_text(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = table().find(key);
    if (it == table().end()) throw ValidationError("line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) {
      throw ValidationError("line " + std::to_string(line_no) + ": key '" + std::string(key) + "' given twice");
    }
    if (value.empty()) throw ValidationError("line " + std::to_string(line_no) + ": key '" + std::string(key) + "' has no value");
    it->second.set(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

std::string echo_config(const ExperimentConfig& cfg) {
  std::string out = "# ratios linear, powers in W, times in s, lengths in m\n";
  for (const auto& [name, key] : table()) out += name + " = " + key.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& entry : table()) out.push_back(entry.first);
  return out;
}

}  // namespace pmac
