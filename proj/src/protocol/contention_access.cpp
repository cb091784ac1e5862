#include "pmac/protocol/contention_access.hpp"

#include <algorithm>

#include "pmac/core/error.hpp"

namespace pmac {

ContentionOutcome contention_access(std::span<const ContentionRequest> requests, const ContentionTiming& timing,
                                    double r_c, const ChannelModel& cm, CounterRng& rng, double monitor_range) {
  if (timing.mini_slot_us <= 0 || timing.request_us <= 0 || timing.period_us < 0) {
    throw ValidationError("contention timing must be positive");
  }
  const std::size_t n = requests.size();
  ContentionOutcome out;
  out.delivered.assign(n, false);
  out.start_us.assign(n, -1);

  std::vector<std::vector<std::size_t>> sensed(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (requests[i].window < 1) throw ValidationError("contention window must be at least 1");
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && distance(requests[i].position, requests[j].position) <= r_c) sensed[i].push_back(j);
    }
  }
  std::vector<std::uint64_t> counter(n);
  for (std::size_t i = 0; i < n; ++i) counter[i] = rng.uniform_int(static_cast<std::uint64_t>(requests[i].window));

  const int ts = timing.mini_slot_us;
  const int tr = timing.request_us;
  auto active_at = [&](std::size_t j, int t) { return out.start_us[j] >= 0 && out.start_us[j] <= t && t < out.start_us[j] + tr; };

  std::vector<std::size_t> firing;
  for (int t = 0; t < timing.period_us; t += ts) {
    firing.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (out.start_us[i] >= 0) continue;
      const bool busy = std::any_of(sensed[i].begin(), sensed[i].end(), [&](std::size_t j) { return active_at(j, t); });
      if (busy) continue;
      if (counter[i] == 0) {
        firing.push_back(i);
      } else {
        --counter[i];
      }
    }
    for (std::size_t i : firing) {
      // A request that cannot finish inside the period is held back.
      if (t + ts + tr <= timing.period_us) {
        out.start_us[i] = t + ts;
      } else {
        out.start_us[i] = -2;
      }
    }
  }
  for (int& s : out.start_us) s = std::max(s, -1);

  for (std::size_t i = 0; i < n; ++i) {
    const int s = out.start_us[i];
    if (s < 0) continue;
    const Position rx = requests[i].coordinator;
    const double signal = cm.p_s * path_gain(std::max(distance(requests[i].position, rx), 1e-6), cm);
    std::vector<int> checkpoints{s};
    for (std::size_t j = 0; j < n; ++j) {
      if (out.start_us[j] > s && out.start_us[j] < s + tr) checkpoints.push_back(out.start_us[j]);
    }
    bool ok = true;
    for (int cp : checkpoints) {
      double interference = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || !active_at(j, cp)) continue;
        interference += cm.p_s * path_gain(std::max(distance(requests[j].position, rx), 1e-6), cm);
      }
      if (signal / (cm.n0 + interference) < cm.gamma_s) {
        ok = false;
        break;
      }
    }
    out.delivered[i] = ok;
  }

  // Per-coordinator view up to the last start it could hear.
  // Overlapping requests merge into one busy period: a success when it holds
  // a single request, a collision otherwise. Idle mini-slots exclude busy time
  // and the mini-slot just before each busy period.
  const double monitor = monitor_range > 0.0 ? monitor_range : r_c;
  std::map<CellId, Position> coordinators;
  for (const ContentionRequest& r : requests) coordinators.emplace(r.cell, r.coordinator);
  for (const auto& [cell, pos] : coordinators) {
    ContentionObservation obs;
    std::vector<int> heard;
    for (std::size_t j = 0; j < n; ++j) {
      if (out.start_us[j] >= 0 && distance(requests[j].position, pos) <= monitor) heard.push_back(out.start_us[j]);
    }
    if (heard.empty()) {
      obs.idle = 1;
      out.observed[cell] = obs;
      continue;
    }
    std::sort(heard.begin(), heard.end());
    std::vector<std::pair<int, int>> busy;  // [start, end)
    std::vector<int> period_starts;
    int members = 0;
    for (int s : heard) {
      if (!busy.empty() && s < busy.back().second) {
        busy.back().second = std::max(busy.back().second, s + tr);
        ++members;
        continue;
      }
      if (!busy.empty()) (members == 1 ? obs.success : obs.collision) += 1;
      busy.emplace_back(s, s + tr);
      period_starts.push_back(s);
      members = 1;
    }
    (members == 1 ? obs.success : obs.collision) += 1;
    std::size_t k = 0;
    for (int t = 0; t < heard.back(); t += ts) {
      while (k < busy.size() && busy[k].second <= t) ++k;
      const bool on_air = k < busy.size() && busy[k].first <= t;
      const bool firing = std::binary_search(period_starts.begin(), period_starts.end(), t + ts);
      if (!on_air && !firing) ++obs.idle;
    }
    out.observed[cell] = obs;
  }
  return out;
}

}  // namespace pmac
