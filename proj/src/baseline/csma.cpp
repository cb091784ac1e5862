#include "pmac/baseline/csma.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>

#include "pmac/core/error.hpp"

namespace pmac {

void DcfConfig::validate() const {
  if (!(r_c > 0.0)) throw ValidationError("carrier-sense range must be positive");
  if (cw_min < 1 || cw_max < cw_min) throw ValidationError("contention window bounds must satisfy 1 <= CW_min <= CW_max");
  if (retry_limit < 0) throw ValidationError("retry limit must be non-negative");
}

void PsmConfig::validate() const {
  inner.validate();
  if (!(atim_window > 0.0) || !(atim_window < beacon_interval)) {
    throw ValidationError("ATIM window must lie strictly inside the beacon interval");
  }
}

namespace {

enum class Frame : std::uint8_t { rts, cts, data, ack, atim, atim_ack };
// Lower value runs first among events at the same instant.
enum class Ev : std::uint8_t { tx_end, timeout, nav_end, beacon, atim_end, respond, arrival, fire };

struct Event {
  std::int64_t t = 0;
  Ev kind = Ev::fire;
  std::uint64_t seq = 0;
  int node = 0;
  std::uint64_t gen = 0;
  int tx = -1;
  Frame frame = Frame::rts;
  int peer = -1;
  std::uint64_t packet = 0;

  bool operator>(const Event& o) const {
    if (t != o.t) return t > o.t;
    if (kind != o.kind) return kind > o.kind;
    return seq > o.seq;
  }
};

enum class Wait : std::uint8_t { none, cts, ack, atim_ack };

struct NodeState {
  std::deque<std::uint64_t> queue;
  bool contending = false;
  int backoff = 0;
  std::int64_t idle_since = 0;
  std::int64_t fire_time = -1;
  std::uint64_t gen = 0;
  int cw = 15;
  int retries = 0;
  Wait wait = Wait::none;
  std::uint64_t wait_gen = 0;
  bool transmitting = false;
  int busy = 0;
  std::int64_t nav_until = 0;
  RadioMode mode = RadioMode::idle;
  std::int64_t mode_since = 0;
  bool asleep = false;
  bool announced = false;
  bool awake_marked = false;
  std::uint64_t last_delivered = 0;
  bool any_delivered = false;
};

struct Tx {
  int src = 0;
  int dst = 0;
  Frame frame = Frame::rts;
  std::int64_t start = 0;
  std::int64_t end = 0;
  bool dst_ok = true;
  double min_dst = std::numeric_limits<double>::infinity();
  std::vector<double> min_all;  // control frames only: worst SINR seen by every node
  std::uint64_t packet = 0;
};

class CsmaEngine {
 public:
  CsmaEngine(const CsmaRun& run, const DcfConfig& dcf, const PsmConfig* psm)
      : run_(run), cfg_(dcf), psm_(psm), cm_(*run.channel), tm_(dcf.timing), n_(run.scenario->size()) {
    dcf.validate();
    if (psm_) psm_->validate();
    run.scenario->validate();
    cm_.validate();
    duration_us_ = static_cast<std::int64_t>(std::llround(run.duration * 1e6));
    const auto& pos = run.scenario->nodes;
    gain_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
    sensed_by_.assign(static_cast<std::size_t>(n_), {});
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        if (i == j) continue;
        const double d = std::max(distance(pos[i], pos[j]), 1e-3);
        gain_[idx(i, j)] = path_gain(d, cm_);
        if (d <= cfg_.r_c) sensed_by_[static_cast<std::size_t>(i)].push_back(j);
      }
    }
    nodes_.resize(static_cast<std::size_t>(n_));
    for (auto& s : nodes_) s.cw = cfg_.cw_min;
    interf_.assign(static_cast<std::size_t>(n_), 0.0);
    result_.ledger = RadioLedger(static_cast<std::size_t>(n_), run.power);
    for (int i = 0; i < n_; ++i) result_.ledger.set_transmit_draw(static_cast<std::size_t>(i), transmit_draw(cm_.p_d));
    rng_ = CounterRng(run.seed, 7);
    if (psm_) {
      bi_us_ = static_cast<std::int64_t>(std::llround(psm_->beacon_interval * 1e6));
      atim_us_ = static_cast<std::int64_t>(std::llround(psm_->atim_window * 1e6));
    }
  }

  SimResult run() {
    for (const Arrival& a : generate_traffic(run_.scenario->links, run_.load, run_.duration, run_.seed)) {
      const auto t = static_cast<std::int64_t>(std::ceil(a.time * 1e6));
      push({t, Ev::arrival, 0, a.source});
    }
    if (psm_) {
      for (std::int64_t b = 0; b < duration_us_; b += bi_us_) {
        push({b, Ev::beacon, 0, 0});
        push({b + atim_us_, Ev::atim_end, 0, 0});
      }
    }
    while (!events_.empty()) {
      const Event e = events_.top();
      if (e.t >= duration_us_) break;
      events_.pop();
      now_ = e.t;
      dispatch(e);
    }
    now_ = duration_us_;
    for (int i = 0; i < n_; ++i) flush_mode(i);
    const EnergyReport energy = account_energy(result_.ledger, duration_us_);
    result_.metrics = metrics_from_counts(counts_, energy.total, run_.duration);
    return std::move(result_);
  }

 private:
  [[nodiscard]] std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }
  NodeState& node(int i) { return nodes_[static_cast<std::size_t>(i)]; }

  void push(Event e) {
    e.seq = seq_++;
    events_.push(e);
  }

  int airtime(Frame f) const {
    switch (f) {
      case Frame::rts: return tm_.rts;
      case Frame::cts: return tm_.cts;
      case Frame::data: return tm_.data;
      case Frame::ack: return tm_.ack;
      case Frame::atim: return tm_.atim;
      case Frame::atim_ack: return tm_.atim_ack;
    }
    return 0;
  }
  double power(Frame f) const { return f == Frame::data ? cm_.p_d : cm_.p_s; }
  double threshold(Frame f) const { return f == Frame::data ? cm_.gamma_d : cm_.gamma_s; }
  static bool is_control(Frame f) { return f == Frame::rts || f == Frame::cts; }

  /// Time from the start of an RTS (or DATA without RTS/CTS) to the end of the ACK timeout.
  int exchange_us() const {
    const int core = tm_.data + tm_.sifs + tm_.ack + tm_.slot;
    return cfg_.rts_cts ? tm_.rts + tm_.sifs + tm_.cts + tm_.sifs + core : core;
  }

  // ---- radio modes --------------------------------------------------------
  void flush_mode(int i) {
    NodeState& s = node(i);
    result_.ledger.add(static_cast<std::size_t>(i), s.mode, now_ - s.mode_since);
    s.mode_since = now_;
  }
  void update_mode(int i) {
    NodeState& s = node(i);
    const RadioMode m = s.asleep        ? RadioMode::sleep
                        : s.transmitting ? RadioMode::transmit
                        : s.busy > 0     ? RadioMode::receive
                                         : RadioMode::idle;
    if (m == s.mode) return;
    flush_mode(i);
    s.mode = m;
  }

  // ---- carrier sense and backoff ------------------------------------------
  bool medium_idle(int i) const {
    const NodeState& s = nodes_[static_cast<std::size_t>(i)];
    return s.busy == 0 && s.nav_until <= now_ && !s.transmitting;
  }

  void freeze(int i) {
    NodeState& s = node(i);
    s.idle_since = -1;
    if (!s.contending || s.fire_time < 0) return;
    // A node whose counter expires within one slot cannot have sensed the
    // new carrier yet and transmits anyway.
    if (s.fire_time - now_ < tm_.slot) return;
    const std::int64_t count_start = s.fire_time - static_cast<std::int64_t>(s.backoff) * tm_.slot;
    if (now_ > count_start) s.backoff -= static_cast<int>((now_ - count_start) / tm_.slot);
    s.backoff = std::max(0, s.backoff);
    s.fire_time = -1;
    ++s.gen;
  }

  void on_idle(int i) {
    NodeState& s = node(i);
    s.idle_since = now_;
    resume(i);
  }

  void resume(int i) {
    NodeState& s = node(i);
    if (!s.contending || s.fire_time >= 0 || s.asleep || s.wait != Wait::none || !medium_idle(i)) return;
    const std::int64_t start = std::max(now_, s.idle_since + tm_.difs);
    s.fire_time = start + static_cast<std::int64_t>(s.backoff) * tm_.slot;
    ++s.gen;
    Event e{s.fire_time, Ev::fire, 0, i};
    e.gen = s.gen;
    push(e);
  }

  void start_contention(int i) {
    NodeState& s = node(i);
    if (s.contending || s.wait != Wait::none || s.queue.empty() || s.asleep) return;
    s.contending = true;
    s.backoff = static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(s.cw)));
    s.fire_time = -1;
    resume(i);
  }

  void stop_contention(int i) {
    NodeState& s = node(i);
    s.contending = false;
    s.fire_time = -1;
    ++s.gen;
  }

  // ---- PSM phases -----------------------------------------------------------
  [[nodiscard]] std::int64_t bi_start() const { return psm_ ? (now_ / bi_us_) * bi_us_ : 0; }
  [[nodiscard]] bool in_atim() const { return psm_ && now_ - bi_start() < atim_us_; }

  /// PSM gating for a node whose backoff just expired.
  bool may_start(int i) const {
    if (!psm_) return true;
    const NodeState& s = nodes_[static_cast<std::size_t>(i)];
    if (in_atim()) {
      return now_ + tm_.atim + tm_.sifs + tm_.atim_ack + tm_.slot <= bi_start() + atim_us_;
    }
    return s.announced && now_ + exchange_us() <= bi_start() + bi_us_;
  }

  bool may_contend(int i) const {
    if (!psm_) return true;
    const NodeState& s = nodes_[static_cast<std::size_t>(i)];
    if (s.asleep) return false;
    return in_atim() ? !s.announced : s.announced;
  }

  // ---- transmissions --------------------------------------------------------
  void start_tx(int src, int dst, Frame f, std::uint64_t packet) {
    NodeState& s = node(src);
    freeze(src);
    s.transmitting = true;
    update_mode(src);
    const double p = power(f);

    for (int k : active_) {
      Tx& t = txs_[static_cast<std::size_t>(k)];
      if (t.dst == src) t.dst_ok = false;
      if (!t.min_all.empty()) t.min_all[static_cast<std::size_t>(src)] = 0.0;
    }
    for (int m = 0; m < n_; ++m) {
      if (m != src) interf_[static_cast<std::size_t>(m)] += p * gain_[idx(src, m)];
    }

    int k;
    if (!free_.empty()) {
      k = free_.back();
      free_.pop_back();
    } else {
      k = static_cast<int>(txs_.size());
      txs_.emplace_back();
    }
    Tx& t = txs_[static_cast<std::size_t>(k)];
    t.src = src;
    t.dst = dst;
    t.frame = f;
    t.start = now_;
    t.end = now_ + airtime(f);
    t.dst_ok = !node(dst).transmitting && !node(dst).asleep;
    t.min_dst = std::numeric_limits<double>::infinity();
    t.packet = packet;
    t.min_all.clear();
    if (is_control(f)) t.min_all.assign(static_cast<std::size_t>(n_), std::numeric_limits<double>::infinity());
    active_.push_back(k);
    for (int a : active_) refresh_sinr(txs_[static_cast<std::size_t>(a)]);

    for (int m : sensed_by_[static_cast<std::size_t>(src)]) {
      NodeState& ms = node(m);
      const bool was_idle = medium_idle(m);
      ++ms.busy;
      if (was_idle) freeze(m);
      update_mode(m);
    }
    Event e{t.end, Ev::tx_end, 0, src};
    e.tx = k;
    push(e);
  }

  void refresh_sinr(Tx& t) {
    const double sp = power(t.frame);
    const double sig = sp * gain_[idx(t.src, t.dst)];
    const double own = sig;
    const double i_dst = std::max(0.0, interf_[static_cast<std::size_t>(t.dst)] - own);
    t.min_dst = std::min(t.min_dst, sig / (cm_.n0 + i_dst));
    if (t.min_all.empty()) return;
    for (int m = 0; m < n_; ++m) {
      if (m == t.src) continue;
      const double s = sp * gain_[idx(t.src, m)];
      const double i_m = std::max(0.0, interf_[static_cast<std::size_t>(m)] - s);
      double& slot = t.min_all[static_cast<std::size_t>(m)];
      slot = node(m).transmitting ? 0.0 : std::min(slot, s / (cm_.n0 + i_m));
    }
  }

  void end_tx(int k) {
    Tx t = txs_[static_cast<std::size_t>(k)];
    active_.erase(std::find(active_.begin(), active_.end(), k));
    free_.push_back(k);
    const double p = power(t.frame);
    if (active_.empty()) {
      std::fill(interf_.begin(), interf_.end(), 0.0);
    } else {
      for (int m = 0; m < n_; ++m) {
        if (m != t.src) interf_[static_cast<std::size_t>(m)] -= p * gain_[idx(t.src, m)];
      }
    }
    NodeState& s = node(t.src);
    s.transmitting = false;
    update_mode(t.src);
    for (int m : sensed_by_[static_cast<std::size_t>(t.src)]) {
      NodeState& ms = node(m);
      --ms.busy;
      update_mode(m);
      if (medium_idle(m) && ms.busy == 0) on_idle(m);
    }
    if (medium_idle(t.src)) on_idle(t.src);

    const bool ok = t.dst_ok && !node(t.dst).asleep && t.min_dst >= threshold(t.frame);
    if (is_control(t.frame)) set_nav(t);
    switch (t.frame) {
      case Frame::rts: {
        NodeState& d = node(t.dst);
        if (ok && d.wait == Wait::none && d.nav_until <= now_ && !d.transmitting) {
          schedule_response(t.dst, t.src, Frame::cts, t.packet);
        }
        break;
      }
      case Frame::cts: {
        NodeState& d = node(t.dst);
        if (ok && d.wait == Wait::cts) {
          ++d.wait_gen;
          d.wait = Wait::none;
          schedule_response(t.dst, t.src, Frame::data, t.packet);
          d.wait = Wait::ack;
        }
        break;
      }
      case Frame::data: {
        ++counts_.sent;
        if (run_.record_trace) result_.trace.push_back({t.start, t.src, t.dst, EventKind::data_sent, 0, t.packet});
        if (ok) {
          NodeState& src = node(t.src);
          if (!src.any_delivered || t.packet > src.last_delivered) {
            src.any_delivered = true;
            src.last_delivered = t.packet;
            ++counts_.delivered;
            counts_.delivered_distance += run_.scenario->links[static_cast<std::size_t>(t.src)].distance;
          }
          if (run_.record_trace) result_.trace.push_back({t.end, t.src, t.dst, EventKind::data_delivered, 0, t.packet});
          schedule_response(t.dst, t.src, Frame::ack, t.packet);
        } else {
          ++counts_.collided;
          if (run_.record_trace) result_.trace.push_back({t.end, t.src, t.dst, EventKind::data_collided, 0, t.packet});
        }
        break;
      }
      case Frame::ack: {
        NodeState& d = node(t.dst);
        if (ok && d.wait == Wait::ack) {
          ++d.wait_gen;
          succeed(t.dst);
        } else if (!ok && run_.record_trace) {
          result_.trace.push_back({t.end, t.src, t.dst, EventKind::ack_lost, 0, t.packet});
        }
        break;
      }
      case Frame::atim: {
        NodeState& d = node(t.dst);
        if (ok && !d.transmitting) schedule_response(t.dst, t.src, Frame::atim_ack, t.packet);
        break;
      }
      case Frame::atim_ack: {
        NodeState& d = node(t.dst);
        if (ok && d.wait == Wait::atim_ack) {
          ++d.wait_gen;
          d.wait = Wait::none;
          d.announced = true;
          d.cw = cfg_.cw_min;
          node(t.src).awake_marked = true;
        }
        break;
      }
    }
  }

  void set_nav(const Tx& t) {
    const std::int64_t rest = t.frame == Frame::rts
                                  ? tm_.sifs + tm_.cts + tm_.sifs + tm_.data + tm_.sifs + tm_.ack
                                  : tm_.sifs + tm_.data + tm_.sifs + tm_.ack;
    const std::int64_t until = t.end + rest;
    for (int m = 0; m < n_; ++m) {
      if (m == t.src || m == t.dst) continue;
      NodeState& ms = node(m);
      if (ms.asleep || t.min_all[static_cast<std::size_t>(m)] < cm_.gamma_s || until <= ms.nav_until) continue;
      const bool was_idle = medium_idle(m);
      ms.nav_until = until;
      if (was_idle) freeze(m);
      push({until, Ev::nav_end, 0, m});
    }
  }

  void schedule_response(int from, int to, Frame f, std::uint64_t packet) {
    Event e{now_ + tm_.sifs, Ev::respond, 0, from};
    e.frame = f;
    e.peer = to;
    e.packet = packet;
    push(e);
    if (f == Frame::data) arm_timeout(from, tm_.sifs + tm_.data + tm_.sifs + tm_.ack + tm_.slot);
  }

  void arm_timeout(int i, std::int64_t after) {
    NodeState& s = node(i);
    ++s.wait_gen;
    Event e{now_ + after, Ev::timeout, 0, i};
    e.gen = s.wait_gen;
    push(e);
  }

  void succeed(int i) {
    NodeState& s = node(i);
    s.wait = Wait::none;
    if (!s.queue.empty()) s.queue.pop_front();
    s.retries = 0;
    s.cw = cfg_.cw_min;
    if (may_contend(i)) start_contention(i);
  }

  void fail(int i) {
    NodeState& s = node(i);
    const bool atim = s.wait == Wait::atim_ack;
    s.wait = Wait::none;
    if (!atim && ++s.retries > cfg_.retry_limit) {
      if (!s.queue.empty()) s.queue.pop_front();
      ++result_.dropped;
      s.retries = 0;
      s.cw = cfg_.cw_min;
    } else {
      s.cw = std::min(2 * s.cw + 1, cfg_.cw_max);
    }
    if (may_contend(i)) start_contention(i);
  }

  // ---- event dispatch -------------------------------------------------------
  void dispatch(const Event& e) {
    switch (e.kind) {
      case Ev::arrival: {
        NodeState& s = node(e.node);
        const std::uint64_t id = (static_cast<std::uint64_t>(e.node) << 40) | next_packet_[e.node]++;
        s.queue.push_back(id);
        if (may_contend(e.node)) start_contention(e.node);
        break;
      }
      case Ev::fire: {
        NodeState& s = node(e.node);
        if (e.gen != s.gen || !s.contending || s.fire_time != now_) break;
        s.fire_time = -1;
        if (s.transmitting || s.wait != Wait::none || !may_start(e.node) || s.queue.empty()) {
          // Counter is spent; wait for the next opportunity with a zero backoff.
          s.backoff = 0;
          if (!s.transmitting && s.wait == Wait::none && !psm_) resume(e.node);
          break;
        }
        s.contending = false;
        const int dst = run_.scenario->links[static_cast<std::size_t>(e.node)].destination;
        const std::uint64_t pkt = s.queue.front();
        if (psm_ && in_atim()) {
          start_tx(e.node, dst, Frame::atim, pkt);
          s.wait = Wait::atim_ack;
          arm_timeout(e.node, tm_.atim + tm_.sifs + tm_.atim_ack + tm_.slot);
        } else if (cfg_.rts_cts) {
          start_tx(e.node, dst, Frame::rts, pkt);
          s.wait = Wait::cts;
          arm_timeout(e.node, tm_.rts + tm_.sifs + tm_.cts + tm_.slot);
        } else {
          start_tx(e.node, dst, Frame::data, pkt);
          s.wait = Wait::ack;
          arm_timeout(e.node, tm_.data + tm_.sifs + tm_.ack + tm_.slot);
        }
        break;
      }
      case Ev::tx_end: end_tx(e.tx); break;
      case Ev::respond: {
        NodeState& s = node(e.node);
        if (s.transmitting || s.asleep) break;
        start_tx(e.node, e.peer, e.frame, e.packet);
        break;
      }
      case Ev::timeout: {
        NodeState& s = node(e.node);
        if (e.gen != s.wait_gen || s.wait == Wait::none) break;
        fail(e.node);
        break;
      }
      case Ev::nav_end: {
        NodeState& s = node(e.node);
        if (s.nav_until == now_ && s.busy == 0 && !s.transmitting) on_idle(e.node);
        break;
      }
      case Ev::beacon: {
        for (int i = 0; i < n_; ++i) {
          NodeState& s = node(i);
          s.announced = false;
          s.awake_marked = false;
          if (s.asleep) {
            s.asleep = false;
            update_mode(i);
            s.idle_since = now_;
          }
          stop_contention(i);
          s.wait = Wait::none;
          s.cw = cfg_.cw_min;
          start_contention(i);
        }
        break;
      }
      case Ev::atim_end: {
        for (int i = 0; i < n_; ++i) {
          NodeState& s = node(i);
          stop_contention(i);
          if (s.announced || s.awake_marked) {
            if (s.announced) start_contention(i);
          } else {
            s.wait = Wait::none;
            s.asleep = true;
            update_mode(i);
          }
        }
        break;
      }
    }
  }

  const CsmaRun& run_;
  DcfConfig cfg_;
  const PsmConfig* psm_;
  ChannelModel cm_;
  CsmaTiming tm_;
  int n_;
  std::int64_t duration_us_ = 0;
  std::int64_t bi_us_ = 0;
  std::int64_t atim_us_ = 0;
  std::vector<double> gain_;
  std::vector<std::vector<int>> sensed_by_;
  std::vector<NodeState> nodes_;
  std::vector<double> interf_;
  std::vector<Tx> txs_;
  std::vector<int> active_;
  std::vector<int> free_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  std::int64_t now_ = 0;
  CounterRng rng_{0};
  Counters counts_;
  SimResult result_;
  std::vector<std::uint64_t> next_packet_ = std::vector<std::uint64_t>(static_cast<std::size_t>(n_), 0);
};

}  // namespace

SimResult run_dcf(const CsmaRun& run, const DcfConfig& cfg) { return CsmaEngine(run, cfg, nullptr).run(); }

SimResult run_psm(const CsmaRun& run, const PsmConfig& cfg) { return CsmaEngine(run, cfg.inner, &cfg).run(); }

TuneResult tune_best(Scheme scheme, const std::vector<double>& grid, const std::vector<Scenario>& scenarios,
                     const ChannelModel& cm, const PowerTable& power, double load, double duration,
                     std::uint64_t seed, const DcfConfig& base_dcf, const PsmConfig& base_psm) {
  if (grid.empty()) throw ValidationError("tuning grid must not be empty");
  if (scenarios.empty()) throw ValidationError("tuning needs at least one scenario");
  TuneResult out;
  double best = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    TunePoint pt;
    pt.value = grid[g];
    int with_energy = 0;
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
      CsmaRun run{&scenarios[s], &cm, power, load, duration, seed + s, false};
      SimResult r;
      if (scheme == Scheme::dcf) {
        DcfConfig c = base_dcf;
        c.r_c = grid[g];
        r = run_dcf(run, c);
      } else {
        PsmConfig c = base_psm;
        c.atim_window = grid[g];
        r = run_psm(run, c);
      }
      pt.throughput += r.metrics.throughput;
      pt.collision_rate += r.metrics.collision_rate;
      if (r.metrics.energy_per_packet) {
        pt.energy_per_packet += *r.metrics.energy_per_packet;
        ++with_energy;
      }
      pt.runs.push_back(r.metrics);
    }
    const double k = static_cast<double>(scenarios.size());
    pt.throughput /= k;
    pt.collision_rate /= k;
    if (with_energy > 0) pt.energy_per_packet /= with_energy;
    if (pt.throughput > best) {
      best = pt.throughput;
      out.best_index = g;
      out.best_value = grid[g];
    }
    out.points.push_back(std::move(pt));
  }
  return out;
}

}  // namespace pmac
