#include "pmac/sim/pmac_engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include "pmac/analytics/contention.hpp"
#include "pmac/core/error.hpp"
#include "pmac/core/rng.hpp"
#include "pmac/protocol/contention_access.hpp"
#include "pmac/protocol/coordinator.hpp"

namespace pmac {

void PmacConfig::validate() const {
  layout.validate();
  if (!(h > 0.0)) throw ValidationError("h must be positive");
  if (q < 1.0 || q > 2.0) throw ValidationError("q must lie in [1, 2]");
  if (initial_window < 1) throw ValidationError("initial contention window must be at least 1");
  if (!(estimator_weight > 0.0) || estimator_weight > 1.0) throw ValidationError("estimator weight must lie in (0, 1]");
  if (request_staleness < 1) throw ValidationError("request staleness must be at least one frame");
  if (preamble_us < 0 || entry_bits < 1 || !(control_rate > 0.0)) throw ValidationError("bad scheduling packet sizing");
  if (!(p_s_min > 0.0) || p_s_max < p_s_min) throw ValidationError("P_s range must be positive and ordered");
  const long long slot_us = std::llround(layout.slot_len * 1e6);
  if (data_us < 1 || sifs_us < 0 || ack_us < 1 || data_us + sifs_us + ack_us > slot_us) {
    throw ValidationError("data exchange does not fit in one slot");
  }
}

namespace {

constexpr std::uint64_t kNone = std::numeric_limits<std::uint64_t>::max();

struct NodeState {
  CellId cell = 0;
  NodeId dest = 0;
  double link_d = 0.0;
  std::vector<CellId> nearby;  // other coordinators within r_a
  std::deque<std::uint64_t> queue;
  std::uint64_t next_seq = 0;
  std::vector<Reservation> known;  // own reservations for this frame and the next
  std::set<ReservationId> heard_cancelled;
  bool heard_own = false;  // decoded its coordinator's packet this frame
  int window = 1;
  bool dirty = false;  // demand changed since the last report
  long long last_report = -1'000'000;
  std::uint64_t last_delivered = kNone;
};

struct Coordinator {
  CoordinatorState st;
  double p_s = 0.1;
  bool has_nodes = false;
  ContenderEstimator estimator;
  int window = 32;
  SchedulingPacket last_packet;
  std::vector<std::uint8_t> header_slot;  // slot -> expects a piggybacked header
};

struct SlotTx {
  NodeId source = 0;
  const Reservation* res = nullptr;
  std::uint64_t packet = 0;
};

class PmacEngine {
 public:
  PmacEngine(const PmacRun& run, const PmacConfig& cfg)
      : run_(run),
        cfg_(cfg),
        sc_(*run.scenario),
        cm_(*run.channel),
        map_(build_hex_tiling(sc_.arena.width, sc_.arena.height, cfg.h * sc_.d_m)),
        n_(sc_.nodes.size()),
        slot_us_(static_cast<int>(std::llround(cfg.layout.slot_len * 1e6))),
        frame_us_(static_cast<std::int64_t>(slot_us_) * cfg.layout.slots) {}

  SimResult run();

 private:
  std::size_t coord_row(CellId c) const { return n_ + static_cast<std::size_t>(c); }
  Coordinator& coord(CellId c) { return coords_[static_cast<std::size_t>(c)]; }
  void admit(std::int64_t t_us);
  void mark(std::size_t row, int slot, int tx_us, int rx_us);
  void close_slot();
  void emit(std::int64_t t, NodeId node, NodeId peer, EventKind kind, int slot, std::uint64_t packet);
  bool decodes(Position rx, NodeId tx, const TransmissionVector& txs, double gamma) const;
  static bool transmits_in(const NodeState& ns, NodeId self, long long frame);
  int pending_after(const NodeState& ns, NodeId self, long long frame, int slot) const;
  int window_for(int n_hat);
  bool check_sinr(Position rx, NodeId tx, const TransmissionVector& txs, double gamma) const;

  void setup();
  void assign_scheduling_power();
  void scheduling_slot(long long frame, int slot);
  void data_slot(long long frame, int slot);
  void contention_period(long long frame);
  void audit_frame(long long frame);

  const PmacRun& run_;
  const PmacConfig& cfg_;
  const Scenario& sc_;
  const ChannelModel& cm_;
  HexCellMap map_;
  std::size_t n_;
  int slot_us_;
  std::int64_t frame_us_;
  double r_a_ = 0.0;

  std::vector<NodeState> nodes_;
  std::vector<Coordinator> coords_;
  std::vector<CellId> cell_of_;
  ScheduleContext ctx_;
  std::vector<Arrival> arrivals_;
  std::size_t next_arrival_ = 0;
  std::map<int, int> window_cache_;
  CounterRng contention_rng_{0};

  RadioLedger ledger_;
  std::vector<std::uint8_t> marked_;              // row touched in the current slot
  std::vector<std::vector<std::uint8_t>> awake_;  // row -> slot -> awake, this frame
  std::vector<std::uint8_t> contended_;
  std::vector<std::uint8_t> had_tx_;
  std::int64_t frame_start_ = 0;
  SimResult out_;
  Counters counts_;
};

void PmacEngine::emit(std::int64_t t, NodeId node, NodeId peer, EventKind kind, int slot, std::uint64_t packet) {
  if (run_.record_trace) out_.trace.push_back({t, node, peer, kind, slot, packet});
}

bool PmacEngine::decodes(Position rx, NodeId tx, const TransmissionVector& txs, double gamma) const {
  return sinr(rx, tx, txs, cm_) >= gamma;
}

// Independent re-summation used by the adjudication audit.
bool PmacEngine::check_sinr(Position rx, NodeId tx, const TransmissionVector& txs, double gamma) const {
  double signal = 0.0;
  double noise = cm_.n0;
  for (const ActiveTransmitter& a : txs.active()) {
    const double dx = rx.x - a.position.x;
    const double dy = rx.y - a.position.y;
    const double p = a.power * cm_.c * std::pow(std::sqrt(dx * dx + dy * dy), -cm_.alpha);
    (a.node == tx ? signal : noise) += p;
  }
  return signal / noise >= gamma;
}

void PmacEngine::admit(std::int64_t t_us) {
  while (next_arrival_ < arrivals_.size() && arrivals_[next_arrival_].time * 1e6 < static_cast<double>(t_us)) {
    const NodeId src = arrivals_[next_arrival_].source;
    NodeState& ns = nodes_[static_cast<std::size_t>(src)];
    ns.queue.push_back((static_cast<std::uint64_t>(src) << 40) | ns.next_seq++);
    ns.dirty = true;
    ++next_arrival_;
  }
}

void PmacEngine::mark(std::size_t row, int slot, int tx_us, int rx_us) {
  if (marked_[row]) return;
  tx_us = std::min(tx_us, slot_us_);
  rx_us = std::min(rx_us, slot_us_ - tx_us);
  ledger_.add(row, RadioMode::transmit, tx_us);
  ledger_.add(row, RadioMode::receive, rx_us);
  ledger_.add(row, RadioMode::idle, slot_us_ - tx_us - rx_us);
  marked_[row] = 1;
  awake_[row][static_cast<std::size_t>(slot)] = 1;
}

void PmacEngine::close_slot() {
  for (std::size_t row = 0; row < marked_.size(); ++row) {
    if (!marked_[row]) ledger_.add(row, RadioMode::sleep, slot_us_);
    marked_[row] = 0;
  }
}

bool PmacEngine::transmits_in(const NodeState& ns, NodeId self, long long frame) {
  return std::any_of(ns.known.begin(), ns.known.end(),
                     [&](const Reservation& r) { return r.frame == frame && r.source == self; });
}

// Packets still without a reservation once the one sent in `slot` (if any)
// leaves the queue.
int PmacEngine::pending_after(const NodeState& ns, NodeId self, long long frame, int slot) const {
  long long reserved = 0;
  for (const Reservation& r : ns.known) {
    if (r.source != self) continue;
    if ((r.frame == frame && r.slot > slot) || r.frame == frame + 1) ++reserved;
  }
  const long long in_flight = slot > 0 ? 1 : 0;
  return static_cast<int>(std::max<long long>(0, static_cast<long long>(ns.queue.size()) - in_flight - reserved));
}

int PmacEngine::window_for(int n_hat) {
  n_hat = std::max(n_hat, 1);
  const auto it = window_cache_.find(n_hat);
  if (it != window_cache_.end()) return it->second;
  const int w = optimize_window(n_hat, cfg_.layout.contention_slots * cfg_.layout.slot_len);
  window_cache_.emplace(n_hat, w);
  return w;
}

void PmacEngine::setup() {
  const double r_g = map_.r_g();
  r_a_ = cfg_.q * r_g;
  for (const Link& l : sc_.links) {
    if (l.distance > r_g + 1e-9) throw ValidationError("r_g is shorter than the longest link");
  }
  cell_of_.resize(n_);
  nodes_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    cell_of_[i] = map_.assign(sc_.nodes[i]);
    NodeState& ns = nodes_[i];
    ns.cell = cell_of_[i];
    ns.dest = sc_.links[i].destination;
    ns.link_d = sc_.links[i].distance;
  }
  coords_.resize(map_.size());
  for (const HexCell& c : map_.cells()) {
    Coordinator& co = coord(c.id);
    co.st = CoordinatorState(c.id, c.group, c.center, r_a_);
    co.estimator = ContenderEstimator(cfg_.estimator_weight);
    co.window = cfg_.initial_window;
    co.header_slot.assign(static_cast<std::size_t>(cfg_.layout.slots) + 1, 0);
  }
  for (std::size_t i = 0; i < n_; ++i) coord(cell_of_[i]).has_nodes = true;
  assign_scheduling_power();
  for (std::size_t i = 0; i < n_; ++i) {
    for (const HexCell& c : map_.cells()) {
      if (c.id != cell_of_[i] && distance(sc_.nodes[i], c.center) <= r_a_) nodes_[i].nearby.push_back(c.id);
    }
  }
  ctx_.map = &map_;
  ctx_.channel = &cm_;
  ctx_.radius_mode = cfg_.radius_mode;
  ctx_.positions = sc_.nodes;
  ctx_.cell_of = cell_of_;

  const std::size_t rows = n_ + coords_.size();
  ledger_ = RadioLedger(rows, run_.power);
  for (std::size_t c = 0; c < coords_.size(); ++c) ledger_.set_transmit_draw(n_ + c, transmit_draw(coords_[c].p_s));
  marked_.assign(rows, 0);
  awake_.assign(rows, std::vector<std::uint8_t>(static_cast<std::size_t>(cfg_.layout.slots) + 1, 0));
  contended_.assign(n_, 0);
  had_tx_.assign(n_, 0);
  arrivals_ = generate_traffic(sc_.links, run_.load, run_.duration, run_.seed);
  contention_rng_ = CounterRng(run_.seed, 3);
  out_.coordinators = coords_.size();

  for (const HexCell& a : map_.cells()) {
    for (const HexCell& b : map_.cells()) {
      if (a.id < b.id && a.group == b.group && map_.hex_distance(a.id, b.id) <= 2) ++out_.audit.coloring;
    }
  }
}

// Coordinators of one group share their scheduling slot. Starting from the
// floor, each raises its power to the least value that lets every in-cell
// node and adjacent coordinator decode it against the rest of the group,
// until the powers settle or hit the ceiling.
void PmacEngine::assign_scheduling_power() {
  auto gain = [&](Position a, Position b) { return path_gain(std::max(distance(a, b), 1e-6), cm_); };
  for (int g = 0; g < cfg_.layout.k; ++g) {
    std::vector<CellId> group;
    for (const HexCell& c : map_.cells()) {
      if (c.group == g) group.push_back(c.id);
    }
    std::vector<std::vector<Position>> targets(group.size());
    for (std::size_t a = 0; a < group.size(); ++a) {
      for (CellId nb : map_.neighbors(group[a])) targets[a].push_back(map_.cell(nb).center);
      for (std::size_t i = 0; i < n_; ++i) {
        if (cell_of_[i] == group[a]) targets[a].push_back(sc_.nodes[i]);
      }
    }
    std::vector<double> p(group.size(), cfg_.p_s_min);
    for (int iter = 0; iter < 200; ++iter) {
      std::vector<double> next(group.size());
      double change = 0.0;
      for (std::size_t a = 0; a < group.size(); ++a) {
        const Position from = map_.cell(group[a]).center;
        double need = cfg_.p_s_min;
        for (const Position& t : targets[a]) {
          double interference = cm_.n0;
          for (std::size_t b = 0; b < group.size(); ++b) {
            if (b != a) interference += p[b] * gain(map_.cell(group[b]).center, t);
          }
          need = std::max(need, cm_.gamma_s * interference / gain(from, t));
        }
        next[a] = std::clamp(need, cfg_.p_s_min, cfg_.p_s_max);
        change = std::max(change, std::abs(next[a] - p[a]));
      }
      p = std::move(next);
      if (change < 1e-12) break;
    }
    for (std::size_t a = 0; a < group.size(); ++a) coord(group[a]).p_s = p[a];
  }
}

void PmacEngine::scheduling_slot(long long frame, int slot) {
  const std::int64_t t0 = frame_start_ + static_cast<std::int64_t>(slot - 1) * slot_us_;
  admit(t0);
  std::map<CellId, int> airtime;
  TransmissionVector tv;
  for (const HexCell& c : map_.cells()) {
    if (scheduling_slot_for_frame(c.group, frame, cfg_.layout.k) != slot) continue;
    Coordinator& co = coord(c.id);
    co.last_packet = build_schedule(co.st, frame, cfg_.layout, ctx_, co.window);
    std::set<std::tuple<NodeId, NodeId, long long>> links;
    for (const Reservation& r : co.last_packet.reservations) links.emplace(r.source, r.destination, r.frame);
    const double bits = static_cast<double>(cfg_.entry_bits) *
                        static_cast<double>(links.size() + co.last_packet.cancellations.size());
    int us = cfg_.preamble_us + static_cast<int>(std::ceil(bits / cfg_.control_rate * 1e6));
    if (us > slot_us_) {
      ++out_.scheduling_overflow;
      us = slot_us_;
    }
    airtime[c.id] = us;
    tv.add(coordinator_node(c.id), c.center, co.p_s);
    emit(t0, coordinator_node(c.id), coordinator_node(c.id), EventKind::control_sent, slot, 0);
  }

  // Same-colour senders are at least three cells apart, so a listener has at
  // most one adjacent sender per slot.
  for (const HexCell& cell : map_.cells()) {
    const std::size_t row = coord_row(cell.id);
    const auto mine = airtime.find(cell.id);
    if (mine != airtime.end()) {
      mark(row, slot, mine->second, 0);
      continue;
    }
    int rx = 0;
    for (CellId nb : map_.neighbors(cell.id)) {
      const auto it = airtime.find(nb);
      if (it == airtime.end()) continue;
      if (decodes(cell.center, coordinator_node(nb), tv, cm_.gamma_s)) {
        ingest_neighbor_packet(coord(cell.id).st, coord(nb).last_packet);
        rx = it->second;
      } else {
        emit(t0, coordinator_node(nb), coordinator_node(cell.id), EventKind::control_lost, slot, 0);
      }
    }
    mark(row, slot, 0, rx);
  }

  for (std::size_t i = 0; i < n_; ++i) {
    NodeState& ns = nodes_[i];
    const NodeId self = static_cast<NodeId>(i);
    const auto own = airtime.find(ns.cell);
    if (own != airtime.end()) {
      if (!decodes(sc_.nodes[i], coordinator_node(ns.cell), tv, cm_.gamma_s)) {
        emit(t0, coordinator_node(ns.cell), self, EventKind::control_lost, slot, 0);
        mark(i, slot, 0, 0);
        continue;
      }
      const SchedulingPacket& pkt = coord(ns.cell).last_packet;
      ns.known.clear();
      for (const Reservation& r : pkt.reservations) {
        if (r.involves(self) && (r.frame == frame || r.frame == frame + 1) && !ns.heard_cancelled.contains(r.id())) {
          ns.known.push_back(r);
        }
      }
      ns.heard_own = true;
      ns.window = pkt.contention_window;
      if (transmits_in(ns, self, frame)) had_tx_[i] = 1;
      mark(i, slot, 0, own->second);
      continue;
    }
    if (!transmits_in(ns, self, frame)) continue;
    for (CellId c : ns.nearby) {
      const auto it = airtime.find(c);
      if (it == airtime.end()) continue;
      int rx = 0;
      if (decodes(sc_.nodes[i], coordinator_node(c), tv, cm_.gamma_s)) {
        rx = it->second;
        for (const ReservationId& id : coord(c).last_packet.cancellations) {
          ns.heard_cancelled.insert(id);
          std::erase_if(ns.known, [&](const Reservation& r) { return r.id() == id; });
        }
      }
      mark(i, slot, 0, rx);
      break;
    }
  }
  close_slot();
}

void PmacEngine::data_slot(long long frame, int slot) {
  const std::int64_t t0 = frame_start_ + static_cast<std::int64_t>(slot - 1) * slot_us_;
  admit(t0);

  std::vector<SlotTx> txs;
  TransmissionVector tv;
  std::vector<std::uint8_t> listening(n_, 0);  // destination expecting this slot
  for (std::size_t i = 0; i < n_; ++i) {
    const NodeState& ns = nodes_[i];
    const NodeId self = static_cast<NodeId>(i);
    for (const Reservation& r : ns.known) {
      if (r.frame != frame || r.slot != slot) continue;
      if (r.source == self) {
        if (tv.contains(self)) continue;
        if (!ns.queue.empty()) {
          txs.push_back({self, &r, ns.queue.front()});
          tv.add(self, sc_.nodes[i], cm_.p_d);
        } else {
          mark(i, slot, 0, 0);
        }
      } else {
        listening[i] = 1;
      }
    }
  }

  std::vector<std::uint8_t> ok(txs.size(), 0);
  TransmissionVector acks;
  for (std::size_t k = 0; k < txs.size(); ++k) {
    const SlotTx& t = txs[k];
    const NodeId dst = t.res->destination;
    const std::size_t d = static_cast<std::size_t>(dst);
    ++counts_.sent;
    emit(t0, t.source, dst, EventKind::data_sent, slot, t.packet);
    bool expects = false;
    if (listening[d]) {
      const NodeState& dn = nodes_[d];
      expects = std::any_of(dn.known.begin(), dn.known.end(), [&](const Reservation& r) { return r.id() == t.res->id(); });
    }
    const Position at = sc_.nodes[d];
    // A destination busy with its own transmission cannot receive.
    const bool busy = tv.contains(dst);
    const bool pass = !busy && decodes(at, t.source, tv, cm_.gamma_d);
    if (!busy && pass != check_sinr(at, t.source, tv, cm_.gamma_d)) ++out_.audit.adjudication;
    if (expects && pass) {
      ok[k] = 1;
      acks.add(dst, at, cm_.p_d);
    }
  }

  for (std::size_t k = 0; k < txs.size(); ++k) {
    const SlotTx& t = txs[k];
    NodeState& ns = nodes_[static_cast<std::size_t>(t.source)];
    const NodeId dst = t.res->destination;
    const std::size_t d = static_cast<std::size_t>(dst);

    if (t.res->header) {
      const Reservation& r = *t.res;
      const int pending = pending_after(ns, t.source, frame, slot);
      ns.dirty = false;
      ns.last_report = frame;
      Coordinator& co = coord(r.origin);
      if (co.header_slot[static_cast<std::size_t>(slot)] && decodes(co.st.center, t.source, tv, cm_.gamma_d)) {
        piggyback_request(co.st, t.source, r.destination, pending);
      }
    }

    int src_rx = 0;
    if (ok[k]) {
      if (t.packet != ns.last_delivered) {
        ++counts_.delivered;
        counts_.delivered_distance += ns.link_d;
        ns.last_delivered = t.packet;
      }
      emit(t0 + cfg_.data_us, t.source, dst, EventKind::data_delivered, slot, t.packet);
      mark(d, slot, cfg_.ack_us, cfg_.data_us);
      if (decodes(sc_.nodes[static_cast<std::size_t>(t.source)], dst, acks, cm_.gamma_s)) {
        ns.queue.pop_front();
        src_rx = cfg_.ack_us;
      } else {
        emit(t0 + cfg_.data_us + cfg_.sifs_us + cfg_.ack_us, dst, t.source, EventKind::ack_lost, slot, t.packet);
        ns.dirty = true;
      }
    } else {
      ++counts_.collided;
      emit(t0 + cfg_.data_us, t.source, dst, EventKind::data_collided, slot, t.packet);
      ns.dirty = true;
      if (listening[d]) mark(d, slot, 0, cfg_.data_us);
    }
    mark(static_cast<std::size_t>(t.source), slot, cfg_.data_us, src_rx);
  }

  for (std::size_t i = 0; i < n_; ++i) {
    if (listening[i] && !marked_[i]) mark(i, slot, 0, 0);
  }
  for (Coordinator& co : coords_) {
    if (!co.header_slot[static_cast<std::size_t>(slot)]) continue;
    int rx = 0;
    for (const SlotTx& t : txs) {
      if (t.res->header && t.res->origin == co.st.id) rx = cfg_.data_us;
    }
    mark(coord_row(co.st.id), slot, 0, rx);
  }
  close_slot();
}

void PmacEngine::contention_period(long long frame) {
  const int first = cfg_.layout.first_contention_slot();
  const std::int64_t t0 = frame_start_ + static_cast<std::int64_t>(first - 1) * slot_us_;
  admit(t0);

  std::vector<ContentionRequest> reqs;
  for (std::size_t i = 0; i < n_; ++i) {
    NodeState& ns = nodes_[i];
    const NodeId self = static_cast<NodeId>(i);
    if (ns.queue.empty() || !ns.heard_own || transmits_in(ns, self, frame)) continue;
    if (!ns.dirty && frame - ns.last_report < cfg_.request_staleness) continue;
    const int pending = pending_after(ns, self, frame, 0);
    if (pending <= 0) continue;
    ContentionRequest r;
    r.node = self;
    r.position = sc_.nodes[i];
    r.cell = ns.cell;
    r.coordinator = coord(ns.cell).st.center;
    r.window = std::max(ns.window, 1);
    r.entry = DemandEntry{self, ns.dest, pending, 0};
    reqs.push_back(r);
    contended_[i] = 1;
  }

  ContentionTiming timing;
  timing.period_us = cfg_.layout.contention_slots * slot_us_;
  timing.mini_slot_us = static_cast<int>(std::llround(kMiniSlot * 1e6));
  timing.request_us = static_cast<int>(std::llround(kRequestTime * 1e6));
  CounterRng rng = contention_rng_.split(static_cast<std::uint64_t>(frame));
  const ContentionOutcome outcome = contention_access(reqs, timing, 2.0 * map_.r_g(), cm_, rng, map_.r_g());

  std::vector<int> tx_us(n_, 0);
  std::map<CellId, int> heard;
  for (std::size_t k = 0; k < reqs.size(); ++k) {
    const ContentionRequest& r = reqs[k];
    NodeState& ns = nodes_[static_cast<std::size_t>(r.node)];
    if (outcome.start_us[k] < 0) continue;
    ++out_.requests_sent;
    tx_us[static_cast<std::size_t>(r.node)] = timing.request_us;
    ns.dirty = false;
    ns.last_report = frame;
    const std::int64_t t = t0 + outcome.start_us[k];
    if (outcome.delivered[k]) {
      ++out_.requests_delivered;
      heard[r.cell] += timing.request_us;
      piggyback_request(coord(r.cell).st, r.node, r.entry.destination, r.entry.pending);
      emit(t, r.node, coordinator_node(r.cell), EventKind::request_delivered, first, 0);
    } else {
      emit(t, r.node, coordinator_node(r.cell), EventKind::request_lost, first, 0);
    }
  }

  const int idle_slots = timing.period_us / timing.mini_slot_us;
  for (Coordinator& co : coords_) {
    if (!co.has_nodes) continue;
    const auto it = outcome.observed.find(co.st.id);
    const ContentionObservation obs = it != outcome.observed.end() ? it->second : ContentionObservation{idle_slots, 0, 0};
    co.estimator.observe(obs.idle, obs.success, obs.collision, co.window);
    if (cfg_.adaptive_window && co.estimator.primed()) co.window = window_for(co.estimator.estimate());
  }

  // Spread per-period airtimes over the contention slots, slot by slot.
  for (int s = first; s <= cfg_.layout.slots; ++s) {
    for (std::size_t k = 0; k < reqs.size(); ++k) {
      const std::size_t i = static_cast<std::size_t>(reqs[k].node);
      const int take = std::min(tx_us[i], slot_us_);
      tx_us[i] -= take;
      mark(i, s, take, 0);
    }
    for (Coordinator& co : coords_) {
      if (!co.has_nodes) continue;
      int& h = heard[co.st.id];
      const int take = std::min(h, slot_us_);
      h -= take;
      mark(coord_row(co.st.id), s, 0, take);
    }
    close_slot();
  }
}

void PmacEngine::audit_frame(long long frame) {
  ++out_.audit.frames;
  const int k = cfg_.layout.k;
  std::vector<int> seen(static_cast<std::size_t>(k) + 1, 0);
  for (int g = 0; g < k; ++g) ++seen[static_cast<std::size_t>(scheduling_slot_for_frame(g, frame, k))];
  for (int s = 1; s <= k; ++s) {
    if (seen[static_cast<std::size_t>(s)] != 1) ++out_.audit.rotation;
  }
  if (frame + 1 >= k) {
    for (int g = 0; g < k; ++g) {
      std::vector<int> over(static_cast<std::size_t>(k) + 1, 0);
      for (long long f = frame + 1 - k; f <= frame; ++f) ++over[static_cast<std::size_t>(scheduling_slot_for_frame(g, f, k))];
      for (int s = 1; s <= k; ++s) {
        if (over[static_cast<std::size_t>(s)] != 1) ++out_.audit.rotation;
      }
    }
  }

  for (const Coordinator& co : coords_) {
    std::map<int, std::vector<const Reservation*>> by_slot;
    for (const Reservation& r : co.st.schedule) {
      if (r.frame == frame) by_slot[r.slot].push_back(&r);
    }
    for (const auto& [slot, rs] : by_slot) {
      for (std::size_t a = 0; a < rs.size(); ++a) {
        for (std::size_t b = a + 1; b < rs.size(); ++b) {
          if (interferes(*rs[a], *rs[b])) ++out_.audit.knowledge_conflicts;
        }
      }
    }
  }

  const std::vector<int> contention = cfg_.layout.contention_slot_set();
  for (std::size_t i = 0; i < n_; ++i) {
    const NodeState& ns = nodes_[i];
    WakeInputs in;
    in.node = static_cast<NodeId>(i);
    in.own_scheduling_slot = scheduling_slot_for_frame(map_.group_of(ns.cell), frame, k);
    for (CellId c : ns.nearby) in.nearby_scheduling_slots.push_back(scheduling_slot_for_frame(map_.group_of(c), frame, k));
    in.scheduled_tx = had_tx_[i] != 0;
    in.wants_new_tx = contended_[i] != 0;
    SchedulingPacket view;
    view.reservations = ns.known;
    view.contention_slots = contention;
    std::vector<std::uint8_t> allowed(static_cast<std::size_t>(cfg_.layout.slots) + 1, 0);
    for (int s : node_wake_plan(in, frame, view)) allowed[static_cast<std::size_t>(s)] = 1;
    for (int s = 1; s <= cfg_.layout.slots; ++s) {
      if (awake_[i][static_cast<std::size_t>(s)] && !allowed[static_cast<std::size_t>(s)]) ++out_.audit.wake;
    }
  }
  for (const Coordinator& co : coords_) {
    const std::size_t row = coord_row(co.st.id);
    for (int s = 1; s <= cfg_.layout.slots; ++s) {
      if (!awake_[row][static_cast<std::size_t>(s)]) continue;
      const bool role = cfg_.layout.is_scheduling(s) || co.header_slot[static_cast<std::size_t>(s)] ||
                        (cfg_.layout.is_contention(s) && co.has_nodes);
      if (!role) ++out_.audit.wake;
    }
  }
}

SimResult PmacEngine::run() {
  setup();
  const long long frames = std::llround(run_.duration / cfg_.layout.t_f);
  for (long long frame = 0; frame < frames; ++frame) {
    frame_start_ = frame * frame_us_;
    for (auto& row : awake_) std::fill(row.begin(), row.end(), 0);
    std::fill(contended_.begin(), contended_.end(), 0);
    std::fill(had_tx_.begin(), had_tx_.end(), 0);
    for (Coordinator& co : coords_) {
      co.st.forget_before(frame);
      std::fill(co.header_slot.begin(), co.header_slot.end(), 0);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      NodeState& ns = nodes_[i];
      std::erase_if(ns.known, [&](const Reservation& r) { return r.frame < frame; });
      std::erase_if(ns.heard_cancelled, [&](const ReservationId& id) { return id.frame < frame; });
      ns.heard_own = false;
      if (transmits_in(ns, static_cast<NodeId>(i), frame)) had_tx_[i] = 1;
    }

    for (int s = 1; s <= cfg_.layout.k; ++s) scheduling_slot(frame, s);
    for (Coordinator& co : coords_) {
      for (const Reservation& r : co.st.schedule) {
        if (r.origin == co.st.id && r.frame == frame && r.header) co.header_slot[static_cast<std::size_t>(r.slot)] = 1;
      }
    }
    for (int s = cfg_.layout.first_data_slot(); s <= cfg_.layout.last_data_slot(); ++s) data_slot(frame, s);
    contention_period(frame);
    audit_frame(frame);
  }

  const std::int64_t duration_us = frames * frame_us_;
  for (std::size_t row = 0; row < ledger_.size(); ++row) {
    if (ledger_.total_us(row) != duration_us) ++out_.audit.ledger;
  }
  double energy = 0.0;
  if (out_.audit.ledger == 0) energy = account_energy(ledger_, duration_us).total;
  out_.metrics = metrics_from_counts(counts_, energy, run_.duration);
  out_.ledger = std::move(ledger_);
  return std::move(out_);
}

}  // namespace

SimResult run_pmac(const PmacRun& run, const PmacConfig& cfg) {
  if (run.scenario == nullptr || run.channel == nullptr) throw ValidationError("PMAC run needs a scenario and a channel");
  cfg.validate();
  run.scenario->validate();
  run.channel->validate();
  if (run.load < 0.0) throw ValidationError("load must be non-negative");
  const double frames = run.duration / cfg.layout.t_f;
  if (!(run.duration > 0.0) || std::abs(frames - std::round(frames)) > 1e-9 * frames) {
    throw ValidationError("duration must be a positive whole number of frames");
  }
  PmacEngine engine(run, cfg);
  return engine.run();
}

}  // namespace pmac
