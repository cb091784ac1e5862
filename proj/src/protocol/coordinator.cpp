#include "pmac/protocol/coordinator.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

#include "pmac/core/error.hpp"

namespace pmac {

const DemandEntry* CoordinatorState::find_demand(NodeId source, NodeId destination) const {
  for (const DemandEntry& d : demand) {
    if (d.source == source && d.destination == destination) return &d;
  }
  return nullptr;
}

int CoordinatorState::pending_for(NodeId source) const {
  int n = 0;
  for (const DemandEntry& d : demand) {
    if (d.source == source) n += d.pending;
  }
  return n;
}

void CoordinatorState::add_demand(NodeId source, NodeId destination, int count) {
  if (count <= 0) return;
  for (DemandEntry& d : demand) {
    if (d.source == source && d.destination == destination) {
      d.pending += count;
      return;
    }
  }
  demand.push_back({source, destination, count, next_seq++});
}

void CoordinatorState::forget_before(long long frame) {
  std::erase_if(schedule, [frame](const Reservation& r) { return r.frame < frame; });
  std::erase_if(cancelled, [frame](const ReservationId& id) { return id.frame < frame; });
}

namespace {

bool within(const CoordinatorState& st, const Reservation& r) {
  return distance(r.tx, st.center) <= st.r_a || distance(r.rx.center, st.center) <= st.r_a;
}

}  // namespace

SchedulingPacket build_schedule(CoordinatorState& st, long long frame, const FrameLayout& layout,
                                const ScheduleContext& ctx, int contention_window) {
  const int own_slot = scheduling_slot_for_frame(st.group, frame, layout.k);
  const int first = layout.first_data_slot();
  const int last = layout.last_data_slot();
  const int width = last - first + 1;

  // Reservations already known for this frame and the next, bucketed by slot.
  std::vector<std::vector<const Reservation*>> known[2];
  for (auto& k : known) k.assign(static_cast<std::size_t>(width), {});
  auto bucket_of = [&](long long f, int slot) -> std::vector<const Reservation*>& {
    return known[f - frame][static_cast<std::size_t>(slot - first)];
  };
  for (const Reservation& r : st.schedule) {
    if ((r.frame == frame || r.frame == frame + 1) && r.slot >= first && r.slot <= last) {
      bucket_of(r.frame, r.slot).push_back(&r);
    }
  }

  std::vector<std::size_t> order(st.demand.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const DemandEntry& x = st.demand[a];
    const DemandEntry& y = st.demand[b];
    return x.seq != y.seq ? x.seq < y.seq : x.source < y.source;
  });

  std::vector<std::unique_ptr<Reservation>> made;

  for (std::size_t idx : order) {
    DemandEntry& d = st.demand[idx];
    if (d.pending <= 0) continue;
    const Position src = ctx.positions[static_cast<std::size_t>(d.source)];
    const Position dst = ctx.positions[static_cast<std::size_t>(d.destination)];
    const CellId dst_cell = ctx.cell_of[static_cast<std::size_t>(d.destination)];
    long long target = frame;
    if (dst_cell != st.id) {
      const int dst_slot = scheduling_slot_for_frame(ctx.map->group_of(dst_cell), frame, layout.k);
      if (dst_slot < own_slot) target = frame + 1;
    }
    double radius = 0.0;
    try {
      radius = reserved_radius(distance(src, dst), *ctx.channel, ctx.radius_mode);
    } catch (const InfeasibleLinkError&) {
      continue;
    }
    bool need_header = std::none_of(st.schedule.begin(), st.schedule.end(), [&](const Reservation& r) {
      return r.source == d.source && r.frame == target;
    });
    for (const auto& m : made) {
      if (m->source == d.source && m->frame == target) need_header = false;
    }
    double header_radius = 0.0;
    if (need_header) {
      const double dc = std::max(distance(src, st.center), 1e-6);
      try {
        header_radius = reserved_radius(dc, *ctx.channel, ctx.radius_mode);
      } catch (const InfeasibleLinkError&) {
        header_radius = reserved_radius(dc, *ctx.channel, RadiusMode::approx);
      }
    }

    while (d.pending > 0) {
      Reservation cand;
      cand.source = d.source;
      cand.destination = d.destination;
      cand.tx = src;
      cand.rx = Disc{d.destination, dst, radius};
      if (need_header) cand.header = Disc{coordinator_node(st.id), st.center, header_radius};
      cand.origin = st.id;
      cand.frame = target;
      cand.made_frame = frame;
      cand.announce_slot = own_slot;
      bool placed = false;
      for (int s = first; s <= last && !placed; ++s) {
        cand.slot = s;
        const auto& b = bucket_of(target, s);
        if (std::none_of(b.begin(), b.end(), [&](const Reservation* r) { return interferes(cand, *r); })) {
          made.push_back(std::make_unique<Reservation>(cand));
          bucket_of(target, s).push_back(made.back().get());
          placed = true;
        }
      }
      if (!placed) break;
      --d.pending;
      need_header = false;
    }
  }
  std::erase_if(st.demand, [](const DemandEntry& d) { return d.pending <= 0; });
  for (const auto& m : made) st.schedule.push_back(*m);

  SchedulingPacket pkt;
  pkt.sender = st.id;
  pkt.frame = frame;
  pkt.slot = own_slot;
  for (const Reservation& r : st.schedule) {
    if (r.frame < frame) continue;
    if (r.origin == st.id || within(st, r)) pkt.reservations.push_back(r);
    if (r.origin == st.id && r.frame == frame && r.header) pkt.piggyback_slots[r.source] = r.slot;
  }
  pkt.cancellations = std::move(st.pending_cancellations);
  st.pending_cancellations.clear();
  pkt.contention_slots = layout.contention_slot_set();
  pkt.contention_window = contention_window;
  return pkt;
}

IngestReport ingest_neighbor_packet(CoordinatorState& st, const SchedulingPacket& pkt) {
  IngestReport rep;
  if (pkt.sender == st.id) return rep;

  auto drop = [&](std::size_t i) {
    const Reservation r = st.schedule[i];
    st.schedule.erase(st.schedule.begin() + static_cast<std::ptrdiff_t>(i));
    st.cancelled.insert(r.id());
    if (r.origin == st.id) {
      st.add_demand(r.source, r.destination, 1);
      rep.own_dropped.push_back(r);
    }
  };

  for (const ReservationId& id : pkt.cancellations) {
    auto it = std::find_if(st.schedule.begin(), st.schedule.end(), [&](const Reservation& r) { return r.id() == id; });
    if (it == st.schedule.end()) {
      if (!st.cancelled.contains(id)) ++st.unknown_cancellations;
      st.cancelled.insert(id);
      continue;
    }
    drop(static_cast<std::size_t>(it - st.schedule.begin()));
    ++rep.cancelled;
  }

  for (const Reservation& r : pkt.reservations) {
    if (r.frame < pkt.frame) continue;
    if (st.cancelled.contains(r.id())) continue;
    if (std::any_of(st.schedule.begin(), st.schedule.end(), [&](const Reservation& k) { return k.id() == r.id(); })) {
      ++rep.duplicates;
      continue;
    }
    bool loses = false;
    std::vector<std::size_t> beaten;
    for (std::size_t i = 0; i < st.schedule.size(); ++i) {
      const Reservation& k = st.schedule[i];
      if (!interferes(r, k)) continue;
      if (takes_precedence(k, r)) {
        loses = true;
        break;
      }
      beaten.push_back(i);
    }
    if (loses) {
      st.cancelled.insert(r.id());
      st.pending_cancellations.push_back(r.id());
      rep.conflicts_lost.push_back(r.id());
      continue;
    }
    for (auto it = beaten.rbegin(); it != beaten.rend(); ++it) {
      const ReservationId id = st.schedule[*it].id();
      st.pending_cancellations.push_back(id);
      rep.conflicts_lost.push_back(id);
      drop(*it);
    }
    st.schedule.push_back(r);
    ++rep.added;
  }
  return rep;
}

void piggyback_request(CoordinatorState& st, NodeId source, NodeId destination, int pending) {
  if (pending < 0) throw ValidationError("pending packet count must be non-negative");
  if (source == destination) throw ValidationError("source and destination must differ");
  auto it = std::find_if(st.demand.begin(), st.demand.end(),
                         [&](const DemandEntry& d) { return d.source == source && d.destination == destination; });
  if (pending == 0) {
    if (it != st.demand.end()) st.demand.erase(it);
    return;
  }
  if (it != st.demand.end()) {
    it->pending = pending;
  } else {
    st.demand.push_back({source, destination, pending, st.next_seq++});
  }
}

std::vector<int> node_wake_plan(const WakeInputs& in, long long frame, const SchedulingPacket& own_pkt) {
  std::vector<int> awake{in.own_scheduling_slot};
  if (in.scheduled_tx) awake.insert(awake.end(), in.nearby_scheduling_slots.begin(), in.nearby_scheduling_slots.end());
  for (const Reservation& r : own_pkt.reservations) {
    if (r.frame == frame && r.involves(in.node)) awake.push_back(r.slot);
  }
  if (in.wants_new_tx) awake.insert(awake.end(), own_pkt.contention_slots.begin(), own_pkt.contention_slots.end());
  std::sort(awake.begin(), awake.end());
  awake.erase(std::unique(awake.begin(), awake.end()), awake.end());
  return awake;
}

}  // namespace pmac
