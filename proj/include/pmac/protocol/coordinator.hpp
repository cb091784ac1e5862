#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "pmac/core/channel.hpp"
#include "pmac/core/geometry.hpp"
#include "pmac/protocol/frame.hpp"
#include "pmac/protocol/reservation.hpp"

namespace pmac {

struct DemandEntry {
  NodeId source = 0;
  NodeId destination = 0;
  int pending = 0;
  std::uint64_t seq = 0;  // request arrival order
};

struct SchedulingPacket {
  CellId sender = 0;
  long long frame = 0;
  int slot = 0;
  std::vector<Reservation> reservations;  // own and relayed, frame >= this frame
  std::vector<ReservationId> cancellations;
  std::vector<int> contention_slots;
  int contention_window = 1;
  std::map<NodeId, int> piggyback_slots;  // source -> slot carrying its header
};

/// Read-only view of the network a coordinator schedules against.
struct ScheduleContext {
  const HexCellMap* map = nullptr;
  const ChannelModel* channel = nullptr;
  RadiusMode radius_mode = RadiusMode::exact;
  std::span<const Position> positions;  // indexed by node id
  std::span<const CellId> cell_of;      // indexed by node id
};

struct CoordinatorState {
  CellId id = 0;
  int group = 0;
  Position center;
  double r_a = 0.0;
  std::vector<DemandEntry> demand;
  std::vector<Reservation> schedule;  // knowledge region, current and later frames
  std::vector<ReservationId> pending_cancellations;
  std::set<ReservationId> cancelled;  // never re-admitted once dropped
  std::uint64_t next_seq = 0;
  std::uint64_t unknown_cancellations = 0;

  CoordinatorState() = default;
  CoordinatorState(CellId id, int group, Position center, double r_a)
      : id(id), group(group), center(center), r_a(r_a) {}

  [[nodiscard]] const DemandEntry* find_demand(NodeId source, NodeId destination) const;
  [[nodiscard]] int pending_for(NodeId source) const;
  /// Adds `count` packets to a demand entry, creating it at the back of the queue.
  void add_demand(NodeId source, NodeId destination, int count);
  /// Drops reservations for frames before `frame`.
  void forget_before(long long frame);
};

/// Greedy contention-free slot assignment for the coordinator's scheduling
/// slot in `frame`. Assigned packets leave the demand table.
SchedulingPacket build_schedule(CoordinatorState& st, long long frame, const FrameLayout& layout,
                                const ScheduleContext& ctx, int contention_window = 1);

struct IngestReport {
  int added = 0;
  int duplicates = 0;
  int cancelled = 0;  // removed by the packet's cancellation list
  std::vector<ReservationId> conflicts_lost;  // removed locally and queued for announcement
  std::vector<Reservation> own_dropped;       // own reservations removed, demand restored
};

/// Merge a neighbour's packet into the knowledge region.
IngestReport ingest_neighbor_packet(CoordinatorState& st, const SchedulingPacket& pkt);

/// Replace the (source, destination) demand with the reported pending count.
void piggyback_request(CoordinatorState& st, NodeId source, NodeId destination, int pending);

/// Slots a node keeps its radio on in `frame`.
struct WakeInputs {
  NodeId node = 0;
  int own_scheduling_slot = 0;
  std::vector<int> nearby_scheduling_slots;  // adjacent coordinators within r_a
  bool scheduled_tx = false;
  bool wants_new_tx = false;
};

std::vector<int> node_wake_plan(const WakeInputs& in, long long frame, const SchedulingPacket& own_pkt);

}  // namespace pmac
