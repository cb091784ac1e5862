#pragma once

#include <vector>

#include "pmac/core/geometry.hpp"

namespace pmac {

/// Slots are numbered from 1. Scheduling slots come first, contention slots
/// close the frame and everything in between is contention-free.
struct FrameLayout {
  double t_f = 0.1;        // s
  double slot_len = 1e-3;  // s
  int slots = 100;
  int k = kSlotGroups;
  int contention_slots = 2;

  void validate() const;

  friend bool operator==(const FrameLayout&, const FrameLayout&) = default;

  [[nodiscard]] int first_data_slot() const { return k + 1; }
  [[nodiscard]] int last_data_slot() const { return slots - contention_slots; }
  [[nodiscard]] int first_contention_slot() const { return slots - contention_slots + 1; }
  [[nodiscard]] std::vector<int> contention_slot_set() const;
  [[nodiscard]] bool is_scheduling(int slot) const { return slot >= 1 && slot <= k; }
  [[nodiscard]] bool is_data(int slot) const { return slot >= first_data_slot() && slot <= last_data_slot(); }
  [[nodiscard]] bool is_contention(int slot) const { return slot >= first_contention_slot() && slot <= slots; }
};

/// ((group + frame) mod k) + 1
int scheduling_slot_for_frame(int group, long long frame, int k = kSlotGroups);

}  // namespace pmac
