#include "pmac/protocol/frame.hpp"

#include <cmath>

#include "pmac/core/error.hpp"

namespace pmac {

void FrameLayout::validate() const {
  if (k < 1) throw ValidationError("frame needs at least one scheduling slot");
  if (contention_slots < 1) throw ValidationError("frame needs at least one contention slot");
  if (slots < k + contention_slots + 1) throw ValidationError("frame has no contention-free slot left");
  if (!(slot_len > 0.0) || std::abs(slot_len * slots - t_f) > 1e-9 * t_f) {
    throw ValidationError("slot length times slot count must equal the frame duration");
  }
}

std::vector<int> FrameLayout::contention_slot_set() const {
  std::vector<int> out;
  for (int s = first_contention_slot(); s <= slots; ++s) out.push_back(s);
  return out;
}

int scheduling_slot_for_frame(int group, long long frame, int k) {
  if (group < 0 || group >= k) throw ValidationError("slot group out of range");
  if (frame < 0) throw ValidationError("frame index must be non-negative");
  return static_cast<int>((group + frame) % k) + 1;
}

}  // namespace pmac
