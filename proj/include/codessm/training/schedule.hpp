#pragma once

#include <cstdint>
#include <string>

namespace codessm::training {

enum class ScheduleKind { Cosine, Linear };

std::string to_string(ScheduleKind k);
ScheduleKind schedule_from_string(const std::string& s);

/// Linear warm-up from 0 to peak over warmup_steps, then cosine or linear
/// decay to 0 at total_steps.
double lr_schedule(std::uint64_t step, double peak, std::uint64_t warmup_steps, std::uint64_t total_steps,
                   ScheduleKind kind);

}  // namespace codessm::training
