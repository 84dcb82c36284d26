#include "codessm/training/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "codessm/numerics/errors.hpp"

namespace codessm::training {

std::string to_string(ScheduleKind k) { return k == ScheduleKind::Cosine ? "cosine" : "linear"; }

ScheduleKind schedule_from_string(const std::string& s) {
  if (s == "cosine") return ScheduleKind::Cosine;
  if (s == "linear") return ScheduleKind::Linear;
  throw ConfigError("unknown schedule '" + s + "' (expected cosine or linear)");
}

double lr_schedule(std::uint64_t step, double peak, std::uint64_t warmup_steps, std::uint64_t total_steps,
                   ScheduleKind kind) {
  if (step < warmup_steps) return peak * static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (total_steps <= warmup_steps) return peak;
  const double span = static_cast<double>(total_steps - warmup_steps);
  const double frac = std::min(1.0, static_cast<double>(step - warmup_steps) / span);
  if (kind == ScheduleKind::Cosine) return peak * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
  return peak * (1.0 - frac);
}

}  // namespace codessm::training
