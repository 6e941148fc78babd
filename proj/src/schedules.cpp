#include "vamuon/schedules.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vamuon {

std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::warmup_constant: return "warmup_constant";
    case ScheduleKind::cosine_warmup: return "cosine_warmup";
    case ScheduleKind::wsd: return "wsd";
  }
  throw std::logic_error("unknown schedule kind");
}

ScheduleKind schedule_from_string(const std::string& s) {
  if (s == "constant") return ScheduleKind::constant;
  if (s == "warmup_constant") return ScheduleKind::warmup_constant;
  if (s == "cosine_warmup") return ScheduleKind::cosine_warmup;
  if (s == "wsd") return ScheduleKind::wsd;
  throw std::invalid_argument("unknown schedule kind: " + s);
}

void ScheduleSpec::validate(std::int64_t total_steps) const {
  if (warmup_steps < 0) throw std::invalid_argument("schedule.warmup_steps must be >= 0");
  if (warmup_steps > total_steps) {
    throw std::invalid_argument("schedule.warmup_steps must be <= run.steps");
  }
  if (min_eta < 0.0) throw std::invalid_argument("schedule.min_eta must be >= 0");
  if (decay_fraction < 0.0 || decay_fraction > 1.0) {
    throw std::invalid_argument("schedule.decay_fraction must lie in [0,1]");
  }
}

double schedule_eta(const ScheduleSpec& spec, double peak_eta, std::int64_t t,
                    std::int64_t total_steps) {
  if (t < 1 || t > total_steps) {
    throw std::invalid_argument("schedule_eta: step out of range");
  }
  const bool in_warmup = spec.kind != ScheduleKind::constant && t <= spec.warmup_steps;
  if (in_warmup) {
    return peak_eta * static_cast<double>(t) / static_cast<double>(spec.warmup_steps);
  }
  switch (spec.kind) {
    case ScheduleKind::constant:
    case ScheduleKind::warmup_constant:
      return peak_eta;
    case ScheduleKind::cosine_warmup: {
      const auto span = static_cast<double>(total_steps - spec.warmup_steps);
      const double progress =
          span > 0.0 ? static_cast<double>(t - spec.warmup_steps) / span : 1.0;
      return spec.min_eta +
             0.5 * (peak_eta - spec.min_eta) * (1.0 + std::cos(std::numbers::pi * progress));
    }
    case ScheduleKind::wsd: {
      const auto decay_steps =
          static_cast<std::int64_t>(std::llround(spec.decay_fraction * static_cast<double>(total_steps)));
      const std::int64_t decay_start = total_steps - decay_steps;
      if (t <= decay_start) return peak_eta;
      const double progress = static_cast<double>(t - decay_start) / static_cast<double>(decay_steps);
      return peak_eta + (spec.min_eta - peak_eta) * progress;
    }
  }
  throw std::logic_error("unknown schedule kind");
}

}  // namespace vamuon
