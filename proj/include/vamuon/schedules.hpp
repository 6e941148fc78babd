#pragma once

#include <cstdint>
#include <string>

namespace vamuon {

enum class ScheduleKind {
  constant,
  warmup_constant,  // linear warmup, then flat at peak
  cosine_warmup,    // linear warmup, cosine decay to min_eta
  wsd,              // warmup, stable, linear decay over the final fraction
};

std::string to_string(ScheduleKind k);
ScheduleKind schedule_from_string(const std::string& s);

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::constant;
  std::int64_t warmup_steps = 0;
  double min_eta = 0.0;
  double decay_fraction = 0.8;  // wsd: decay starts after this fraction of steps

  void validate(std::int64_t total_steps) const;
};

/// Learning rate for step t in [1, total_steps]; a pure function of its
/// arguments.
double schedule_eta(const ScheduleSpec& spec, double peak_eta, std::int64_t t,
                    std::int64_t total_steps);

}  // namespace vamuon
