#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "vamuon/optimizers.hpp"
#include "vamuon/problems.hpp"
#include "vamuon/schedules.hpp"

namespace vamuon {

/// Raised for malformed or invalid configs; the CLI maps it to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a run diverges (non-finite loss); CLI exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ProblemSpec problem;
  OptimizerConfig optimizer;
  ScheduleSpec schedule;
  std::int64_t steps = 100;
  double clip_norm = 1.0;  // <= 0 disables clipping
  std::int64_t log_every = 10;
  std::uint64_t master_seed = 0;
  std::string out_dir = ".";
  std::optional<double> loss_threshold;
  std::int64_t checkpoint_at = 0;  // 0: no checkpoint
  std::string checkpoint_path;
  std::string resume_from;

  void validate() const;
};

/// Parses the flat `section.key = value` config text. Unknown keys are
/// errors; defaults (beta=0.95, epsilon=1e-8, K=5, gamma=10, clip=1.0) fill
/// omitted fields. `origin` labels error messages.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

RunConfig load_config(const std::string& path);

/// Canonical key-value rendering of a config; parse_config_text() on the
/// result reproduces the config exactly (doubles rendered with 17
/// significant digits).
std::string render_config(const RunConfig& cfg);

}  // namespace vamuon
