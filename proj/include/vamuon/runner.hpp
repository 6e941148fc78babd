#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vamuon/checkpoint.hpp"
#include "vamuon/config.hpp"

namespace vamuon {

struct RunRecord {
  std::int64_t step = 0;
  double eta = 0.0;
  double train_loss = 0.0;
  double grad_norm = 0.0;
  double update_norm = 0.0;
  double wall_ms = 0.0;  // excluded from determinism contracts
};

struct RunSummary {
  double final_loss = 0.0;
  double best_loss = 0.0;
  std::optional<std::int64_t> steps_to_threshold;
  std::int64_t steps = 0;
  std::int64_t skipped_updates = 0;
};

struct RunResult {
  std::vector<RunRecord> records;
  RunSummary summary;
  RunState final_state;
};

/// Runs the optimizer-vs-problem loop. Deterministic given (config,
/// master_seed) apart from wall_ms. Throws NumericalError on non-finite
/// loss. Honors resume_from / checkpoint_at.
RunResult run_experiment(const RunConfig& cfg);

/// CSV with header step,eta,train_loss,grad_norm,update_norm,wall_ms and
/// 17-significant-digit numeric rendering.
std::string records_to_csv(const std::vector<RunRecord>& records);

void write_metrics_csv(const std::string& path, const std::vector<RunRecord>& records);

/// JSON summary with the canonical config echo, a build identifier, and
/// summary statistics.
std::string summary_to_json(const RunConfig& cfg, const RunSummary& summary);

void write_summary_json(const std::string& path, const RunConfig& cfg,
                        const RunSummary& summary);

struct SweepEntry {
  double value = 0.0;
  RunSummary summary;
  std::string out_dir;
};

/// Runs one experiment per value of the swept optimizer parameter (gamma,
/// eta, beta, or lambda), writing per-value metrics/summary files under
/// out_dir. Sweep entries run in parallel, capped by BENCH_MAX_WORKERS.
std::vector<SweepEntry> sweep_experiment(const RunConfig& base, const std::string& param,
                                         const std::vector<double>& values,
                                         const std::string& out_dir);

}  // namespace vamuon
