#include "vamuon/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#ifndef VAMUON_BUILD_ID
#define VAMUON_BUILD_ID "unknown"
#endif

namespace vamuon {

namespace {

std::string full_digits(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<Matrix> collect_weights(const std::vector<ParamSlot>& slots) {
  std::vector<Matrix> out;
  out.reserve(slots.size());
  for (const ParamSlot& s : slots) out.push_back(s.weights);
  return out;
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg) {
  cfg.validate();
  const Problem problem = make_problem(cfg.problem);

  RunState state;
  if (!cfg.resume_from.empty()) {
    state = load_checkpoint(cfg.resume_from);
    if (state.slots.size() != problem.layout().size()) {
      throw ConfigError("checkpoint layout does not match the configured problem");
    }
    if (state.step >= cfg.steps) {
      throw ConfigError("checkpoint step is at or beyond run.steps");
    }
  } else {
    state.slots = partition_params(problem.layout());
    const std::vector<Matrix> init = problem.initial_params();
    for (std::size_t i = 0; i < state.slots.size(); ++i) {
      state.slots[i].weights = init[i];
    }
  }

  RunResult result;
  for (std::int64_t t = state.step + 1; t <= cfg.steps; ++t) {
    const auto tick = std::chrono::steady_clock::now();
    const double eta = schedule_eta(cfg.schedule, cfg.optimizer.eta, t, cfg.steps);

    const std::vector<Matrix> params = collect_weights(state.slots);
    const double loss = evaluate_loss(problem, params);
    if (!std::isfinite(loss)) {
      std::ostringstream os;
      os << "non-finite loss at step " << t << " (eta=" << eta << ")";
      throw NumericalError(os.str());
    }

    std::vector<Matrix> grads = sample_gradient(problem, params, t);
    const double grad_norm = clip_gradients(grads, cfg.clip_norm);

    double update_sq = 0.0;
    for (std::size_t i = 0; i < state.slots.size(); ++i) {
      const StepResult sr = optimizer_step(state.slots[i], grads[i], cfg.optimizer, eta);
      update_sq += sr.update_norm * sr.update_norm;
      if (sr.skipped) ++result.summary.skipped_updates;
    }
    const auto tock = std::chrono::steady_clock::now();

    if (t % cfg.log_every == 0 || t == cfg.steps) {
      RunRecord rec;
      rec.step = t;
      rec.eta = eta;
      rec.train_loss = loss;
      rec.grad_norm = grad_norm;
      rec.update_norm = std::sqrt(update_sq);
      rec.wall_ms = std::chrono::duration<double, std::milli>(tock - tick).count();
      result.records.push_back(rec);
    }
    if (t == cfg.checkpoint_at) {
      save_checkpoint(cfg.checkpoint_path, RunState{t, state.slots});
    }
  }
  state.step = cfg.steps;

  const double final_loss = evaluate_loss(problem, collect_weights(state.slots));
  if (!std::isfinite(final_loss)) {
    throw NumericalError("non-finite final loss");
  }
  result.summary.final_loss = final_loss;
  result.summary.steps = cfg.steps;
  result.summary.best_loss = final_loss;
  for (const RunRecord& r : result.records) {
    result.summary.best_loss = std::min(result.summary.best_loss, r.train_loss);
  }
  if (cfg.loss_threshold) {
    for (const RunRecord& r : result.records) {
      if (r.train_loss <= *cfg.loss_threshold) {
        result.summary.steps_to_threshold = r.step;
        break;
      }
    }
  }
  result.final_state = std::move(state);
  return result;
}

std::string records_to_csv(const std::vector<RunRecord>& records) {
  std::ostringstream os;
  os << "step,eta,train_loss,grad_norm,update_norm,wall_ms\n";
  for (const RunRecord& r : records) {
    os << r.step << ',' << full_digits(r.eta) << ',' << full_digits(r.train_loss) << ','
       << full_digits(r.grad_norm) << ',' << full_digits(r.update_norm) << ','
       << full_digits(r.wall_ms) << '\n';
  }
  return os.str();
}

void write_metrics_csv(const std::string& path, const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("write_metrics_csv: no records");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write metrics file: " + path);
  out << records_to_csv(records);
}

std::string summary_to_json(const RunConfig& cfg, const RunSummary& summary) {
  nlohmann::json j;
  j["config"] = render_config(cfg);
  j["build"] = VAMUON_BUILD_ID;
  j["summary"]["final_loss"] = summary.final_loss;
  j["summary"]["best_loss"] = summary.best_loss;
  j["summary"]["steps"] = summary.steps;
  j["summary"]["skipped_updates"] = summary.skipped_updates;
  if (summary.steps_to_threshold) {
    j["summary"]["steps_to_threshold"] = *summary.steps_to_threshold;
  } else {
    j["summary"]["steps_to_threshold"] = nullptr;
  }
  return j.dump(2);
}

void write_summary_json(const std::string& path, const RunConfig& cfg,
                        const RunSummary& summary) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write summary file: " + path);
  out << summary_to_json(cfg, summary) << '\n';
}

namespace {

int worker_cap() {
  if (const char* env = std::getenv("BENCH_MAX_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void apply_sweep_value(RunConfig& cfg, const std::string& param, double value) {
  if (param == "gamma") {
    cfg.optimizer.gamma = value;
  } else if (param == "eta") {
    cfg.optimizer.eta = value;
  } else if (param == "beta") {
    cfg.optimizer.beta = value;
  } else if (param == "lambda") {
    cfg.optimizer.lambda = value;
  } else {
    throw ConfigError("unsupported sweep parameter: " + param);
  }
}

}  // namespace

std::vector<SweepEntry> sweep_experiment(const RunConfig& base, const std::string& param,
                                         const std::vector<double>& values,
                                         const std::string& out_dir) {
  if (values.empty()) throw ConfigError("sweep requires at least one value");
  {
    RunConfig probe = base;  // reject bad parameter names before spawning work
    apply_sweep_value(probe, param, values[0]);
  }
  std::filesystem::create_directories(out_dir);

  std::vector<SweepEntry> entries(values.size());
  std::vector<std::exception_ptr> errors(values.size());
  std::atomic<std::size_t> next{0};

  const auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= values.size()) return;
      try {
        RunConfig cfg = base;
        apply_sweep_value(cfg, param, values[i]);

        char tag[64];
        std::snprintf(tag, sizeof(tag), "%s=%g", param.c_str(), values[i]);
        const std::filesystem::path dir = std::filesystem::path(out_dir) / tag;
        std::filesystem::create_directories(dir);
        cfg.out_dir = dir.string();

        const RunResult result = run_experiment(cfg);
        write_metrics_csv((dir / "metrics.csv").string(), result.records);
        write_summary_json((dir / "summary.json").string(), cfg, result.summary);

        entries[i] = SweepEntry{values[i], result.summary, dir.string()};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const int workers = std::min<int>(worker_cap(), static_cast<int>(values.size()));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& th : pool) th.join();

  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return entries;
}

}  // namespace vamuon
