// Acceptance suite: twelve behavioral contracts, one pass/fail line each.
// Exits nonzero if any contract fails.

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "vamuon/rng.hpp"
#include "vamuon/runner.hpp"
#include "vamuon/verify.hpp"

using namespace vamuon;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int index, const std::string& title, bool pass, const std::string& detail) {
  std::printf("[%s] %2d. %s — %s\n", pass ? "PASS" : "FAIL", index, title.c_str(),
              detail.c_str());
  if (!pass) ++failures;
}

std::string err_vs_tol(double measured, double tolerance) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "measured %.3e vs tolerance %.3e", measured, tolerance);
  return buf;
}

Matrix random_matrix(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.next_gaussian();
  return m;
}

void criterion_1_variance_recursion() {
  double worst = 0.0;
  bool pass = true;
  for (const double beta : {0.5, 0.9, 0.99}) {
    const CheckReport r = check_variance_recursion(1000, beta, 42);
    worst = std::max(worst, r.measured_error);
    pass = pass && r.pass;
  }
  report(1, "variance recursion v - m^2 = Gamma (beta in {0.5, 0.9, 0.99})", pass,
         err_vs_tol(worst, 1e-12));
}

void criterion_2_sign_form() {
  const CheckReport r = check_adam_sign_form(1000, 0.9, 42);
  report(2, "Adam sign form m/sqrt(v) = sign(m)/sqrt(1 + sigma^2/m^2)", r.pass,
         err_vs_tol(r.measured_error, r.tolerance));
}

void criterion_3_regularized_mle() {
  const CheckReport r = check_regularized_mle(100, 42);
  report(3, "regularized MLE recursions match the numeric minimizer (100 instances)", r.pass,
         err_vs_tol(r.measured_error, r.tolerance));
}

void criterion_4_polar_oracle() {
  const CheckReport gap = check_polar_agreement(200, 64, 100.0, 5, 42);
  const CheckReport range = check_ns_singular_value_range(200, 64, 100.0, 5, 42);
  std::ostringstream os;
  os << "frobenius " << err_vs_tol(gap.measured_error, gap.tolerance) << "; sv deviation "
     << err_vs_tol(range.measured_error, range.tolerance);
  report(4, "Newton-Schulz vs exact polar factor (200 matrices, cond <= 100)",
         gap.pass && range.pass, os.str());
}

void criterion_5_scale_invariance() {
  CounterRng rng = CounterRng::keyed(42, 5);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto rows = static_cast<Eigen::Index>(2 + rng.next_u64() % 31);
    const auto cols = static_cast<Eigen::Index>(2 + rng.next_u64() % 31);
    const Matrix a = random_matrix(rng, rows, cols);
    const Matrix base = newton_schulz(a, 5);
    for (const double c : {1e-3, 2.0, 10.0}) {
      worst = std::max(worst, (newton_schulz(Matrix(c * a), 5) - base).cwiseAbs().maxCoeff());
    }
  }
  report(5, "NS scale invariance for c in {1e-3, 2, 10} (50 matrices)", worst <= 1e-12,
         err_vs_tol(worst, 1e-12));
}

void criterion_6_nesterov_equivalence() {
  const CheckReport r = check_nesterov_equivalence(500, 0.95, 42);
  report(6, "Nesterov lookahead equals Muon's beta*M + G over 500 steps", r.pass,
         err_vs_tol(r.measured_error, r.tolerance));
}

void criterion_7_gamma_limit() {
  const CheckReport r = check_gamma_limit(1e8, 50, 42);
  report(7, "Muon-NSR(gamma = 1e8) matches Muon-VS on noisy 16x16 streams", r.pass,
         err_vs_tol(r.measured_error, r.tolerance));
}

void criterion_8_gradient_oracles() {
  bool pass = true;
  double worst = 0.0;
  for (const ProblemKind kind :
       {ProblemKind::quadratic, ProblemKind::noisy_quadratic, ProblemKind::logistic,
        ProblemKind::lowrank_factorization, ProblemKind::mlp2}) {
    ProblemSpec spec;
    spec.kind = kind;
    spec.rows = 12;
    spec.cols = 10;
    spec.rank = 3;
    spec.samples = 64;
    spec.features = 6;
    spec.hidden = 5;
    spec.outputs = 2;
    spec.condition = 25.0;
    spec.seed = 42;
    const CheckReport r = finite_difference_check(spec, 1e-5);
    pass = pass && r.pass;
    worst = std::max(worst, r.measured_error);
  }
  report(8, "finite-difference check on every problem kind", pass, err_vs_tol(worst, 1e-5));
}

RunConfig noisy_run_config() {
  return parse_config_text(
      "problem.kind = noisy_quadratic\n"
      "problem.rows = 16\nproblem.cols = 16\n"
      "optimizer.variant = muon_nsr\n"
      "optimizer.eta = 0.05\n"
      "run.steps = 60\nrun.log_every = 5\nrun.master_seed = 42\n",
      "<acceptance>");
}

void criterion_9_determinism_and_checkpointing() {
  const fs::path dir = fs::temp_directory_path() / "vamuon_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  RunConfig cfg = noisy_run_config();
  cfg.checkpoint_at = 30;
  cfg.checkpoint_path = (dir / "state.bin").string();

  const RunResult a = run_experiment(cfg);
  const RunResult b = run_experiment(cfg);
  bool identical = a.records.size() == b.records.size();
  for (std::size_t i = 0; identical && i < a.records.size(); ++i) {
    identical = a.records[i].step == b.records[i].step && a.records[i].eta == b.records[i].eta &&
                a.records[i].train_loss == b.records[i].train_loss &&
                a.records[i].grad_norm == b.records[i].grad_norm &&
                a.records[i].update_norm == b.records[i].update_norm;
  }

  const RunState mid = load_checkpoint(cfg.checkpoint_path);
  save_checkpoint((dir / "copy.bin").string(), mid);
  const RunState again = load_checkpoint((dir / "copy.bin").string());
  bool roundtrip = again.step == mid.step && again.slots.size() == mid.slots.size();
  for (std::size_t i = 0; roundtrip && i < mid.slots.size(); ++i) {
    roundtrip = (again.slots[i].weights - mid.slots[i].weights).norm() == 0.0 &&
                (again.slots[i].moments.m - mid.slots[i].moments.m).norm() == 0.0 &&
                (again.slots[i].moments.gamma - mid.slots[i].moments.gamma).norm() == 0.0;
  }

  RunConfig resume = cfg;
  resume.checkpoint_at = 0;
  resume.checkpoint_path.clear();
  resume.resume_from = (dir / "state.bin").string();
  const RunResult tail = run_experiment(resume);
  bool resumed = tail.summary.final_loss == a.summary.final_loss;
  for (std::size_t i = 0; resumed && i < a.final_state.slots.size(); ++i) {
    resumed =
        (a.final_state.slots[i].weights - tail.final_state.slots[i].weights).norm() == 0.0;
  }

  std::ostringstream os;
  os << "repeat runs " << (identical ? "bit-identical" : "DIFFER") << "; checkpoint round-trip "
     << (roundtrip ? "bit-exact" : "LOSSY") << "; resume "
     << (resumed ? "reproduces the full run" : "DIVERGES");
  report(9, "determinism and checkpointing", identical && roundtrip && resumed, os.str());
}

void criterion_10_toy_convergence() {
  bool pass = true;
  std::ostringstream os;
  for (const char* variant : {"muon", "muon_nsr", "muon_vs", "adamw"}) {
    const RunConfig cfg = parse_config_text(
        "problem.kind = quadratic\n"
        "problem.rows = 16\nproblem.cols = 16\n"
        "optimizer.variant = " + std::string(variant) + "\n"
        "optimizer.eta = 0.05\n"
        "run.steps = 500\nrun.log_every = 100\nrun.master_seed = 3\n",
        "<acceptance>");
    const Problem probe = make_problem(cfg.problem);
    const double initial = evaluate_loss(probe, probe.initial_params());
    const RunResult r = run_experiment(cfg);
    const double ratio = initial / std::max(r.summary.final_loss, 1e-300);
    if (ratio < 1e3) pass = false;
    os << variant << " " << std::scientific << ratio << "x; ";
  }
  report(10, "each default optimizer cuts the 16x16 quadratic loss 1e3x in 500 steps", pass,
         os.str() + "required >= 1.0e3x");
}

void criterion_11_gamma_sweep_protocol() {
  const fs::path dir = fs::temp_directory_path() / "vamuon_acceptance_sweep";
  fs::remove_all(dir);
  const RunConfig base = noisy_run_config();
  const std::vector<double> gammas{0.1, 1.0, 10.0, 100.0};
  bool pass = true;
  std::ostringstream os;
  try {
    const std::vector<SweepEntry> entries =
        sweep_experiment(base, "gamma", gammas, dir.string());
    pass = entries.size() == gammas.size();
    std::size_t best = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      pass = pass && std::isfinite(entries[i].summary.final_loss) &&
             fs::exists(fs::path(entries[i].out_dir) / "summary.json") &&
             fs::exists(fs::path(entries[i].out_dir) / "metrics.csv");
      if (entries[i].summary.final_loss < entries[best].summary.final_loss) best = i;
      os << "gamma=" << gammas[i] << " -> " << std::scientific
         << entries[i].summary.final_loss << "; ";
    }
    // Unimodality of the toy curve is reported, not asserted.
    bool unimodal = true;
    bool descending = true;
    for (std::size_t i = 1; i < entries.size(); ++i) {
      const bool drop = entries[i].summary.final_loss < entries[i - 1].summary.final_loss;
      if (drop && !descending) unimodal = false;
      if (!drop) descending = false;
    }
    os << "best gamma=" << gammas[best] << ", curve "
       << (unimodal ? "unimodal" : "not unimodal");
  } catch (const std::exception& e) {
    pass = false;
    os << "sweep failed: " << e.what();
  }
  report(11, "gamma-sweep protocol emits per-gamma summaries", pass, os.str());
}

void criterion_12_reshuffled_degenerate_case() {
  OptimizerConfig muon_cfg;
  muon_cfg.variant = Variant::muon;
  muon_cfg.bias_correction = false;
  OptimizerConfig resh_cfg = muon_cfg;
  resh_cfg.variant = Variant::muon_nsr_reshuffled;
  resh_cfg.gamma = 0.0;

  std::vector<ParamInfo> layout{{"w", {16, 16}, false}};
  std::vector<ParamSlot> a = partition_params(layout);
  std::vector<ParamSlot> b = partition_params(layout);
  a[0].weights = Matrix::Constant(16, 16, 0.5);
  b[0].weights = a[0].weights;

  CounterRng rng = CounterRng::keyed(42, 12);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Matrix g = random_matrix(rng, 16, 16);
    optimizer_step(a[0], g, muon_cfg, 0.02);
    optimizer_step(b[0], g, resh_cfg, 0.02);
    worst = std::max(worst, (a[0].weights - b[0].weights).cwiseAbs().maxCoeff());
  }
  report(12, "reshuffled ablation at gamma = 0 matches plain Muon step-for-step",
         worst <= 1e-12, err_vs_tol(worst, 1e-12));
}

}  // namespace

int main() {
  criterion_1_variance_recursion();
  criterion_2_sign_form();
  criterion_3_regularized_mle();
  criterion_4_polar_oracle();
  criterion_5_scale_invariance();
  criterion_6_nesterov_equivalence();
  criterion_7_gamma_limit();
  criterion_8_gradient_oracles();
  criterion_9_determinism_and_checkpointing();
  criterion_10_toy_convergence();
  criterion_11_gamma_sweep_protocol();
  criterion_12_reshuffled_degenerate_case();

  if (failures > 0) {
    std::printf("%d of 12 acceptance criteria failed\n", failures);
    return 1;
  }
  std::printf("all 12 acceptance criteria passed\n");
  return 0;
}
