#include "vamuon/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vamuon/moments.hpp"
#include "vamuon/optimizers.hpp"
#include "vamuon/rng.hpp"

namespace vamuon {

CheckReport make_report(std::string name, double measured, double tolerance,
                        std::string details) {
  CheckReport r;
  r.name = std::move(name);
  r.measured_error = measured;
  r.tolerance = tolerance;
  r.pass = measured <= tolerance;
  r.details = std::move(details);
  return r;
}

namespace {

Matrix random_matrix(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = rng.next_gaussian();
    }
  }
  return m;
}

Matrix random_orthonormal(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  const Matrix g = random_matrix(rng, rows, rows);
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  return q.leftCols(cols);
}

/// Random matrix with prescribed singular-value spread (condition <= cond).
Matrix random_conditioned(CounterRng& rng, Eigen::Index rows, Eigen::Index cols, double cond) {
  const Eigen::Index r = std::min(rows, cols);
  Vector s(r);
  s(0) = 1.0;
  for (Eigen::Index i = 1; i < r; ++i) {
    // log-uniform in [1/cond, 1]
    s(i) = std::exp(-rng.next_uniform() * std::log(cond));
  }
  const Matrix u = random_orthonormal(rng, rows, r);
  const Matrix v = random_orthonormal(rng, cols, r);
  return u * s.asDiagonal() * v.transpose();
}

}  // namespace

CheckReport check_variance_recursion(int steps, double beta, std::uint64_t seed) {
  CounterRng rng = CounterRng::keyed(seed, hash_string("variance_recursion"));
  double m = 0.0;
  double v = 0.0;
  MomentState state = zero_moments(1, 1);
  double max_err = 0.0;
  for (int t = 1; t <= steps; ++t) {
    const double g = rng.next_gaussian() * 3.0;
    m = beta * m + (1.0 - beta) * g;
    v = beta * v + (1.0 - beta) * g * g;
    Matrix gm(1, 1);
    gm(0, 0) = g;
    state = update_moments(state, gm, beta);
    max_err = std::max(max_err, std::abs(v - m * m - state.gamma(0, 0)));
  }
  std::ostringstream details;
  details << "beta=" << beta << " steps=" << steps;
  return make_report("variance_recursion/beta=" + std::to_string(beta), max_err, 1e-12,
                     details.str());
}

CheckReport check_adam_sign_form(int steps, double beta, std::uint64_t seed) {
  CounterRng rng = CounterRng::keyed(seed, hash_string("adam_sign_form"));
  double m = 0.0;
  double v = 0.0;
  double max_rel = 0.0;
  for (int t = 1; t <= steps; ++t) {
    const double g = rng.next_gaussian() * 2.0 + 0.5;
    m = beta * m + (1.0 - beta) * g;
    v = beta * v + (1.0 - beta) * g * g;
    if (m == 0.0) continue;
    const double d_ratio = m / std::sqrt(v);
    const double sigma2 = v - m * m;
    const double d_sign = (m > 0.0 ? 1.0 : -1.0) / std::sqrt(1.0 + sigma2 / (m * m));
    max_rel = std::max(max_rel, std::abs(d_ratio - d_sign) / std::abs(d_ratio));
  }
  return make_report("adam_sign_form", max_rel, 1e-10,
                     "beta=" + std::to_string(beta) + " steps=" + std::to_string(steps));
}

namespace {

// KL-regularized Gaussian negative log-likelihood, lambda = (1-beta)/beta.
// Evaluated in extended precision: the golden-section search below bottoms
// out at the rounding-noise plateau of the objective, and double precision
// leaves sigma^2 errors near 1e-6 on wide instances.
long double mle_objective(long double g, long double mu_prev, long double sigma2_prev,
                          long double lambda, long double mu, long double s) {
  const long double nll = 0.5L * std::log(s) + (g - mu) * (g - mu) / (2.0L * s);
  const long double kl = 0.5L * (sigma2_prev / s + (mu_prev - mu) * (mu_prev - mu) / s - 1.0L -
                                 std::log(sigma2_prev / s));
  return nll + kl / lambda;
}

}  // namespace

CheckReport solve_regularized_mle_numeric(double g, double mu_prev, double sigma2_prev,
                                          double beta) {
  if (sigma2_prev <= 0.0) {
    throw std::invalid_argument("solve_regularized_mle_numeric: sigma2_prev must be > 0");
  }
  const double lambda = (1.0 - beta) / beta;
  // The objective is quadratic in mu for fixed sigma^2, with a minimizer
  // that does not depend on sigma^2.
  const double mu_num = (lambda * g + mu_prev) / (1.0 + lambda);

  const auto objective = [&](long double s) {
    return mle_objective(g, mu_prev, sigma2_prev, lambda, mu_num, s);
  };
  // Golden section over sigma^2.
  const long double phi = (std::sqrt(5.0L) - 1.0L) / 2.0L;
  long double lo = 1e-9L;
  long double hi = 10.0L * (sigma2_prev + (g - mu_prev) * (g - mu_prev) + 1.0L);
  long double x1 = hi - phi * (hi - lo);
  long double x2 = lo + phi * (hi - lo);
  long double f1 = objective(x1);
  long double f2 = objective(x2);
  while (hi - lo > 1e-12L * (1.0L + hi)) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = objective(x2);
    }
  }
  const double sigma2_num = static_cast<double>(0.5L * (lo + hi));

  const double mu_cf = beta * mu_prev + (1.0 - beta) * g;
  const double sigma2_cf = beta * sigma2_prev + beta * (1.0 - beta) * (mu_prev - g) * (mu_prev - g);
  const double err = std::max(std::abs(mu_num - mu_cf), std::abs(sigma2_num - sigma2_cf));
  std::ostringstream details;
  details << "g=" << g << " mu_prev=" << mu_prev << " sigma2_prev=" << sigma2_prev
          << " beta=" << beta << " closed=(" << mu_cf << "," << sigma2_cf << ")";
  return make_report("regularized_mle_instance", err, 1e-6, details.str());
}

CheckReport check_regularized_mle(int instances, std::uint64_t seed) {
  CounterRng rng = CounterRng::keyed(seed, hash_string("regularized_mle"));
  double max_err = 0.0;
  for (int i = 0; i < instances; ++i) {
    const double g = rng.next_gaussian() * 3.0;
    const double mu_prev = rng.next_gaussian() * 2.0;
    const double sigma2_prev = 0.05 + 4.0 * rng.next_uniform();
    const double beta = 0.3 + 0.65 * rng.next_uniform();
    const CheckReport r = solve_regularized_mle_numeric(g, mu_prev, sigma2_prev, beta);
    max_err = std::max(max_err, r.measured_error);
  }
  return make_report("regularized_mle", max_err, 1e-6,
                     std::to_string(instances) + " random instances");
}

CheckReport check_polar_agreement(int trials, Eigen::Index max_size, double cond_cap, int k,
                                  std::uint64_t seed) {
  CounterRng rng = CounterRng::keyed(seed, hash_string("polar_agreement"));
  double max_gap = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const auto rows = static_cast<Eigen::Index>(2 + rng.next_u64() % (max_size - 1));
    const auto cols = static_cast<Eigen::Index>(2 + rng.next_u64() % (max_size - 1));
    const double cond = 1.0 + (cond_cap - 1.0) * rng.next_uniform();
    const Matrix a = random_conditioned(rng, rows, cols, cond);
    const Matrix exact = polar_factor_exact(a);
    const Matrix approx = newton_schulz(a, k);
    const double gap =
        (approx - exact).norm() / std::sqrt(static_cast<double>(std::min(rows, cols)));
    max_gap = std::max(max_gap, gap);
  }
  return make_report("polar_agreement", max_gap, 0.35,
                     std::to_string(trials) + " trials, K=" + std::to_string(k));
}

CheckReport check_ns_singular_value_range(int trials, Eigen::Index max_size, double cond_cap,
                                          int k, std::uint64_t seed) {
  CounterRng rng = CounterRng::keyed(seed, hash_string("ns_singular_range"));
  double sv_min = 1.0;
  double sv_max = 1.0;
  for (int trial = 0; trial < trials; ++trial) {
    const auto rows = static_cast<Eigen::Index>(2 + rng.next_u64() % (max_size - 1));
    const auto cols = static_cast<Eigen::Index>(2 + rng.next_u64() % (max_size - 1));
    const double cond = 1.0 + (cond_cap - 1.0) * rng.next_uniform();
    const Matrix a = random_conditioned(rng, rows, cols, cond);
    const Vector s = svd_small(newton_schulz(a, k)).singular_values;
    sv_min = std::min(sv_min, s(s.size() - 1));
    sv_max = std::max(sv_max, s(0));
  }
  // Deviation of the output spectrum from 1; 0.4 corresponds to [0.6, 1.4].
  const double deviation = std::max(1.0 - sv_min, sv_max - 1.0);
  std::ostringstream details;
  details << "singular values in [" << sv_min << ", " << sv_max << "]";
  return make_report("ns_singular_range", deviation, 0.4, details.str());
}

CheckReport check_nesterov_equivalence(int steps, double beta, std::uint64_t seed) {
  CounterRng rng = CounterRng::keyed(seed, hash_string("nesterov_equivalence"));
  MomentState state = zero_moments(8, 8);
  Matrix muon_m = Matrix::Zero(8, 8);
  double max_gap = 0.0;
  for (int t = 1; t <= steps; ++t) {
    const Matrix g = random_matrix(rng, 8, 8);
    state = update_moments(state, g, beta);
    const Matrix lookahead = nesterov_lookahead(g, state.m, beta);  // bias correction off
    muon_m = beta * muon_m + g;
    const Matrix muon_dir = beta * muon_m + g;
    max_gap = std::max(max_gap, (lookahead - muon_dir).norm());
  }
  return make_report("nesterov_equivalence", max_gap, 1e-12,
                     "beta=" + std::to_string(beta) + " steps=" + std::to_string(steps));
}

CheckReport check_gamma_limit(double gamma_large, int steps, std::uint64_t seed) {
  CounterRng rng = CounterRng::keyed(seed, hash_string("gamma_limit"));
  const Eigen::Index n = 16;
  const Matrix mean = random_matrix(rng, n, n);
  MomentState state = zero_moments(n, n);
  const double beta = 0.95;
  double max_rel_gap = 0.0;
  for (int t = 1; t <= steps; ++t) {
    const Matrix g = mean + random_matrix(rng, n, n);  // unit noise
    state = update_moments(state, g, beta);
    const auto [m_hat, gamma_hat] = bias_correct(state, beta);
    const Matrix m_tilde = nesterov_lookahead(g, m_hat, beta);
    // epsilon = 0 inside both preconditioners for this limit check
    const Matrix o_nsr = newton_schulz(precondition_nsr(m_tilde, gamma_hat, gamma_large, 0.0));
    const Matrix o_vs = newton_schulz(precondition_vs(m_tilde, gamma_hat, 0.0));
    max_rel_gap = std::max(max_rel_gap, (o_nsr - o_vs).norm() / o_vs.norm());
  }
  std::ostringstream details;
  details << "gamma=" << gamma_large << " steps=" << steps;
  return make_report("gamma_limit", max_rel_gap, 1e-3, details.str());
}

CheckReport check_nsr_gamma_zero(int steps, double beta, std::uint64_t seed) {
  CounterRng rng = CounterRng::keyed(seed, hash_string("nsr_gamma_zero"));
  MomentState state = zero_moments(8, 8);
  Matrix muon_m = Matrix::Zero(8, 8);
  double max_gap = 0.0;
  for (int t = 1; t <= steps; ++t) {
    const Matrix g = random_matrix(rng, 8, 8);
    state = update_moments(state, g, beta);
    const Matrix m_tilde = nesterov_lookahead(g, state.m, beta);  // bias correction off
    muon_m = beta * muon_m + g;
    const Matrix o_nsr = newton_schulz(precondition_nsr(m_tilde, state.gamma, 0.0, 1e-12));
    const Matrix o_muon = newton_schulz(Matrix(beta * muon_m + g));
    max_gap = std::max(max_gap, (o_nsr - o_muon).norm() / o_muon.norm());
  }
  // Measured contract: gamma=0 preconditioning is an elementwise
  // sign-magnitude normalization, which perturbs the polar factor; the gap
  // is bounded, not zero.
  return make_report("nsr_gamma_zero", max_gap, 1.5,
                     "beta=" + std::to_string(beta) + " steps=" + std::to_string(steps));
}

CheckReport finite_difference_check(const ProblemSpec& spec, double h_scale) {
  ProblemSpec clean = spec;
  clean.noise_sigma.clear();  // exact gradients only
  const Problem p = make_problem(clean);
  std::vector<Matrix> params = p.initial_params();
  const std::vector<Matrix> exact = exact_gradient(p, params);

  double max_rel = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (Eigen::Index i = 0; i < params[k].rows(); ++i) {
      for (Eigen::Index j = 0; j < params[k].cols(); ++j) {
        const double w = params[k](i, j);
        const double h = h_scale * (1.0 + std::abs(w));
        params[k](i, j) = w + h;
        const double f_plus = evaluate_loss(p, params);
        params[k](i, j) = w - h;
        const double f_minus = evaluate_loss(p, params);
        params[k](i, j) = w;
        const double fd = (f_plus - f_minus) / (2.0 * h);
        const double rel = std::abs(fd - exact[k](i, j)) / (1.0 + std::abs(exact[k](i, j)));
        max_rel = std::max(max_rel, rel);
      }
    }
  }
  return make_report("finite_difference/" + to_string(clean.kind), max_rel, 1e-5,
                     "h_scale=" + std::to_string(h_scale));
}

std::vector<CheckReport> run_all_checks(std::uint64_t master_seed, const std::string& filter) {
  std::vector<CheckReport> reports;
  reports.push_back(check_variance_recursion(1000, 0.5, master_seed));
  reports.push_back(check_variance_recursion(1000, 0.9, master_seed));
  reports.push_back(check_variance_recursion(1000, 0.99, master_seed));
  reports.push_back(check_adam_sign_form(1000, 0.9, master_seed));
  reports.push_back(check_regularized_mle(100, master_seed));
  reports.push_back(check_polar_agreement(200, 64, 100.0, kDefaultNsIterations, master_seed));
  reports.push_back(
      check_ns_singular_value_range(200, 64, 100.0, kDefaultNsIterations, master_seed));
  reports.push_back(check_nesterov_equivalence(500, 0.95, master_seed));
  reports.push_back(check_gamma_limit(1e8, 50, master_seed));
  reports.push_back(check_nsr_gamma_zero(50, 0.95, master_seed));

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
    spec.seed = master_seed;
    reports.push_back(finite_difference_check(spec, 1e-5));
  }

  if (!filter.empty()) {
    std::erase_if(reports, [&](const CheckReport& r) {
      return r.name.find(filter) == std::string::npos;
    });
  }
  std::stable_sort(reports.begin(), reports.end(),
                   [](const CheckReport& a, const CheckReport& b) { return a.name < b.name; });
  return reports;
}

}  // namespace vamuon
