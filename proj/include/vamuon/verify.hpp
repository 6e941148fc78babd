#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vamuon/problems.hpp"

namespace vamuon {

/// Result of one oracle-backed check. `pass` is always recomputable as
/// measured_error <= tolerance.
struct CheckReport {
  std::string name;
  bool pass = false;
  double measured_error = 0.0;
  double tolerance = 0.0;
  std::string details;
};

CheckReport make_report(std::string name, double measured, double tolerance,
                        std::string details = {});

/// v_t - m_t^2 from the shared-beta Adam recursions vs the Gamma recursion,
/// side by side on a random scalar stream.
CheckReport check_variance_recursion(int steps, double beta, std::uint64_t seed);

/// m/sqrt(v) vs sign(m)/sqrt(1 + sigma^2/m^2) with sigma^2 = v - m^2.
CheckReport check_adam_sign_form(int steps, double beta, std::uint64_t seed);

/// Numerically minimizes the KL-regularized Gaussian likelihood objective
/// (golden section over sigma^2, closed-form mu given sigma^2) and compares
/// against the closed-form recursions.
CheckReport solve_regularized_mle_numeric(double g, double mu_prev, double sigma2_prev,
                                          double beta);

/// Aggregate of solve_regularized_mle_numeric over random instances.
CheckReport check_regularized_mle(int instances, std::uint64_t seed);

/// Newton-Schulz output vs the exact SVD polar factor on random
/// well-conditioned matrices; also reports the singular-value range of the
/// NS outputs.
CheckReport check_polar_agreement(int trials, Eigen::Index max_size, double cond_cap, int k,
                                  std::uint64_t seed);

/// Singular values of NS outputs stay inside [0.6, 1.4] (companion report to
/// check_polar_agreement).
CheckReport check_ns_singular_value_range(int trials, Eigen::Index max_size, double cond_cap,
                                          int k, std::uint64_t seed);

/// Algorithm-1 lookahead (bias correction off) vs Muon's beta*M + G.
CheckReport check_nesterov_equivalence(int steps, double beta, std::uint64_t seed);

/// Muon-NSR at huge gamma vs Muon-VS on identical noisy streams
/// (internal epsilon = 0).
CheckReport check_gamma_limit(double gamma_large, int steps, std::uint64_t seed);

/// Muon-NSR at gamma = 0 (tiny epsilon) vs plain Muon on the same stream.
/// The gap is a measured contract, not an algebraic identity.
CheckReport check_nsr_gamma_zero(int steps, double beta, std::uint64_t seed);

/// Analytic gradients vs central finite differences.
CheckReport finite_difference_check(const ProblemSpec& spec, double h_scale);

/// The full deterministic suite, ordered by check name.
std::vector<CheckReport> run_all_checks(std::uint64_t master_seed,
                                        const std::string& filter = {});

}  // namespace vamuon
