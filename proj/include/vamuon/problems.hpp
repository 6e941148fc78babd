#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vamuon/linalg.hpp"
#include "vamuon/optimizers.hpp"

namespace vamuon {

enum class ProblemKind {
  quadratic,
  noisy_quadratic,
  logistic,
  lowrank_factorization,
  mlp2,
};

std::string to_string(ProblemKind k);
ProblemKind problem_kind_from_string(const std::string& s);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::quadratic;
  Eigen::Index rows = 16;
  Eigen::Index cols = 16;
  Eigen::Index rank = 4;       // lowrank_factorization
  Eigen::Index samples = 128;  // logistic / mlp2
  Eigen::Index features = 8;   // logistic / mlp2
  Eigen::Index hidden = 8;     // mlp2
  Eigen::Index outputs = 1;    // mlp2
  double curvature = 1.0;      // quadratic Hessian scale
  double condition = 1.0;      // quadratic Hessian condition number
  // Empty: noiseless. One entry: shared sigma. Otherwise one sigma per
  // flattened coordinate across the parameter layout.
  std::vector<double> noise_sigma;
  std::uint64_t seed = 0;

  void validate() const;
};

class ProblemImpl;

/// Desk-scale test problem with analytic loss, exact gradients, and a
/// seeded stochastic gradient oracle.
class Problem {
 public:
  const ProblemSpec& spec() const;
  const std::vector<ParamInfo>& layout() const;
  std::optional<double> optimum_loss() const;

  /// Seeded starting point, one matrix per layout entry (vectors as n-by-1).
  std::vector<Matrix> initial_params() const;

 private:
  friend Problem make_problem(const ProblemSpec&);
  friend double evaluate_loss(const Problem&, const std::vector<Matrix>&);
  friend std::vector<Matrix> exact_gradient(const Problem&, const std::vector<Matrix>&);
  std::shared_ptr<const ProblemImpl> impl_;
};

Problem make_problem(const ProblemSpec& spec);

double evaluate_loss(const Problem& p, const std::vector<Matrix>& params);

std::vector<Matrix> exact_gradient(const Problem& p, const std::vector<Matrix>& params);

/// Exact gradient plus seeded Gaussian noise. The noise stream is keyed on
/// (spec.seed, step, parameter id), so the same (seed, step) pair always
/// yields the same sample regardless of evaluation order.
std::vector<Matrix> sample_gradient(const Problem& p, const std::vector<Matrix>& params,
                                    std::int64_t step);

}  // namespace vamuon
