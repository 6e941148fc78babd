#pragma once

#include <cstdint>
#include <utility>

#include "vamuon/linalg.hpp"

namespace vamuon {

/// Per-parameter exponential-moving statistics: first moment M, variance
/// surrogate Gamma (elementwise >= 0), and a step counter.
struct MomentState {
  Matrix m;
  Matrix gamma;
  std::int64_t t = 0;
};

MomentState zero_moments(Eigen::Index rows, Eigen::Index cols);

/// One shared-beta moment update:
///   Gamma' = beta*Gamma + beta*(1-beta)*(M_prev - G)^2   (elementwise)
///   M'     = beta*M_prev + (1-beta)*G
/// The Gamma update reads the pre-update M; the ordering is part of the
/// contract.
MomentState update_moments(const MomentState& state, const Matrix& g, double beta);

/// Cold-start correction: divides both M and Gamma by (1 - beta^t).
std::pair<Matrix, Matrix> bias_correct(const MomentState& state, double beta);

/// Nesterov-style extrapolation: G + (beta / (1 - beta)) * M_hat.
Matrix nesterov_lookahead(const Matrix& g, const Matrix& m_hat, double beta);

}  // namespace vamuon
