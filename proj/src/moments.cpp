#include "vamuon/moments.hpp"

#include <cmath>
#include <stdexcept>

namespace vamuon {

MomentState zero_moments(Eigen::Index rows, Eigen::Index cols) {
  MomentState s;
  s.m = Matrix::Zero(rows, cols);
  s.gamma = Matrix::Zero(rows, cols);
  s.t = 0;
  return s;
}

MomentState update_moments(const MomentState& state, const Matrix& g, double beta) {
  if (g.rows() != state.m.rows() || g.cols() != state.m.cols()) {
    throw std::invalid_argument("update_moments: gradient shape mismatch");
  }
  if (beta < 0.0 || beta >= 1.0) {
    throw std::invalid_argument("update_moments: beta must lie in [0,1)");
  }
  require_finite(g, "update_moments");
  MomentState next;
  // Gamma consumes the pre-update M.
  next.gamma = beta * state.gamma + beta * (1.0 - beta) * (state.m - g).array().square().matrix();
  next.m = beta * state.m + (1.0 - beta) * g;
  next.t = state.t + 1;
  return next;
}

std::pair<Matrix, Matrix> bias_correct(const MomentState& state, double beta) {
  if (state.t < 1) {
    throw std::domain_error("bias_correct: state has no updates (t = 0)");
  }
  const double denom = 1.0 - std::pow(beta, static_cast<double>(state.t));
  return {state.m / denom, state.gamma / denom};
}

Matrix nesterov_lookahead(const Matrix& g, const Matrix& m_hat, double beta) {
  if (g.rows() != m_hat.rows() || g.cols() != m_hat.cols()) {
    throw std::invalid_argument("nesterov_lookahead: shape mismatch");
  }
  if (beta >= 1.0) {
    throw std::invalid_argument("nesterov_lookahead: beta must be < 1");
  }
  return g + (beta / (1.0 - beta)) * m_hat;
}

}  // namespace vamuon
