#include "vamuon/optimizers.hpp"

#include <cmath>
#include <stdexcept>

namespace vamuon {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::muon: return "muon";
    case Variant::muon_nsr: return "muon_nsr";
    case Variant::muon_vs: return "muon_vs";
    case Variant::muon_nsr_reshuffled: return "muon_nsr_reshuffled";
    case Variant::adamw: return "adamw";
    case Variant::signum: return "signum";
  }
  throw std::logic_error("unknown variant");
}

std::string to_string(ScaleRule r) {
  return r == ScaleRule::muon_02sqrt ? "muon_02sqrt" : "rms_ratio";
}

std::string to_string(Family f) {
  return f == Family::muon_family ? "muon_family" : "adamw_family";
}

Variant variant_from_string(const std::string& s) {
  if (s == "muon") return Variant::muon;
  if (s == "muon_nsr") return Variant::muon_nsr;
  if (s == "muon_vs") return Variant::muon_vs;
  if (s == "muon_nsr_reshuffled") return Variant::muon_nsr_reshuffled;
  if (s == "adamw") return Variant::adamw;
  if (s == "signum") return Variant::signum;
  throw std::invalid_argument("unknown optimizer variant: " + s);
}

ScaleRule scale_rule_from_string(const std::string& s) {
  if (s == "muon_02sqrt") return ScaleRule::muon_02sqrt;
  if (s == "rms_ratio") return ScaleRule::rms_ratio;
  throw std::invalid_argument("unknown scale rule: " + s);
}

Family family_from_string(const std::string& s) {
  if (s == "muon_family") return Family::muon_family;
  if (s == "adamw_family") return Family::adamw_family;
  throw std::invalid_argument("unknown family: " + s);
}

void OptimizerConfig::validate() const {
  if (eta <= 0.0) throw std::invalid_argument("optimizer.eta must be > 0");
  if (lambda < 0.0) throw std::invalid_argument("optimizer.lambda must be >= 0");
  if (beta < 0.0 || beta >= 1.0) throw std::invalid_argument("optimizer.beta must lie in [0,1)");
  if (gamma < 0.0) throw std::invalid_argument("optimizer.gamma must be >= 0");
  if (epsilon <= 0.0) throw std::invalid_argument("optimizer.epsilon must be > 0");
  if (ns_iterations < 1) throw std::invalid_argument("optimizer.ns_iterations must be >= 1");
  if (adam_epsilon <= 0.0) throw std::invalid_argument("optimizer.adam_epsilon must be > 0");
}

double scale_factor(Eigen::Index m, Eigen::Index n, ScaleRule rule) {
  if (rule == ScaleRule::muon_02sqrt) {
    return 0.2 * std::sqrt(static_cast<double>(std::max(m, n)));
  }
  return std::sqrt(std::max(1.0, static_cast<double>(m) / static_cast<double>(n)));
}

Matrix precondition_nsr(const Matrix& m_tilde, const Matrix& gamma_hat, double gamma,
                        double epsilon) {
  if (m_tilde.rows() != gamma_hat.rows() || m_tilde.cols() != gamma_hat.cols()) {
    throw std::invalid_argument("precondition_nsr: shape mismatch");
  }
  if ((gamma_hat.array() < 0.0).any()) {
    throw std::domain_error("precondition_nsr: negative variance surrogate entry");
  }
  return (m_tilde.array() /
          ((m_tilde.array().square() + gamma * gamma_hat.array()).sqrt() + epsilon))
      .matrix();
}

Matrix precondition_vs(const Matrix& m_tilde, const Matrix& gamma_hat, double epsilon) {
  if (m_tilde.rows() != gamma_hat.rows() || m_tilde.cols() != gamma_hat.cols()) {
    throw std::invalid_argument("precondition_vs: shape mismatch");
  }
  if ((gamma_hat.array() < 0.0).any()) {
    throw std::domain_error("precondition_vs: negative variance surrogate entry");
  }
  return (m_tilde.array() / (gamma_hat.array().sqrt() + epsilon)).matrix();
}

namespace {

// Applies W <- W*(1 - eta*lambda) - eta*s_scale*direction and reports the
// Frobenius norm of the change. A null direction applies only the decay.
StepResult apply_update(ParamSlot& slot, const Matrix* direction, const OptimizerConfig& cfg,
                        double eta_t, double s_scale) {
  const Matrix before = slot.weights;
  slot.weights *= (1.0 - eta_t * cfg.lambda);
  StepResult result;
  if (direction != nullptr) {
    slot.weights -= (eta_t * s_scale) * (*direction);
  } else {
    result.skipped = true;
  }
  result.update_norm = (slot.weights - before).norm();
  return result;
}

void check_muon_input(const ParamSlot& slot, const Matrix& g) {
  if (slot.family != Family::muon_family) {
    throw std::invalid_argument("muon step on a non-muon-family slot: " + slot.id);
  }
  if (g.rows() != slot.weights.rows() || g.cols() != slot.weights.cols()) {
    throw std::invalid_argument("gradient shape mismatch for slot " + slot.id);
  }
  require_finite(g, "muon step gradient");
}

}  // namespace

StepResult muon_variant_step(ParamSlot& slot, const Matrix& g, const OptimizerConfig& cfg,
                             double eta_t) {
  check_muon_input(slot, g);
  const double s_scale = scale_factor(slot.weights.rows(), slot.weights.cols(), cfg.scale_rule);

  Matrix ns_input;
  if (cfg.variant == Variant::muon) {
    // Unnormalized accumulation M_t = beta*M_{t-1} + G_t with Nesterov
    // direction beta*M_t + G_t.
    slot.moments.m = cfg.beta * slot.moments.m + g;
    slot.moments.t += 1;
    ns_input = cfg.beta * slot.moments.m + g;
  } else {
    slot.moments = update_moments(slot.moments, g, cfg.beta);
    Matrix m_hat = slot.moments.m;
    Matrix gamma_hat = slot.moments.gamma;
    if (cfg.bias_correction) {
      std::tie(m_hat, gamma_hat) = bias_correct(slot.moments, cfg.beta);
    }
    const Matrix m_tilde = nesterov_lookahead(g, m_hat, cfg.beta);
    switch (cfg.variant) {
      case Variant::muon_nsr:
        ns_input = precondition_nsr(m_tilde, gamma_hat, cfg.gamma, cfg.epsilon);
        break;
      case Variant::muon_vs:
        ns_input = precondition_vs(m_tilde, gamma_hat, cfg.epsilon);
        break;
      default:
        throw std::invalid_argument("muon_variant_step: unsupported variant " +
                                    to_string(cfg.variant));
    }
  }

  if (ns_input.norm() == 0.0) {
    return apply_update(slot, nullptr, cfg, eta_t, s_scale);
  }
  const Matrix o = newton_schulz(ns_input, cfg.ns_iterations, cfg.ns_coefficients);
  return apply_update(slot, &o, cfg, eta_t, s_scale);
}

StepResult muon_nsr_reshuffled_step(ParamSlot& slot, const Matrix& g, const OptimizerConfig& cfg,
                                    double eta_t) {
  check_muon_input(slot, g);
  const double s_scale = scale_factor(slot.weights.rows(), slot.weights.cols(), cfg.scale_rule);

  slot.moments = update_moments(slot.moments, g, cfg.beta);
  Matrix m_hat = slot.moments.m;
  Matrix gamma_hat = slot.moments.gamma;
  if (cfg.bias_correction) {
    std::tie(m_hat, gamma_hat) = bias_correct(slot.moments, cfg.beta);
  }
  const Matrix m_tilde = nesterov_lookahead(g, m_hat, cfg.beta);

  if (m_tilde.norm() == 0.0) {
    return apply_update(slot, nullptr, cfg, eta_t, s_scale);
  }
  const Matrix o = newton_schulz(m_tilde, cfg.ns_iterations, cfg.ns_coefficients);
  const Matrix scale =
      (1.0 + cfg.gamma * gamma_hat.array() / (m_tilde.array().square() + cfg.epsilon))
          .sqrt()
          .matrix();
  const Matrix o_post = (o.array() / scale.array()).matrix();
  return apply_update(slot, &o_post, cfg, eta_t, s_scale);
}

StepResult adamw_step(ParamSlot& slot, const Matrix& g, const OptimizerConfig& cfg, double eta_t) {
  if (g.rows() != slot.weights.rows() || g.cols() != slot.weights.cols()) {
    throw std::invalid_argument("gradient shape mismatch for slot " + slot.id);
  }
  require_finite(g, "adamw_step gradient");
  if (slot.adam_m.size() == 0) {
    slot.adam_m = Matrix::Zero(g.rows(), g.cols());
    slot.adam_v = Matrix::Zero(g.rows(), g.cols());
  }
  slot.adam_m = cfg.adam_beta1 * slot.adam_m + (1.0 - cfg.adam_beta1) * g;
  slot.adam_v =
      cfg.adam_beta2 * slot.adam_v + (1.0 - cfg.adam_beta2) * g.array().square().matrix();
  slot.adam_t += 1;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(slot.adam_t));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(slot.adam_t));
  const Matrix m_hat = slot.adam_m / bc1;
  const Matrix v_hat = slot.adam_v / bc2;

  const Matrix before = slot.weights;
  slot.weights *= (1.0 - eta_t * cfg.lambda);
  slot.weights -=
      eta_t * (m_hat.array() / (v_hat.array().sqrt() + cfg.adam_epsilon)).matrix();
  return {(slot.weights - before).norm(), false};
}

StepResult signum_step(ParamSlot& slot, const Matrix& g, const OptimizerConfig& cfg,
                       double eta_t) {
  if (g.rows() != slot.weights.rows() || g.cols() != slot.weights.cols()) {
    throw std::invalid_argument("gradient shape mismatch for slot " + slot.id);
  }
  require_finite(g, "signum_step gradient");
  if (slot.sign_m.size() == 0) {
    slot.sign_m = Matrix::Zero(g.rows(), g.cols());
  }
  slot.sign_m = cfg.beta * slot.sign_m + (1.0 - cfg.beta) * g;
  const Matrix before = slot.weights;
  slot.weights *= (1.0 - eta_t * cfg.lambda);
  // sign(0) = 0: no update on exact ties.
  slot.weights -= eta_t * slot.sign_m.array().sign().matrix();
  return {(slot.weights - before).norm(), false};
}

StepResult optimizer_step(ParamSlot& slot, const Matrix& g, const OptimizerConfig& cfg,
                          double eta_t) {
  switch (cfg.variant) {
    case Variant::adamw:
      return adamw_step(slot, g, cfg, eta_t);
    case Variant::signum:
      return signum_step(slot, g, cfg, eta_t);
    case Variant::muon_nsr_reshuffled:
      if (slot.family == Family::adamw_family) return adamw_step(slot, g, cfg, eta_t);
      return muon_nsr_reshuffled_step(slot, g, cfg, eta_t);
    default:
      if (slot.family == Family::adamw_family) return adamw_step(slot, g, cfg, eta_t);
      return muon_variant_step(slot, g, cfg, eta_t);
  }
}

std::vector<ParamSlot> partition_params(const std::vector<ParamInfo>& params) {
  std::vector<ParamSlot> slots;
  slots.reserve(params.size());
  for (const ParamInfo& p : params) {
    if (p.dims.empty() || p.dims.size() > 2) {
      throw std::invalid_argument("partition_params: parameter " + p.id +
                                  " must be 1D or 2D (got rank " +
                                  std::to_string(p.dims.size()) + ")");
    }
    ParamSlot slot;
    slot.id = p.id;
    slot.is_vector = p.dims.size() == 1;
    const Eigen::Index rows = p.dims[0];
    const Eigen::Index cols = slot.is_vector ? 1 : p.dims[1];
    slot.family = (!slot.is_vector && !p.is_embedding) ? Family::muon_family
                                                       : Family::adamw_family;
    slot.weights = Matrix::Zero(rows, cols);
    slot.moments = zero_moments(rows, cols);
    slots.push_back(std::move(slot));
  }
  return slots;
}

double clip_gradients(std::vector<Matrix>& grads, double max_norm) {
  double sq = 0.0;
  for (const Matrix& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Matrix& g : grads) g *= scale;
  }
  return norm;
}

}  // namespace vamuon
