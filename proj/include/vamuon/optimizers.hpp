#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vamuon/linalg.hpp"
#include "vamuon/moments.hpp"

namespace vamuon {

enum class Variant {
  muon,
  muon_nsr,
  muon_vs,
  muon_nsr_reshuffled,
  adamw,
  signum,
};

enum class ScaleRule {
  muon_02sqrt,  // 0.2 * sqrt(max(m, n))
  rms_ratio,    // sqrt(max(1, m / n))
};

std::string to_string(Variant v);
std::string to_string(ScaleRule r);
Variant variant_from_string(const std::string& s);
ScaleRule scale_rule_from_string(const std::string& s);

struct OptimizerConfig {
  Variant variant = Variant::muon_nsr;
  double eta = 0.05;           // peak learning rate; schedules scale it per step
  double lambda = 0.0;         // decoupled weight decay
  double beta = 0.95;          // shared EMA rate for M and Gamma
  double gamma = 10.0;         // variance sensitivity (muon_nsr / reshuffled)
  double epsilon = 1e-8;       // stabilizer in the preconditioners
  int ns_iterations = 5;
  ScaleRule scale_rule = ScaleRule::rms_ratio;
  bool bias_correction = true;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.95;
  double adam_epsilon = 1e-8;
  NsCoefficients<double> ns_coefficients = default_ns_coefficients<double>();

  void validate() const;
};

enum class Family { muon_family, adamw_family };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

/// Named parameter description used for partitioning.
struct ParamInfo {
  std::string id;
  std::vector<Eigen::Index> dims;  // 1 or 2 entries
  bool is_embedding = false;
};

/// One tracked parameter plus its optimizer state. Vectors are stored as
/// n-by-1 matrices.
struct ParamSlot {
  std::string id;
  Family family = Family::adamw_family;
  bool is_vector = false;
  Matrix weights;

  // muon-family state: EMA moments for Algorithm-1 variants; for the plain
  // muon variant, moments.m holds the unnormalized accumulation
  // M_t = beta*M_{t-1} + G_t and gamma stays unused.
  MomentState moments;

  // adamw-family state
  Matrix adam_m;
  Matrix adam_v;
  std::int64_t adam_t = 0;

  // signum state
  Matrix sign_m;
};

struct StepResult {
  double update_norm = 0.0;  // Frobenius norm of W_new - W_old
  bool skipped = false;      // zero update direction: only decay was applied
};

/// Dimension-dependent multiplier on the orthogonalized update.
double scale_factor(Eigen::Index m, Eigen::Index n, ScaleRule rule);

/// Elementwise M_tilde / (sqrt(M_tilde^2 + gamma*Gamma_hat) + epsilon).
/// Output magnitudes are strictly below 1 for epsilon > 0 and signs match
/// M_tilde.
Matrix precondition_nsr(const Matrix& m_tilde, const Matrix& gamma_hat, double gamma,
                        double epsilon);

/// Elementwise M_tilde / (sqrt(Gamma_hat) + epsilon).
Matrix precondition_vs(const Matrix& m_tilde, const Matrix& gamma_hat, double epsilon);

/// One step of muon / muon_nsr / muon_vs on a matrix-family slot:
/// moments -> bias correction -> lookahead -> preconditioning -> NS ->
/// decoupled decay and scaled orthogonal update.
StepResult muon_variant_step(ParamSlot& slot, const Matrix& g, const OptimizerConfig& cfg,
                             double eta_t);

/// Post-orthogonalization ablation: O = NS(M_tilde), then coordinate-wise
/// attenuation O / sqrt(1 + gamma*Gamma_hat / (M_tilde^2 + epsilon)).
StepResult muon_nsr_reshuffled_step(ParamSlot& slot, const Matrix& g, const OptimizerConfig& cfg,
                                    double eta_t);

StepResult adamw_step(ParamSlot& slot, const Matrix& g, const OptimizerConfig& cfg, double eta_t);

StepResult signum_step(ParamSlot& slot, const Matrix& g, const OptimizerConfig& cfg, double eta_t);

/// Dispatches on the configured variant and the slot's family: muon-family
/// variants fall back to AdamW on vector/embedding slots (hybrid
/// partitioning).
StepResult optimizer_step(ParamSlot& slot, const Matrix& g, const OptimizerConfig& cfg,
                          double eta_t);

/// 2D non-embedding parameters -> muon_family; vectors and embedding tables
/// -> adamw_family. Order-preserving; rejects tensors of rank 3+.
std::vector<ParamSlot> partition_params(const std::vector<ParamInfo>& params);

/// Global-norm gradient clip across all slots. Returns the pre-clip norm.
/// max_norm <= 0 disables clipping.
double clip_gradients(std::vector<Matrix>& grads, double max_norm);

}  // namespace vamuon
