#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vamuon/optimizers.hpp"
#include "vamuon/rng.hpp"

using namespace vamuon;

namespace {

Matrix random_matrix(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.next_gaussian();
  return m;
}

Matrix scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

ParamSlot matrix_slot(Eigen::Index rows, Eigen::Index cols, double fill = 1.0) {
  std::vector<ParamInfo> layout{{"w", {rows, cols}, false}};
  std::vector<ParamSlot> slots = partition_params(layout);
  slots[0].weights = Matrix::Constant(rows, cols, fill);
  return slots[0];
}

ParamSlot vector_slot(Eigen::Index n, double fill = 1.0) {
  std::vector<ParamInfo> layout{{"b", {n}, false}};
  std::vector<ParamSlot> slots = partition_params(layout);
  slots[0].weights = Matrix::Constant(n, 1, fill);
  return slots[0];
}

}  // namespace

TEST_CASE("scale_factor evaluates both rules") {
  CHECK(scale_factor(1024, 256, ScaleRule::muon_02sqrt) == doctest::Approx(6.4).epsilon(1e-14));
  CHECK(scale_factor(1024, 256, ScaleRule::rms_ratio) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(scale_factor(7, 7, ScaleRule::rms_ratio) == 1.0);
  CHECK(scale_factor(4, 64, ScaleRule::rms_ratio) == 1.0);  // wide: max(1, m/n)
  CHECK(scale_factor(3, 100, ScaleRule::muon_02sqrt) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("precondition_nsr matches hand values and preserves signs") {
  CHECK(precondition_nsr(scalar(1.0), scalar(3.0), 1.0, 0.0)(0, 0) ==
        doctest::Approx(0.5).epsilon(1e-15));
  // gamma = 0: sign-magnitude normalization
  CHECK(precondition_nsr(scalar(-2.0), scalar(9.0), 0.0, 0.0)(0, 0) ==
        doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(precondition_nsr(scalar(0.0), scalar(5.0), 10.0, 1e-8)(0, 0) == 0.0);

  CounterRng rng = CounterRng::keyed(31, 0);
  const Matrix m_tilde = random_matrix(rng, 6, 5);
  const Matrix gamma_hat = random_matrix(rng, 6, 5).cwiseAbs();
  const Matrix out = precondition_nsr(m_tilde, gamma_hat, 10.0, 1e-8);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    CHECK(std::abs(out(i)) < 1.0);
    CHECK(out(i) * m_tilde(i) >= 0.0);
  }
}

TEST_CASE("precondition_vs matches hand values") {
  CHECK(precondition_vs(scalar(2.0), scalar(4.0), 0.0)(0, 0) == doctest::Approx(1.0));
  CHECK(precondition_vs(scalar(3.0), scalar(0.0), 1e-2)(0, 0) == doctest::Approx(300.0));
  CounterRng rng = CounterRng::keyed(32, 0);
  const Matrix m_tilde = random_matrix(rng, 4, 4);
  const Matrix gamma_hat = random_matrix(rng, 4, 4).cwiseAbs();
  const Matrix out = precondition_vs(m_tilde, gamma_hat, 1e-8);
  for (Eigen::Index i = 0; i < out.size(); ++i) CHECK(out(i) * m_tilde(i) >= 0.0);
}

TEST_CASE("preconditioners reject negative Gamma_hat") {
  CHECK_THROWS_AS(precondition_nsr(scalar(1.0), scalar(-1e-3), 1.0, 1e-8), std::domain_error);
  CHECK_THROWS_AS(precondition_vs(scalar(1.0), scalar(-1e-3), 1e-8), std::domain_error);
}

TEST_CASE("zero gradients from a cold state leave weights untouched") {
  OptimizerConfig cfg;
  cfg.lambda = 0.0;
  for (const Variant v : {Variant::muon, Variant::muon_nsr, Variant::muon_vs,
                          Variant::muon_nsr_reshuffled}) {
    cfg.variant = v;
    ParamSlot slot = matrix_slot(4, 4, 0.7);
    const Matrix before = slot.weights;
    for (int t = 0; t < 3; ++t) {
      const StepResult r = optimizer_step(slot, Matrix::Zero(4, 4), cfg, 0.1);
      CHECK(r.skipped);
      CHECK(r.update_norm == 0.0);
    }
    CHECK((slot.weights - before).norm() == 0.0);
  }
}

TEST_CASE("decoupled decay is exactly geometric for every variant") {
  OptimizerConfig cfg;
  cfg.eta = 0.1;
  cfg.lambda = 0.1;
  for (const Variant v : {Variant::muon, Variant::muon_nsr, Variant::muon_vs,
                          Variant::muon_nsr_reshuffled, Variant::adamw, Variant::signum}) {
    cfg.variant = v;
    ParamSlot slot = matrix_slot(3, 3, 2.0);
    double expected = 2.0;
    for (int t = 0; t < 5; ++t) {
      optimizer_step(slot, Matrix::Zero(3, 3), cfg, 0.1);
      expected *= 1.0 - 0.1 * 0.1;
      CHECK(slot.weights(1, 2) == doctest::Approx(expected).epsilon(1e-15));
    }
  }
}

TEST_CASE("reshuffled step at gamma = 0 coincides with plain muon") {
  OptimizerConfig muon_cfg;
  muon_cfg.variant = Variant::muon;
  muon_cfg.bias_correction = false;
  OptimizerConfig resh_cfg = muon_cfg;
  resh_cfg.variant = Variant::muon_nsr_reshuffled;
  resh_cfg.gamma = 0.0;

  ParamSlot a = matrix_slot(8, 6, 0.3);
  ParamSlot b = matrix_slot(8, 6, 0.3);
  CounterRng rng = CounterRng::keyed(33, 0);
  for (int t = 0; t < 50; ++t) {
    const Matrix g = random_matrix(rng, 8, 6);
    optimizer_step(a, g, muon_cfg, 0.02);
    optimizer_step(b, g, resh_cfg, 0.02);
    CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("reshuffled attenuation is exactly O / S with hand-computed S") {
  // 1x1, bias correction off, beta = 0.5, one step with g = 1:
  //   M = 0.5, Gamma = 0.25, M_tilde = g + (beta/(1-beta))*M = 1.5.
  // Plain muon sees the same NS input (beta*M_unnorm + g = 1.5), so the two
  // updates differ exactly by S = sqrt(1 + gamma*Gamma/M_tilde^2); gamma = 27
  // makes S = 2.
  OptimizerConfig muon_cfg;
  muon_cfg.variant = Variant::muon;
  muon_cfg.bias_correction = false;
  muon_cfg.beta = 0.5;
  muon_cfg.lambda = 0.0;
  OptimizerConfig resh_cfg = muon_cfg;
  resh_cfg.variant = Variant::muon_nsr_reshuffled;
  resh_cfg.gamma = 27.0;
  resh_cfg.epsilon = 0.0;

  ParamSlot a = matrix_slot(1, 1, 0.0);
  ParamSlot b = matrix_slot(1, 1, 0.0);
  optimizer_step(a, scalar(1.0), muon_cfg, 0.1);
  optimizer_step(b, scalar(1.0), resh_cfg, 0.1);
  CHECK(b.weights(0, 0) == doctest::Approx(a.weights(0, 0) / 2.0).epsilon(1e-12));
  CHECK(a.weights(0, 0) < 0.0);  // positive signal steps downhill
}

TEST_CASE("adamw converges to signed steps on a constant gradient") {
  OptimizerConfig cfg;
  cfg.variant = Variant::adamw;
  cfg.lambda = 0.0;
  ParamSlot slot = vector_slot(2, 0.0);
  Matrix g(2, 1);
  g << 3.0, -0.25;
  double prev0 = 0.0;
  for (int t = 0; t < 200; ++t) {
    prev0 = slot.weights(0, 0);
    optimizer_step(slot, g, cfg, 0.01);
  }
  // steady state: m_hat = g, v_hat = g^2 -> step = -eta * sign(g)
  CHECK(slot.weights(0, 0) - prev0 == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(slot.adam_t == 200);
}

TEST_CASE("adamw rejects non-finite gradients") {
  OptimizerConfig cfg;
  cfg.variant = Variant::adamw;
  ParamSlot slot = vector_slot(2, 0.0);
  Matrix bad(2, 1);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(optimizer_step(slot, bad, cfg, 0.01), std::invalid_argument);
}

TEST_CASE("signum step sign conventions") {
  OptimizerConfig cfg;
  cfg.variant = Variant::signum;
  cfg.beta = 0.0;
  cfg.lambda = 0.0;
  ParamSlot slot = vector_slot(3, 0.0);
  Matrix g(3, 1);
  g << 2.0, -5.0, 0.0;
  optimizer_step(slot, g, cfg, 0.1);
  CHECK(slot.weights(0, 0) == doctest::Approx(-0.1));
  CHECK(slot.weights(1, 0) == doctest::Approx(0.1));
  CHECK(slot.weights(2, 0) == 0.0);  // sign(0) = 0

  // alternating gradient with beta = 0 oscillates
  ParamSlot osc = vector_slot(1, 0.0);
  optimizer_step(osc, scalar(1.0), cfg, 0.1);
  const double after_pos = osc.weights(0, 0);
  optimizer_step(osc, scalar(-1.0), cfg, 0.1);
  CHECK(after_pos == doctest::Approx(-0.1));
  CHECK(osc.weights(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("partition_params implements the hybrid rule") {
  std::vector<ParamInfo> layout{
      {"blocks.0.w", {64, 64}, false},
      {"blocks.0.bias", {64}, false},
      {"embed", {1000, 32}, true},
  };
  const std::vector<ParamSlot> slots = partition_params(layout);
  REQUIRE(slots.size() == 3);
  CHECK(slots[0].family == Family::muon_family);
  CHECK_FALSE(slots[0].is_vector);
  CHECK(slots[1].family == Family::adamw_family);
  CHECK(slots[1].is_vector);
  CHECK(slots[2].family == Family::adamw_family);
  CHECK(slots[0].id == "blocks.0.w");
  CHECK(slots[0].weights.rows() == 64);
  CHECK(slots[1].weights.cols() == 1);

  CHECK_THROWS_AS(partition_params({{"t", {2, 2, 2}, false}}), std::invalid_argument);
}

TEST_CASE("muon-family variants fall back to adamw on vector slots") {
  OptimizerConfig cfg;
  cfg.variant = Variant::muon_nsr;
  cfg.lambda = 0.0;
  ParamSlot muon_path = vector_slot(4, 1.0);
  ParamSlot adam_path = vector_slot(4, 1.0);
  CounterRng rng = CounterRng::keyed(34, 0);
  OptimizerConfig adam_cfg = cfg;
  adam_cfg.variant = Variant::adamw;
  for (int t = 0; t < 20; ++t) {
    const Matrix g = random_matrix(rng, 4, 1);
    optimizer_step(muon_path, g, cfg, 0.05);
    optimizer_step(adam_path, g, adam_cfg, 0.05);
  }
  CHECK((muon_path.weights - adam_path.weights).norm() == 0.0);
}

TEST_CASE("clip_gradients rescales by the global norm") {
  std::vector<Matrix> grads{Matrix::Constant(2, 2, 3.0), Matrix::Constant(1, 2, 4.0)};
  // global norm = sqrt(4*9 + 2*16) = sqrt(68)
  const double norm = clip_gradients(grads, 1.0);
  CHECK(norm == doctest::Approx(std::sqrt(68.0)).epsilon(1e-14));
  double total = 0.0;
  for (const Matrix& g : grads) total += g.squaredNorm();
  CHECK(std::sqrt(total) == doctest::Approx(1.0).epsilon(1e-12));
  // already below threshold: untouched
  std::vector<Matrix> small{Matrix::Constant(1, 1, 0.5)};
  clip_gradients(small, 1.0);
  CHECK(small[0](0, 0) == 0.5);
  // disabled
  std::vector<Matrix> off{Matrix::Constant(1, 1, 50.0)};
  clip_gradients(off, 0.0);
  CHECK(off[0](0, 0) == 50.0);
}

TEST_CASE("variant and rule names round-trip") {
  for (const Variant v : {Variant::muon, Variant::muon_nsr, Variant::muon_vs,
                          Variant::muon_nsr_reshuffled, Variant::adamw, Variant::signum}) {
    CHECK(variant_from_string(to_string(v)) == v);
  }
  for (const ScaleRule r : {ScaleRule::muon_02sqrt, ScaleRule::rms_ratio}) {
    CHECK(scale_rule_from_string(to_string(r)) == r);
  }
  CHECK_THROWS_AS(variant_from_string("sgd"), std::invalid_argument);
}

TEST_CASE("config validation rejects bad hyperparameters") {
  OptimizerConfig cfg;
  cfg.beta = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = OptimizerConfig{};
  cfg.eta = -0.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = OptimizerConfig{};
  cfg.gamma = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = OptimizerConfig{};
  cfg.ns_iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  OptimizerConfig good;
  CHECK_NOTHROW(good.validate());
}
