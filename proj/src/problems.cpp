#include "vamuon/problems.hpp"

#include <cmath>
#include <stdexcept>

#include "vamuon/rng.hpp"

namespace vamuon {

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::quadratic: return "quadratic";
    case ProblemKind::noisy_quadratic: return "noisy_quadratic";
    case ProblemKind::logistic: return "logistic";
    case ProblemKind::lowrank_factorization: return "lowrank_factorization";
    case ProblemKind::mlp2: return "mlp2";
  }
  throw std::logic_error("unknown problem kind");
}

ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "quadratic") return ProblemKind::quadratic;
  if (s == "noisy_quadratic") return ProblemKind::noisy_quadratic;
  if (s == "logistic") return ProblemKind::logistic;
  if (s == "lowrank_factorization") return ProblemKind::lowrank_factorization;
  if (s == "mlp2") return ProblemKind::mlp2;
  throw std::invalid_argument("unknown problem kind: " + s);
}

void ProblemSpec::validate() const {
  if (rows < 1 || cols < 1) throw std::invalid_argument("problem dimensions must be >= 1");
  if (kind == ProblemKind::lowrank_factorization &&
      (rank < 1 || rank > std::min(rows, cols))) {
    throw std::invalid_argument("problem.rank must lie in [1, min(rows, cols)]");
  }
  if ((kind == ProblemKind::logistic || kind == ProblemKind::mlp2) &&
      (samples < 1 || features < 1)) {
    throw std::invalid_argument("problem.samples and problem.features must be >= 1");
  }
  if (kind == ProblemKind::mlp2 && (hidden < 1 || outputs < 1)) {
    throw std::invalid_argument("problem.hidden and problem.outputs must be >= 1");
  }
  if (condition < 1.0) throw std::invalid_argument("problem.condition must be >= 1");
  if (curvature <= 0.0) throw std::invalid_argument("problem.curvature must be > 0");
  for (const double s : noise_sigma) {
    if (s < 0.0) throw std::invalid_argument("problem.noise_sigma entries must be >= 0");
  }
}

namespace {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                       std::string_view tag) {
  CounterRng rng = CounterRng::keyed(seed, hash_string(tag));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = rng.next_gaussian();
    }
  }
  return m;
}

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double logistic_sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

class ProblemImpl {
 public:
  explicit ProblemImpl(ProblemSpec spec) : spec_(std::move(spec)) {}
  virtual ~ProblemImpl() = default;

  virtual double loss(const std::vector<Matrix>& params) const = 0;
  virtual std::vector<Matrix> gradient(const std::vector<Matrix>& params) const = 0;
  virtual std::vector<Matrix> initial_params() const = 0;

  const ProblemSpec& spec() const { return spec_; }
  const std::vector<ParamInfo>& layout() const { return layout_; }
  std::optional<double> optimum_loss() const { return optimum_loss_; }

  void check_shapes(const std::vector<Matrix>& params) const {
    if (params.size() != layout_.size()) {
      throw std::invalid_argument("parameter count does not match problem layout");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Eigen::Index rows = layout_[i].dims[0];
      const Eigen::Index cols = layout_[i].dims.size() == 2 ? layout_[i].dims[1] : 1;
      if (params[i].rows() != rows || params[i].cols() != cols) {
        throw std::invalid_argument("parameter shape mismatch for " + layout_[i].id);
      }
    }
  }

 protected:
  ProblemSpec spec_;
  std::vector<ParamInfo> layout_;
  std::optional<double> optimum_loss_;
};

namespace {

class QuadraticProblem final : public ProblemImpl {
 public:
  explicit QuadraticProblem(const ProblemSpec& spec) : ProblemImpl(spec) {
    const Eigen::Index n = spec.rows * spec.cols;
    curvatures_.resize(spec.rows, spec.cols);
    for (Eigen::Index i = 0; i < spec.rows; ++i) {
      for (Eigen::Index j = 0; j < spec.cols; ++j) {
        const Eigen::Index k = i * spec.cols + j;
        const double frac = n > 1 ? static_cast<double>(k) / static_cast<double>(n - 1) : 0.0;
        curvatures_(i, j) = spec.curvature * std::pow(spec.condition, frac);
      }
    }
    w_star_ = gaussian_matrix(spec.rows, spec.cols, spec.seed, "quadratic/w_star");
    if (spec.cols == 1) {
      layout_ = {{"W", {spec.rows}, false}};
    } else {
      layout_ = {{"W", {spec.rows, spec.cols}, false}};
    }
    optimum_loss_ = 0.0;
  }

  double loss(const std::vector<Matrix>& params) const override {
    const Matrix d = params[0] - w_star_;
    return 0.5 * (curvatures_.array() * d.array().square()).sum();
  }

  std::vector<Matrix> gradient(const std::vector<Matrix>& params) const override {
    return {(curvatures_.array() * (params[0] - w_star_).array()).matrix()};
  }

  std::vector<Matrix> initial_params() const override {
    return {w_star_ + gaussian_matrix(spec_.rows, spec_.cols, spec_.seed, "quadratic/init")};
  }

 private:
  Matrix curvatures_;  // diagonal Hessian, stored in parameter shape
  Matrix w_star_;
};

class LogisticProblem final : public ProblemImpl {
 public:
  explicit LogisticProblem(const ProblemSpec& spec) : ProblemImpl(spec) {
    x_ = gaussian_matrix(spec.samples, spec.features, spec.seed, "logistic/x");
    Matrix w_true = gaussian_matrix(spec.features, 1, spec.seed, "logistic/w_true");
    Vector margins = x_ * w_true;
    y_.resize(spec.samples);
    for (Eigen::Index i = 0; i < spec.samples; ++i) {
      y_(i) = margins(i) >= 0.0 ? 1.0 : -1.0;  // separable by construction
    }
    layout_ = {{"w", {spec.features}, false}};
  }

  double loss(const std::vector<Matrix>& params) const override {
    const Vector margins = x_ * params[0];
    double total = 0.0;
    for (Eigen::Index i = 0; i < spec_.samples; ++i) {
      total += softplus(-y_(i) * margins(i));
    }
    return total / static_cast<double>(spec_.samples);
  }

  std::vector<Matrix> gradient(const std::vector<Matrix>& params) const override {
    const Vector margins = x_ * params[0];
    Vector coeff(spec_.samples);
    for (Eigen::Index i = 0; i < spec_.samples; ++i) {
      coeff(i) = -y_(i) * logistic_sigmoid(-y_(i) * margins(i));
    }
    return {x_.transpose() * coeff / static_cast<double>(spec_.samples)};
  }

  std::vector<Matrix> initial_params() const override {
    return {0.1 * gaussian_matrix(spec_.features, 1, spec_.seed, "logistic/init")};
  }

 private:
  Matrix x_;
  Vector y_;
};

class LowRankProblem final : public ProblemImpl {
 public:
  explicit LowRankProblem(const ProblemSpec& spec) : ProblemImpl(spec) {
    const Matrix u_star = gaussian_matrix(spec.rows, spec.rank, spec.seed, "lowrank/u_star");
    const Matrix v_star = gaussian_matrix(spec.cols, spec.rank, spec.seed, "lowrank/v_star");
    a_ = u_star * v_star.transpose();
    layout_ = {{"U", {spec.rows, spec.rank}, false}, {"V", {spec.cols, spec.rank}, false}};
    optimum_loss_ = 0.0;
  }

  double loss(const std::vector<Matrix>& params) const override {
    return 0.5 * (params[0] * params[1].transpose() - a_).squaredNorm();
  }

  std::vector<Matrix> gradient(const std::vector<Matrix>& params) const override {
    const Matrix residual = params[0] * params[1].transpose() - a_;
    return {residual * params[1], residual.transpose() * params[0]};
  }

  std::vector<Matrix> initial_params() const override {
    return {0.5 * gaussian_matrix(spec_.rows, spec_.rank, spec_.seed, "lowrank/init_u"),
            0.5 * gaussian_matrix(spec_.cols, spec_.rank, spec_.seed, "lowrank/init_v")};
  }

 private:
  Matrix a_;
};

// Two-layer tanh perceptron with manual backprop on a seeded teacher's
// regression data; provides genuinely matrix-shaped parameters plus biases.
class Mlp2Problem final : public ProblemImpl {
 public:
  explicit Mlp2Problem(const ProblemSpec& spec) : ProblemImpl(spec) {
    x_ = gaussian_matrix(spec.features, spec.samples, spec.seed, "mlp2/x");  // d x N
    const Matrix w1 = gaussian_matrix(spec.hidden, spec.features, spec.seed, "mlp2/teacher_w1");
    const Matrix b1 = gaussian_matrix(spec.hidden, 1, spec.seed, "mlp2/teacher_b1");
    const Matrix w2 = gaussian_matrix(spec.outputs, spec.hidden, spec.seed, "mlp2/teacher_w2");
    const Matrix b2 = gaussian_matrix(spec.outputs, 1, spec.seed, "mlp2/teacher_b2");
    const Matrix hidden = ((w1 * x_).colwise() + Vector(b1)).array().tanh().matrix();
    y_ = (w2 * hidden).colwise() + Vector(b2);  // o x N
    layout_ = {{"W1", {spec.hidden, spec.features}, false},
               {"b1", {spec.hidden}, false},
               {"W2", {spec.outputs, spec.hidden}, false},
               {"b2", {spec.outputs}, false}};
  }

  double loss(const std::vector<Matrix>& params) const override {
    const Matrix residual = forward(params) - y_;
    return 0.5 * residual.squaredNorm() / static_cast<double>(spec_.samples);
  }

  std::vector<Matrix> gradient(const std::vector<Matrix>& params) const override {
    const Matrix z = (params[0] * x_).colwise() + Vector(params[1]);
    const Matrix a = z.array().tanh().matrix();
    const Matrix pred = (params[2] * a).colwise() + Vector(params[3]);
    const Matrix d_pred = (pred - y_) / static_cast<double>(spec_.samples);
    const Matrix d_w2 = d_pred * a.transpose();
    const Matrix d_b2 = d_pred.rowwise().sum();
    const Matrix d_a = params[2].transpose() * d_pred;
    const Matrix d_z = (d_a.array() * (1.0 - a.array().square())).matrix();
    const Matrix d_w1 = d_z * x_.transpose();
    const Matrix d_b1 = d_z.rowwise().sum();
    return {d_w1, d_b1, d_w2, d_b2};
  }

  std::vector<Matrix> initial_params() const override {
    return {0.5 * gaussian_matrix(spec_.hidden, spec_.features, spec_.seed, "mlp2/init_w1"),
            0.5 * gaussian_matrix(spec_.hidden, 1, spec_.seed, "mlp2/init_b1"),
            0.5 * gaussian_matrix(spec_.outputs, spec_.hidden, spec_.seed, "mlp2/init_w2"),
            0.5 * gaussian_matrix(spec_.outputs, 1, spec_.seed, "mlp2/init_b2")};
  }

 private:
  Matrix forward(const std::vector<Matrix>& params) const {
    const Matrix a = ((params[0] * x_).colwise() + Vector(params[1])).array().tanh().matrix();
    return (params[2] * a).colwise() + Vector(params[3]);
  }

  Matrix x_;  // features x samples
  Matrix y_;  // outputs x samples
};

Eigen::Index total_coordinates(const std::vector<ParamInfo>& layout) {
  Eigen::Index n = 0;
  for (const ParamInfo& p : layout) {
    Eigen::Index count = p.dims[0];
    if (p.dims.size() == 2) count *= p.dims[1];
    n += count;
  }
  return n;
}

}  // namespace

const ProblemSpec& Problem::spec() const { return impl_->spec(); }
const std::vector<ParamInfo>& Problem::layout() const { return impl_->layout(); }
std::optional<double> Problem::optimum_loss() const { return impl_->optimum_loss(); }
std::vector<Matrix> Problem::initial_params() const { return impl_->initial_params(); }

Problem make_problem(const ProblemSpec& spec) {
  spec.validate();
  ProblemSpec resolved = spec;
  if (resolved.kind == ProblemKind::noisy_quadratic && resolved.noise_sigma.empty()) {
    resolved.noise_sigma = {1.0};
  }
  Problem p;
  switch (resolved.kind) {
    case ProblemKind::quadratic:
    case ProblemKind::noisy_quadratic:
      p.impl_ = std::make_shared<QuadraticProblem>(resolved);
      break;
    case ProblemKind::logistic:
      p.impl_ = std::make_shared<LogisticProblem>(resolved);
      break;
    case ProblemKind::lowrank_factorization:
      p.impl_ = std::make_shared<LowRankProblem>(resolved);
      break;
    case ProblemKind::mlp2:
      p.impl_ = std::make_shared<Mlp2Problem>(resolved);
      break;
  }
  const auto sigmas = static_cast<Eigen::Index>(resolved.noise_sigma.size());
  if (sigmas > 1 && sigmas != total_coordinates(p.impl_->layout())) {
    throw std::invalid_argument(
        "problem.noise_sigma must be empty, a single value, or one value per coordinate");
  }
  return p;
}

double evaluate_loss(const Problem& p, const std::vector<Matrix>& params) {
  p.impl_->check_shapes(params);
  return p.impl_->loss(params);
}

std::vector<Matrix> exact_gradient(const Problem& p, const std::vector<Matrix>& params) {
  p.impl_->check_shapes(params);
  return p.impl_->gradient(params);
}

std::vector<Matrix> sample_gradient(const Problem& p, const std::vector<Matrix>& params,
                                    std::int64_t step) {
  std::vector<Matrix> grads = exact_gradient(p, params);
  const std::vector<double>& sigma = p.spec().noise_sigma;
  if (sigma.empty()) return grads;

  Eigen::Index offset = 0;
  for (std::size_t k = 0; k < grads.size(); ++k) {
    CounterRng rng = CounterRng::keyed(p.spec().seed, static_cast<std::uint64_t>(step),
                                       hash_string(p.layout()[k].id));
    Matrix& g = grads[k];
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.cols(); ++j) {
        const double s = sigma.size() == 1 ? sigma[0]
                                           : sigma[static_cast<std::size_t>(offset + i * g.cols() + j)];
        g(i, j) += s * rng.next_gaussian();
      }
    }
    offset += g.size();
  }
  return grads;
}

}  // namespace vamuon
