#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace vamuon {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& a, const char* what) {
  if (!a.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  }
}

/// Thin SVD of a dense matrix: A = U * diag(s) * V^T with r = min(m, n)
/// columns in U and V and singular values in descending order.
template <typename Scalar>
struct SvdResult {
  Mat<Scalar> u;
  Vec<Scalar> singular_values;
  Mat<Scalar> v;
};

inline constexpr Eigen::Index kSvdDimLimit = 512;

// Exact (Jacobi) SVD, intended as a verification oracle at desk scale.
template <typename Scalar>
SvdResult<Scalar> svd_small(const Mat<Scalar>& a) {
  require_finite(a, "svd_small");
  if (std::min(a.rows(), a.cols()) > kSvdDimLimit) {
    throw std::invalid_argument("svd_small: min(m,n) exceeds the 512 oracle limit");
  }
  Eigen::JacobiSVD<Mat<Scalar>> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

/// Orthogonal polar factor U * V^T. Throws on (numerically) rank-deficient
/// input, where the polar factor is not unique.
template <typename Scalar>
Mat<Scalar> polar_factor_exact(const Mat<Scalar>& a) {
  const SvdResult<Scalar> svd = svd_small(a);
  const auto& s = svd.singular_values;
  if (s.size() == 0 || s(s.size() - 1) < Scalar(1e-12) * s(0)) {
    throw std::domain_error("polar_factor_exact: rank-deficient input");
  }
  return svd.u * svd.v.transpose();
}

/// Coefficients of the quintic Newton-Schulz iterate
/// X <- a*X + b*(X X^T) X + c*(X X^T)^2 X.
template <typename Scalar>
struct NsCoefficients {
  Scalar a;
  Scalar b;
  Scalar c;
};

template <typename Scalar>
constexpr NsCoefficients<Scalar> default_ns_coefficients() {
  return {Scalar(3.4445), Scalar(-4.7750), Scalar(2.0315)};
}

inline constexpr int kDefaultNsIterations = 5;

/// Approximate matrix sign (orthogonal polar factor) via K quintic
/// Newton-Schulz iterations. The input is pre-normalized by its Frobenius
/// norm, so the operator is scale-invariant: newton_schulz(c*A) agrees with
/// newton_schulz(A) for any c > 0 up to the rounding of the divide.
template <typename Scalar>
Mat<Scalar> newton_schulz(const Mat<Scalar>& a, int iterations = kDefaultNsIterations,
                          const NsCoefficients<Scalar>& coeffs = default_ns_coefficients<Scalar>()) {
  require_finite(a, "newton_schulz");
  if (iterations < 1) {
    throw std::invalid_argument("newton_schulz: iterations must be >= 1");
  }
  const Scalar fnorm = a.norm();
  if (fnorm == Scalar(0)) {
    throw std::domain_error("newton_schulz: zero input matrix");
  }
  // Keep the Gram product at the smaller dimension.
  const bool transposed = a.rows() > a.cols();
  Mat<Scalar> x = transposed ? Mat<Scalar>(a.transpose() / fnorm) : Mat<Scalar>(a / fnorm);
  for (int k = 0; k < iterations; ++k) {
    const Mat<Scalar> gram = x * x.transpose();
    x = coeffs.a * x + (coeffs.b * gram + coeffs.c * gram * gram) * x;
  }
  return transposed ? Mat<Scalar>(x.transpose()) : x;
}

}  // namespace vamuon
