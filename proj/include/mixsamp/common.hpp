// Shared numeric conventions: tolerances, dimension ceilings, error types,
// and a few scalar helpers used across the library.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mixsamp {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using Rng = std::mt19937_64;

namespace tol {
// Minimum eigenvalue allowed before an operator is rejected as non-PSD.
inline constexpr double psd = 1e-9;
// Entrywise / operator-norm equality.
inline constexpr double eq = 1e-9;
// Trace and norm deviations.
inline constexpr double tr = 1e-9;
}  // namespace tol

namespace limits {
// Dense density-operator math above this dimension is disallowed.
inline constexpr long max_mixed_dim = 4096;
// Pure state vectors may be larger.
inline constexpr long max_pure_dim = 1L << 24;
}  // namespace limits

// Raised when a requested object would exceed the configured dimension
// ceilings. The CLI maps this to its resource exit code.
class dimension_error : public std::runtime_error {
 public:
  explicit dimension_error(const std::string& what) : std::runtime_error(what) {}
};

inline void check_mixed_dim(long dim) {
  if (dim > limits::max_mixed_dim)
    throw dimension_error("mixed-state dimension " + std::to_string(dim) +
                          " exceeds ceiling " + std::to_string(limits::max_mixed_dim));
}

inline void check_pure_dim(long dim) {
  if (dim > limits::max_pure_dim)
    throw dimension_error("pure-state dimension " + std::to_string(dim) +
                          " exceeds ceiling " + std::to_string(limits::max_pure_dim));
}

/// Binary entropy h(p) = -p log2 p - (1-p) log2 (1-p), h(0) = h(1) = 0.
inline double binary_entropy(double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("binary_entropy: p outside [0,1]");
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

/// Exact binomial coefficient; throws on overflow of unsigned 64-bit.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;  // exact: product of i consecutive integers
    if (result > UINT64_MAX) throw std::overflow_error("binomial overflow");
  }
  return static_cast<std::uint64_t>(result);
}

inline std::uint64_t factorial(unsigned n) {
  std::uint64_t r = 1;
  for (unsigned i = 2; i <= n; ++i) {
    if (r > UINT64_MAX / i) throw std::overflow_error("factorial overflow");
    r *= i;
  }
  return r;
}

/// log(exp(a) + exp(b)) without leaving log space.
inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

/// Pr[Binomial(n, q) <= r], exact in log space, summed from the smaller tail.
/// Handles n up to around 1e6 without underflow.
inline double binomial_tail_leq(std::int64_t n, double q, std::int64_t r) {
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("binomial_tail_leq: q outside [0,1]");
  if (r < 0) return 0.0;
  if (r >= n) return 1.0;
  if (q == 0.0) return 1.0;
  if (q == 1.0) return 0.0;
  const double lq = std::log(q), l1q = std::log1p(-q);
  auto log_pmf = [&](std::int64_t j) {
    return std::lgamma(double(n + 1)) - std::lgamma(double(j + 1)) -
           std::lgamma(double(n - j + 1)) + double(j) * lq + double(n - j) * l1q;
  };
  const double mean = double(n) * q;
  double log_sum = -std::numeric_limits<double>::infinity();
  if (double(r) <= mean) {
    for (std::int64_t j = 0; j <= r; ++j) log_sum = log_add_exp(log_sum, log_pmf(j));
    return std::exp(log_sum);
  }
  for (std::int64_t j = r + 1; j <= n; ++j) log_sum = log_add_exp(log_sum, log_pmf(j));
  return 1.0 - std::exp(log_sum);
}

/// Hermitian part of a matrix; cheap guard against numerical drift before
/// feeding a self-adjoint eigensolver.
inline Mat hermitian_part(const Mat& a) { return 0.5 * (a + a.adjoint()); }

inline double min_eigenvalue(const Mat& hermitian) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(hermitian), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Mat& hermitian) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(hermitian), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// PSD square root with eigenvalue clamping at zero.
inline Mat psd_sqrt(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(a));
  RVec lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace mixsamp
