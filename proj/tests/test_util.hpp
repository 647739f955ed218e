// Shared helpers for the test suites: random state generation and
// independent brute-force oracles kept separate from the library path.
#pragma once

#include <random>
#include <vector>

#include "mixsamp/qcore.hpp"

namespace testutil {

using namespace mixsamp;

inline Vec random_vector(long dim, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(dim);
  for (long i = 0; i < dim; ++i) v[i] = cxd(g(rng), g(rng));
  return v;
}

/// Haar-random unit vector.
inline Vec haar_vector(long dim, Rng& rng) {
  Vec v = random_vector(dim, rng);
  return v / v.norm();
}

/// Random density operator (normalized, full rank almost surely).
inline Mat random_density(long dim, Rng& rng) {
  Mat a(dim, dim);
  std::normal_distribution<double> g(0.0, 1.0);
  for (long i = 0; i < dim; ++i)
    for (long j = 0; j < dim; ++j) a(i, j) = cxd(g(rng), g(rng));
  Mat rho = a * a.adjoint();
  return rho / rho.trace().real();
}

/// Haar-random unitary via QR with phase fixing.
inline Mat haar_unitary(long dim, Rng& rng) {
  Mat a(dim, dim);
  std::normal_distribution<double> g(0.0, 1.0);
  for (long i = 0; i < dim; ++i)
    for (long j = 0; j < dim; ++j) a(i, j) = cxd(g(rng), g(rng));
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (long i = 0; i < dim; ++i) {
    cxd d = r(i, i);
    q.col(i) *= d / std::abs(d);
  }
  return q;
}

/// Haar-random isometry: in_dim columns of a Haar unitary on out_dim.
inline Mat haar_isometry(long out_dim, long in_dim, Rng& rng) {
  return haar_unitary(out_dim, rng).leftCols(in_dim);
}

/// Brute-force partial trace by double index summation, independent of the
/// library's implementation.
inline Mat partial_trace_oracle(const Mat& m, const std::vector<int>& dims,
                                const std::vector<int>& keep) {
  std::vector<int> traced;
  for (int i = 0; i < int(dims.size()); ++i)
    if (std::find(keep.begin(), keep.end(), i) == keep.end()) traced.push_back(i);
  auto strides = mixsamp::detail::strides(dims);
  long dk = 1;
  for (int i : keep) dk *= dims[i];
  Mat out = Mat::Zero(dk, dk);
  long total = m.rows();
  std::vector<int> dr(dims.size()), dc(dims.size());
  for (long r = 0; r < total; ++r) {
    mixsamp::detail::decode(r, strides, dr);
    for (long c = 0; c < total; ++c) {
      mixsamp::detail::decode(c, strides, dc);
      bool diag = true;
      for (int t : traced)
        if (dr[t] != dc[t]) { diag = false; break; }
      if (!diag) continue;
      long kr = 0, kc = 0;
      for (int i : keep) {
        kr = kr * dims[i] + dr[i];
        kc = kc * dims[i] + dc[i];
      }
      out(kr, kc) += m(r, c);
    }
  }
  return out;
}

}  // namespace testutil
