// Mixed-radix index arithmetic over tensor factors.
//
// Convention used everywhere: factor 0 is the leftmost tensor position and
// the most significant digit of the composite index, so kron(A, B) indexes
// as (a * dimB + b).
#pragma once

#include <numeric>
#include <vector>

#include "mixsamp/common.hpp"

namespace mixsamp::detail {

inline long product(const std::vector<int>& dims) {
  long p = 1;
  for (int d : dims) p *= d;
  return p;
}

/// strides[i] = product of dims to the right of factor i.
inline std::vector<long> strides(const std::vector<int>& dims) {
  std::vector<long> s(dims.size(), 1);
  for (int i = int(dims.size()) - 2; i >= 0; --i) s[i] = s[i + 1] * dims[i + 1];
  return s;
}

inline void decode(long index, const std::vector<long>& strides, std::vector<int>& digits) {
  for (std::size_t i = 0; i < strides.size(); ++i) {
    digits[i] = int(index / strides[i]);
    index %= strides[i];
  }
}

inline long encode(const std::vector<int>& digits, const std::vector<long>& strides) {
  long index = 0;
  for (std::size_t i = 0; i < strides.size(); ++i) index += digits[i] * strides[i];
  return index;
}

/// Index map realizing a reordering of tensor factors.
///
/// `order[i]` is the old factor occupying new position i. Returns `map` such
/// that reordered[j] = original[map[j]] for every new composite index j.
inline std::vector<long> reorder_index_map(const std::vector<int>& dims,
                                           const std::vector<int>& order) {
  const std::size_t n = dims.size();
  if (order.size() != n) throw std::invalid_argument("reorder_index_map: order size mismatch");
  std::vector<int> new_dims(n);
  for (std::size_t i = 0; i < n; ++i) new_dims[i] = dims[order[i]];
  const auto old_strides = strides(dims);
  const auto new_strides = strides(new_dims);
  const long total = product(dims);
  std::vector<long> map(total);
  std::vector<int> digits(n);
  for (long j = 0; j < total; ++j) {
    decode(j, new_strides, digits);
    long old_index = 0;
    for (std::size_t i = 0; i < n; ++i) old_index += long(digits[i]) * old_strides[order[i]];
    map[j] = old_index;
  }
  return map;
}

inline Vec apply_index_map(const Vec& v, const std::vector<long>& map) {
  Vec out(v.size());
  for (long j = 0; j < v.size(); ++j) out[j] = v[map[j]];
  return out;
}

inline Mat apply_index_map(const Mat& m, const std::vector<long>& map) {
  Mat out(m.rows(), m.cols());
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c) out(r, c) = m(map[r], map[c]);
  return out;
}

}  // namespace mixsamp::detail
