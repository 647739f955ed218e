// Permutation group action on registers, symmetric-subspace projectors,
// symmetrization, and symmetric purifications.
#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

#include "mixsamp/qcore.hpp"

namespace mixsamp {

// ---------------------------------------------------------------------------
// Permutation

/// A bijection on [0, n). pi(j) is the position the content of input
/// position j moves to; the induced operator realizes
///   |phi_1> ... |phi_n>  ->  |phi_{pi^{-1}(1)}> ... |phi_{pi^{-1}(n)}>.
class Permutation {
 public:
  Permutation() = default;

  explicit Permutation(std::vector<int> mapping) : map_(std::move(mapping)) {
    std::vector<bool> seen(map_.size(), false);
    for (int v : map_) {
      if (v < 0 || v >= int(map_.size()) || seen[v])
        throw std::invalid_argument("Permutation: mapping is not a bijection");
      seen[v] = true;
    }
  }

  static Permutation identity(int n) {
    std::vector<int> m(n);
    std::iota(m.begin(), m.end(), 0);
    return Permutation(std::move(m));
  }

  int size() const { return int(map_.size()); }
  int operator()(int j) const { return map_.at(j); }
  const std::vector<int>& mapping() const { return map_; }

  Permutation inverse() const {
    std::vector<int> inv(map_.size());
    for (int j = 0; j < size(); ++j) inv[map_[j]] = j;
    return Permutation(std::move(inv));
  }

  /// (a.compose(b))(j) = a(b(j)): apply b first.
  Permutation compose(const Permutation& b) const {
    if (size() != b.size()) throw std::invalid_argument("Permutation: size mismatch");
    std::vector<int> m(map_.size());
    for (int j = 0; j < size(); ++j) m[j] = map_[b(j)];
    return Permutation(std::move(m));
  }

  bool is_identity() const {
    for (int j = 0; j < size(); ++j)
      if (map_[j] != j) return false;
    return true;
  }

  friend bool operator==(const Permutation& a, const Permutation& b) { return a.map_ == b.map_; }
  friend bool operator<(const Permutation& a, const Permutation& b) { return a.map_ < b.map_; }

  /// All n! permutations in lexicographic order of their mapping arrays.
  static std::vector<Permutation> all(int n) {
    std::vector<int> m(n);
    std::iota(m.begin(), m.end(), 0);
    std::vector<Permutation> out;
    do {
      out.push_back(Permutation(m));
    } while (std::next_permutation(m.begin(), m.end()));
    return out;
  }

 private:
  std::vector<int> map_;
};

namespace detail {

/// Composite-index map for the factor action of pi on n like factors:
/// out[composite] = in[preimage composite], digit at position pi(j) comes
/// from digit at position j.
inline std::vector<long> permutation_index_map(const Permutation& pi, int local_dim) {
  const int n = pi.size();
  std::vector<int> dims(n, local_dim);
  // new position i holds old factor pi^{-1}(i): reorder with order[i] = pi^{-1}(i)
  return reorder_index_map(dims, pi.inverse().mapping());
}

}  // namespace detail

/// The unitary realizing the factor action of pi on n factors of the given
/// local dimension.
inline Mat permutation_operator(const Permutation& pi, int local_dim) {
  auto map = detail::permutation_index_map(pi, local_dim);
  Mat op = Mat::Zero(long(map.size()), long(map.size()));
  for (long j = 0; j < long(map.size()); ++j) op(j, map[j]) = 1.0;
  return op;
}

/// Permutes paired factors (P_i S_i) jointly, keeping each pair's internal
/// order; assumes the interleaved layout [P_1 S_1 P_2 S_2 ...].
inline Mat block_permutation_operator(const Permutation& pi, int dim_p, int dim_s) {
  return permutation_operator(pi, dim_p * dim_s);
}

/// Applies the factor action of pi to a state whose factors all share one
/// dimension (or pair dimension); cheaper than multiplying by the operator.
inline Vec permute_vector(const Permutation& pi, int local_dim, const Vec& v) {
  auto map = detail::permutation_index_map(pi, local_dim);
  Vec out(v.size());
  for (long j = 0; j < v.size(); ++j) out[j] = v[map[j]];
  return out;
}

inline Mat permute_operator(const Permutation& pi, int local_dim, const Mat& m) {
  auto map = detail::permutation_index_map(pi, local_dim);
  Mat out(m.rows(), m.cols());
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c) out(r, c) = m(map[r], map[c]);
  return out;
}

// ---------------------------------------------------------------------------
// Sample decomposition

/// Decomposition of pi on [N] into the sample it induces, the reorder within
/// the sample, and the reorder of the remainder:
///   V^{[k]} . pi = (tau_bar (x) tau) . V^{t},
/// where V^{t} groups unsampled factors first (sorted) and sampled factors
/// last (sorted).
struct PermDecomposition {
  std::vector<int> sample;  // t_pi, sorted, size k
  Permutation tau;          // on [k], acts on the sampled block
  Permutation tau_bar;      // on [N-k], acts on the unsampled block
};

/// Factor-position map of the grouping isometry V^t: input factor i goes to
/// slot rank(i in complement) if unsampled, n + rank(i in t) if sampled.
inline Permutation grouping_permutation(const std::vector<int>& sample_sorted, int total) {
  const int k = int(sample_sorted.size());
  const int n = total - k;
  std::vector<bool> sampled(total, false);
  for (int i : sample_sorted) sampled.at(i) = true;
  std::vector<int> map(total);
  int unsampled_rank = 0, sample_rank = 0;
  for (int i = 0; i < total; ++i) {
    if (sampled[i])
      map[i] = n + sample_rank++;
    else
      map[i] = unsampled_rank++;
  }
  return Permutation(std::move(map));
}

inline PermDecomposition decompose_permutation(const Permutation& pi, int k) {
  const int n_total = pi.size();
  if (k <= 0 || k >= n_total) throw std::invalid_argument("decompose_permutation: need 0 < k < N");
  const int n = n_total - k;
  Permutation inv = pi.inverse();
  std::vector<int> sample(k);
  for (int i = 0; i < k; ++i) sample[i] = inv(i);
  std::sort(sample.begin(), sample.end());

  std::vector<int> complement;
  complement.reserve(n);
  {
    std::vector<bool> sampled(n_total, false);
    for (int i : sample) sampled[i] = true;
    for (int i = 0; i < n_total; ++i)
      if (!sampled[i]) complement.push_back(i);
  }

  std::vector<int> tau(k), tau_bar(n);
  for (int r = 0; r < k; ++r) tau[r] = pi(sample[r]);
  for (int r = 0; r < n; ++r) tau_bar[r] = pi(complement[r]) - k;
  return PermDecomposition{std::move(sample), Permutation(std::move(tau)),
                           Permutation(std::move(tau_bar))};
}

// ---------------------------------------------------------------------------
// Symmetric subspace

struct SymmetrySpec {
  int n = 0;  // copy count
  int d = 0;  // local dimension
};

/// dim Sym^n(C^d) = binom(n+d-1, n); also checks the (n+1)^{d-1} bound.
inline std::uint64_t sym_dim(const SymmetrySpec& spec) {
  if (spec.n < 1 || spec.d < 1) throw std::invalid_argument("sym_dim: bad spec");
  std::uint64_t c = binomial(std::uint64_t(spec.n) + spec.d - 1, spec.n);
  // upper bound used throughout the analysis; cheap to assert here
  long double bound = std::pow((long double)(spec.n + 1), (long double)(spec.d - 1));
  if ((long double)c > bound * (1 + 1e-12))
    throw std::logic_error("sym_dim: dimension exceeds (n+1)^(d-1) bound");
  return c;
}

/// Orthogonal projector onto Sym^n(C^d), built by permutation averaging.
inline Mat sym_projector(const SymmetrySpec& spec) {
  long dim = 1;
  for (int i = 0; i < spec.n; ++i) dim *= spec.d;
  check_mixed_dim(dim);
  Mat acc = Mat::Zero(dim, dim);
  auto perms = Permutation::all(spec.n);
  for (const auto& pi : perms) acc += permutation_operator(pi, spec.d);
  return acc / double(perms.size());
}

/// Rank via eigenvalue rounding at 1/2; projector spectra are {0,1} up to
/// noise far below that threshold.
inline long projector_rank(const Mat& p) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(p), Eigen::EigenvaluesOnly);
  long rank = 0;
  for (long i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] > 0.5) ++rank;
  return rank;
}

enum class Pairing { none, pairs };

/// (1/n!) sum_pi pi rho pi^dagger over like factors, or over (P_i S_i) pairs
/// in the interleaved layout when paired.
inline QuantumState symmetrize(const QuantumState& rho, Pairing pairing = Pairing::none) {
  const auto& sys = rho.system();
  int n, local;
  if (pairing == Pairing::pairs) {
    if (sys.size() % 2 != 0) throw std::invalid_argument("symmetrize: odd factor count for pairs");
    n = sys.size() / 2;
    local = sys.dim(0) * sys.dim(1);
    for (int i = 0; i < n; ++i)
      if (sys.dim(2 * i) != sys.dim(0) || sys.dim(2 * i + 1) != sys.dim(1))
        throw std::invalid_argument("symmetrize: mismatched pair dims");
  } else {
    n = sys.size();
    local = sys.dim(0);
    for (int i = 0; i < n; ++i)
      if (sys.dim(i) != local) throw std::invalid_argument("symmetrize: mismatched factor dims");
  }
  Mat acc = Mat::Zero(rho.dim(), rho.dim());
  auto perms = Permutation::all(n);
  Mat dense = rho.density();
  for (const auto& pi : perms) acc += permute_operator(pi, local, dense);
  return QuantumState::mixed(sys, acc / double(perms.size()));
}

/// Whether rho commutes with every (pair) permutation, within tolerance.
inline bool is_permutation_invariant(const QuantumState& rho, Pairing pairing = Pairing::none,
                                     double tolerance = tol::eq) {
  Mat dense = rho.density();
  int n = pairing == Pairing::pairs ? rho.system().size() / 2 : rho.system().size();
  int local = pairing == Pairing::pairs ? rho.system().dim(0) * rho.system().dim(1)
                                        : rho.system().dim(0);
  for (const auto& pi : Permutation::all(n))
    if ((permute_operator(pi, local, dense) - dense).cwiseAbs().maxCoeff() > tolerance) return false;
  return true;
}

/// Symmetric purification of a permutation-invariant state on S^N: a pure
/// state on the interleaved pair layout [P_1 S_1 ... P_N S_N] that lies in
/// Sym^N(P (x) S) and reduces to the input on S^N.
///
/// Construction: |w> = (sqrt(rho) (x) 1) |Gamma>^{(x)N} with per-pair
/// unnormalized Bell vectors; membership is verified and a failure above
/// tolerance reported by exception.
inline QuantumState symmetric_purification(const QuantumState& rho) {
  const auto& sys = rho.system();
  const int n = sys.size();
  const int d = sys.dim(0);
  for (int i = 0; i < n; ++i)
    if (sys.dim(i) != d) throw std::invalid_argument("symmetric_purification: unequal dims");
  if (!is_permutation_invariant(rho))
    throw std::invalid_argument("symmetric_purification: input not permutation invariant");

  const long ds = rho.dim();
  check_pure_dim(ds * ds);
  Mat root = psd_sqrt(rho.density());

  // Block layout [P-block, S-block]: amplitude at (p, s) is sqrt(rho)[s, p].
  Vec block(ds * ds);
  for (long p = 0; p < ds; ++p)
    for (long s = 0; s < ds; ++s) block[p * ds + s] = root(s, p);

  // Interleave to [P_1 S_1 ... P_N S_N].
  std::vector<Factor> fs;
  for (int i = 1; i <= n; ++i) {
    fs.push_back({"P" + std::to_string(i), d});
    fs.push_back({"S" + std::to_string(i), d});
  }
  RegisterSystem pair_sys{fs};
  std::vector<int> dims(2 * n, d);
  std::vector<int> order(2 * n);  // order[new] = old position in [P-block S-block]
  for (int i = 0; i < n; ++i) {
    order[2 * i] = i;          // P_i
    order[2 * i + 1] = n + i;  // S_i
  }
  auto map = detail::reorder_index_map(dims, order);
  QuantumState out = QuantumState::pure(pair_sys, detail::apply_index_map(block, map));

  // Verify Sym^N membership when the projector is affordable.
  if (ds * ds <= limits::max_mixed_dim) {
    Mat proj = sym_projector({n, d * d});
    double residual = (proj * out.vector() - out.vector()).norm();
    if (residual > 1e-7)
      throw std::runtime_error("symmetric_purification: symmetric-subspace membership failed");
  }
  return out;
}

}  // namespace mixsamp
