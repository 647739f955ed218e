// Dense complex linear algebra over labeled multipartite registers:
// composition, reduction, fidelity, norms, decompositions, measurement,
// and entropy. All operations are pure functions on immutable values.
#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixsamp/common.hpp"
#include "mixsamp/indexing.hpp"

namespace mixsamp {

// ---------------------------------------------------------------------------
// RegisterSystem

struct Factor {
  std::string label;
  int dim = 0;
};

/// An ordered, labeled tensor product of finite-dimensional subsystems.
/// Factor 0 is the leftmost tensor position and the most significant digit
/// of the composite index.
class RegisterSystem {
 public:
  RegisterSystem() = default;

  explicit RegisterSystem(std::vector<Factor> factors) : factors_(std::move(factors)) {
    for (const auto& f : factors_) {
      if (f.dim < 1) throw std::invalid_argument("RegisterSystem: factor dim must be positive");
      if (f.label.empty()) throw std::invalid_argument("RegisterSystem: empty label");
    }
    for (std::size_t i = 0; i < factors_.size(); ++i)
      for (std::size_t j = i + 1; j < factors_.size(); ++j)
        if (factors_[i].label == factors_[j].label)
          throw std::invalid_argument("RegisterSystem: duplicate label " + factors_[i].label);
  }

  static RegisterSystem single(const std::string& label, int dim) {
    return RegisterSystem({{label, dim}});
  }

  int size() const { return int(factors_.size()); }
  const Factor& factor(int i) const { return factors_.at(i); }
  const std::string& label(int i) const { return factors_.at(i).label; }
  int dim(int i) const { return factors_.at(i).dim; }

  long total_dim() const {
    long d = 1;
    for (const auto& f : factors_) d *= f.dim;
    return d;
  }

  std::vector<int> dims() const {
    std::vector<int> d(factors_.size());
    for (std::size_t i = 0; i < factors_.size(); ++i) d[i] = factors_[i].dim;
    return d;
  }

  bool has(const std::string& label) const {
    return std::any_of(factors_.begin(), factors_.end(),
                       [&](const Factor& f) { return f.label == label; });
  }

  int index_of(const std::string& label) const {
    for (std::size_t i = 0; i < factors_.size(); ++i)
      if (factors_[i].label == label) return int(i);
    throw std::invalid_argument("RegisterSystem: unknown label " + label);
  }

  RegisterSystem subsystem(const std::vector<int>& indices) const {
    std::vector<Factor> fs;
    fs.reserve(indices.size());
    for (int i : indices) fs.push_back(factors_.at(i));
    return RegisterSystem(std::move(fs));
  }

  RegisterSystem tensor_with(const RegisterSystem& other) const {
    std::vector<Factor> fs = factors_;
    fs.insert(fs.end(), other.factors_.begin(), other.factors_.end());
    return RegisterSystem(std::move(fs));
  }

  friend bool operator==(const RegisterSystem& a, const RegisterSystem& b) {
    if (a.size() != b.size()) return false;
    for (int i = 0; i < a.size(); ++i)
      if (a.label(i) != b.label(i) || a.dim(i) != b.dim(i)) return false;
    return true;
  }

 private:
  std::vector<Factor> factors_;
};

/// n like-named factors: prefix1 .. prefixn, each of dimension dim.
inline RegisterSystem make_registers(const std::string& prefix, int count, int dim) {
  std::vector<Factor> fs;
  fs.reserve(count);
  for (int i = 1; i <= count; ++i) fs.push_back({prefix + std::to_string(i), dim});
  return RegisterSystem(std::move(fs));
}

// ---------------------------------------------------------------------------
// QuantumState

/// A pure vector or density operator attached to a RegisterSystem.
/// May be subnormalized (trace <= 1); the trace of an accepted branch is the
/// probability of that branch.
class QuantumState {
 public:
  static QuantumState pure(RegisterSystem sys, Vec v) {
    if (v.size() != sys.total_dim())
      throw std::invalid_argument("QuantumState::pure: vector length != total dim");
    check_pure_dim(v.size());
    QuantumState s;
    s.sys_ = std::move(sys);
    s.pure_ = true;
    s.vec_ = std::move(v);
    return s;
  }

  static QuantumState mixed(RegisterSystem sys, Mat m) {
    if (m.rows() != m.cols() || m.rows() != sys.total_dim())
      throw std::invalid_argument("QuantumState::mixed: matrix shape != total dim");
    check_mixed_dim(m.rows());
    QuantumState s;
    s.sys_ = std::move(sys);
    s.pure_ = false;
    s.mat_ = std::move(m);
    return s;
  }

  bool is_pure() const { return pure_; }
  const RegisterSystem& system() const { return sys_; }
  long dim() const { return sys_.total_dim(); }

  const Vec& vector() const {
    if (!pure_) throw std::logic_error("QuantumState: not a pure state");
    return vec_;
  }

  /// Density operator view; materializes |v><v| for pure states.
  Mat density() const {
    if (pure_) return vec_ * vec_.adjoint();
    return mat_;
  }

  /// Trace (mixed) or squared norm (pure); equals the branch probability
  /// for subnormalized states.
  double norm_value() const {
    if (pure_) return vec_.squaredNorm();
    return mat_.trace().real();
  }

  QuantumState as_mixed() const {
    if (!pure_) return *this;
    check_mixed_dim(dim());
    return mixed(sys_, density());
  }

  /// Checks the representation invariants: PSD up to tol::psd and
  /// trace (squared norm) <= 1 + tol::tr.
  void validate() const {
    if (pure_) {
      if (vec_.squaredNorm() > 1.0 + tol::tr)
        throw std::invalid_argument("QuantumState: pure norm exceeds 1");
      return;
    }
    if ((mat_ - mat_.adjoint()).cwiseAbs().maxCoeff() > 1e-8)
      throw std::invalid_argument("QuantumState: density operator not Hermitian");
    if (min_eigenvalue(mat_) < -tol::psd)
      throw std::invalid_argument("QuantumState: density operator not PSD");
    if (mat_.trace().real() > 1.0 + tol::tr)
      throw std::invalid_argument("QuantumState: trace exceeds 1");
  }

 private:
  RegisterSystem sys_;
  bool pure_ = true;
  Vec vec_;
  Mat mat_;
};

// ---------------------------------------------------------------------------
// Composition and reduction

/// Kronecker product; dispatches on compile-time shape so both vectors and
/// matrices (and mixed pairs) compose.
template <typename DA, typename DB>
auto kron(const Eigen::MatrixBase<DA>& a_expr, const Eigen::MatrixBase<DB>& b_expr) {
  if constexpr (DA::ColsAtCompileTime == 1 && DB::ColsAtCompileTime == 1) {
    Vec a = a_expr, b = b_expr;
    Vec out(a.size() * b.size());
    for (long i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
    return out;
  } else {
    Mat a = a_expr, b = b_expr;
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); ++i)
      for (long j = 0; j < a.cols(); ++j)
        out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
  }
}

template <typename D>
auto kron_pow(const Eigen::MatrixBase<D>& a_expr, int n) {
  if constexpr (D::ColsAtCompileTime == 1) {
    Vec a = a_expr;
    Vec out = Vec::Ones(1);
    for (int i = 0; i < n; ++i) out = kron(out, a);
    return out;
  } else {
    Mat a = a_expr;
    Mat out = Mat::Identity(1, 1);
    for (int i = 0; i < n; ++i) out = kron(out, a);
    return out;
  }
}

/// Kronecker composition; the left argument occupies the lower (more
/// significant) factor indices.
inline QuantumState tensor(const QuantumState& a, const QuantumState& b) {
  RegisterSystem sys = a.system().tensor_with(b.system());
  if (a.is_pure() && b.is_pure()) {
    check_pure_dim(sys.total_dim());
    return QuantumState::pure(std::move(sys), kron(a.vector(), b.vector()));
  }
  check_mixed_dim(sys.total_dim());
  return QuantumState::mixed(std::move(sys), kron(a.density(), b.density()));
}

/// Reorders tensor factors into the given label order (a permutation of the
/// existing labels).
inline QuantumState reorder_state(const QuantumState& s, const std::vector<std::string>& new_order) {
  const auto& sys = s.system();
  if (int(new_order.size()) != sys.size())
    throw std::invalid_argument("reorder_state: label count mismatch");
  std::vector<int> order(new_order.size());
  for (std::size_t i = 0; i < new_order.size(); ++i) order[i] = sys.index_of(new_order[i]);
  auto map = detail::reorder_index_map(sys.dims(), order);
  RegisterSystem new_sys = sys.subsystem(order);
  if (s.is_pure()) return QuantumState::pure(std::move(new_sys), detail::apply_index_map(s.vector(), map));
  return QuantumState::mixed(std::move(new_sys), detail::apply_index_map(s.density(), map));
}

/// Reduced state on the kept labels (in their original relative order);
/// trace is preserved.
inline QuantumState partial_trace(const QuantumState& state, const std::vector<std::string>& keep) {
  const auto& sys = state.system();
  std::vector<bool> kept(sys.size(), false);
  for (const auto& l : keep) kept[sys.index_of(l)] = true;

  std::vector<int> keep_idx, trace_idx;
  for (int i = 0; i < sys.size(); ++i) (kept[i] ? keep_idx : trace_idx).push_back(i);
  if (trace_idx.empty()) return state.as_mixed();

  RegisterSystem out_sys = sys.subsystem(keep_idx);
  check_mixed_dim(out_sys.total_dim());

  // Reorder so kept factors are leftmost, then sum over the trailing block.
  std::vector<int> order = keep_idx;
  order.insert(order.end(), trace_idx.begin(), trace_idx.end());
  auto map = detail::reorder_index_map(sys.dims(), order);

  const long dk = out_sys.total_dim();
  const long dt = sys.total_dim() / dk;
  Mat out = Mat::Zero(dk, dk);
  if (state.is_pure()) {
    const Vec& v = state.vector();
    // out(r,c) = sum_t v[(r,t)] conj(v[(c,t)])
    Mat resh(dk, dt);
    for (long r = 0; r < dk; ++r)
      for (long t = 0; t < dt; ++t) resh(r, t) = v[map[r * dt + t]];
    out = resh * resh.adjoint();
  } else {
    const Mat& m = state.density();
    for (long r = 0; r < dk; ++r)
      for (long c = 0; c < dk; ++c) {
        cxd acc(0, 0);
        for (long t = 0; t < dt; ++t) acc += m(map[r * dt + t], map[c * dt + t]);
        out(r, c) = acc;
      }
  }
  return QuantumState::mixed(std::move(out_sys), std::move(out));
}

// ---------------------------------------------------------------------------
// Norms, fidelity, entropy

/// Sum of singular values.
inline double trace_norm(const Mat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("trace_norm: matrix not square");
  if (a.rows() == 0) return 0.0;
  Eigen::BDCSVD<Mat> svd(a);
  return svd.singularValues().sum();
}

/// Squared Uhlmann fidelity F(rho, sigma)^2 via eigendecomposition of
/// sqrt(rho) sigma sqrt(rho) with eigenvalue clamping at zero.
inline double fidelity_sq(const QuantumState& rho, const QuantumState& sigma) {
  if (!(rho.system() == sigma.system()))
    throw std::invalid_argument("fidelity_sq: states on different systems");
  if (std::abs(rho.norm_value() - 1.0) > 1e-6 || std::abs(sigma.norm_value() - 1.0) > 1e-6)
    throw std::invalid_argument("fidelity_sq: states must be normalized");
  Mat r = rho.density(), s = sigma.density();
  if (min_eigenvalue(r) < -tol::psd || min_eigenvalue(s) < -tol::psd)
    throw std::invalid_argument("fidelity_sq: input not PSD");
  Mat sr = psd_sqrt(r);
  Mat m = sr * s * sr;
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  double f = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return f * f;
}

/// H_min = -log2 of the largest eigenvalue; subnormalized inputs allowed.
inline double min_entropy(const QuantumState& rho) {
  double lmax = rho.is_pure() ? rho.vector().squaredNorm() : max_eigenvalue(rho.density());
  if (lmax <= 0.0) throw std::invalid_argument("min_entropy: zero operator");
  return -std::log2(lmax);
}

/// H_min of a classical (sub)distribution: -log2 of the largest entry.
inline double min_entropy_classical(const std::vector<double>& p) {
  double m = 0.0;
  for (double x : p) m = std::max(m, x);
  if (m <= 0.0) throw std::invalid_argument("min_entropy_classical: zero distribution");
  return -std::log2(m);
}

// ---------------------------------------------------------------------------
// Purification and Schmidt decomposition

/// Canonical square-root purification. The purifying factor is prepended
/// with the given label; tracing it out reproduces the input.
inline QuantumState purify(const QuantumState& rho, const std::string& purifier_label = "R") {
  Mat root = psd_sqrt(rho.density());
  const long d = root.rows();
  RegisterSystem sys = RegisterSystem::single(purifier_label, int(d)).tensor_with(rho.system());
  check_pure_dim(sys.total_dim());
  Vec v(d * d);
  // |w> = sum_{rs} sqrt(rho)[s,r] |r>|s>, so tr_R |w><w| = rho.
  for (long r = 0; r < d; ++r)
    for (long s = 0; s < d; ++s) v[r * d + s] = root(s, r);
  return QuantumState::pure(std::move(sys), std::move(v));
}

struct SchmidtData {
  RVec coefficients;                 // descending, sum <= 1 + tol
  std::vector<Vec> left_basis;       // orthonormal vectors on the cut side
  std::vector<Vec> right_basis;      // orthonormal vectors on the complement
};

/// Schmidt decomposition of a pure state across the given cut (labels of the
/// left side). Coefficients are the squared Schmidt weights, descending.
inline SchmidtData schmidt(const QuantumState& psi, const std::vector<std::string>& cut) {
  if (!psi.is_pure()) throw std::invalid_argument("schmidt: input must be pure");
  const auto& sys = psi.system();
  std::vector<bool> in_cut(sys.size(), false);
  for (const auto& l : cut) in_cut[sys.index_of(l)] = true;
  std::vector<int> left, right;
  for (int i = 0; i < sys.size(); ++i) (in_cut[i] ? left : right).push_back(i);
  if (left.empty() || right.empty()) throw std::invalid_argument("schmidt: degenerate cut");

  std::vector<int> order = left;
  order.insert(order.end(), right.begin(), right.end());
  auto map = detail::reorder_index_map(sys.dims(), order);
  const long dl = sys.subsystem(left).total_dim();
  const long dr = sys.total_dim() / dl;
  Mat m(dl, dr);
  for (long i = 0; i < dl; ++i)
    for (long j = 0; j < dr; ++j) m(i, j) = psi.vector()[map[i * dr + j]];

  Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SchmidtData out;
  const long rank = svd.singularValues().size();
  out.coefficients = svd.singularValues().cwiseAbs2();
  out.left_basis.reserve(rank);
  out.right_basis.reserve(rank);
  for (long i = 0; i < rank; ++i) {
    out.left_basis.push_back(svd.matrixU().col(i));
    out.right_basis.push_back(svd.matrixV().col(i).conjugate());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Measurement

struct PovmOutcome {
  double probability = 0.0;
  QuantumState post_state;  // subnormalized by the branch probability
};

/// POVM measurement. Elements must be PSD; they must sum to the identity
/// unless `require_complete` is relaxed for trace-non-increasing branches
/// (then the sum may fall short of the identity).
inline std::vector<PovmOutcome> measure_povm(const QuantumState& state,
                                             const std::vector<Mat>& elements,
                                             bool require_complete = true) {
  if (elements.empty()) throw std::invalid_argument("measure_povm: no elements");
  const long d = state.dim();
  Mat sum = Mat::Zero(d, d);
  for (const auto& e : elements) {
    if (e.rows() != d || e.cols() != d) throw std::invalid_argument("measure_povm: element shape");
    if (min_eigenvalue(e) < -tol::psd) throw std::invalid_argument("measure_povm: element not PSD");
    sum += e;
  }
  Mat defect = Mat::Identity(d, d) - sum;
  if (require_complete) {
    if (defect.cwiseAbs().maxCoeff() > 1e-7)
      throw std::invalid_argument("measure_povm: elements do not sum to identity");
  } else if (min_eigenvalue(defect) < -tol::psd) {
    throw std::invalid_argument("measure_povm: element sum exceeds identity");
  }

  Mat rho = state.density();
  std::vector<PovmOutcome> outcomes;
  outcomes.reserve(elements.size());
  for (const auto& e : elements) {
    Mat root = psd_sqrt(e);
    Mat post = root * rho * root;
    outcomes.push_back({(e * rho).trace().real(), QuantumState::mixed(state.system(), std::move(post))});
  }
  return outcomes;
}

/// Optimal probability of distinguishing two subnormalized states whose
/// traces encode the priors (combined trace 1):
/// 1/2 + 1/2 ||rho0 - rho1||_1.
inline double helstrom_guess(const QuantumState& rho0, const QuantumState& rho1) {
  if (!(rho0.system() == rho1.system()))
    throw std::invalid_argument("helstrom_guess: states on different systems");
  double total = rho0.norm_value() + rho1.norm_value();
  if (std::abs(total - 1.0) > tol::tr)
    throw std::invalid_argument("helstrom_guess: combined trace must be 1");
  return 0.5 + 0.5 * trace_norm(rho0.density() - rho1.density());
}

// ---------------------------------------------------------------------------
// ReferenceState

/// The agreed pair (phi_S, |phi_PS>): a mixed reference state on one S factor
/// and the purification both parties use, on P tensor S.
struct ReferenceState {
  QuantumState phi_S;   // mixed, normalized, dim d
  QuantumState phi_PS;  // pure on [P, S], dim d^2

  int dim() const { return int(phi_S.dim()); }
  const Vec& purification() const { return phi_PS.vector(); }

  /// Checks that tracing out P reproduces phi_S.
  void validate() const {
    QuantumState red = partial_trace(phi_PS, {"S"});
    if ((red.density() - phi_S.density()).cwiseAbs().maxCoeff() > tol::eq)
      throw std::invalid_argument("ReferenceState: purification does not reduce to phi_S");
  }

  static ReferenceState from_purification(Vec phi_ps, int d) {
    RegisterSystem ps({{"P", d}, {"S", d}});
    auto pure = QuantumState::pure(ps, std::move(phi_ps));
    auto red = partial_trace(pure, {"S"});
    ReferenceState ref{std::move(red), std::move(pure)};
    return ref;
  }

  static ReferenceState from_mixed(const Mat& phi_s) {
    const int d = int(phi_s.rows());
    QuantumState s = QuantumState::mixed(RegisterSystem::single("S", d), phi_s);
    QuantumState ps = purify(s, "P");
    return ReferenceState{std::move(s), std::move(ps)};
  }

  /// phi = I/2 with the EPR purification (|00> + |11>)/sqrt(2).
  static ReferenceState epr() {
    Vec v(4);
    v << 1.0 / std::sqrt(2.0), 0, 0, 1.0 / std::sqrt(2.0);
    return from_purification(std::move(v), 2);
  }
};

}  // namespace mixsamp
