// Two-party sampling protocols as executable state machines: the
// purification-based and EPR-LOCC instantiations of the general
// choose-challenge-measure framework, prover and sampler strategies, exact
// accepted-channel computation, and the symmetrized-adversary construction.
#pragma once

#include <array>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixsamp/idealball.hpp"
#include "mixsamp/opcalc.hpp"
#include "mixsamp/symmetry.hpp"

namespace mixsamp {

enum class ProtocolKind { purification, epr_locc };
enum class RunMode { exact, trajectory };

inline std::string to_string(ProtocolKind k) {
  return k == ProtocolKind::purification ? "purification" : "epr_locc";
}

struct ProtocolParams {
  int N = 0;
  int k = 0;
  ReferenceState ref = ReferenceState::epr();
  ProtocolKind kind = ProtocolKind::purification;

  int n() const { return N - k; }
  double beta() const { return double(k) / double(N); }
  int local_dim() const { return ref.dim(); }

  void validate() const {
    if (k <= 0 || k >= N) throw std::invalid_argument("ProtocolParams: need 0 < k < N");
    ref.validate();
    if (kind == ProtocolKind::epr_locc) {
      if ((ref.phi_PS.vector() - ReferenceState::epr().phi_PS.vector()).norm() > tol::eq)
        throw std::invalid_argument("ProtocolParams: epr_locc requires the EPR reference");
    }
  }
};

// ---------------------------------------------------------------------------
// Strategy interfaces

struct PreparedState {
  Vec state;   // pure, layout [R, S_1 ... S_N] flattened
  long dim_r;  // leading register dimension
};

struct ProverResponse {
  Mat isometry;       // H_R -> H_{R'} (x) H_{Q^k}; rows = dim_residual * d^k
  long dim_residual;  // dim of the kept register R'
};

/// A prover is a preparation plus a response family indexed by the announced
/// sample (and challenge, for the LOCC protocol). Responses must be trace
/// non-increasing. Strategies are immutable; any internal randomness is
/// derived deterministically from the construction-time seed and t.
class ProverStrategy {
 public:
  virtual ~ProverStrategy() = default;
  virtual std::string name() const = 0;
  virtual PreparedState prepare(const ProtocolParams& params) const = 0;

  /// Purification protocol reply: an isometry (or contraction) from the held
  /// register to residual (x) sent purifiers, aligned with sorted t.
  virtual ProverResponse respond(const ProtocolParams&, const std::vector<int>&) const {
    throw std::logic_error("prover does not implement the purification reply");
  }

  /// LOCC protocol reply: POVM on the held register with 2^k outcomes,
  /// outcome bit j guessing the sampler's result on the j-th sampled qubit.
  virtual std::vector<Mat> respond_povm(const ProtocolParams&, const std::vector<int>&,
                                        const std::vector<int>&) const {
    throw std::logic_error("prover does not implement the measurement reply");
  }

  virtual std::unique_ptr<ProverStrategy> clone() const = 0;
};

/// Sampler-side freedom for the randomness-generation analysis: optionally
/// measure everything first and pick t from the outcome, and optionally
/// abort based on the final output bits.
struct SamplerStrategy {
  std::string name = "honest";
  bool measure_first = false;
  // choice of t given the full measurement outcome (bits, length N)
  std::function<std::vector<int>(const std::vector<int>&, int)> choose_sample;
  // veto on the sampler's own output bits
  std::function<bool(const std::vector<int>&)> accept_filter;

  static SamplerStrategy honest() { return SamplerStrategy{}; }
};

// ---------------------------------------------------------------------------
// Small layout helpers

namespace detail {

/// Applies an operator to the leading factor of a pure state.
inline Vec apply_leading(const Mat& m, const Vec& v, long dim_in) {
  const long ds = v.size() / dim_in;
  Vec out = Vec::Zero(m.rows() * ds);
  for (long r = 0; r < dim_in; ++r)
    for (long o = 0; o < m.rows(); ++o) {
      if (m(o, r) == cxd(0, 0)) continue;
      out.segment(o * ds, ds) += m(o, r) * v.segment(r * ds, ds);
    }
  return out;
}

/// <bra| applied to the trailing dc-dimensional block of a pure state.
/// Eigen's dot conjugates its first operand, matching the bra convention.
inline Vec contract_trailing(const Vec& v, long dc, const Vec& bra) {
  const long rest = v.size() / dc;
  Vec out = Vec::Zero(rest);
  for (long a = 0; a < rest; ++a) out[a] = bra.dot(v.segment(a * dc, dc));
  return out;
}

/// (1 (x) <bra|) M (1 (x) |bra>) on the trailing block of an operator.
inline Mat contract_trailing(const Mat& m, long dc, const Vec& bra) {
  const long rest = m.rows() / dc;
  Mat out = Mat::Zero(rest, rest);
  for (long a = 0; a < rest; ++a)
    for (long b = 0; b < rest; ++b) {
      cxd acc(0, 0);
      for (long j = 0; j < dc; ++j)
        for (long j2 = 0; j2 < dc; ++j2)
          acc += std::conj(bra[j]) * m(a * dc + j, b * dc + j2) * bra[j2];
      out(a, b) = acc;
    }
  return out;
}

/// Partial trace over the leading block of dimension dl.
inline Mat trace_leading(const Mat& m, long dl) {
  const long rest = m.rows() / dl;
  Mat out = Mat::Zero(rest, rest);
  for (long r = 0; r < dl; ++r) out += m.block(r * rest, r * rest, rest, rest);
  return out;
}

inline Mat trace_leading_of_vector(const Vec& v, long dl) {
  const long rest = v.size() / dl;
  Mat out = Mat::Zero(rest, rest);
  for (long r = 0; r < dl; ++r) {
    auto seg = v.segment(r * rest, rest);
    out += seg * seg.adjoint();
  }
  return out;
}

/// Sorted complement of t in [0, total).
inline std::vector<int> complement_of(const std::vector<int>& t, int total) {
  std::vector<bool> in(total, false);
  for (int i : t) in.at(i) = true;
  std::vector<int> out;
  for (int i = 0; i < total; ++i)
    if (!in[i]) out.push_back(i);
  return out;
}

/// Uniformly random size-k subset of [0, total), sorted.
inline std::vector<int> random_subset(int total, int k, Rng& rng) {
  std::vector<int> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, total - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<int> out(idx.begin(), idx.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

/// All sorted size-k subsets of [0, total).
inline std::vector<std::vector<int>> all_subsets(int total, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(k);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == k) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < total; ++i) {
      cur[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return out;
}

/// Embeds single-site operators at the given positions of an N-fold product
/// of d-dimensional factors (identity elsewhere).
inline Mat embed_sites(int total, int d, const std::vector<std::pair<int, Mat>>& site_ops) {
  std::vector<const Mat*> at(total, nullptr);
  for (const auto& [pos, op] : site_ops) at.at(pos) = &op;
  Mat out = Mat::Identity(1, 1);
  Mat eye = Mat::Identity(d, d);
  for (int i = 0; i < total; ++i) out = kron(out, at[i] ? *at[i] : eye);
  return out;
}

/// Measurement direction for the LOCC challenge: basis 0 is computational,
/// basis 1 diagonal.
inline Vec basis_vector(int basis, int outcome) {
  Vec v(2);
  if (basis == 0) {
    v << (outcome == 0 ? 1.0 : 0.0), (outcome == 0 ? 0.0 : 1.0);
  } else {
    const double s = 1.0 / std::sqrt(2.0);
    v << s, (outcome == 0 ? s : -s);
  }
  return v;
}

inline std::vector<int> int_to_bits(long x, int count) {
  std::vector<int> bits(count);
  for (int i = count - 1; i >= 0; --i) {
    bits[i] = int(x & 1);
    x >>= 1;
  }
  return bits;
}

inline long bits_to_int(const std::vector<int>& bits) {
  long x = 0;
  for (int b : bits) x = (x << 1) | b;
  return x;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Exact branch computation, purification protocol

namespace detail {

/// Subnormalized residual vector on [R', S^n] after the sampler's projective
/// check passes on sample t; slots of S^n are the unsampled positions in
/// increasing order.
inline Vec purification_branch_vector(const ProtocolParams& params, const PreparedState& prep,
                                      const ProverResponse& resp, const std::vector<int>& t) {
  const int d = params.local_dim();
  const int N = params.N;
  const int k = params.k;
  long expect_dk = 1;
  for (int j = 0; j < k; ++j) expect_dk *= d;
  if (resp.isometry.cols() != prep.dim_r ||
      resp.isometry.rows() != resp.dim_residual * expect_dk)
    throw std::invalid_argument("prover reply has the wrong shape");
  if (max_eigenvalue(resp.isometry.adjoint() * resp.isometry) > 1.0 + 1e-9)
    throw std::invalid_argument("prover reply increases the trace");
  const long dk = resp.isometry.rows() / resp.dim_residual;  // d^k

  // [R, S^N] -> [R', Q^k, S^N]
  Vec v = apply_leading(resp.isometry, prep.state, prep.dim_r);

  // factor layout: 0 = R', 1..k = Q_j, k+1..k+N = S_i
  std::vector<int> dims(1 + k + N, d);
  dims[0] = int(resp.dim_residual);
  std::vector<int> order;
  order.push_back(0);
  auto rest = complement_of(t, N);
  for (int i : rest) order.push_back(1 + k + i);
  for (int j = 0; j < k; ++j) {
    order.push_back(1 + j);            // Q_j
    order.push_back(1 + k + t[j]);     // S_{t_j}
  }
  auto map = reorder_index_map(dims, order);
  Vec arranged = apply_index_map(v, map);
  (void)dk;

  Vec bra = kron_pow(params.ref.purification(), k);
  long pair_block = 1;
  for (int j = 0; j < 2 * k; ++j) pair_block *= d;
  return contract_trailing(arranged, pair_block, bra);
}

}  // namespace detail

/// The exact subnormalized accepted output on S^n, averaged over the uniform
/// sample choice (and challenge, for the LOCC protocol).
inline QuantumState accepted_channel(const ProtocolParams& params, const ProverStrategy& prover) {
  params.validate();
  const int d = params.local_dim();
  const int n = params.n();
  long dn = 1;
  for (int i = 0; i < n; ++i) dn *= d;
  check_mixed_dim(dn);

  auto prep = prover.prepare(params);
  auto subsets = detail::all_subsets(params.N, params.k);
  Mat acc = Mat::Zero(dn, dn);

  if (params.kind == ProtocolKind::purification) {
    for (const auto& t : subsets) {
      auto resp = prover.respond(params, t);
      Vec branch = detail::purification_branch_vector(params, prep, resp, t);
      acc += detail::trace_leading_of_vector(branch, resp.dim_residual);
    }
    acc /= double(subsets.size());
  } else {
    const int k = params.k;
    const long ck = 1L << k;
    for (const auto& t : subsets) {
      auto rest = detail::complement_of(t, params.N);
      // arrange [R, S_unsampled, S_sampled]
      std::vector<int> dims(1 + params.N, d);
      dims[0] = int(prep.dim_r);
      std::vector<int> order;
      order.push_back(0);
      for (int i : rest) order.push_back(1 + i);
      for (int i : t) order.push_back(1 + i);
      auto map = detail::reorder_index_map(dims, order);
      Vec arranged = detail::apply_index_map(prep.state, map);

      for (long c = 0; c < ck; ++c) {
        auto bases = detail::int_to_bits(c, k);
        auto povm = prover.respond_povm(params, t, bases);
        for (long x = 0; x < ck; ++x) {
          auto bits = detail::int_to_bits(x, k);
          Vec bra = Vec::Ones(1);
          for (int j = 0; j < k; ++j) bra = kron(bra, detail::basis_vector(bases[j], bits[j]));
          Vec after = detail::contract_trailing(arranged, ck, bra);  // on [R, S^n]
          // sandwich the prover's POVM element on R and trace it out:
          // tr_R[(E (x) 1)|after><after|] = conj(W^H E W) for the reshape W
          Mat w(prep.dim_r, dn);
          for (long r = 0; r < prep.dim_r; ++r)
            for (long s = 0; s < dn; ++s) w(r, s) = after[r * dn + s];
          acc += Mat((w.adjoint() * povm[x] * w).conjugate());
        }
      }
    }
    acc /= double(subsets.size()) * double(ck);
  }
  return QuantumState::mixed(make_registers("S", n, d), std::move(acc));
}

/// Joint accepted state on [R', S^n] (purification protocol), for provers
/// whose residual register has a fixed dimension across samples.
inline QuantumState accepted_joint(const ProtocolParams& params, const ProverStrategy& prover) {
  params.validate();
  if (params.kind != ProtocolKind::purification)
    throw std::invalid_argument("accepted_joint: purification protocol only");
  const int d = params.local_dim();
  const int n = params.n();
  auto prep = prover.prepare(params);
  auto subsets = detail::all_subsets(params.N, params.k);
  Mat acc;
  long dim_res = -1;
  for (const auto& t : subsets) {
    auto resp = prover.respond(params, t);
    if (dim_res < 0) {
      dim_res = resp.dim_residual;
      long dn = 1;
      for (int i = 0; i < n; ++i) dn *= d;
      check_mixed_dim(dim_res * dn);
      acc = Mat::Zero(dim_res * dn, dim_res * dn);
    }
    if (resp.dim_residual != dim_res)
      throw std::invalid_argument("accepted_joint: residual dimension varies with t");
    Vec branch = detail::purification_branch_vector(params, prep, resp, t);
    acc += branch * branch.adjoint();
  }
  acc /= double(subsets.size());
  RegisterSystem sys =
      RegisterSystem::single("Rp", int(dim_res)).tensor_with(make_registers("S", n, d));
  return QuantumState::mixed(std::move(sys), std::move(acc));
}

inline double acceptance_probability(const ProtocolParams& params, const ProverStrategy& prover) {
  return accepted_channel(params, prover).norm_value();
}

// ---------------------------------------------------------------------------
// Built-in prover strategies

namespace detail {

/// Interleaved |pair>^{(x)N} rearranged to the block layout [P^N, S^N],
/// returned as a PreparedState with R = P^N.
inline PreparedState block_prepared_from_pairs(const std::vector<Vec>& pair_states, int d) {
  const int N = int(pair_states.size());
  Vec inter = Vec::Ones(1);
  for (const auto& p : pair_states) inter = kron(inter, p);
  std::vector<int> dims(2 * N, d);
  std::vector<int> order(2 * N);
  for (int i = 0; i < N; ++i) {
    order[i] = 2 * i;          // P_i
    order[N + i] = 2 * i + 1;  // S_i
  }
  auto map = reorder_index_map(dims, order);
  long dr = 1;
  for (int i = 0; i < N; ++i) dr *= d;
  return PreparedState{apply_index_map(inter, map), dr};
}

/// Unitary with zero diagonal in the eigenbasis of m (a cyclic shift), so
/// that tr(u m) = 0.
inline Mat trace_killing_unitary(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(m));
  const long dim = m.rows();
  Mat shift = Mat::Zero(dim, dim);
  for (long i = 0; i < dim; ++i) shift((i + 1) % dim, i) = 1.0;
  return es.eigenvectors() * shift * es.eigenvectors().adjoint();
}

/// A pair vector orthogonal to the reference purification with the same
/// S-side reduction rank profile: (u_P (x) 1)|phi_PS>.
inline Vec orthogonal_pair_vector(const ReferenceState& ref) {
  const int d = ref.dim();
  Mat phi_p = partial_trace(ref.phi_PS, {"P"}).density();
  Mat u = trace_killing_unitary(phi_p);
  Vec v = ref.purification();
  Vec out = Vec::Zero(v.size());
  for (int p = 0; p < d; ++p)
    for (int p2 = 0; p2 < d; ++p2) {
      if (u(p, p2) == cxd(0, 0)) continue;
      out.segment(p * d, d) += u(p, p2) * v.segment(p2 * d, d);
    }
  return out;
}

/// Permutation matrix moving the held purifiers so that the unsampled ones
/// lead and the sampled ones trail (sorted), as an operator on H_{P^N}.
inline Mat purifier_grouping(const std::vector<int>& t, int N, int d) {
  return permutation_operator(grouping_permutation(t, N), d);
}

/// Uhlmann-aligned single-pair unitary: maximizes |<phi|(u (x) 1)|theta>|.
inline Mat pair_alignment_unitary(const Vec& theta_ps, const Vec& phi_ps, int d) {
  Mat th(d, d), ph(d, d);
  for (int p = 0; p < d; ++p)
    for (int s = 0; s < d; ++s) {
      th(p, s) = theta_ps[p * d + s];
      ph(p, s) = phi_ps[p * d + s];
    }
  Mat dmat = th * ph.adjoint();
  Eigen::BDCSVD<Mat> svd(dmat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixV() * svd.matrixU().adjoint();
}

/// Helstrom-optimal two-outcome projectors distinguishing the prior-weighted
/// states (rho0, rho1): outcome-0 projector spans the positive part of
/// rho0 - rho1.
inline std::pair<Mat, Mat> helstrom_projectors(const Mat& rho0, const Mat& rho1) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(rho0 - rho1));
  const long dim = rho0.rows();
  Mat m0 = Mat::Zero(dim, dim);
  for (long i = 0; i < dim; ++i)
    if (es.eigenvalues()[i] > 0) m0 += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  return {m0, Mat::Identity(dim, dim) - m0};
}

}  // namespace detail

/// Follows the protocol exactly: prepares reference pairs and hands over the
/// true purifiers of the sampled positions.
class HonestProver : public ProverStrategy {
 public:
  std::string name() const override { return "honest"; }

  PreparedState prepare(const ProtocolParams& params) const override {
    std::vector<Vec> pairs(params.N, params.ref.purification());
    return detail::block_prepared_from_pairs(pairs, params.local_dim());
  }

  ProverResponse respond(const ProtocolParams& params, const std::vector<int>& t) const override {
    const int d = params.local_dim();
    long dn = 1;
    for (int i = 0; i < params.n(); ++i) dn *= d;
    return {detail::purifier_grouping(t, params.N, d), dn};
  }

  std::vector<Mat> respond_povm(const ProtocolParams& params, const std::vector<int>& t,
                                const std::vector<int>& bases) const override {
    // measure the held halves of the sampled pairs in the challenge bases
    const int k = params.k;
    std::vector<Mat> povm;
    povm.reserve(1L << k);
    for (long x = 0; x < (1L << k); ++x) {
      auto bits = detail::int_to_bits(x, k);
      std::vector<std::pair<int, Mat>> sites;
      for (int j = 0; j < k; ++j) {
        Vec b = detail::basis_vector(bases[j], bits[j]);
        sites.push_back({t[j], b * b.adjoint()});
      }
      povm.push_back(detail::embed_sites(params.N, 2, sites));
    }
    return povm;
  }

  std::unique_ptr<ProverStrategy> clone() const override {
    return std::make_unique<HonestProver>(*this);
  }
};

/// Honest on all but `errors` trailing positions, which hold a pair state
/// orthogonal to the reference purification; the reply is honest.
class FewErrorsProver : public ProverStrategy {
 public:
  explicit FewErrorsProver(int errors) : errors_(errors) {}

  std::string name() const override { return "few_errors"; }
  int errors() const { return errors_; }

  PreparedState prepare(const ProtocolParams& params) const override {
    if (errors_ < 0 || errors_ > params.N)
      throw std::invalid_argument("FewErrorsProver: bad error count");
    Vec bad = detail::orthogonal_pair_vector(params.ref);
    std::vector<Vec> pairs(params.N, params.ref.purification());
    for (int i = params.N - errors_; i < params.N; ++i) pairs[i] = bad;
    return detail::block_prepared_from_pairs(pairs, params.local_dim());
  }

  ProverResponse respond(const ProtocolParams& params, const std::vector<int>& t) const override {
    return HonestProver().respond(params, t);
  }

  std::vector<Mat> respond_povm(const ProtocolParams& params, const std::vector<int>& t,
                                const std::vector<int>& bases) const override {
    return HonestProver().respond_povm(params, t, bases);
  }

  std::unique_ptr<ProverStrategy> clone() const override {
    return std::make_unique<FewErrorsProver>(*this);
  }

 private:
  int errors_;
};

/// Prepares |theta_PS>^{(x)N} and replies optimally: alignment isometries
/// for the purification check, Helstrom measurements for the LOCC check.
class IidProver : public ProverStrategy {
 public:
  explicit IidProver(Vec theta_ps) : theta_(std::move(theta_ps)) {
    if (std::abs(theta_.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("IidProver: theta must be normalized");
  }

  std::string name() const override { return "iid"; }
  const Vec& theta() const { return theta_; }

  PreparedState prepare(const ProtocolParams& params) const override {
    std::vector<Vec> pairs(params.N, theta_);
    return detail::block_prepared_from_pairs(pairs, params.local_dim());
  }

  ProverResponse respond(const ProtocolParams& params, const std::vector<int>& t) const override {
    const int d = params.local_dim();
    const int k = params.k;
    Mat group = detail::purifier_grouping(t, params.N, d);
    Mat align = detail::pair_alignment_unitary(theta_, params.ref.purification(), d);
    long dn = 1;
    for (int i = 0; i < params.n(); ++i) dn *= d;
    Mat u = kron(Mat::Identity(dn, dn), kron_pow(align, k)) * group;
    return {std::move(u), dn};
  }

  std::vector<Mat> respond_povm(const ProtocolParams& params, const std::vector<int>& t,
                                const std::vector<int>& bases) const override {
    const int k = params.k;
    // per-basis Helstrom projectors on the held qubit of one theta pair
    RegisterSystem ps({{"P", 2}, {"S", 2}});
    auto theta_state = QuantumState::pure(ps, theta_);
    std::array<std::array<Mat, 2>, 2> site_povm;
    for (int basis = 0; basis < 2; ++basis) {
      Mat cond[2];
      for (int outcome = 0; outcome < 2; ++outcome) {
        Vec b = detail::basis_vector(basis, outcome);
        Mat proj = kron(Mat::Identity(2, 2), b * b.adjoint());
        cond[outcome] =
            partial_trace(QuantumState::mixed(ps, proj * theta_state.density() * proj), {"P"})
                .density();
      }
      auto [m0, m1] = detail::helstrom_projectors(cond[0], cond[1]);
      site_povm[basis][0] = m0;
      site_povm[basis][1] = m1;
    }
    std::vector<Mat> povm;
    povm.reserve(1L << k);
    for (long x = 0; x < (1L << k); ++x) {
      auto bits = detail::int_to_bits(x, k);
      std::vector<std::pair<int, Mat>> sites;
      for (int j = 0; j < k; ++j) sites.push_back({t[j], site_povm[bases[j]][bits[j]]});
      povm.push_back(detail::embed_sites(params.N, 2, sites));
    }
    return povm;
  }

  std::unique_ptr<ProverStrategy> clone() const override {
    return std::make_unique<IidProver>(*this);
  }

 private:
  Vec theta_;
};

/// Prepares honestly but replaces the requested purifiers by a fixed junk
/// vector, keeping the real ones.
class JunkResponseProver : public ProverStrategy {
 public:
  explicit JunkResponseProver(Vec junk_pair) : junk_(std::move(junk_pair)) {}

  std::string name() const override { return "junk_reply"; }

  PreparedState prepare(const ProtocolParams& params) const override {
    return HonestProver().prepare(params);
  }

  ProverResponse respond(const ProtocolParams& params, const std::vector<int>& t) const override {
    const int d = params.local_dim();
    long dr = 1;
    for (int i = 0; i < params.N; ++i) dr *= d;
    Vec junk_p = junk_;  // junk on the P factor only, dim d
    if (junk_p.size() != d) throw std::invalid_argument("JunkResponseProver: junk must have dim d");
    Mat u = kron(Mat::Identity(dr, dr), Mat(kron_pow(junk_p, params.k)));
    return {std::move(u), dr};
  }

  std::unique_ptr<ProverStrategy> clone() const override {
    return std::make_unique<JunkResponseProver>(*this);
  }

 private:
  Vec junk_;
};

/// Honest preparation with a reply twisted to fail every check: each sent
/// purifier is rotated by a unitary that kills the reference overlap.
class ZeroAcceptanceProver : public ProverStrategy {
 public:
  std::string name() const override { return "zero_acceptance"; }

  PreparedState prepare(const ProtocolParams& params) const override {
    return HonestProver().prepare(params);
  }

  ProverResponse respond(const ProtocolParams& params, const std::vector<int>& t) const override {
    const int d = params.local_dim();
    Mat phi_p = partial_trace(params.ref.phi_PS, {"P"}).density();
    Mat u = detail::trace_killing_unitary(phi_p);
    auto honest = HonestProver().respond(params, t);
    long dn = honest.dim_residual;
    Mat twisted = kron(Mat::Identity(dn, dn), kron_pow(u, params.k)) * honest.isometry;
    return {std::move(twisted), dn};
  }

  std::unique_ptr<ProverStrategy> clone() const override {
    return std::make_unique<ZeroAcceptanceProver>(*this);
  }
};

/// Haar-random preparation and per-sample Haar-random replies, derived
/// deterministically from the seed. Exercises unstructured attacks.
class RandomAttackProver : public ProverStrategy {
 public:
  explicit RandomAttackProver(std::uint64_t seed, long dim_r = 0) : seed_(seed), dim_r_(dim_r) {}

  std::string name() const override { return "random_attack"; }

  PreparedState prepare(const ProtocolParams& params) const override {
    const int d = params.local_dim();
    long dr = dim_r_;
    if (dr <= 0) {
      dr = 1;
      for (int i = 0; i < params.N; ++i) dr *= d;
    }
    long ds = 1;
    for (int i = 0; i < params.N; ++i) ds *= d;
    Rng rng(seed_);
    std::normal_distribution<double> g(0.0, 1.0);
    Vec v(dr * ds);
    for (long i = 0; i < v.size(); ++i) v[i] = cxd(g(rng), g(rng));
    v.normalize();
    return {std::move(v), dr};
  }

  ProverResponse respond(const ProtocolParams& params, const std::vector<int>& t) const override {
    const int d = params.local_dim();
    long dr = prepare_dim(params);
    long dk = 1;
    for (int j = 0; j < params.k; ++j) dk *= d;
    Rng rng(derived_seed(t));
    Mat u = haar_isometry_cols(dr * dk, dr, rng);
    return {std::move(u), dr};
  }

  std::vector<Mat> respond_povm(const ProtocolParams& params, const std::vector<int>& t,
                                const std::vector<int>& bases) const override {
    long dr = prepare_dim(params);
    const long outcomes = 1L << params.k;
    Rng rng(derived_seed(t) ^ (detail::bits_to_int(bases) * 0x9e3779b97f4a7c15ULL + 1));
    Mat v = haar_isometry_cols(dr * outcomes, dr, rng);
    // Kraus slices A_x = (1 (x) <x|) V give a complete POVM E_x = A_x^t A_x
    std::vector<Mat> povm;
    for (long x = 0; x < outcomes; ++x) {
      Mat a(dr, dr);
      for (long i = 0; i < dr; ++i)
        for (long j = 0; j < dr; ++j) a(i, j) = v(i * outcomes + x, j);
      povm.push_back(a.adjoint() * a);
    }
    return povm;
  }

  std::unique_ptr<ProverStrategy> clone() const override {
    return std::make_unique<RandomAttackProver>(*this);
  }

 private:
  long prepare_dim(const ProtocolParams& params) const {
    if (dim_r_ > 0) return dim_r_;
    long dr = 1;
    for (int i = 0; i < params.N; ++i) dr *= params.local_dim();
    return dr;
  }

  std::uint64_t derived_seed(const std::vector<int>& t) const {
    std::uint64_t h = seed_ ^ 0xd1b54a32d192ed03ULL;
    for (int i : t) h = (h ^ std::uint64_t(i + 1)) * 0x9e3779b97f4a7c15ULL;
    return h;
  }

  static Mat haar_isometry_cols(long rows, long cols, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat a(rows, rows);
    for (long i = 0; i < rows; ++i)
      for (long j = 0; j < rows; ++j) a(i, j) = cxd(g(rng), g(rng));
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (long i = 0; i < rows; ++i) {
      cxd dd = r(i, i);
      if (std::abs(dd) > 1e-14) q.col(i) *= dd / std::abs(dd);
    }
    return q.leftCols(cols);
  }

  std::uint64_t seed_;
  long dim_r_;
};

// ---------------------------------------------------------------------------
// Symmetrized adversary (the equivalent attack on a symmetric purification)

/// Builds the symmetrized attack for a given prover: an isometry that reads
/// a permutation register off the symmetric purification, simulates the real
/// adversary on the induced sample, and realigns the sent registers. Its
/// accepted output on [Pi, S^n] matches the permutation-twirled output of
/// the real protocol.
class SymmetrizedAdversary {
 public:
  SymmetrizedAdversary(const ProtocolParams& params, const ProverStrategy& prover)
      : params_(params), prover_(prover.clone()) {
    params_.validate();
    const int d = params_.local_dim();
    const int N = params_.N;
    ds_ = 1;
    for (int i = 0; i < N; ++i) ds_ *= d;

    prep_ = prover_->prepare(params_);
    perms_n_ = Permutation::all(params_.n());
    perms_big_ = Permutation::all(N);

    // symmetrized input on S^N and its symmetric purification, block layout
    QuantumState rho_sn = QuantumState::mixed(
        make_registers("S", N, d), detail::trace_leading_of_vector(prep_.state, prep_.dim_r));
    QuantumState rho_bar = symmetrize(rho_sn);
    QuantumState purif = symmetric_purification(rho_bar);  // interleaved pairs
    std::vector<std::string> block_order;
    for (int i = 1; i <= N; ++i) block_order.push_back("P" + std::to_string(i));
    for (int i = 1; i <= N; ++i) block_order.push_back("S" + std::to_string(i));
    rho_bar_vec_ = reorder_state(purif, block_order).vector();  // [P^N, S^N]

    build_reader(rho_bar.density());
  }

  const Vec& symmetric_purification_vector() const { return rho_bar_vec_; }

  /// The accepted map applied to an arbitrary PSD operator on [P^N, S^N] in
  /// block layout; output lives on [Pi, S^n] with Pi of dimension n!.
  /// The input is eigendecomposed and processed one rank at a time.
  Mat apply_block(const Mat& input) const {
    const int n = params_.n();
    long dn = 1;
    for (int i = 0; i < n; ++i) dn *= params_.local_dim();
    Mat out = Mat::Zero(long(perms_n_.size()) * dn, long(perms_n_.size()) * dn);
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(input));
    const double cutoff = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0) * 1e-14;
    for (long i = 0; i < es.eigenvalues().size(); ++i) {
      double lam = es.eigenvalues()[i];
      if (lam <= cutoff) continue;
      out += lam * apply_block_vector(es.eigenvectors().col(i));
    }
    return out;
  }

  /// The accepted map applied to a rank-one input |v><v| with v in the block
  /// layout [P^N, S^N].
  Mat apply_block_vector(const Vec& input) const {
    const int d = params_.local_dim();
    const int N = params_.N;
    const int k = params_.k;
    const int n = params_.n();
    long dn = 1;
    for (int i = 0; i < n; ++i) dn *= d;
    long dk = ds_ / dn;

    Mat out = Mat::Zero(long(perms_n_.size()) * dn, long(perms_n_.size()) * dn);
    for (std::size_t pi_idx = 0; pi_idx < perms_big_.size(); ++pi_idx) {
      const auto& pi = perms_big_[pi_idx];
      auto dec = decompose_permutation(pi, k);

      // component of the reader output at |pi>, applied to the leading block
      Mat a_pi = reader_.middleRows(long(pi_idx) * prep_.dim_r, prep_.dim_r);  // P^N -> R
      Vec chi = detail::apply_leading(a_pi, input, ds_);                       // on [R, S^N]

      Mat branch;  // on S^n after the check, S^k consumed
      if (params_.kind == ProtocolKind::purification) {
        auto resp = prover_->respond(params_, dec.sample);
        Vec v = detail::apply_leading(resp.isometry, chi, prep_.dim_r);  // [R', Q^k, S^N]
        // factor layout: 0 = R', 1..k = Q_j, k+1..k+N = S_i; realign the sent
        // block by tau and group S^N as [S^n-rest, S^k-first]
        std::vector<int> dims(1 + k + N, d);
        dims[0] = int(resp.dim_residual);
        std::vector<int> order;
        order.push_back(0);
        for (int i = k; i < N; ++i) order.push_back(1 + k + i);  // unsampled slots
        Permutation tau_inv = dec.tau.inverse();
        for (int j = 0; j < k; ++j) {
          order.push_back(1 + tau_inv(j));  // Q_{tau^{-1}(j)} pairs slot j
          order.push_back(1 + k + j);       // S at sampled position j
        }
        auto map = detail::reorder_index_map(dims, order);
        Vec arranged = detail::apply_index_map(v, map);
        Vec bra = kron_pow(params_.ref.purification(), k);
        Vec residual = detail::contract_trailing(arranged, bra.size(), bra);
        branch = detail::trace_leading_of_vector(residual, resp.dim_residual);
      } else {
        // group S^N as [S^n-rest, S^k-first]
        std::vector<int> dims(1 + N, d);
        dims[0] = int(prep_.dim_r);
        std::vector<int> order;
        order.push_back(0);
        for (int i = k; i < N; ++i) order.push_back(1 + i);
        for (int i = 0; i < k; ++i) order.push_back(1 + i);
        auto map = detail::reorder_index_map(dims, order);
        Vec arranged = detail::apply_index_map(chi, map);

        branch = Mat::Zero(dn, dn);
        const long ck = 1L << k;
        Mat tau_small = permutation_operator(dec.tau, d);
        for (long c = 0; c < ck; ++c) {
          auto bases = detail::int_to_bits(c, k);
          auto povm = prover_->respond_povm(params_, dec.sample, bases);
          for (long x = 0; x < ck; ++x) {
            auto bits = detail::int_to_bits(x, k);
            Vec bra = Vec::Ones(1);
            for (int j = 0; j < k; ++j) bra = kron(bra, detail::basis_vector(bases[j], bits[j]));
            bra = tau_small * bra;  // realign with the permuted sampled block
            Vec after = detail::contract_trailing(arranged, dk, bra);  // on [R, S^n]
            Mat w(prep_.dim_r, dn);
            for (long r = 0; r < prep_.dim_r; ++r)
              for (long s = 0; s < dn; ++s) w(r, s) = after[r * dn + s];
            branch += Mat((w.adjoint() * povm[x] * w).conjugate());
          }
        }
        branch /= double(ck);
      }

      // record tau_bar in the permutation register
      long out_idx = index_of(perms_n_, dec.tau_bar);
      out.block(out_idx * dn, out_idx * dn, dn, dn) += branch;
    }
    return out;
  }

  /// Accepted output of the symmetrized attack on its own symmetric
  /// purification, on [Pi, S^n].
  Mat apply_to_symmetric_state() const { return apply_block_vector(rho_bar_vec_); }

  /// The permutation-twirled real output (1/n!) sum_pi |pi><pi| (x) pi E pi*.
  Mat twirled_real_output() const {
    QuantumState e = accepted_channel(params_, *prover_);
    const int d = params_.local_dim();
    const long dn = e.dim();
    Mat out = Mat::Zero(long(perms_n_.size()) * dn, long(perms_n_.size()) * dn);
    for (std::size_t i = 0; i < perms_n_.size(); ++i) {
      Mat block = permute_operator(perms_n_[i], d, e.density());
      out.block(long(i) * dn, long(i) * dn, dn, dn) = block / double(perms_n_.size());
    }
    return out;
  }

  int pi_register_dim() const { return int(perms_n_.size()); }

 private:
  static long index_of(const std::vector<Permutation>& all, const Permutation& p) {
    for (std::size_t i = 0; i < all.size(); ++i)
      if (all[i] == p) return long(i);
    throw std::logic_error("SymmetrizedAdversary: permutation not found");
  }

  /// Matches the symmetric purification onto the superposition of permuted
  /// real preparations with a permutation record: the reader isometry
  /// W : H_{P^N} -> H_{Pi-bar} (x) H_R (with the Pi-bar index major).
  void build_reader(const Mat& rho_bar_sn) {
    const long big = long(perms_big_.size());
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(rho_bar_sn));

    // components of the symmetric purification: columns over P^N
    Mat bar_mat(ds_, ds_);  // (p, s)
    for (long p = 0; p < ds_; ++p)
      for (long s = 0; s < ds_; ++s) bar_mat(p, s) = rho_bar_vec_[p * ds_ + s];

    // target components: (1/sqrt(N!)) sum_pi (1 (x) pi_S)|rho> (x) |pi>
    Mat prep_mat(prep_.dim_r, ds_);
    for (long r = 0; r < prep_.dim_r; ++r)
      for (long s = 0; s < ds_; ++s) prep_mat(r, s) = prep_.state[r * ds_ + s];

    reader_ = Mat::Zero(big * prep_.dim_r, ds_);
    const int d = params_.local_dim();
    for (long i = 0; i < es.eigenvalues().size(); ++i) {
      double mu = es.eigenvalues()[i];
      if (mu <= 1e-13) continue;
      Vec s_i = es.eigenvectors().col(i);
      Vec a = bar_mat * s_i.conjugate();  // unnormalized, norm sqrt(mu)
      Vec b = Vec::Zero(big * prep_.dim_r);
      for (std::size_t pidx = 0; pidx < perms_big_.size(); ++pidx) {
        // (1 (x) <s_i| pi_S)|rho>: permute s_i by the inverse action
        Vec s_perm = permute_vector(perms_big_[pidx].inverse(), d, s_i);
        Vec comp = prep_mat * s_perm.conjugate();
        b.segment(long(pidx) * prep_.dim_r, prep_.dim_r) = comp / std::sqrt(double(big));
      }
      reader_ += (b / mu) * a.adjoint();
    }

    // sanity: the reader must transport the purification onto the target
    Vec image = Vec::Zero(big * prep_.dim_r * ds_);
    for (long p = 0; p < ds_; ++p) {
      Vec col = reader_.col(p);
      for (long o = 0; o < col.size(); ++o) {
        if (col[o] == cxd(0, 0)) continue;
        image.segment(o * ds_, ds_) += col[o] * Vec(bar_mat.row(p).transpose());
      }
    }
    Vec target = Vec::Zero(big * prep_.dim_r * ds_);
    for (std::size_t pidx = 0; pidx < perms_big_.size(); ++pidx) {
      Vec permuted = prep_.state;
      // apply pi to the S^N factors of [R, S^N]
      auto pmap = detail::permutation_index_map(perms_big_[pidx], d);
      Vec moved(prep_.state.size());
      for (long r = 0; r < prep_.dim_r; ++r)
        for (long s = 0; s < ds_; ++s) moved[r * ds_ + s] = prep_.state[r * ds_ + pmap[s]];
      target.segment(long(pidx) * prep_.dim_r * ds_, prep_.dim_r * ds_) =
          moved / std::sqrt(double(perms_big_.size()));
      (void)permuted;
    }
    // reorder target from [Pi-bar, R, S^N] to match image's [(Pi-bar, R), S^N]
    double residual = (image - target).norm();
    if (residual > 1e-7)
      throw std::logic_error("SymmetrizedAdversary: purification matching failed, residual " +
                             std::to_string(residual));
  }

  ProtocolParams params_;
  std::unique_ptr<ProverStrategy> prover_;
  PreparedState prep_;
  long ds_ = 0;  // d^N
  Vec rho_bar_vec_;
  Mat reader_;  // W
  std::vector<Permutation> perms_n_;
  std::vector<Permutation> perms_big_;
};

/// Max-abs deviation between the two sides of the permutation-invariance
/// identity for the given prover.
inline double symmetrized_attack_residual(const ProtocolParams& params, const ProverStrategy& prover) {
  SymmetrizedAdversary adv(params, prover);
  Mat lhs = adv.twirled_real_output();
  Mat rhs = adv.apply_to_symmetric_state();
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Single-pair guessing probability for the LOCC soundness analysis

struct GammaReport {
  double gamma = 0.0;       // average over the two bases
  double guess_comp = 0.0;  // computational-basis guessing probability
  double guess_diag = 0.0;  // diagonal-basis guessing probability
  double overlap_sum = 0.0;       // |<th0|th1>| + |<th+|th->|
  double schmidt_gap_half = 0.0;  // |lambda_0 - lambda_1| / 2
  double trace_dist_s = 0.0;      // || theta_S - 1/2 ||_1
  double fidelity_sq_s = 0.0;     // F(theta_S, 1/2)^2
};

/// Probability that the holder of P guesses the outcome of measuring S in a
/// uniformly chosen BB84 basis, for a pure two-qubit theta on [P, S].
inline GammaReport epr_guessing_gamma(const QuantumState& theta) {
  const auto& sys = theta.system();
  if (sys.total_dim() != 4 || !theta.is_pure())
    throw std::invalid_argument("epr_guessing_gamma: need a pure two-qubit state");
  if (std::abs(theta.norm_value() - 1.0) > 1e-9)
    throw std::invalid_argument("epr_guessing_gamma: state must be normalized");

  GammaReport rep;
  RegisterSystem ps({{"P", 2}, {"S", 2}});
  auto th = QuantumState::pure(ps, theta.vector());

  std::array<std::array<Vec, 2>, 2> cond;  // subnormalized P-side vectors
  for (int basis = 0; basis < 2; ++basis)
    for (int outcome = 0; outcome < 2; ++outcome) {
      Vec b = detail::basis_vector(basis, outcome);
      cond[basis][outcome] = detail::contract_trailing(theta.vector(), 2, b);
    }

  auto guess = [&](int basis) {
    auto s0 = QuantumState::mixed(RegisterSystem::single("P", 2),
                                  cond[basis][0] * cond[basis][0].adjoint());
    auto s1 = QuantumState::mixed(RegisterSystem::single("P", 2),
                                  cond[basis][1] * cond[basis][1].adjoint());
    return helstrom_guess(s0, s1);
  };
  rep.guess_comp = guess(0);
  rep.guess_diag = guess(1);
  rep.gamma = 0.5 * (rep.guess_comp + rep.guess_diag);

  rep.overlap_sum =
      std::abs(cond[0][0].dot(cond[0][1])) + std::abs(cond[1][0].dot(cond[1][1]));
  // the two diagnostics built from the reduced state
  auto theta_s = partial_trace(th, {"S"});
  auto half = QuantumState::mixed(RegisterSystem::single("S", 2), 0.5 * Mat::Identity(2, 2));
  rep.trace_dist_s = trace_norm(theta_s.density() - 0.5 * Mat::Identity(2, 2));
  rep.fidelity_sq_s = fidelity_sq(theta_s, half);
  auto dec = schmidt(th, {"P"});
  double l0 = dec.coefficients.size() > 0 ? dec.coefficients[0] : 0.0;
  double l1 = dec.coefficients.size() > 1 ? dec.coefficients[1] : 0.0;
  rep.schmidt_gap_half = 0.5 * std::abs(l0 - l1);
  return rep;
}

// ---------------------------------------------------------------------------
// Protocol runs and transcripts

struct SamplingTranscript {
  ProtocolKind kind = ProtocolKind::purification;
  RunMode mode = RunMode::exact;
  int N = 0;
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> t;
  std::vector<int> challenge;     // bases, epr_locc only
  std::vector<int> prover_bits;   // x-hat, epr_locc trajectory only
  std::vector<int> sampler_bits;  // x, epr_locc trajectory only
  bool accepted = false;
  double branch_probability = 0.0;   // acceptance probability of this (t, c)
  std::uint64_t reply_digest = 0;    // FNV over the reply matrix bytes
  QuantumState post_state_sn =
      QuantumState::pure(RegisterSystem::single("S1", 1), Vec::Ones(1));  // exact mode, n <= 3
  bool has_post_state = false;
};

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t digest(const Mat& m) {
  std::uint64_t h = 1469598103934665603ULL;
  for (long c = 0; c < m.cols(); ++c)
    for (long r = 0; r < m.rows(); ++r) {
      double re = m(r, c).real(), im = m(r, c).imag();
      h = fnv1a(&re, sizeof re, h);
      h = fnv1a(&im, sizeof im, h);
    }
  return h;
}

}  // namespace detail

/// One protocol run. Exact mode draws (t, c) and computes the branch
/// probabilities and exact subnormalized post-state; trajectory mode also
/// samples the accept/reject outcome.
inline SamplingTranscript run_sampling(const ProtocolParams& params, const ProverStrategy& prover,
                                       RunMode mode, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  const int d = params.local_dim();
  const int n = params.n();
  long dn = 1;
  for (int i = 0; i < n; ++i) dn *= d;

  SamplingTranscript tr;
  tr.kind = params.kind;
  tr.mode = mode;
  tr.N = params.N;
  tr.k = params.k;
  tr.seed = seed;
  tr.t = detail::random_subset(params.N, params.k, rng);

  auto prep = prover.prepare(params);

  if (params.kind == ProtocolKind::purification) {
    auto resp = prover.respond(params, tr.t);
    tr.reply_digest = detail::digest(resp.isometry);
    Vec branch = detail::purification_branch_vector(params, prep, resp, tr.t);
    tr.branch_probability = branch.squaredNorm();
    if (mode == RunMode::trajectory) {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      tr.accepted = unif(rng) < tr.branch_probability;
    } else {
      tr.accepted = true;  // exact mode records the accept branch itself
    }
    if (dn <= 8) {
      tr.post_state_sn = QuantumState::mixed(
          make_registers("S", n, d), detail::trace_leading_of_vector(branch, resp.dim_residual));
      tr.has_post_state = true;
    }
  } else {
    const int k = params.k;
    std::uniform_int_distribution<int> coin(0, 1);
    tr.challenge.resize(k);
    for (int j = 0; j < k; ++j) tr.challenge[j] = coin(rng);
    auto povm = prover.respond_povm(params, tr.t, tr.challenge);
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& e : povm) h = detail::digest(e) ^ h;
    tr.reply_digest = h;

    auto rest = detail::complement_of(tr.t, params.N);
    std::vector<int> dims(1 + params.N, d);
    dims[0] = int(prep.dim_r);
    std::vector<int> order;
    order.push_back(0);
    for (int i : rest) order.push_back(1 + i);
    for (int i : tr.t) order.push_back(1 + i);
    auto map = detail::reorder_index_map(dims, order);
    Vec arranged = detail::apply_index_map(prep.state, map);

    const long ck = 1L << k;
    // joint distribution over (prover reply, sampler outcome)
    Mat joint = Mat::Zero(ck, ck);
    Mat accepted_sum = Mat::Zero(dn, dn);
    for (long x = 0; x < ck; ++x) {
      auto bits = detail::int_to_bits(x, k);
      Vec bra = Vec::Ones(1);
      for (int j = 0; j < k; ++j) bra = kron(bra, detail::basis_vector(tr.challenge[j], bits[j]));
      Vec after = detail::contract_trailing(arranged, ck, bra);
      Mat w(prep.dim_r, dn);
      for (long r = 0; r < prep.dim_r; ++r)
        for (long s = 0; s < dn; ++s) w(r, s) = after[r * dn + s];
      for (long xh = 0; xh < ck; ++xh) {
        Mat m = (w.adjoint() * povm[xh] * w).conjugate();
        joint(xh, x) = m.trace().real();
        if (xh == x) accepted_sum += m;
      }
    }
    tr.branch_probability = accepted_sum.trace().real();
    if (mode == RunMode::trajectory) {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      double u = unif(rng);
      double cum = 0.0;
      for (long xh = 0; xh < ck && u >= 0; ++xh)
        for (long x = 0; x < ck; ++x) {
          cum += joint(xh, x).real();
          if (u < cum) {
            tr.prover_bits = detail::int_to_bits(xh, k);
            tr.sampler_bits = detail::int_to_bits(x, k);
            tr.accepted = xh == x;
            u = -1;
            break;
          }
        }
    } else {
      tr.accepted = true;  // exact mode records the accept branch itself
    }
    if (dn <= 8) {
      tr.post_state_sn = QuantumState::mixed(make_registers("S", n, d), accepted_sum);
      tr.has_post_state = true;
    }
  }
  return tr;
}

inline void to_json(nlohmann::json& j, const SamplingTranscript& tr) {
  j = nlohmann::json{{"protocol", to_string(tr.kind)},
                     {"mode", tr.mode == RunMode::exact ? "exact" : "trajectory"},
                     {"N", tr.N},
                     {"k", tr.k},
                     {"seed", tr.seed},
                     {"t", tr.t},
                     {"accept", tr.accepted},
                     {"branch_probability", tr.branch_probability},
                     {"reply_digest", tr.reply_digest}};
  if (!tr.challenge.empty()) {
    std::string c;
    for (int b : tr.challenge) c += (b == 0 ? '+' : 'x');
    j["challenge"] = c;
  }
  if (!tr.prover_bits.empty()) j["prover_bits"] = tr.prover_bits;
  if (!tr.sampler_bits.empty()) j["sampler_bits"] = tr.sampler_bits;
  if (tr.has_post_state) {
    const Mat m = tr.post_state_sn.density();
    std::vector<std::vector<std::vector<double>>> dump;
    for (long r = 0; r < m.rows(); ++r) {
      std::vector<std::vector<double>> row;
      for (long c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
      dump.push_back(std::move(row));
    }
    j["post_state"] = dump;
  }
}

// ---------------------------------------------------------------------------
// Randomness generation (EPR reference, purification sampling inside)

struct RandomnessOutcome {
  bool accepted = false;
  std::vector<int> x_a;  // empty on abort
  std::vector<int> x_b;
  SamplingTranscript transcript;
};

/// Trajectory run of the randomness-generation protocol: the inner sampling
/// with Alice as prover, then both sides measure their residual qubits in
/// the computational basis. Dishonest-sampler hooks: measure-first sample
/// choice and a selective-abort filter on Bob's output bits.
inline RandomnessOutcome run_randomness_generation(const ProtocolParams& params,
                                                   const ProverStrategy& alice,
                                                   const SamplerStrategy& bob, std::uint64_t seed) {
  params.validate();
  if (params.kind != ProtocolKind::purification)
    throw std::invalid_argument("run_randomness_generation: inner protocol is purification-based");
  if (params.local_dim() != 2)
    throw std::invalid_argument("run_randomness_generation: qubit reference required");

  Rng rng(seed);
  const int N = params.N;
  const int n = params.n();
  const long dn = 1L << n;

  auto prep = alice.prepare(params);
  RandomnessOutcome out;
  out.transcript.kind = params.kind;
  out.transcript.mode = RunMode::trajectory;
  out.transcript.N = N;
  out.transcript.k = params.k;
  out.transcript.seed = seed;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec held = prep.state;  // [R, S^N], collapses as Bob measures

  std::vector<int> bob_premeasure;
  if (bob.measure_first) {
    // Bob measures his whole register in the computational basis first
    const long ds = 1L << N;
    std::vector<double> probs(ds, 0.0);
    for (long r = 0; r < prep.dim_r; ++r)
      for (long s = 0; s < ds; ++s) probs[s] += std::norm(held[r * ds + s]);
    double u = unif(rng), cum = 0.0;
    long outcome = ds - 1;
    for (long s = 0; s < ds; ++s) {
      cum += probs[s];
      if (u < cum) {
        outcome = s;
        break;
      }
    }
    bob_premeasure = detail::int_to_bits(outcome, N);
    // collapse
    Vec collapsed = Vec::Zero(held.size());
    for (long r = 0; r < prep.dim_r; ++r) collapsed[r * ds + outcome] = held[r * ds + outcome];
    collapsed /= std::sqrt(probs[outcome]);
    held = collapsed;
  }

  if (bob.measure_first && bob.choose_sample) {
    out.transcript.t = bob.choose_sample(bob_premeasure, params.k);
    std::sort(out.transcript.t.begin(), out.transcript.t.end());
    if (int(out.transcript.t.size()) != params.k)
      throw std::invalid_argument("run_randomness_generation: sampler returned a bad t");
  } else {
    out.transcript.t = detail::random_subset(N, params.k, rng);
  }

  auto resp = alice.respond(params, out.transcript.t);
  out.transcript.reply_digest = detail::digest(resp.isometry);
  Vec branch =
      detail::purification_branch_vector(params, {held, prep.dim_r}, resp, out.transcript.t);
  out.transcript.branch_probability = branch.squaredNorm();
  bool check_passed = unif(rng) < out.transcript.branch_probability;
  out.transcript.accepted = check_passed;
  if (!check_passed) return out;

  // both parties measure their residual registers in the computational basis
  Vec post = branch / branch.norm();
  if (resp.dim_residual == dn) {
    // joint outcome over (R', S^n)
    std::vector<double> joint(dn * dn, 0.0);
    for (long a = 0; a < dn; ++a)
      for (long b = 0; b < dn; ++b) joint[a * dn + b] = std::norm(post[a * dn + b]);
    double u = unif(rng), cum = 0.0;
    long hit = dn * dn - 1;
    for (long i = 0; i < dn * dn; ++i) {
      cum += joint[i];
      if (u < cum) {
        hit = i;
        break;
      }
    }
    out.x_a = detail::int_to_bits(hit / dn, n);
    out.x_b = detail::int_to_bits(hit % dn, n);
  } else {
    // Alice's residual is unstructured; only Bob's outcome is defined
    Mat bob_state = detail::trace_leading_of_vector(post, resp.dim_residual);
    std::vector<double> probs(dn);
    for (long b = 0; b < dn; ++b) probs[b] = bob_state(b, b).real();
    double u = unif(rng), cum = 0.0;
    long hit = dn - 1;
    for (long b = 0; b < dn; ++b) {
      cum += probs[b];
      if (u < cum) {
        hit = b;
        break;
      }
    }
    out.x_b = detail::int_to_bits(hit, n);
  }

  if (bob.accept_filter && !bob.accept_filter(out.x_b)) {
    out.accepted = false;
    out.x_a.clear();
    out.x_b.clear();
    return out;
  }
  out.accepted = true;
  return out;
}

/// Measure-first sampler whose sample choice is a deterministic function of
/// the observed bits.
inline SamplerStrategy bob_measure_then_choose(
    std::function<std::vector<int>(const std::vector<int>&, int)> choice) {
  SamplerStrategy s;
  s.name = "measure_then_choose";
  s.measure_first = true;
  s.choose_sample = std::move(choice);
  return s;
}

/// Sample choice used in the entropy analysis: positions of the first k ones
/// of the observed string, padded with the earliest unused positions.
inline std::vector<int> first_k_ones_choice(const std::vector<int>& bits, int k) {
  std::vector<int> t;
  for (int i = 0; i < int(bits.size()) && int(t.size()) < k; ++i)
    if (bits[i] == 1) t.push_back(i);
  for (int i = 0; i < int(bits.size()) && int(t.size()) < k; ++i)
    if (std::find(t.begin(), t.end(), i) == t.end()) t.push_back(i);
  std::sort(t.begin(), t.end());
  return t;
}

}  // namespace mixsamp
