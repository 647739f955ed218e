// Quantum Hamming balls around i.i.d. centers, ideal-state certificates,
// and the exact binomial tail behind the i.i.d. concentration bound.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mixsamp/symmetry.hpp"

namespace mixsamp {

/// Projector onto the radius-r ball around |nu>^{(x)n}: the sum over error
/// sets E with |E| <= r of  (x)_{i in E} (1 - |nu><nu|)  (x)_{i not in E} |nu><nu|.
///
/// Computed by the recursion P(n, r) = Q (x) P(n-1, r) + (1-Q) (x) P(n-1, r-1).
inline Mat hamming_projector(int n, int r, const Vec& center) {
  if (n < 1) throw std::invalid_argument("hamming_projector: n must be positive");
  if (r < 0 || r > n) throw std::invalid_argument("hamming_projector: radius outside [0, n]");
  const long m = center.size();
  double norm = center.norm();
  if (std::abs(norm - 1.0) > 1e-9) throw std::invalid_argument("hamming_projector: center not normalized");
  long dim = 1;
  for (int i = 0; i < n; ++i) {
    dim *= m;
    check_mixed_dim(dim);
  }
  Mat q = center * center.adjoint();
  Mat qbar = Mat::Identity(m, m) - q;

  // table[j] = projector for "at most j errors" on the current suffix
  std::vector<Mat> table(r + 1, Mat::Identity(1, 1));
  for (int site = 0; site < n; ++site) {
    std::vector<Mat> next(r + 1);
    for (int j = 0; j <= r; ++j) {
      next[j] = kron(q, table[j]);
      if (j > 0) next[j] += kron(qbar, table[j - 1]);
    }
    table = std::move(next);
  }
  return table[r];
}

/// trace(P^{r,nu} |theta><theta|^{(x)n}) = Pr[Binomial(n, 1-|<theta|nu>|^2) <= r],
/// computed as an exact log-space binomial tail; no quantum-dimension limit.
inline double ball_weight_iid(const Vec& theta, const Vec& nu, std::int64_t n, std::int64_t r) {
  if (std::abs(theta.norm() - 1.0) > 1e-9 || std::abs(nu.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("ball_weight_iid: states must be normalized");
  double overlap = std::norm(theta.dot(nu));
  double q = std::min(std::max(1.0 - overlap, 0.0), 1.0);
  return binomial_tail_leq(n, q, r);
}

/// A certified triple: subnormalized psi on S^n together with a pure witness
/// on [R..., P_1, S_1, ..., P_n, S_n] whose trailing pair factors live inside
/// the radius-floor(eps n) ball around |phi_PS>^{(x)n}.
struct IdealCertificate {
  QuantumState psi_Sn;   // subnormalized, on S^n
  QuantumState witness;  // pure, leading R factors then interleaved pairs
  double epsilon = 0.0;
};

struct CertificateReport {
  bool ok = false;
  int radius = 0;
  double reduction_residual = 0.0;   // max-abs difference of the witness reduction vs psi
  double membership_residual = 0.0;  // norm of (1 - P_ball) witness
};

namespace detail {

/// Splits a witness system into (leading R labels, pair count); expects the
/// trailing factors to be P1,S1,...,Pn,Sn.
inline std::pair<std::vector<std::string>, int> witness_layout(const RegisterSystem& sys) {
  int start = -1;
  for (int i = 0; i < sys.size(); ++i)
    if (sys.label(i) == "P1") {
      start = i;
      break;
    }
  if (start < 0 || (sys.size() - start) % 2 != 0)
    throw std::invalid_argument("witness_layout: no trailing P1,S1,... pair block");
  const int n = (sys.size() - start) / 2;
  for (int j = 0; j < n; ++j) {
    if (sys.label(start + 2 * j) != "P" + std::to_string(j + 1) ||
        sys.label(start + 2 * j + 1) != "S" + std::to_string(j + 1))
      throw std::invalid_argument("witness_layout: malformed pair block");
  }
  std::vector<std::string> leading;
  for (int j = 0; j < start; ++j) leading.push_back(sys.label(j));
  return {leading, n};
}

}  // namespace detail

/// Checks both certificate conditions: the witness reduces to psi on S^n and
/// is fixed by the radius-floor(eps n) ball projector (identity on R).
inline CertificateReport verify_ideal_certificate(const IdealCertificate& cert,
                                                  const ReferenceState& ref) {
  const auto& wsys = cert.witness.system();
  auto [leading, n] = detail::witness_layout(wsys);
  if (n < 1) throw std::invalid_argument("verify_ideal_certificate: witness lacks pair factors");
  if (cert.psi_Sn.system().size() != n)
    throw std::invalid_argument("verify_ideal_certificate: psi factor count mismatch");

  CertificateReport report;
  report.radius = int(std::floor(cert.epsilon * n));

  std::vector<std::string> s_labels;
  for (int i = 1; i <= n; ++i) s_labels.push_back("S" + std::to_string(i));
  Mat reduced = partial_trace(cert.witness, s_labels).density();
  report.reduction_residual = (reduced - cert.psi_Sn.density()).cwiseAbs().maxCoeff();

  long lead_dim = 1;
  for (const auto& l : leading) lead_dim *= wsys.dim(wsys.index_of(l));
  Mat ball = hamming_projector(n, report.radius, ref.purification());
  const Vec& w = cert.witness.vector();
  const long pair_dim = ball.rows();
  // witness is [R-block, pair-block]; apply the ball blockwise over R
  double leak_sq = 0.0;
  for (long rblk = 0; rblk < lead_dim; ++rblk) {
    Vec seg = w.segment(rblk * pair_dim, pair_dim);
    leak_sq += (seg - ball * seg).squaredNorm();
  }
  report.membership_residual = std::sqrt(leak_sq);
  report.ok = report.reduction_residual <= 1e-8 && report.membership_residual <= 1e-8;
  return report;
}

struct BallProjectionResult {
  QuantumState projected;  // P state P, on the same pair system
  double leak = 0.0;       // trace((1-P) state)
  double gm_distance = 0.0;
  double gm_bound = 0.0;
};

/// Sandwiches a state on [P_1 S_1 ... P_n S_n] by the radius-r ball
/// projector; the gentle-measurement inequality
/// || state - P state P ||_1 <= 2 sqrt(leak) is asserted as a side check.
inline BallProjectionResult project_into_ball(const QuantumState& state, int radius,
                                              const ReferenceState& ref) {
  const auto& sys = state.system();
  if (sys.size() % 2 != 0) throw std::invalid_argument("project_into_ball: expected pair layout");
  const int n = sys.size() / 2;
  Mat ball = hamming_projector(n, radius, ref.purification());
  Mat dense = state.density();
  Mat projected = ball * dense * ball;
  BallProjectionResult out{QuantumState::mixed(sys, projected), 0.0, 0.0, 0.0};
  out.leak = ((Mat::Identity(ball.rows(), ball.cols()) - ball) * dense).trace().real();
  out.gm_distance = trace_norm(dense - projected);
  out.gm_bound = 2.0 * std::sqrt(std::max(out.leak, 0.0));
  if (out.gm_distance > out.gm_bound + 1e-7)
    throw std::logic_error("project_into_ball: gentle-measurement bound violated");
  return out;
}

/// Cached ball with membership testing, for callers that reuse a projector.
class HammingBall {
 public:
  HammingBall(int n, int r, Vec center)
      : n_(n), r_(r), center_(std::move(center)), projector_(hamming_projector(n, r, center_)) {}

  int copies() const { return n_; }
  int radius() const { return r_; }
  const Mat& projector() const { return projector_; }

  bool contains(const Vec& v, double tolerance = 1e-8) const {
    return (projector_ * v - v).norm() <= tolerance;
  }

 private:
  int n_;
  int r_;
  Vec center_;
  Mat projector_;
};

}  // namespace mixsamp
