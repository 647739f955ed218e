// Operator-inequality toolkit: post-selection, the dominance <->
// post-selection equivalence, the superposition-vs-mixture bound, and
// gentle measurement.
#pragma once

#include <string>
#include <vector>

#include "mixsamp/qcore.hpp"

namespace mixsamp {

/// tr_A((E (x) 1) rho) for a POVM element 0 <= E <= 1 acting on the labeled
/// factors; returns the subnormalized conditional state on the complement.
inline QuantumState postselect(const QuantumState& state, const Mat& element,
                               const std::vector<std::string>& on_labels) {
  const auto& sys = state.system();
  std::vector<bool> selected(sys.size(), false);
  for (const auto& l : on_labels) selected[sys.index_of(l)] = true;
  std::vector<std::string> front, back;
  for (int i = 0; i < sys.size(); ++i)
    (selected[i] ? front : back).push_back(sys.label(i));
  if (back.empty()) throw std::invalid_argument("postselect: nothing left after selection");

  std::vector<std::string> order = front;
  order.insert(order.end(), back.begin(), back.end());
  QuantumState arranged = reorder_state(state, order);

  long da = 1;
  for (const auto& l : front) da *= sys.dim(sys.index_of(l));
  if (element.rows() != da || element.cols() != da)
    throw std::invalid_argument("postselect: element dimension mismatch");
  if (min_eigenvalue(element) < -tol::psd)
    throw std::invalid_argument("postselect: element not PSD");
  if (min_eigenvalue(Mat::Identity(da, da) - element) < -tol::psd)
    throw std::invalid_argument("postselect: element exceeds identity");

  const long db = sys.total_dim() / da;
  Mat dense = arranged.density();
  Mat out = Mat::Zero(db, db);
  // out = sum over A-indices of E-weighted blocks
  for (long a1 = 0; a1 < da; ++a1)
    for (long a2 = 0; a2 < da; ++a2) {
      cxd w = element(a2, a1);  // tr picks E(a2,a1) rho[(a1,b1),(a2,b2)]
      if (w == cxd(0, 0)) continue;
      out += w * dense.block(a1 * db, a2 * db, db, db);
    }
  RegisterSystem out_sys = arranged.system().subsystem([&] {
    std::vector<int> idx(back.size());
    for (std::size_t i = 0; i < back.size(); ++i) idx[i] = int(front.size() + i);
    return idx;
  }());
  return QuantumState::mixed(std::move(out_sys), std::move(out));
}

struct DominanceReport {
  bool ok = false;
  double min_eig = 0.0;  // smallest eigenvalue of c sigma - rho
};

/// rho <= c sigma as PSD operators, within tol::psd.
inline DominanceReport check_dominance(const QuantumState& rho, const QuantumState& sigma,
                                       double c) {
  if (!(rho.system() == sigma.system()))
    throw std::invalid_argument("check_dominance: systems differ");
  double eig = min_eigenvalue(c * sigma.density() - rho.density());
  return {eig >= -tol::psd, eig};
}

/// Largest c for which rho <= c sigma can hold:
/// lambda_max(sigma^{-1/2} rho sigma^{-1/2}) with a pseudo-inverse on
/// sigma's kernel; infinity when supp(rho) is not inside supp(sigma).
inline double tight_dominance_constant(const QuantumState& rho, const QuantumState& sigma) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(sigma.density()));
  const auto& lam = es.eigenvalues();
  const double cutoff = std::max(lam.maxCoeff(), 1.0) * 1e-12;
  RVec inv_root = RVec::Zero(lam.size());
  for (long i = 0; i < lam.size(); ++i)
    if (lam[i] > cutoff) inv_root[i] = 1.0 / std::sqrt(lam[i]);
  Mat isr = es.eigenvectors() * inv_root.asDiagonal() * es.eigenvectors().adjoint();
  // support check: rho must vanish on sigma's kernel
  Mat rho_d = rho.density();
  for (long i = 0; i < lam.size(); ++i) {
    if (lam[i] > cutoff) continue;
    Vec v = es.eigenvectors().col(i);
    if ((v.adjoint() * rho_d * v).real()(0, 0) > 1e-10)
      return std::numeric_limits<double>::infinity();
  }
  return std::max(max_eigenvalue(isr * rho_d * isr), 0.0);
}

struct PostselectionMap {
  Mat map;              // A from sigma's purifying register to rho's
  double residual;      // || sqrt(c) (A (x) 1)|sigma> - |rho> ||
  double max_singular;  // largest singular value of A (contraction check)
};

namespace detail {

/// Leading-purifier split: a purification's system must end with exactly the
/// factors of `base`; everything before is the purifying block.
inline long purifier_dim(const QuantumState& purification, const RegisterSystem& base) {
  const auto& sys = purification.system();
  int lead = sys.size() - base.size();
  if (lead < 1) throw std::invalid_argument("purifier_dim: no leading purifying block");
  for (int i = 0; i < base.size(); ++i)
    if (sys.label(lead + i) != base.label(i) || sys.dim(lead + i) != base.dim(i))
      throw std::invalid_argument("purifier_dim: trailing factors do not match the base system");
  long d = 1;
  for (int i = 0; i < lead; ++i) d *= sys.dim(i);
  return d;
}

}  // namespace detail

/// Realizes rho = c * postselection of sigma through purifications:
/// returns A with A^dagger A <= 1 and sqrt(c) (A (x) 1)|sigma> = |rho>.
///
/// Construction: purify the clamped remainder c sigma - rho next to |rho>
/// behind a flag qubit, then match sigma's purification onto that combined
/// purification along the eigenbasis of sigma.
inline PostselectionMap construct_postselection_map(const QuantumState& rho,
                                                    const QuantumState& sigma, double c,
                                                    const QuantumState& rho_purif,
                                                    const QuantumState& sigma_purif) {
  if (!(rho.system() == sigma.system()))
    throw std::invalid_argument("construct_postselection_map: systems differ");
  auto dom = check_dominance(rho, sigma, c);
  if (!dom.ok)
    throw std::invalid_argument("construct_postselection_map: dominance fails at the given c");

  const long dq = rho.dim();
  const long dim_r1 = detail::purifier_dim(sigma_purif, sigma.system());
  const long dim_r2 = detail::purifier_dim(rho_purif, rho.system());

  // remainder, clamped PSD
  Mat remainder = c * sigma.density() - rho.density();
  Eigen::SelfAdjointEigenSolver<Mat> rem_es(hermitian_part(remainder));
  RVec rem_lam = rem_es.eigenvalues().cwiseMax(0.0);
  long rem_rank = 0;
  for (long i = 0; i < rem_lam.size(); ++i)
    if (rem_lam[i] > 1e-14) ++rem_rank;
  if (rem_rank > dim_r2)
    throw std::invalid_argument(
        "construct_postselection_map: rho's purifying register too small for the remainder");

  // purification of the remainder on [R2, Q], computational basis on R2
  Vec rem_purif = Vec::Zero(dim_r2 * dq);
  {
    long slot = 0;
    for (long i = 0; i < rem_lam.size(); ++i) {
      if (rem_lam[i] <= 1e-14) continue;
      Vec f = rem_es.eigenvectors().col(i);
      double w = std::sqrt(rem_lam[i]);
      for (long s = 0; s < dq; ++s) rem_purif[slot * dq + s] = w * f[s];
      ++slot;
    }
  }

  // |sigma_{R' R2 Q}> with a 2-dimensional flag register R'
  const Vec& rho_vec = rho_purif.vector();
  Vec combined = Vec::Zero(2 * dim_r2 * dq);
  combined.head(dim_r2 * dq) = rho_vec;
  combined.tail(dim_r2 * dq) = rem_purif;
  combined /= std::sqrt(c);

  // eigenbasis of sigma with positive weight
  Eigen::SelfAdjointEigenSolver<Mat> sig_es(hermitian_part(sigma.density()));
  const Vec& sig_vec = sigma_purif.vector();

  Mat a = Mat::Zero(dim_r2, dim_r1);
  for (long i = 0; i < sig_es.eigenvalues().size(); ++i) {
    double mu = sig_es.eigenvalues()[i];
    if (mu <= 1e-13) continue;
    Vec q = sig_es.eigenvectors().col(i);
    // v_i on R1 from sigma's purification, w_i on R'R2 from the combined one
    Vec v = Vec::Zero(dim_r1);
    for (long r = 0; r < dim_r1; ++r)
      for (long s = 0; s < dq; ++s) v[r] += sig_vec[r * dq + s] * std::conj(q[s]);
    Vec w0 = Vec::Zero(dim_r2);  // flag-0 component only: (<0| (x) 1) w_i
    for (long r = 0; r < dim_r2; ++r)
      for (long s = 0; s < dq; ++s) w0[r] += combined[r * dq + s] * std::conj(q[s]);
    a += (w0 / mu) * v.adjoint();  // |w_i><v_i| with both scaled by 1/sqrt(mu)
  }

  // diagnostics
  Vec image = Vec::Zero(dim_r2 * dq);
  for (long r2 = 0; r2 < dim_r2; ++r2)
    for (long r1 = 0; r1 < dim_r1; ++r1) {
      if (a(r2, r1) == cxd(0, 0)) continue;
      image.segment(r2 * dq, dq) += a(r2, r1) * sig_vec.segment(r1 * dq, dq);
    }
  PostselectionMap out;
  out.map = std::move(a);
  out.residual = (std::sqrt(c) * image - rho_vec).norm();
  Eigen::BDCSVD<Mat> svd(out.map);
  out.max_singular = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  return out;
}

struct MixtureCheckReport {
  bool ok = false;
  double min_eig = 0.0;  // smallest eigenvalue of |J| rho_mix - rho
};

/// sum_{ij} |psi_i><psi_j|  <=  |J| sum_i |psi_i><psi_i|.
inline MixtureCheckReport superposition_mixture_check(const std::vector<Vec>& vectors) {
  if (vectors.empty()) throw std::invalid_argument("superposition_mixture_check: empty family");
  const long d = vectors.front().size();
  Vec sum = Vec::Zero(d);
  Mat mix = Mat::Zero(d, d);
  for (const auto& v : vectors) {
    if (v.size() != d) throw std::invalid_argument("superposition_mixture_check: dim mismatch");
    sum += v;
    mix += v * v.adjoint();
  }
  Mat diff = double(vectors.size()) * mix - sum * sum.adjoint();
  double eig = min_eigenvalue(diff);
  return {eig >= -tol::psd, eig};
}

struct GentleMeasurementReport {
  double distance = 0.0;  // || rho - P rho P ||_1
  double bound = 0.0;     // 2 sqrt(tr((1-P) rho))
  bool ok = false;
};

inline GentleMeasurementReport gentle_measurement_check(const QuantumState& rho, const Mat& p) {
  if ((p * p - p).cwiseAbs().maxCoeff() > 1e-7)
    throw std::invalid_argument("gentle_measurement_check: not a projector");
  Mat dense = rho.density();
  GentleMeasurementReport out;
  out.distance = trace_norm(dense - p * dense * p);
  double leak = ((Mat::Identity(p.rows(), p.cols()) - p) * dense).trace().real();
  out.bound = 2.0 * std::sqrt(std::max(leak, 0.0));
  out.ok = out.distance <= out.bound + tol::eq;
  return out;
}

}  // namespace mixsamp
