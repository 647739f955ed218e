#include <catch2/catch_amalgamated.hpp>

#include "mixsamp/idealball.hpp"
#include "test_util.hpp"

using namespace mixsamp;
using testutil::haar_vector;

namespace {

/// Subset-enumeration oracle for the ball projector.
Mat hamming_projector_oracle(int n, int r, const Vec& nu) {
  const long m = nu.size();
  Mat q = nu * nu.adjoint();
  Mat qbar = Mat::Identity(m, m) - q;
  long dim = 1;
  for (int i = 0; i < n; ++i) dim *= m;
  Mat acc = Mat::Zero(dim, dim);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) > r) continue;
    Mat term = Mat::Identity(1, 1);
    for (int i = 0; i < n; ++i) term = kron(term, (mask >> i) & 1 ? qbar : q);
    acc += term;
  }
  return acc;
}

Vec qubit(double a0, double a1) {
  Vec v(2);
  v << a0, a1;
  return v;
}

RegisterSystem pair_system(int n) {
  std::vector<Factor> fs;
  for (int i = 1; i <= n; ++i) {
    fs.push_back({"P" + std::to_string(i), 2});
    fs.push_back({"S" + std::to_string(i), 2});
  }
  return RegisterSystem(fs);
}

}  // namespace

TEST_CASE("hamming_projector: zero radius, full radius, subset oracle") {
  Vec nu = qubit(1, 0);
  REQUIRE((hamming_projector(1, 0, nu) - nu * nu.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
  REQUIRE((hamming_projector(2, 2, nu) - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);

  // n=2, r=1, nu=|0>: projector onto span{|00>, |01>, |10>}
  Mat p = hamming_projector(2, 1, nu);
  REQUIRE(projector_rank(p) == 3);
  Vec v11 = Vec::Zero(4);
  v11[3] = 1;
  REQUIRE((p * v11).norm() < 1e-12);

  Rng rng(9001);
  for (int n = 1; n <= 4; ++n) {
    Vec center = haar_vector(2, rng);
    for (int r = 0; r <= n; ++r) {
      Mat lhs = hamming_projector(n, r, center);
      Mat rhs = hamming_projector_oracle(n, r, center);
      REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
      REQUIRE((lhs * lhs - lhs).cwiseAbs().maxCoeff() < 1e-11);
    }
  }
  REQUIRE_THROWS_AS(hamming_projector(2, 3, nu), std::invalid_argument);
}

TEST_CASE("hamming_projector: commutes with every permutation operator") {
  Rng rng(9002);
  Vec center = haar_vector(3, rng);
  Mat p = hamming_projector(3, 1, center);
  for (const auto& pi : Permutation::all(3)) {
    Mat u = permutation_operator(pi, 3);
    REQUIRE((u * p - p * u).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("hamming_projector: rank formula for qubit centers") {
  // rank = sum_{j<=r} binom(n,j) (d-1)^j at d=2
  Rng rng(9003);
  Vec center = haar_vector(2, rng);
  for (int n = 1; n <= 5; ++n) {
    for (int r = 0; r <= n; ++r) {
      long expect = 0;
      for (int j = 0; j <= r; ++j) expect += long(binomial(n, j));
      REQUIRE(projector_rank(hamming_projector(n, r, center)) == expect);
    }
  }
}

TEST_CASE("ball_weight_iid: trivial cases and operator oracle at n <= 5") {
  Rng rng(9004);
  Vec nu = haar_vector(2, rng);
  REQUIRE(ball_weight_iid(nu, nu, 50, 0) == Catch::Approx(1.0).margin(1e-12));
  Vec theta = haar_vector(2, rng);
  REQUIRE(ball_weight_iid(theta, nu, 7, 7) == Catch::Approx(1.0).margin(1e-12));

  for (int n = 1; n <= 5; ++n) {
    for (int r = 0; r <= n; ++r) {
      Mat p = hamming_projector(n, r, nu);
      Vec tn = kron_pow(theta, n);
      double direct = (tn.adjoint() * p * tn).real()(0, 0);
      REQUIRE(ball_weight_iid(theta, nu, n, r) == Catch::Approx(direct).margin(1e-10));
    }
  }
}

TEST_CASE("ball_weight_iid: exact tail dominates the Hoeffding expression") {
  // overlap 0.9, n=100, r=20: tail >= 1 - exp(-2 (0.1)^2 100) = 1 - e^-2
  Vec nu = qubit(1, 0);
  Vec theta = qubit(std::sqrt(0.9), std::sqrt(0.1));
  double tail = ball_weight_iid(theta, nu, 100, 20);
  REQUIRE(tail >= 1.0 - std::exp(-2.0));
  // direct-summation oracle via a multiplicative pmf recurrence
  const long double q = 0.1L;
  long double term = std::pow(1.0L - q, 100.0L);
  long double acc = term;
  for (int j = 0; j < 20; ++j) {
    term *= (long double)(100 - j) / (long double)(j + 1) * q / (1.0L - q);
    acc += term;
  }
  REQUIRE(tail == Catch::Approx(double(acc)).margin(1e-12));
}

TEST_CASE("ball_weight_iid: Hoeffding bound holds across the grid, large n") {
  // for |<theta|nu>|^2 >= 1-eps and r = floor((eps+alpha) n):
  // tail >= 1 - exp(-2 alpha^2 n)
  for (double eps : {0.05, 0.1, 0.2, 0.3}) {
    for (double alpha : {0.05, 0.1, 0.2, 0.3}) {
      for (std::int64_t n : {100L, 1000L, 10000L}) {
        Vec nu = qubit(1, 0);
        Vec theta = qubit(std::sqrt(1 - eps), std::sqrt(eps));
        auto r = std::int64_t(std::floor((eps + alpha) * double(n)));
        double tail = ball_weight_iid(theta, nu, n, r);
        REQUIRE(tail >= 1.0 - std::exp(-2.0 * alpha * alpha * double(n)) - 1e-12);
      }
    }
  }
}

TEST_CASE("verify_ideal_certificate: iid witness at any epsilon") {
  auto ref = ReferenceState::epr();
  const int n = 4;
  Vec w = kron_pow(ref.purification(), n);
  auto witness = QuantumState::pure(pair_system(n), w);
  Mat phi_s = ref.phi_S.density();
  auto psi = QuantumState::mixed(make_registers("S", n, 2), kron_pow(phi_s, n));
  for (double eps : {0.1, 0.25, 0.9}) {
    auto rep = verify_ideal_certificate({psi, witness, eps}, ref);
    REQUIRE(rep.ok);
  }
}

TEST_CASE("verify_ideal_certificate: fully corrupted witness fails below radius n") {
  auto ref = ReferenceState::epr();
  const int n = 3;
  // corrupt every position: orthogonal pair state (sigma_x (x) 1)|Phi+> = |Psi+>
  Vec psi_plus(4);
  psi_plus << 0, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0;
  Vec w = kron_pow(psi_plus, n);
  auto witness = QuantumState::pure(pair_system(n), w);
  auto psi = partial_trace(witness, {"S1", "S2", "S3"});
  auto rep = verify_ideal_certificate({psi, witness, 0.5}, ref);  // radius 1 < n
  REQUIRE_FALSE(rep.ok);
  REQUIRE(rep.membership_residual > 0.5);
  REQUIRE(rep.reduction_residual < 1e-12);
}

TEST_CASE("verify_ideal_certificate: one corrupted position, radius edge") {
  auto ref = ReferenceState::epr();
  const int n = 4;
  Vec psi_plus(4);
  psi_plus << 0, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0;
  // corruption on the last position
  Vec w = kron(kron_pow(ref.purification(), n - 1), psi_plus);
  auto witness = QuantumState::pure(pair_system(n), w);
  std::vector<std::string> s_labels{"S1", "S2", "S3", "S4"};
  auto psi = partial_trace(witness, s_labels);

  auto pass = verify_ideal_certificate({psi, witness, 0.25}, ref);  // radius 1
  REQUIRE(pass.ok);
  auto fail = verify_ideal_certificate({psi, witness, 0.2}, ref);  // radius floor(0.8) = 0
  REQUIRE_FALSE(fail.ok);
}

TEST_CASE("verify_ideal_certificate: witness with a leading purifying register") {
  Rng rng(9005);
  auto ref = ReferenceState::epr();
  const int n = 2;
  // random vector inside R (x) Delta_1
  Mat ball = hamming_projector(n, 1, ref.purification());
  const long rdim = 3, pdim = ball.rows();
  Vec raw = testutil::random_vector(rdim * pdim, rng);
  for (long r = 0; r < rdim; ++r)
    raw.segment(r * pdim, pdim) = ball * raw.segment(r * pdim, pdim);
  raw.normalize();
  auto wsys = RegisterSystem::single("R", int(rdim)).tensor_with(pair_system(n));
  auto witness = QuantumState::pure(wsys, raw);
  auto psi = partial_trace(witness, {"S1", "S2"});
  auto rep = verify_ideal_certificate({psi, witness, 0.5}, ref);  // radius 1
  REQUIRE(rep.ok);
  // but a radius-0 check fails for a generic ball vector
  auto rep0 = verify_ideal_certificate({psi, witness, 0.4}, ref);  // radius 0
  REQUIRE_FALSE(rep0.ok);
}

TEST_CASE("cached ball answers membership queries") {
  auto ref = ReferenceState::epr();
  HammingBall ball(2, 1, ref.purification());
  REQUIRE(ball.copies() == 2);
  REQUIRE(ball.radius() == 1);
  REQUIRE(ball.contains(kron(ref.purification(), ref.purification())));
  Vec err = Vec::Zero(4);
  err[1] = 1.0;
  REQUIRE(ball.contains(kron(ref.purification(), err)));
  REQUIRE_FALSE(ball.contains(kron(err, err)));
}

TEST_CASE("project_into_ball: fixed point, leak vs binomial tail, full radius") {
  auto ref = ReferenceState::epr();
  const int n = 3;

  // state already in the ball: leak 0, unchanged
  Vec w = kron_pow(ref.purification(), n);
  auto iid = QuantumState::pure(pair_system(n), w).as_mixed();
  auto res = project_into_ball(iid, 0, ref);
  REQUIRE(res.leak == Catch::Approx(0.0).margin(1e-12));
  REQUIRE((res.projected.density() - iid.density()).cwiseAbs().maxCoeff() < 1e-12);

  // |theta_PS>^{(x)n}: leak equals the complementary binomial tail
  Rng rng(9006);
  Vec theta = haar_vector(4, rng);
  auto ts = QuantumState::pure(pair_system(n), kron_pow(theta, n)).as_mixed();
  for (int r = 0; r <= n; ++r) {
    auto pr = project_into_ball(ts, r, ref);
    double expect = 1.0 - ball_weight_iid(theta, ref.purification(), n, r);
    REQUIRE(pr.leak == Catch::Approx(expect).margin(1e-10));
    REQUIRE(pr.gm_distance <= pr.gm_bound + 1e-7);
  }

  auto full = project_into_ball(ts, n, ref);
  REQUIRE(full.leak == Catch::Approx(0.0).margin(1e-12));
}
