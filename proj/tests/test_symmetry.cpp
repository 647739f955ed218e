#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <tuple>

#include "mixsamp/symmetry.hpp"
#include "test_util.hpp"

using namespace mixsamp;
using testutil::haar_vector;
using testutil::random_density;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

/// Basis-relabeling oracle: builds the permutation operator by enumerating
/// computational basis strings and permuting index digits directly.
Mat permutation_operator_oracle(const Permutation& pi, int d) {
  const int n = pi.size();
  long dim = 1;
  for (int i = 0; i < n; ++i) dim *= d;
  std::vector<int> dims(n, d);
  auto strides = detail::strides(dims);
  Mat op = Mat::Zero(dim, dim);
  std::vector<int> in_digits(n), out_digits(n);
  for (long col = 0; col < dim; ++col) {
    detail::decode(col, strides, in_digits);
    for (int j = 0; j < n; ++j) out_digits[pi(j)] = in_digits[j];
    op(detail::encode(out_digits, strides), col) = 1.0;
  }
  return op;
}

}  // namespace

TEST_CASE("permutation_operator: identity, swap, relabeling oracle") {
  REQUIRE((permutation_operator(Permutation::identity(3), 2) - Mat::Identity(8, 8))
              .cwiseAbs()
              .maxCoeff() < 1e-15);

  Permutation swap({1, 0});
  Mat op = permutation_operator(swap, 2);
  Vec v01 = Vec::Zero(4);
  v01[1] = 1.0;  // |01>
  Vec moved = op * v01;
  REQUIRE(std::abs(moved[2] - 1.0) < 1e-15);  // |10>

  for (const auto& pi : Permutation::all(3)) {
    REQUIRE((permutation_operator(pi, 3) - permutation_operator_oracle(pi, 3))
                .cwiseAbs()
                .maxCoeff() < 1e-15);
    Mat u = permutation_operator(pi, 3);
    REQUIRE((u * u.adjoint() - Mat::Identity(27, 27)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("permutation_operator: composition law") {
  auto perms = Permutation::all(3);
  Rng rng(8002);
  for (int trial = 0; trial < 10; ++trial) {
    const auto& a = perms[rng() % perms.size()];
    const auto& b = perms[rng() % perms.size()];
    Mat lhs = permutation_operator(a.compose(b), 2);
    Mat rhs = permutation_operator(a, 2) * permutation_operator(b, 2);
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("block_permutation_operator: pair swap and composition") {
  REQUIRE((block_permutation_operator(Permutation::identity(2), 2, 2) - Mat::Identity(16, 16))
              .cwiseAbs()
              .maxCoeff() < 1e-15);

  // |Phi+> on pair 1, |00> on pair 2, interleaved layout; swapping pairs
  // moves the entangled pair to the second slot.
  Vec phi(4), zz(4);
  phi << kInvSqrt2, 0, 0, kInvSqrt2;
  zz << 1, 0, 0, 0;
  Vec in = kron(phi, zz);
  Vec expect = kron(zz, phi);
  Mat swap_op = block_permutation_operator(Permutation({1, 0}), 2, 2);
  REQUIRE((swap_op * in - expect).norm() < 1e-14);

  auto perms = Permutation::all(3);
  const auto& a = perms[3];
  const auto& b = perms[4];
  REQUIRE((block_permutation_operator(a.compose(b), 2, 2) -
           block_permutation_operator(a, 2, 2) * block_permutation_operator(b, 2, 2))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
}

TEST_CASE("decompose_permutation: identity, cycle, operator identity, count") {
  auto dec = decompose_permutation(Permutation::identity(4), 2);
  REQUIRE(dec.sample == std::vector<int>{0, 1});
  REQUIRE(dec.tau.is_identity());
  REQUIRE(dec.tau_bar.is_identity());

  // cycle 0->1->2->0 on N=3, k=1: sample = {pi^{-1}(0)} = {2}
  Permutation cyc({1, 2, 0});
  auto dc = decompose_permutation(cyc, 1);
  REQUIRE(dc.sample == std::vector<int>{2});

  // operator identity V^{[k]} pi = (tau_bar (x) tau) V^{t} for all pi, N<=5
  for (int N = 2; N <= 5; ++N) {
    for (int k = 1; k < N; ++k) {
      std::vector<int> first_k(k);
      std::iota(first_k.begin(), first_k.end(), 0);
      Mat v_first = permutation_operator(grouping_permutation(first_k, N), 2);
      for (const auto& pi : Permutation::all(N)) {
        auto d = decompose_permutation(pi, k);
        Mat lhs = v_first * permutation_operator(pi, 2);
        // block permutation on slots: tau_bar on the first N-k, tau shifted
        std::vector<int> block(N);
        for (int s = 0; s < N - k; ++s) block[s] = d.tau_bar(s);
        for (int s = 0; s < k; ++s) block[N - k + s] = N - k + d.tau(s);
        Mat rhs = permutation_operator(Permutation(block), 2) *
                  permutation_operator(grouping_permutation(d.sample, N), 2);
        REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }

  // injectivity: exactly N! distinct triples at N=4, k=2
  std::set<std::tuple<std::vector<int>, std::vector<int>, std::vector<int>>> triples;
  for (const auto& pi : Permutation::all(4)) {
    auto d = decompose_permutation(pi, 2);
    triples.insert({d.sample, d.tau.mapping(), d.tau_bar.mapping()});
  }
  REQUIRE(triples.size() == 24);
}

TEST_CASE("sym_dim: whole space, qubit pair, bound check") {
  REQUIRE(sym_dim({1, 5}) == 5);
  REQUIRE(sym_dim({2, 2}) == 3);
  REQUIRE(sym_dim({3, 4}) == 20);
  REQUIRE(sym_dim({4, 4}) == 35);
}

TEST_CASE("sym_projector: idempotent with the right rank; permutations fix it") {
  REQUIRE((sym_projector({1, 3}) - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);

  for (int n = 2; n <= 3; ++n) {
    for (int d = 2; d <= 3; ++d) {
      Mat p = sym_projector({n, d});
      REQUIRE((p * p - p).cwiseAbs().maxCoeff() < 1e-12);
      REQUIRE(projector_rank(p) == long(sym_dim({n, d})));
      for (const auto& pi : Permutation::all(n)) {
        REQUIRE((permutation_operator(pi, d) * p - p).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }

  // n=2, d=2: rank-3 projector onto span{|00>, |11>, (|01>+|10>)/sqrt 2}
  Mat p22 = sym_projector({2, 2});
  REQUIRE(projector_rank(p22) == 3);
  Vec sym01(4);
  sym01 << 0, kInvSqrt2, kInvSqrt2, 0;
  REQUIRE((p22 * sym01 - sym01).norm() < 1e-12);
  Vec anti(4);
  anti << 0, kInvSqrt2, -kInvSqrt2, 0;
  REQUIRE((p22 * anti).norm() < 1e-12);
}

TEST_CASE("sym_projector: Monte-Carlo Haar estimate within 0.05 at n=2, d=2") {
  Rng rng(8003);
  const int samples = 100000;
  Mat acc = Mat::Zero(4, 4);
  for (int i = 0; i < samples; ++i) {
    Vec theta = haar_vector(2, rng);
    Vec t2 = kron(theta, theta);
    acc += t2 * t2.adjoint();
  }
  Mat estimate = double(sym_dim({2, 2})) * acc / double(samples);
  Mat exact = sym_projector({2, 2});
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(estimate - exact), Eigen::EigenvaluesOnly);
  double opnorm = es.eigenvalues().cwiseAbs().maxCoeff();
  REQUIRE(opnorm < 0.05);
}

TEST_CASE("symmetrize: fixed point, two-element orbit, full invariance") {
  Mat p22 = sym_projector({2, 2});
  auto sym_in = QuantumState::mixed(make_registers("S", 2, 2), p22 / p22.trace().real());
  REQUIRE((symmetrize(sym_in).density() - sym_in.density()).cwiseAbs().maxCoeff() < 1e-12);

  // |01><01| -> (|01><01| + |10><10|)/2
  Mat m = Mat::Zero(4, 4);
  m(1, 1) = 1.0;
  auto st = QuantumState::mixed(make_registers("S", 2, 2), m);
  Mat expect = Mat::Zero(4, 4);
  expect(1, 1) = 0.5;
  expect(2, 2) = 0.5;
  REQUIRE((symmetrize(st).density() - expect).cwiseAbs().maxCoeff() < 1e-12);

  // random 3-qubit state: invariant under every permutation; idempotent;
  // trace preserved
  Rng rng(8004);
  auto rho = QuantumState::mixed(make_registers("S", 3, 2), random_density(8, rng) * 0.9);
  auto sym = symmetrize(rho);
  REQUIRE(sym.norm_value() == Catch::Approx(0.9).margin(1e-12));
  REQUIRE(is_permutation_invariant(sym, Pairing::none, 1e-10));
  REQUIRE((symmetrize(sym).density() - sym.density()).cwiseAbs().maxCoeff() < 1e-12);

  auto bad = QuantumState::mixed(RegisterSystem({{"A", 2}, {"B", 3}}), random_density(6, rng));
  REQUIRE_THROWS_AS(symmetrize(bad), std::invalid_argument);
}

TEST_CASE("symmetrize: paired flavor commutes with every pair permutation") {
  Rng rng(8005);
  std::vector<Factor> fs{{"P1", 2}, {"S1", 2}, {"P2", 2}, {"S2", 2}};
  auto rho = QuantumState::mixed(RegisterSystem(fs), random_density(16, rng));
  auto sym = symmetrize(rho, Pairing::pairs);
  REQUIRE(is_permutation_invariant(sym, Pairing::pairs, 1e-10));
  Mat swap_op = block_permutation_operator(Permutation({1, 0}), 2, 2);
  REQUIRE((swap_op * sym.density() * swap_op.adjoint() - sym.density()).cwiseAbs().maxCoeff() <
          1e-12);
}

TEST_CASE("symmetric_purification: iid states and symmetrized random states") {
  // (I/2)^{(x)2}: the purification lies in Sym^2 of the pair space
  Mat half = 0.5 * Mat::Identity(2, 2);
  auto iid = QuantumState::mixed(make_registers("S", 2, 2), kron(half, half));
  auto purif = symmetric_purification(iid);
  REQUIRE(purif.is_pure());
  Mat proj = sym_projector({2, 4});
  REQUIRE((proj * purif.vector() - purif.vector()).norm() < 1e-10);
  auto red = partial_trace(purif, {"S1", "S2"});
  REQUIRE((red.density() - iid.density()).cwiseAbs().maxCoeff() < 1e-10);

  // phi^{(x)N} for mixed phi: the purification passes the membership check
  Mat phi = Vec::Map(std::vector<cxd>{0.7, 0.3}.data(), 2).asDiagonal();
  auto phis = QuantumState::mixed(make_registers("S", 2, 2), kron(phi, phi));
  auto purif2 = symmetric_purification(phis);
  REQUIRE((proj * purif2.vector() - purif2.vector()).norm() < 1e-10);
  REQUIRE((partial_trace(purif2, {"S1", "S2"}).density() - phis.density()).cwiseAbs().maxCoeff() <
          1e-10);

  // symmetrized random 2-qubit state
  Rng rng(8006);
  auto rho = symmetrize(QuantumState::mixed(make_registers("S", 2, 2), random_density(4, rng)));
  auto purif3 = symmetric_purification(rho);
  REQUIRE((proj * purif3.vector() - purif3.vector()).norm() < 1e-10);
  REQUIRE((partial_trace(purif3, {"S1", "S2"}).density() - rho.density()).cwiseAbs().maxCoeff() <
          1e-10);

  // non-invariant input rejected
  Mat m = Mat::Zero(4, 4);
  m(1, 1) = 1.0;
  REQUIRE_THROWS_AS(symmetric_purification(QuantumState::mixed(make_registers("S", 2, 2), m)),
                    std::invalid_argument);
}

TEST_CASE("pure states in Sym^N are dominated by the projector") {
  Rng rng(8007);
  Mat proj = sym_projector({3, 2});
  for (int trial = 0; trial < 10; ++trial) {
    Vec raw = proj * testutil::random_vector(8, rng);
    raw.normalize();
    Mat diff = proj - raw * raw.adjoint();
    REQUIRE(min_eigenvalue(diff) > -tol::psd);
  }
}
