#include <catch2/catch_amalgamated.hpp>

#include "mixsamp/analysis.hpp"
#include "test_util.hpp"

using namespace mixsamp;

namespace {

ProtocolParams purification_params(int N, int k) {
  ProtocolParams p;
  p.N = N;
  p.k = k;
  p.kind = ProtocolKind::purification;
  return p;
}

Vec detuned_pair(double f2) {
  double gamma = 2.0 * f2 - 1.0;
  double p = 0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - gamma * gamma)));
  Vec v = Vec::Zero(4);
  v[0] = std::sqrt(p);
  v[3] = std::sqrt(1.0 - p);
  return v;
}

}  // namespace

TEST_CASE("symmetric upper bound: honest, iid-deviant, and zero-acceptance provers") {
  {
    auto params = purification_params(2, 1);
    auto res = verify_symmetric_upper_bound(params, HonestProver(), 0.25, 50, 321);
    REQUIRE(res.dominance.satisfied);
  }
  {
    auto params = purification_params(3, 1);
    auto res = verify_symmetric_upper_bound(params, IidProver(detuned_pair(0.9)), 0.25, 50, 322);
    REQUIRE(res.dominance.satisfied);
    REQUIRE(res.bad_weight_estimate >= 0.0);
  }
  {
    auto params = purification_params(3, 1);
    auto res = verify_symmetric_upper_bound(params, ZeroAcceptanceProver(), 0.25, 20, 323);
    REQUIRE(res.dominance.satisfied);  // zero output is below anything PSD
  }
}

TEST_CASE("ideal decomposition: honest prover gives the reference power and zero remainder") {
  auto params = purification_params(3, 1);
  auto res = verify_ideal_decomposition(params, HonestProver(), 0.5);
  REQUIRE(res.certificate_report.ok);
  REQUIRE(res.acceptance == Catch::Approx(1.0).margin(1e-10));
  // psi is the reference power itself; sigma vanishes
  Mat expect = kron_pow(params.ref.phi_S.density(), params.n());
  REQUIRE((res.certificate.psi_Sn.density() - expect).cwiseAbs().maxCoeff() < 1e-9);
  REQUIRE(res.sigma_norm < 1e-9);
  REQUIRE(res.witness_leak < 1e-10);
  REQUIRE(res.dominance.satisfied);
  REQUIRE(res.twirled_upper.satisfied);
  REQUIRE(res.unpermuted_upper.satisfied);
  REQUIRE(res.universal_mixture.satisfied);
  REQUIRE(res.reconstruction_roundtrip_residual < 1e-7);
}

TEST_CASE("ideal decomposition: few-errors and iid-deviant provers") {
  {
    auto params = purification_params(3, 1);
    auto res = verify_ideal_decomposition(params, FewErrorsProver(1), 0.5);  // eps >= 1/n
    REQUIRE(res.certificate_report.ok);
    REQUIRE(res.dominance.satisfied);
    REQUIRE(res.twirled_upper.satisfied);
    REQUIRE(res.unpermuted_upper.satisfied);
    REQUIRE(res.universal_mixture.satisfied);
    REQUIRE(res.acceptance == Catch::Approx(2.0 / 3.0).margin(1e-10));
  }
  {
    double eps = 0.4;
    auto params = purification_params(4, 2);
    auto res = verify_ideal_decomposition(params, IidProver(detuned_pair(1.0 - eps / 4)), eps);
    REQUIRE(res.certificate_report.ok);
    REQUIRE(res.dominance.satisfied);
    REQUIRE(res.unpermuted_upper.satisfied);
    REQUIRE(res.universal_mixture.satisfied);
    REQUIRE(res.sigma_norm >= 0.0);  // reported, not bounded
  }
}

TEST_CASE("unpermute_ideal: already-symmetric state passes unchanged") {
  Rng rng(13001);
  auto ref = ReferenceState::epr();
  auto inst = random_symmetrized_ideal_instance(2, 0.5, ref, rng);
  // use the symmetrization itself as sigma
  auto res = unpermute_ideal(inst.cert.psi_Sn, inst.cert, ref);
  REQUIRE(res.report.ok);
}

TEST_CASE("unpermute_ideal: error-pattern state with a radius-1 ball") {
  auto ref = ReferenceState::epr();
  const int n = 2;
  // sigma = reduction of |phi> (x) |0_P 1_S>: one corrupted position with a
  // distinguishable S-side, so sigma is not symmetric
  Vec err = Vec::Zero(4);
  err[1] = 1.0;  // |0>_P |1>_S
  Vec w = kron(ref.purification(), err);
  RegisterSystem purif_sys =
      RegisterSystem::single("R", 1).tensor_with(detail::pair_system(n, 2));
  auto nu0 = QuantumState::pure(purif_sys, w);
  std::vector<std::string> s_labels{"S1", "S2"};
  auto sigma = partial_trace(nu0, s_labels);

  auto cert = permutation_recorded_certificate(nu0, 0.5);
  REQUIRE(verify_ideal_certificate(cert, ref).ok);

  auto res = unpermute_ideal(sigma, cert, ref);
  REQUIRE(res.report.reduction_residual < 1e-8);
  REQUIRE(res.report.membership_residual < 1e-8);
  REQUIRE(res.report.ok);

  // a witness without the permutation record is rejected for
  // non-symmetric targets
  auto nu_pairs = QuantumState::pure(detail::pair_system(n, 2), w);
  auto nu_bar = symmetrize(nu_pairs.as_mixed(), Pairing::pairs);
  IdealCertificate plain{partial_trace(nu_bar, s_labels), purify(nu_bar, "R"), 0.5};
  REQUIRE(verify_ideal_certificate(plain, ref).ok);
  REQUIRE_THROWS_AS(unpermute_ideal(sigma, plain, ref), std::invalid_argument);
}

TEST_CASE("unpermute_ideal: randomized symmetrized-ideal instances") {
  auto ref = ReferenceState::epr();
  Rng rng(13002);
  for (int n = 2; n <= 3; ++n) {
    for (int trial = 0; trial < 10; ++trial) {
      auto inst = random_symmetrized_ideal_instance(n, 0.5, ref, rng);
      REQUIRE(verify_ideal_certificate(inst.cert, ref).ok);
      auto res = unpermute_ideal(inst.sigma, inst.cert, ref);
      INFO("n=" << n << " trial=" << trial
               << " reduction=" << res.report.reduction_residual
               << " membership=" << res.report.membership_residual);
      REQUIRE(res.report.ok);
    }
  }
}

TEST_CASE("min-entropy of ideal states: zero radius and nontrivial bounds") {
  // eps = 0 with n qubit pairs: the state is the EPR power, entropy n
  auto r0 = verify_min_entropy_ideal(3, 0.0, 5, 41);
  REQUIRE(r0.satisfied);
  REQUIRE(r0.rhs == Catch::Approx(3.0).margin(1e-9));

  auto r1 = verify_min_entropy_ideal(4, 0.25, 40, 42);
  REQUIRE(r1.satisfied);
  REQUIRE(r1.lhs == Catch::Approx((1.0 - 0.25 - binary_entropy(0.25)) * 4).margin(1e-12));
  REQUIRE(r1.lhs < 0.0);  // vacuous but checked

  auto r2 = verify_min_entropy_ideal(3, 1.0 / 3.0, 40, 43);
  REQUIRE(r2.satisfied);
}

TEST_CASE("min-entropy of ideal states: non-vacuous bound at the dimension ceiling") {
  // six pairs of qubits fill the mixed-state ceiling exactly
  auto rep = verify_min_entropy_ideal(6, 1.0 / 6.0, 8, 44);
  REQUIRE(rep.lhs == Catch::Approx((1.0 - 1.0 / 6.0 - binary_entropy(1.0 / 6.0)) * 6).margin(1e-12));
  REQUIRE(rep.lhs > 1.0);  // around 1.1 bits
  REQUIRE(rep.satisfied);
}

TEST_CASE("alice entropy: honest sampler leaves full conditional entropy") {
  auto params = purification_params(4, 2);
  auto res = alice_entropy_experiment(params, SamplerStrategy::honest());
  REQUIRE(res.experiment.acceptance_rate == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(res.experiment.empirical_min_entropy == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(res.bound.satisfied);
  REQUIRE(res.bound.context["worst_conditional_min_entropy"] ==
          Catch::Approx(2.0).margin(1e-12));
  REQUIRE_FALSE(res.identity_applicable);
}

TEST_CASE("alice entropy: measure-then-choose with the first-k-ones rule") {
  auto params = purification_params(4, 2);
  auto bob = bob_measure_then_choose(first_k_ones_choice);
  auto res = alice_entropy_experiment(params, bob);
  // acceptance (1/2)^k after the premeasurement
  REQUIRE(res.experiment.acceptance_rate == Catch::Approx(0.25).margin(1e-12));
  REQUIRE(res.identity_applicable);
  REQUIRE(res.total_probability_identity.satisfied);
  REQUIRE(res.total_probability_identity.context["total"] ==
          Catch::Approx(1.0 / 16.0).margin(1e-14));
  REQUIRE(res.bound.satisfied);
}

TEST_CASE("alice entropy: constant choice reproduces honest statistics") {
  auto params = purification_params(4, 2);
  auto bob = bob_measure_then_choose(
      [](const std::vector<int>&, int) { return std::vector<int>{0, 1}; });
  auto res = alice_entropy_experiment(params, bob);
  REQUIRE(res.identity_applicable);
  REQUIRE(res.total_probability_identity.satisfied);
  // conditional of the unsampled bits is uniform: full entropy
  REQUIRE(res.experiment.empirical_min_entropy == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("alice entropy: selective abort keeping only the all-zero output") {
  auto params = purification_params(4, 2);
  SamplerStrategy bob;
  bob.name = "selective_abort";
  bob.accept_filter = [](const std::vector<int>& x) {
    return std::all_of(x.begin(), x.end(), [](int b) { return b == 0; });
  };
  auto res = alice_entropy_experiment(params, bob);
  REQUIRE(res.experiment.acceptance_rate == Catch::Approx(0.25).margin(1e-12));  // 2^-n
  // alpha = n/N = 1/2; the conditional is a point mass with entropy zero,
  // which the (1-2a-b)N accounting still allows
  REQUIRE(res.bound.context["alpha"] == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(res.bound.satisfied);
  REQUIRE(res.experiment.empirical_min_entropy == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("bob entropy: honest preparer gives full output entropy") {
  auto params = purification_params(4, 2);
  auto res = bob_entropy_experiment(params, HonestProver(), 0.25);
  REQUIRE(res.experiment.acceptance_rate == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(res.experiment.empirical_min_entropy == Catch::Approx(2.0).margin(1e-10));
  REQUIRE(res.bound.satisfied);
  // correction recomputed from the binomial: c at N=4 is 35
  REQUIRE(res.correction_bits == Catch::Approx(std::log2(35.0)).margin(1e-12));
}

TEST_CASE("alice entropy: prefix filter leaves exactly one bit less") {
  auto params = purification_params(4, 2);
  SamplerStrategy bob;
  bob.accept_filter = [](const std::vector<int>& x) { return x.front() == 0; };
  auto res = alice_entropy_experiment(params, bob);
  // conditioning on a fixed leading output bit costs exactly one bit
  REQUIRE(res.experiment.empirical_min_entropy == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(res.experiment.acceptance_rate == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(res.bound.satisfied);
}

TEST_CASE("bob entropy: few-errors and iid-deviant preparers") {
  auto params = purification_params(4, 2);
  {
    auto res = bob_entropy_experiment(params, FewErrorsProver(1), 0.25);
    REQUIRE(res.experiment.acceptance_rate == Catch::Approx(0.5).margin(1e-10));
    REQUIRE(res.bound.satisfied);
    // the accepted output still carries at least n - 1 bits
    REQUIRE(res.experiment.empirical_min_entropy >= params.n() - 1 - 1e-10);
  }
  {
    auto res = bob_entropy_experiment(params, IidProver(detuned_pair(0.99)), 0.25);
    REQUIRE(res.experiment.acceptance_rate == Catch::Approx(std::pow(0.99, 2)).margin(1e-9));
    REQUIRE(res.bound.satisfied);
    REQUIRE(res.experiment.empirical_min_entropy > 0.0);
  }
}
