// Command-line front end: configure, run, and report on protocol
// simulations and verification suites.
//
// Exit codes: 0 ok, 1 bound violated, 2 config error, 3 resource ceiling.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mixsamp/mixsamp.hpp"

namespace fs = std::filesystem;
using namespace mixsamp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolated = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCeiling = 3;

struct SimulateOptions {
  std::string protocol = "purification";
  int N = 4;
  int k = 2;
  std::string mode = "trajectory";
  long trials = 1000;
  std::string prover = "honest";
  int errors = 1;
  double fidelity_sq = 0.9;
  std::uint64_t attack_seed = 1;
  std::string sampler = "honest";
  std::uint64_t seed = 12345;
  std::string out_dir;
  bool dump_states = false;
};

std::unique_ptr<ProverStrategy> make_prover(const SimulateOptions& opt) {
  if (opt.prover == "honest") return std::make_unique<HonestProver>();
  if (opt.prover == "few_errors") return std::make_unique<FewErrorsProver>(opt.errors);
  if (opt.prover == "iid") {
    double gamma = 2.0 * opt.fidelity_sq - 1.0;
    if (gamma < -1.0 || gamma > 1.0) throw std::invalid_argument("iid prover: f2 outside [0,1]");
    double p = 0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - gamma * gamma)));
    Vec theta = Vec::Zero(4);
    theta[0] = std::sqrt(p);
    theta[3] = std::sqrt(1.0 - p);
    return std::make_unique<IidProver>(theta);
  }
  if (opt.prover == "zero") return std::make_unique<ZeroAcceptanceProver>();
  if (opt.prover == "random") return std::make_unique<RandomAttackProver>(opt.attack_seed, 4);
  throw std::invalid_argument("unknown prover: " + opt.prover);
}

SamplerStrategy make_sampler(const std::string& name) {
  if (name == "honest") return SamplerStrategy::honest();
  if (name == "first_k_ones") return bob_measure_then_choose(first_k_ones_choice);
  if (name == "constant_choice")
    return bob_measure_then_choose([](const std::vector<int>&, int k) {
      std::vector<int> t(k);
      std::iota(t.begin(), t.end(), 0);
      return t;
    });
  if (name == "abort_unless_zero") {
    SamplerStrategy s;
    s.name = name;
    s.accept_filter = [](const std::vector<int>& x) {
      return std::all_of(x.begin(), x.end(), [](int b) { return b == 0; });
    };
    return s;
  }
  if (name == "abort_unless_prefix0") {
    SamplerStrategy s;
    s.name = name;
    s.accept_filter = [](const std::vector<int>& x) { return x.empty() || x.front() == 0; };
    return s;
  }
  throw std::invalid_argument("unknown sampler: " + name);
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

int cmd_simulate(const SimulateOptions& opt) {
  ProtocolParams params;
  params.N = opt.N;
  params.k = opt.k;
  params.kind = opt.protocol == "epr_locc" ? ProtocolKind::epr_locc : ProtocolKind::purification;
  params.validate();
  auto prover = make_prover(opt);
  RunMode mode = opt.mode == "exact" ? RunMode::exact : RunMode::trajectory;
  if (opt.mode != "exact" && opt.mode != "trajectory")
    throw std::invalid_argument("mode must be exact or trajectory");

  nlohmann::json output;
  output["protocol"] = opt.protocol;
  output["N"] = opt.N;
  output["k"] = opt.k;
  output["mode"] = opt.mode;
  output["seed"] = opt.seed;
  output["prover"] = opt.prover;
  output["sampler"] = opt.sampler;

  std::ostringstream summary;
  summary.precision(10);

  if (opt.protocol == "randomness_generation") {
    auto sampler = make_sampler(opt.sampler);
    long accepted = 0, matched = 0;
    std::map<long, long> histogram;
    nlohmann::json runs = nlohmann::json::array();
    for (long i = 0; i < opt.trials; ++i) {
      auto out = run_randomness_generation(params, *prover, sampler, opt.seed + i);
      if (out.accepted) {
        ++accepted;
        if (!out.x_a.empty() && out.x_a == out.x_b) ++matched;
        histogram[detail::bits_to_int(out.x_b)]++;
      }
      if (i < 32) {
        nlohmann::json j = out.transcript;
        j["final_accept"] = out.accepted;
        if (!out.x_a.empty()) j["x_a"] = out.x_a;
        if (!out.x_b.empty()) j["x_b"] = out.x_b;
        runs.push_back(std::move(j));
      }
    }
    double rate = double(accepted) / double(opt.trials);
    output["trials"] = opt.trials;
    output["acceptance_rate"] = rate;
    output["matched_outputs"] = matched;
    output["output_histogram"] = histogram;
    output["sample_runs"] = std::move(runs);
    summary << "randomness generation  N=" << opt.N << " k=" << opt.k << " trials=" << opt.trials
            << "\n  acceptance " << rate << "\n  matched outputs " << matched << " of " << accepted
            << " accepted\n";
  } else if (mode == RunMode::exact) {
    double acc = acceptance_probability(params, *prover);
    auto tr = run_sampling(params, *prover, RunMode::exact, opt.seed);
    output["acceptance_probability"] = acc;
    nlohmann::json jtr = tr;
    if (!opt.dump_states) jtr.erase("post_state");
    output["transcript"] = std::move(jtr);
    summary << to_string(params.kind) << "  N=" << opt.N << " k=" << opt.k
            << " prover=" << opt.prover << "\n  exact acceptance " << acc << "\n";
  } else {
    long accepted = 0;
    nlohmann::json runs = nlohmann::json::array();
    for (long i = 0; i < opt.trials; ++i) {
      auto tr = run_sampling(params, *prover, RunMode::trajectory, opt.seed + i);
      if (tr.accepted) ++accepted;
      if (i < 32) {
        nlohmann::json j = tr;
        if (!opt.dump_states) j.erase("post_state");
        runs.push_back(std::move(j));
      }
    }
    double rate = double(accepted) / double(opt.trials);
    output["trials"] = opt.trials;
    output["acceptance_rate"] = rate;
    output["sample_runs"] = std::move(runs);
    summary << to_string(params.kind) << "  N=" << opt.N << " k=" << opt.k
            << " prover=" << opt.prover << " trials=" << opt.trials << "\n  acceptance " << rate
            << "\n";
  }

  std::cout << summary.str();
  if (!opt.out_dir.empty()) {
    fs::create_directories(opt.out_dir);
    write_text(fs::path(opt.out_dir) / "simulate.json", output.dump(2) + "\n");
    std::cout << "wrote " << (fs::path(opt.out_dir) / "simulate.json").string() << "\n";
  }
  return kExitOk;
}

int cmd_verify(const std::string& config_path, std::uint64_t seed_override, bool seed_given,
               double constant_scale, const std::string& out_dir) {
  SuiteConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot read config " + config_path);
    nlohmann::json j;
    in >> j;
    config = j.get<SuiteConfig>();
  }
  if (seed_given) config.seed = seed_override;
  if (constant_scale > 0) config.constant_scale = constant_scale;

  auto result = run_experiment_suite(config);

  std::size_t failed = 0;
  for (const auto& b : result.bounds)
    if (!b.satisfied) ++failed;
  std::cout << "suite: " << result.bounds.size() << " bounds, " << failed << " violated\n";
  for (const auto& b : result.bounds) {
    if (b.satisfied) continue;
    std::cout << "  VIOLATED " << b.name << (b.note.empty() ? "" : " [" + b.note + "]")
              << "  lhs=" << b.lhs << " rhs=" << b.rhs << " slack=" << b.slack << "\n";
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    nlohmann::json j;
    j["config"] = config;
    j["result"] = result;
    write_text(fs::path(out_dir) / "report.json", j.dump(2) + "\n");
    write_text(fs::path(out_dir) / "report.csv", suite_csv(result));
    std::cout << "wrote " << (fs::path(out_dir) / "report.json").string() << " and report.csv\n";
  }
  return result.all_satisfied() ? kExitOk : kExitViolated;
}

int cmd_bounds(std::int64_t n, double eps, double alpha, int N, int d, const std::string& csv_path) {
  std::ostringstream table;
  table.precision(12);
  table << "quantity,value\n";
  Vec nu = Vec::Zero(2), theta = Vec::Zero(2);
  nu[0] = 1.0;
  theta[0] = std::sqrt(std::max(0.0, 1.0 - eps));
  theta[1] = std::sqrt(std::min(1.0, eps));
  auto r = std::int64_t(std::floor((eps + alpha) * double(n)));
  double tail = ball_weight_iid(theta, nu, n, r);
  double hoeffding = 1.0 - std::exp(-2.0 * alpha * alpha * double(n));
  table << "exact_binomial_tail," << tail << "\n";
  table << "hoeffding_lower_bound," << hoeffding << "\n";
  std::uint64_t c = sym_dim({N, d * d});
  table << "symmetric_subspace_dim," << c << "\n";
  table << "polynomial_upper_bound," << std::pow(double(N + 1), double(d * d - 1)) << "\n";
  for (int k = 1; k < N; ++k)
    table << "acceptance_bound_k" << k << "," << std::pow(1.0 - eps, k) << "\n";
  table << "min_entropy_rate_bits," << (1.0 - eps - binary_entropy(eps)) * double(n) << "\n";

  std::cout << table.str();
  if (!csv_path.empty()) {
    write_text(csv_path, table.str());
    std::cout << "wrote " << csv_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sampling-protocol simulator and bound verifier"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "run a protocol and report statistics");
  simulate->add_option("--protocol", sim.protocol, "purification | epr_locc | randomness_generation")
      ->check(CLI::IsMember({"purification", "epr_locc", "randomness_generation"}));
  simulate->add_option("--N", sim.N, "population size");
  simulate->add_option("--k", sim.k, "sample size");
  simulate->add_option("--mode", sim.mode, "exact | trajectory");
  simulate->add_option("--trials", sim.trials, "trajectory trials");
  simulate->add_option("--prover", sim.prover, "honest | few_errors | iid | zero | random");
  simulate->add_option("--errors", sim.errors, "error count for few_errors");
  simulate->add_option("--f2", sim.fidelity_sq, "reference fidelity^2 for the iid prover");
  simulate->add_option("--attack-seed", sim.attack_seed, "seed for the random prover");
  simulate->add_option("--sampler", sim.sampler,
                       "honest | first_k_ones | constant_choice | abort_unless_zero | "
                       "abort_unless_prefix0");
  simulate->add_option("--seed", sim.seed, "run seed");
  simulate->add_option("--out", sim.out_dir, "output directory");
  simulate->add_flag("--dump-states", sim.dump_states, "include post-state matrices (n <= 3)");

  std::string verify_config;
  std::uint64_t verify_seed = 0;
  bool verify_seed_given = false;
  double constant_scale = 0.0;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "run the verification suite");
  verify->add_option("--config", verify_config, "suite configuration JSON");
  verify->add_option("--seed", verify_seed, "seed override")->each([&](const std::string&) {
    verify_seed_given = true;
  });
  verify->add_option("--constant-scale", constant_scale,
                     "scale the dominance constant (falsification control)");
  verify->add_option("--out", verify_out, "output directory for report.json / report.csv");

  std::int64_t bounds_n = 100;
  double bounds_eps = 0.1, bounds_alpha = 0.1;
  int bounds_N = 4, bounds_d = 2;
  std::string bounds_csv;
  auto* bounds = app.add_subcommand("bounds", "tabulate closed-form bound values");
  bounds->add_option("--n", bounds_n, "copy count for the tail bound");
  bounds->add_option("--eps", bounds_eps, "error tolerance");
  bounds->add_option("--alpha", bounds_alpha, "tail slack parameter");
  bounds->add_option("--N", bounds_N, "population size for the subspace constant");
  bounds->add_option("--d", bounds_d, "local dimension");
  bounds->add_option("--csv", bounds_csv, "CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (verify->parsed())
      return cmd_verify(verify_config, verify_seed, verify_seed_given, constant_scale, verify_out);
    if (bounds->parsed())
      return cmd_bounds(bounds_n, bounds_eps, bounds_alpha, bounds_N, bounds_d, bounds_csv);
  } catch (const dimension_error& e) {
    std::cerr << "resource ceiling: " << e.what() << "\n";
    return kExitCeiling;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
