#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pspo/criterion.hpp"
#include "pspo/error.hpp"
#include "pspo/harness.hpp"

using namespace pspo;
namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string case_name;
};

struct GaFlags {
  std::optional<Index> population, generations, elitism, tournament;
  std::optional<double> crossover, mutation;
};

void add_common(CLI::App* sub, Common& c, bool with_case = true) {
  sub->add_option("--config", c.config, "key=value config file")
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "placement seed");
  sub->add_option("--out", c.out, "output file or directory");
  if (with_case) {
    sub->add_option("--case", c.case_name, "heat1d or plate2d")
        ->check(CLI::IsMember({"heat1d", "plate2d"}));
  }
}

void add_ga(CLI::App* sub, GaFlags& g) {
  sub->add_option("--ga-pop", g.population, "GA population size");
  sub->add_option("--ga-gens", g.generations, "GA generations");
  sub->add_option("--ga-crossover", g.crossover, "crossover probability");
  sub->add_option("--ga-mutation", g.mutation, "per-gene mutation probability");
  sub->add_option("--ga-elitism", g.elitism, "elite count");
  sub->add_option("--ga-tournament", g.tournament, "tournament size");
}

// config file first, flags on top
ExperimentConfig effective_config(const Common& c, const GaFlags* g = nullptr) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (!c.case_name.empty() && c.case_name != cfg.case_spec.name) {
    cfg.case_spec = case_by_name(c.case_name);
  }
  if (c.seed) cfg.placement_seed = *c.seed;
  if (g) {
    if (g->population) cfg.ga.population_size = *g->population;
    if (g->generations) cfg.ga.generations = *g->generations;
    if (g->crossover) cfg.ga.crossover_prob = *g->crossover;
    if (g->mutation) cfg.ga.mutation_prob = *g->mutation;
    if (g->elitism) cfg.ga.elitism = *g->elitism;
    if (g->tournament) cfg.ga.tournament_size = *g->tournament;
  }
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) fail(ErrorCode::kIo, "cannot write " + p.string());
  return os;
}

int cmd_discretize(const Common& c) {
  const ExperimentConfig cfg = effective_config(c);
  const CaseModel m = build_case(cfg.case_spec);
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  fs::create_directories(dir);
  const std::string prefix = (dir / (m.spec.name + "_")).string();
  export_operator(m.op, prefix);
  std::ofstream cloud = open_out(prefix + "cloud.csv");
  write_cloud_csv(cloud, m.cloud);
  std::cout << "case " << m.spec.name << ": n=" << m.op.n() << " l=" << m.op.l()
            << " nnz=" << m.op.W1.nonZeros() << "\n"
            << "wrote " << prefix << "*.csv\n";
  return 0;
}

int cmd_optimize(const Common& c, const GaFlags& g, const std::string& method,
                 Index k, std::optional<double> gamma, Index trial) {
  ExperimentConfig cfg = effective_config(c, &g);
  if (gamma) cfg.gamma = *gamma;
  cfg.ks = {k};
  cfg.methods = {method};
  cfg.validate();
  const ExperimentData data = prepare_data(cfg);
  const CriterionContext ctx(data.model.op, cfg.gamma);
  const Placement p =
      select_placement(cfg, data, ctx, method, k, trial).sorted();
  const CriterionValue v = ctx.evaluate(p);
  const fs::path path = c.out.empty()
                            ? fs::path(cfg.case_spec.name + "_" + method + "_k" +
                                       std::to_string(k) + ".json")
                            : fs::path(c.out);
  std::ofstream os = open_out(path);
  write_placement_json(os, p, data.model.cloud.size(), v.log10_kappa,
                       cfg.gamma, cfg.placement_seed);
  std::cout << "method " << method << " k=" << k << " log10_kappa="
            << v.log10_kappa << (v.rank_ok ? "" : " (rank deficient)") << "\n"
            << "indices";
  for (Index i : p.indices) std::cout << ' ' << i;
  std::cout << "\nwrote " << path.string() << "\n";
  return 0;
}

void print_groups(const RunReport& report) {
  std::printf("%-10s %4s %8s %-10s %14s %14s\n", "method", "k", "sigma",
              "recon", "mean_mse", "mean_max_ae");
  for (const auto& g : summarize(report)) {
    std::printf("%-10s %4lld %8.4g %-10s %14.6g %14.6g\n", g.method.c_str(),
                static_cast<long long>(g.k), g.sigma, g.reconstructor.c_str(),
                g.mean_mse, g.mean_max_ae);
  }
}

int cmd_reconstruct(const Common& c, const std::string& placement_file,
                    std::optional<double> sigma) {
  ExperimentConfig cfg = effective_config(c);
  if (sigma) cfg.sigmas = {*sigma};
  cfg.output_dir = c.out;
  cfg.write_placements = false;
  std::ifstream in(placement_file);
  if (!in) fail(ErrorCode::kIo, "cannot open " + placement_file);
  const PlacementRecord rec = read_placement_json(in);
  const ExperimentData data = prepare_data(cfg);
  if (rec.n != data.model.cloud.size()) {
    fail(ErrorCode::kShapeMismatch,
         "placement was made for n=" + std::to_string(rec.n) + ", case has n=" +
             std::to_string(data.model.cloud.size()));
  }
  PlacementEntry e;
  e.method = fs::path(placement_file).stem().string();
  e.placement = rec.placement;
  e.path = placement_file;
  const RunReport report = evaluate_placements(cfg, data, {e});
  if (c.out.empty()) {
    write_report_csv(std::cout, report);
  } else {
    print_groups(report);
    std::cout << "wrote " << (fs::path(c.out) / "report.csv").string() << "\n";
  }
  return 0;
}

int cmd_benchmark(const Common& c, std::optional<Index> threads) {
  ExperimentConfig cfg = effective_config(c);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (cfg.output_dir.empty()) cfg.output_dir = "out";
  if (threads) cfg.threads = *threads;
  cfg.validate();
  std::cout << "config " << config_hash(cfg) << " -> " << cfg.output_dir << "\n";
  const RunReport report = run_experiment(cfg);
  print_groups(report);
  std::cout << report.rows.size() << " rows\n";
  return 0;
}

int cmd_verify_bounds(const Common& c, Index k, Index trials, double scale,
                      std::optional<double> gamma,
                      const std::string& placement_file,
                      const std::string& operator_prefix) {
  ExperimentConfig cfg = effective_config(c);
  if (gamma) cfg.gamma = *gamma;
  const std::uint64_t seed = cfg.placement_seed;
  DiscreteOperator op;
  CaseSpec spec = cfg.case_spec;
  if (operator_prefix.empty()) {
    op = build_case(spec).op;
  } else {
    op = import_operator(operator_prefix);
  }
  Placement p;
  if (!placement_file.empty()) {
    std::ifstream in(placement_file);
    if (!in) fail(ErrorCode::kIo, "cannot open " + placement_file);
    p = read_placement_json(in).placement;
  } else {
    p = random_placement(op.n(), k, derive_seed(seed, 0x5642, k));
  }
  Vector lambda(op.l());
  {
    std::mt19937_64 rng(derive_seed(seed, 0x4C41));
    std::uniform_real_distribution<double> dist(spec.param_lo, spec.param_hi);
    for (Index i = 0; i < lambda.size(); ++i) lambda(i) = dist(rng);
  }
  const AugmentedSystem sys = consistent_system(op, p, cfg.gamma, lambda);
  const BoundReport r = verify_bounds(sys, trials, scale, derive_seed(seed, 0x5642));
  if (c.out.empty()) {
    write_bound_report_json(std::cout, r);
    std::cout << "\n";
  } else {
    std::ofstream os = open_out(c.out);
    write_bound_report_json(os, r);
    std::cout << "violations " << r.violations << "/" << r.trials << ", kappa "
              << r.kappa << "\nwrote " << c.out << "\n";
  }
  return r.violations == 0 ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-driven sensor placement toolkit"};
  app.require_subcommand(1);

  Common disc_c, opt_c, rec_c, bench_c, vb_c;
  GaFlags opt_ga;

  auto* disc = app.add_subcommand("discretize", "assemble a case and export the operator");
  add_common(disc, disc_c);

  auto* opt = app.add_subcommand("optimize", "compute a sensor placement");
  add_common(opt, opt_c);
  add_ga(opt, opt_ga);
  std::string method = "pspo";
  Index k = 10;
  Index trial = 0;
  std::optional<double> opt_gamma;
  opt->add_option("--method", method, "pspo, us, rs, cns or ecs")
      ->check(CLI::IsMember({"pspo", "us", "rs", "cns", "ecs"}));
  opt->add_option("--k", k, "sensor count")->check(CLI::PositiveNumber);
  opt->add_option("--gamma", opt_gamma, "physics row weight")->check(CLI::PositiveNumber);
  opt->add_option("--trial", trial, "rs trial index")->check(CLI::NonNegativeNumber);

  auto* rec = app.add_subcommand("reconstruct", "evaluate one placement");
  add_common(rec, rec_c);
  std::string placement_file;
  std::optional<double> sigma;
  rec->add_option("--placement", placement_file, "placement JSON")
      ->required()
      ->check(CLI::ExistingFile);
  rec->add_option("--sigma", sigma, "noise level")->check(CLI::NonNegativeNumber);

  auto* bench = app.add_subcommand("benchmark", "run the full experiment grid");
  add_common(bench, bench_c);
  std::optional<Index> threads;
  bench->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* vb = app.add_subcommand("verify-bounds", "check the perturbation bounds");
  add_common(vb, vb_c);
  Index vb_k = 10, vb_trials = 1000;
  double vb_scale = 1e-3;
  std::optional<double> vb_gamma;
  std::string vb_placement, vb_operator;
  vb->add_option("--k", vb_k, "sensor count for a random placement")
      ->check(CLI::PositiveNumber);
  vb->add_option("--trials", vb_trials, "perturbation draws")->check(CLI::PositiveNumber);
  vb->add_option("--scale", vb_scale, "perturbation scale")->check(CLI::PositiveNumber);
  vb->add_option("--gamma", vb_gamma, "physics row weight")->check(CLI::PositiveNumber);
  vb->add_option("--placement", vb_placement, "placement JSON")->check(CLI::ExistingFile);
  vb->add_option("--operator", vb_operator, "prefix of exported operator files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    const auto used = app.get_subcommands();
    std::cerr << "error: " << e.what() << "\n\n"
              << (used.empty() ? app.help() : used.front()->help());
    return kExitConfig;
  }

  try {
    if (*disc) return cmd_discretize(disc_c);
    if (*opt) return cmd_optimize(opt_c, opt_ga, method, k, opt_gamma, trial);
    if (*rec) return cmd_reconstruct(rec_c, placement_file, sigma);
    if (*bench) return cmd_benchmark(bench_c, threads);
    if (*vb) {
      return cmd_verify_bounds(vb_c, vb_k, vb_trials, vb_scale, vb_gamma,
                               vb_placement, vb_operator);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::kConfig ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
