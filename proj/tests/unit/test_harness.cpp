#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "pspo/error.hpp"
#include "pspo/harness.hpp"

using namespace pspo;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.case_spec.n = 80;
  cfg.case_spec.stencil_size = 9;
  cfg.methods = {"pspo", "us", "rs", "cns", "ecs"};
  cfg.ks = {4, 6};
  cfg.rs_trials = 3;
  cfg.ga.generations = 20;
  cfg.sigmas = {0.0, 0.1};
  cfg.noise_seeds = {0, 1};
  cfg.hidden = {8};
  cfg.adam_iters = 30;
  cfg.train_size = 20;
  cfg.test_size = 5;
  return cfg;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode parse_code(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_config(in);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("heat1d ground truth examples") {
  Vector a(2);
  a << 0.49, 2.25;
  CHECK(heat1d_exact(0.0, a) == doctest::Approx(1.0));
  CHECK(heat1d_exact(10.0, Vector::Zero(2)) == doctest::Approx(-1.0));
  const CaseModel m = build_case(heat1d_case());
  const Vector u = ground_truth(m, a);
  CHECK(u(0) == doctest::Approx(heat1d_exact(-10.0, a)));
  CHECK_THROWS_AS(ground_truth(m, Vector::Constant(2, 21.0)), Error);
  CHECK_THROWS_AS(ground_truth(m, Vector::Zero(3)), Error);
}

TEST_CASE("analytic solution satisfies the boundary value problem") {
  Vector lam(2);
  lam << 7.0, 13.0;
  const double h = 1e-3;
  for (double x = -9.5; x < 9.6; x += 0.37) {
    const double d2 = (heat1d_exact(x + h, lam) - 2.0 * heat1d_exact(x, lam) +
                       heat1d_exact(x - h, lam)) / (h * h);
    CHECK(std::abs(d2 + lam(0) * std::sin(0.7 * x) + lam(1) * std::cos(1.5 * x)) < 1e-4);
  }
  const CaseModel m = build_case(heat1d_case());
  const Vector u = ground_truth(m, lam);
  const Vector fwd = forward_solve(m.op, lam);
  CHECK(std::abs(u(0) - fwd(0)) < 1e-9);
  CHECK(std::abs(u(399) - fwd(399)) < 1e-9);
  CHECK((u - fwd).cwiseAbs().maxCoeff() < 1e-3 * u.cwiseAbs().maxCoeff());
}

TEST_CASE("interior residual of the analytic field shrinks with refinement") {
  Vector lam(2);
  lam << 0.49, 2.25;
  double prev_mid = 1e300;
  for (Index n : {100, 200, 400}) {
    CaseSpec spec = heat1d_case();
    spec.n = n;
    const CaseModel m = build_case(spec);
    const Vector r = Matrix(m.op.W1) * ground_truth(m, lam) - m.op.rhs(lam);
    const double mid = r.segment(n / 8, n - n / 4).cwiseAbs().maxCoeff();
    CHECK(mid < prev_mid);
    prev_mid = mid;
  }
  CHECK(prev_mid < 2e-3);
}

TEST_CASE("plate without sources sits at T0") {
  const CaseModel m = build_case(plate2d_case());
  CHECK(m.cloud.size() == 1369);
  CHECK(m.op.l() == 6);
  const Vector u = ground_truth(m, Vector::Zero(6));
  CHECK((u.array() - 10.0).abs().maxCoeff() < 1e-6);
  const FieldSet f = make_fields(m, 5, 1);
  CHECK(f.fields.maxCoeff() > 15.0);
  CHECK(f.fields.maxCoeff() < 200.0);
}

TEST_CASE("every plate source covers grid nodes") {
  const CaseModel m = build_case(plate2d_case());
  for (Index c = 0; c < m.op.l(); ++c) {
    CHECK((m.op.source_basis.col(c).array() != 0.0).count() >= 9);
  }
}

TEST_CASE("config parsing") {
  const std::string text =
      "[case]\nname = heat1d\nn = 120\ntrain_size = 30\n"
      "[method]\nmethods = pspo, us\nk = 3, 10\nseed = 5\nga_generations = 50\n"
      "[noise]\nsigma = 0.01,0.1\nseed_count = 4\n"
      "[reconstructors]\nlist = physics\n"
      "[output]\ndir = out/x\n";
  std::istringstream in(text);
  const ExperimentConfig cfg = parse_config(in);
  CHECK(cfg.case_spec.n == 120);
  CHECK(cfg.train_size == 30);
  CHECK(cfg.methods == std::vector<std::string>{"pspo", "us"});
  CHECK(cfg.ks == std::vector<Index>{3, 10});
  CHECK(cfg.placement_seed == 5);
  CHECK(cfg.ga.generations == 50);
  CHECK(cfg.sigmas == std::vector<double>{0.01, 0.1});
  CHECK(cfg.noise_seeds == std::vector<std::uint64_t>{0, 1, 2, 3});
  CHECK(cfg.reconstructors == std::vector<std::string>{"physics"});
  CHECK(cfg.output_dir == "out/x");

  std::istringstream again(text);
  CHECK(config_hash(parse_config(again)) == config_hash(cfg));
  ExperimentConfig other = cfg;
  other.sigmas = {0.5};
  CHECK(config_hash(other) != config_hash(cfg));
  CHECK(config_hash(cfg).size() == 16);
}

TEST_CASE("config errors") {
  CHECK(parse_code("[case]\nname = torus\n") == ErrorCode::kConfig);
  CHECK(parse_code("[case]\nbogus = 1\n") == ErrorCode::kConfig);
  CHECK(parse_code("[weird]\nx = 1\n") == ErrorCode::kConfig);
  CHECK(parse_code("[method]\nk = ten\n") == ErrorCode::kConfig);
  CHECK(parse_code("[method]\nk = 401\n") == ErrorCode::kConfig);
  CHECK(parse_code("[noise]\nsigma = -0.1\n") == ErrorCode::kConfig);
  CHECK(parse_code("[method]\nmethods = pspo, magic\n") == ErrorCode::kConfig);
  CHECK(parse_code("[reconstructors]\nlist = pinn\n") == ErrorCode::kConfig);
  CHECK(parse_code("[case]\nname = plate2d\ntruth = analytic\n") == ErrorCode::kConfig);
  CHECK(parse_code("[case\nname = heat1d\n") == ErrorCode::kConfig);
}

TEST_CASE("report completeness and determinism") {
  const fs::path dir = fs::temp_directory_path() / "pspo_harness_test";
  fs::remove_all(dir);
  ExperimentConfig cfg = small_config();
  cfg.output_dir = (dir / "a").string();
  const RunReport a = run_experiment(cfg);

  // methods x trials x k x sigma x reconstructors x seeds
  const std::size_t placements = (4 + 3) * 2;
  CHECK(a.placements.size() == placements);
  CHECK(a.rows.size() == placements * 2 * 4 * 2);
  std::set<std::tuple<std::string, Index, double, std::string, std::uint64_t>> cells;
  for (const auto& r : a.rows) cells.insert({r.method, r.k, r.sigma, r.reconstructor, r.seed});
  CHECK(cells.size() == a.rows.size());

  CHECK(fs::exists(dir / "a" / "report.csv"));
  CHECK(fs::exists(dir / "a" / "summary.json"));
  CHECK(fs::exists(a.rows.front().placement_path));
  const std::string csv = read_file(dir / "a" / "report.csv");
  CHECK(csv.rfind("case,method,k,sigma,seed,reconstructor,max_ae,mse,log10_kappa,wall_ms,placement_path\n", 0) == 0);
  CHECK(read_file(dir / "a" / "summary.json").find(a.config_hash) != std::string::npos);

  const RunReport b = run_experiment(cfg);
  std::ostringstream sa, sb;
  write_report_csv(sa, a, false);
  write_report_csv(sb, b, false);
  CHECK(sa.str() == sb.str());

  cfg.threads = 3;
  const RunReport c = run_experiment(cfg);
  std::ostringstream sc;
  write_report_csv(sc, c, false);
  CHECK(sc.str() == sa.str());
  fs::remove_all(dir);
}

TEST_CASE("noiseless physics rows reach machine precision on the discrete truth") {
  ExperimentConfig cfg = small_config();
  cfg.case_spec.truth = TruthKind::kDiscrete;
  cfg.methods = {"us"};
  cfg.ks = {6};
  cfg.sigmas = {0.0};
  cfg.noise_seeds = {0};
  cfg.reconstructors = {"physics", "gappy_pod"};
  const RunReport r = run_experiment(cfg);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].metrics.max_ae < 1e-9);
  CHECK(r.rows[1].metrics.max_ae < 1e-8);
}

TEST_CASE("summary statistics") {
  const RunReport r = run_experiment(small_config());
  const auto stats = summarize(r);
  const GroupStats* rs = find_group(stats, "rs", 4, 0.1, "physics");
  REQUIRE(rs != nullptr);
  CHECK(rs->trials == 3);
  CHECK(rs->rows == 6);
  CHECK(rs->min_mse <= rs->median_mse);
  CHECK(rs->median_mse <= rs->max_mse);
  const GroupStats* us = find_group(stats, "us", 6, 0.0, "mlp");
  REQUIRE(us != nullptr);
  CHECK(us->trials == 1);
  CHECK(us->median_mse == us->mean_mse);
  CHECK(method_group("rs-017") == "rs");
  CHECK(method_group("pspo") == "pspo");
}

TEST_CASE("a failing cell is named and finished rows are kept") {
  const fs::path dir = fs::temp_directory_path() / "pspo_harness_fail";
  fs::remove_all(dir);
  ExperimentConfig cfg = small_config();
  cfg.methods = {"us"};
  cfg.ks = {3, 1};
  cfg.sigmas = {0.1};
  cfg.reconstructors = {"physics"};
  cfg.output_dir = dir.string();
  try {
    run_experiment(cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRankDeficient);
    CHECK(std::string(e.what()).find("method=us k=1") != std::string::npos);
  }
  const std::string csv = read_file(dir / "report.csv");
  CHECK(csv.find("heat1d,us,3,") != std::string::npos);
  fs::remove_all(dir);
}
