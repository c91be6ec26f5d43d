#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pspo/cloud.hpp"
#include "pspo/placement.hpp"
#include "pspo/rbffd.hpp"
#include "pspo/reconstruct.hpp"

namespace pspo {

struct SourceRect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  bool contains(const Coord& p, double margin = 0.0) const;
};

enum class TruthKind { kAnalytic, kDiscrete };

struct CaseSpec {
  std::string name;
  int dim = 1;
  // 1D interval
  double x_min = -10.0;
  double x_max = 10.0;
  Index n = 400;
  // 2D plate
  double width = 1.0;
  double height = 1.0;
  Index nx = 37;
  Index ny = 37;
  EdgeLayout layout;

  Index stencil_size = 25;
  RbfConfig rbf;
  double conductivity = 1.0;
  double t0 = 0.0;
  /// Source density per unit of lambda (plate2d).
  double source_unit = 1.0;
  std::vector<SourceRect> sources;
  double param_lo = 0.0;
  double param_hi = 20.0;
  bool analytic_solution = false;
  TruthKind truth = TruthKind::kDiscrete;

  Index candidate_count() const { return dim == 1 ? n : nx * ny; }
  Index parameter_count() const;
  void validate() const;
};

/// u_xx = -l1 sin(0.7x) - l2 cos(1.5x) on [-10, 10] with exact solution
/// u = l1/0.49 sin(0.7x) + l2/2.25 cos(1.5x) - 0.1x.
CaseSpec heat1d_case();
/// Unit plate, conductivity 150, bottom edge held at T0 = 10, other edges
/// insulated, six rectangular sources of intensity source_unit * phi_i.
CaseSpec plate2d_case();
/// Throws kConfig for unknown names.
CaseSpec case_by_name(const std::string& name);

Physics case_physics(const CaseSpec& spec);

struct CaseModel {
  CaseSpec spec;
  PointCloud cloud;
  StencilSet stencils;
  DiscreteOperator op;
};

CaseModel build_case(const CaseSpec& spec);

/// Exact heat1d field at arbitrary x (ignores the truth setting).
double heat1d_exact(double x, const Vector& lambda);

/// Analytic field for analytic cases with truth = kAnalytic, otherwise the
/// RBF-FD forward solve.
Vector ground_truth(const CaseModel& model, const Vector& lambda);

/// Parameters drawn uniformly from the case box, one per column (l x N).
Matrix sample_parameters(const CaseSpec& spec, Index count,
                         std::uint64_t seed);

struct FieldSet {
  Matrix lambdas;  // l x N
  Matrix fields;   // N x n, one sample per row
};

FieldSet make_fields(const CaseModel& model, Index count, std::uint64_t seed);

/// Stateless 64-bit mix used to derive per-cell seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

struct ExperimentConfig {
  CaseSpec case_spec = heat1d_case();
  Index pod_modes = 10;
  bool pod_remove_mean = false;
  Index train_size = 80;
  Index test_size = 20;
  std::uint64_t data_seed = 0;

  std::vector<std::string> methods = {"pspo", "us", "rs"};
  std::vector<Index> ks = {10};
  Index rs_trials = 100;
  std::uint64_t placement_seed = 0;
  double gamma = 1.0;
  GaConfig ga;
  EcsConfig ecs;

  std::vector<double> sigmas = {0.1};
  std::vector<std::uint64_t> noise_seeds = {0};

  std::vector<std::string> reconstructors = {"physics", "gappy_pod",
                                             "pod_nn", "mlp"};
  std::vector<Index> hidden = {64, 64, 64};
  Index adam_iters = 4000;
  double learning_rate = 1e-3;

  std::string output_dir;  // empty: nothing written
  Index threads = 1;
  bool write_placements = true;

  /// Throws kConfig.
  void validate() const;
};

/// INI-style `key = value` text with sections [case] [method] [noise]
/// [reconstructors] [output]. Unknown sections or keys throw kConfig.
ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);

/// Stable text form of the effective configuration.
std::string canonical_config(const ExperimentConfig& cfg);
/// 16 hex digits, FNV-1a over canonical_config.
std::string config_hash(const ExperimentConfig& cfg);

struct ReportRow {
  std::string case_name;
  std::string method;  // rs trials are labelled rs-<trial>
  Index k = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::string reconstructor;
  Metrics metrics;
  double log10_kappa = 0.0;
  double wall_ms = 0.0;
  std::string placement_path;
};

struct PlacementEntry {
  std::string method;
  Index k = 0;
  Placement placement;
  double log10_kappa = 0.0;
  std::string path;
};

struct RunReport {
  std::string config_hash;
  std::vector<PlacementEntry> placements;
  std::vector<ReportRow> rows;
};

/// Case model, train/test fields and the POD basis fitted on the train set.
struct ExperimentData {
  CaseModel model;
  FieldSet train;
  FieldSet test;
  PODBasis basis;
};

ExperimentData prepare_data(const ExperimentConfig& cfg);

/// Placement of one method; `trial` only matters for rs.
Placement select_placement(const ExperimentConfig& cfg,
                           const ExperimentData& data,
                           const CriterionContext& ctx,
                           const std::string& method, Index k,
                           Index trial = 0);

/// Scores given placements over every sigma, reconstructor and noise seed
/// of the config. methods, ks and rs_trials are ignored.
RunReport evaluate_placements(const ExperimentConfig& cfg,
                              const ExperimentData& data,
                              std::vector<PlacementEntry> placements);

/// Placement per method and k, then one grid cell per (placement, sigma)
/// run in a pool of cfg.threads workers. Each cell trains its data-driven
/// models once and scores every noise seed. When output_dir is set, writes
/// placements/, report.csv and summary.json there; on a failing cell the
/// finished rows are still written and the error is rethrown with the cell
/// named.
RunReport run_experiment(const ExperimentConfig& cfg);

/// Columns case,method,k,sigma,seed,reconstructor,max_ae,mse,log10_kappa,
/// wall_ms,placement_path.
void write_report_csv(std::ostream& os, const RunReport& report,
                      bool include_timing = true);

void write_summary_json(std::ostream& os, const RunReport& report,
                        const ExperimentConfig& cfg);

/// Method label without an rs trial suffix.
std::string method_group(const std::string& method);

/// Aggregate over noise seeds for one (method group, k, sigma,
/// reconstructor). For rs the per-trial means form the distribution;
/// other methods have a single trial.
struct GroupStats {
  std::string method;
  Index k = 0;
  double sigma = 0.0;
  std::string reconstructor;
  Index rows = 0;
  Index trials = 0;
  double mean_mse = 0.0;
  double mean_max_ae = 0.0;
  double median_mse = 0.0;
  double min_mse = 0.0;
  double max_mse = 0.0;
};

std::vector<GroupStats> summarize(const RunReport& report);
const GroupStats* find_group(const std::vector<GroupStats>& stats,
                             const std::string& method, Index k, double sigma,
                             const std::string& reconstructor);

}  // namespace pspo
