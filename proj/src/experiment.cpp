#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <thread>

#include "pspo/error.hpp"
#include "pspo/harness.hpp"

namespace pspo {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string method_label(const std::string& method, Index trial) {
  if (method != "rs") return method;
  char buf[32];
  std::snprintf(buf, sizeof buf, "rs-%03lld", static_cast<long long>(trial));
  return buf;
}

void add_noise(Matrix& m, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::Map<Vector> flat(m.data(), m.size());
  apply_noise_inplace(flat, sigma, rng);
}

struct CellTask {
  std::size_t placement = 0;
  std::size_t sigma_index = 0;
};

struct CellFailure {
  std::size_t task = 0;
  ErrorCode code = ErrorCode::kInvalidArgument;
  std::string message;
};

std::vector<Index> layer_sizes(Index in, const std::vector<Index>& hidden,
                               Index out) {
  std::vector<Index> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

std::vector<ReportRow> run_cell(const ExperimentConfig& cfg,
                                const CaseModel& model, const FieldSet& train,
                                const FieldSet& test, const PODBasis& basis,
                                const PlacementEntry& entry,
                                std::size_t sigma_index) {
  const double sigma = cfg.sigmas[sigma_index];
  const Placement& p = entry.placement;
  const auto si = static_cast<std::uint64_t>(sigma_index);

  // k x N: columns are samples
  const Matrix test_clean = sample_sensors(test.fields, p).transpose();
  Matrix train_noisy = sample_sensors(train.fields, p);
  add_noise(train_noisy, sigma, derive_seed(cfg.data_seed, 0x7472, si));

  std::vector<ReportRow> rows;
  for (const auto& recon : cfg.reconstructors) {
    const auto t_setup = Clock::now();
    std::function<Matrix(const Matrix&)> predict;  // k x N -> N x n
    if (recon == "physics") {
      auto rec = std::make_shared<PhysicsReconstructor>(model.op, p, cfg.gamma);
      predict = [rec](const Matrix& s) -> Matrix {
        return rec->reconstruct_many(s).transpose();
      };
    } else if (recon == "gappy_pod") {
      auto g = std::make_shared<GappyPod>(basis, p);
      predict = [g](const Matrix& s) -> Matrix {
        return g->reconstruct_many(s).transpose();
      };
    } else if (recon == "pod_nn") {
      MlpTrainConfig tc;
      tc.layers = layer_sizes(p.k(), cfg.hidden, basis.r());
      tc.learning_rate = cfg.learning_rate;
      tc.adam_iters = cfg.adam_iters;
      tc.seed = derive_seed(cfg.data_seed, 0x504E, si);
      auto m = std::make_shared<PodNnModel>(
          pod_nn_train(basis, train_noisy, train.fields, tc));
      predict = [m](const Matrix& s) -> Matrix {
        return pod_nn_reconstruct(*m, s.transpose());
      };
    } else {
      MlpTrainConfig tc;
      tc.layers = layer_sizes(p.k(), cfg.hidden, model.cloud.size());
      tc.learning_rate = cfg.learning_rate;
      tc.adam_iters = cfg.adam_iters;
      tc.seed = derive_seed(cfg.data_seed, 0x4D4C, si);
      Dataset data{train_noisy, train.fields};
      auto net = std::make_shared<MlpModel>(mlp_train(data, tc).model);
      predict = [net](const Matrix& s) -> Matrix {
        return mlp_predict(*net, Matrix(s.transpose()));
      };
    }
    const double setup_ms = ms_since(t_setup);

    for (std::uint64_t seed : cfg.noise_seeds) {
      const auto t0 = Clock::now();
      Matrix s = test_clean;
      add_noise(s, sigma, derive_seed(seed, 0x7465, si));
      const Matrix pred = predict(s);
      ReportRow row;
      row.case_name = model.spec.name;
      row.method = entry.method;
      row.k = p.k();
      row.sigma = sigma;
      row.seed = seed;
      row.reconstructor = recon;
      row.metrics = metrics(pred, test.fields);
      row.log10_kappa = entry.log10_kappa;
      row.wall_ms = setup_ms + ms_since(t0);
      row.placement_path = entry.path;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_outputs(const fs::path& out, const RunReport& report,
                   const ExperimentConfig& cfg) {
  std::ofstream csv(out / "report.csv");
  write_report_csv(csv, report);
  std::ofstream js(out / "summary.json");
  write_summary_json(js, report, cfg);
  if (!csv || !js) {
    fail(ErrorCode::kIo, "failed writing report files in " + out.string());
  }
}

fs::path output_root(const ExperimentConfig& cfg) {
  if (cfg.output_dir.empty()) return {};
  const fs::path out = cfg.output_dir;
  std::error_code ec;
  fs::create_directories(out / "placements", ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + out.string());
  return out;
}

}  // namespace

namespace {
RunReport score_placements(const ExperimentConfig& cfg,
                           const ExperimentData& data,
                           const CriterionContext& ctx,
                           std::vector<PlacementEntry> placements);
}  // namespace

Placement select_placement(const ExperimentConfig& cfg,
                           const ExperimentData& data,
                           const CriterionContext& ctx,
                           const std::string& method, Index k, Index trial) {
  const Index n = data.model.cloud.size();
  const auto uk = static_cast<std::uint64_t>(k);
  if (method == "pspo") {
    GaConfig ga = cfg.ga;
    ga.seed = derive_seed(cfg.placement_seed, 0x4741, uk);
    return ga_optimize(ctx, k, ga).best;
  }
  if (method == "us") return uniform_placement(data.model.cloud, k);
  if (method == "rs") {
    return random_placement(
        n, k,
        derive_seed(cfg.placement_seed, 0x5253, uk,
                    static_cast<std::uint64_t>(trial)));
  }
  if (method == "cns") return cns_select(data.basis, k);
  if (method == "ecs") {
    EcsConfig ecs = cfg.ecs;
    ecs.seed = derive_seed(cfg.placement_seed, 0xEC5, uk);
    return ecs_select({data.train.fields.transpose(), "train"},
                      data.model.cloud, k, ecs);
  }
  fail(ErrorCode::kConfig, "unknown placement method '" + method + "'");
}

ExperimentData prepare_data(const ExperimentConfig& cfg) {
  ExperimentData d;
  d.model = build_case(cfg.case_spec);
  d.train = make_fields(d.model, cfg.train_size, derive_seed(cfg.data_seed, 1));
  d.test = make_fields(d.model, cfg.test_size, derive_seed(cfg.data_seed, 2));
  PodOptions po;
  po.remove_mean = cfg.pod_remove_mean;
  const Index n = d.model.cloud.size();
  d.basis = pod_fit({d.train.fields.transpose(), "train"},
                    std::min({cfg.pod_modes, n, cfg.train_size}), po);
  return d;
}

std::string method_group(const std::string& method) {
  return method.rfind("rs-", 0) == 0 ? "rs" : method;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const ExperimentData data = prepare_data(cfg);
  const CriterionContext ctx(data.model.op, cfg.gamma);
  const fs::path out = output_root(cfg);

  std::vector<PlacementEntry> placements;
  for (Index k : cfg.ks) {
    for (const auto& method : cfg.methods) {
      const Index trials = method == "rs" ? cfg.rs_trials : 1;
      for (Index t = 0; t < trials; ++t) {
        PlacementEntry e;
        e.method = method_label(method, t);
        e.k = k;
        try {
          e.placement = select_placement(cfg, data, ctx, method, k, t).sorted();
        } catch (const Error& err) {
          if (!out.empty()) {
            RunReport partial;
            partial.config_hash = config_hash(cfg);
            partial.placements = placements;
            write_outputs(out, partial, cfg);
          }
          fail(err.code(),
               "placement method=" + e.method + " k=" + std::to_string(k) +
                   ": " + err.what(),
               err.detail());
        }
        placements.push_back(std::move(e));
      }
    }
  }
  return score_placements(cfg, data, ctx, std::move(placements));
}

RunReport evaluate_placements(const ExperimentConfig& cfg,
                              const ExperimentData& data,
                              std::vector<PlacementEntry> placements) {
  cfg.validate();
  const CriterionContext ctx(data.model.op, cfg.gamma);
  return score_placements(cfg, data, ctx, std::move(placements));
}

namespace {

RunReport score_placements(const ExperimentConfig& cfg,
                           const ExperimentData& data,
                           const CriterionContext& ctx,
                           std::vector<PlacementEntry> placements) {
  RunReport report;
  report.config_hash = config_hash(cfg);
  const CaseModel& model = data.model;
  const FieldSet& train = data.train;
  const FieldSet& test = data.test;
  const PODBasis& basis = data.basis;
  const Index n = model.cloud.size();
  const fs::path out = output_root(cfg);

  for (auto& e : placements) {
    e.placement.validate(n);
    e.k = e.placement.k();
    e.log10_kappa = ctx.evaluate(e.placement).log10_kappa;
    if (!out.empty() && cfg.write_placements) {
      const fs::path path = out / "placements" /
                            (model.spec.name + "_" + e.method + "_k" +
                             std::to_string(e.k) + ".json");
      std::ofstream os(path);
      write_placement_json(os, e.placement, n, e.log10_kappa, cfg.gamma,
                           cfg.placement_seed);
      if (!os) fail(ErrorCode::kIo, "cannot write " + path.string());
      e.path = path.string();
    }
    report.placements.push_back(std::move(e));
  }

  std::vector<CellTask> tasks;
  for (std::size_t pi = 0; pi < report.placements.size(); ++pi) {
    for (std::size_t si = 0; si < cfg.sigmas.size(); ++si) {
      tasks.push_back({pi, si});
    }
  }
  std::vector<std::optional<std::vector<ReportRow>>> results(tasks.size());
  std::optional<CellFailure> failure;
  std::mutex failure_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        results[i] = run_cell(cfg, model, train, test, basis,
                              report.placements[tasks[i].placement],
                              tasks[i].sigma_index);
      } catch (const std::exception& ex) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        const auto* err = dynamic_cast<const Error*>(&ex);
        if (!failure || i < failure->task) {
          failure = CellFailure{i, err ? err->code() : ErrorCode::kInvalidArgument,
                                ex.what()};
        }
      }
    }
  };
  const auto workers = static_cast<std::size_t>(
      std::min<Index>(cfg.threads, static_cast<Index>(tasks.size())));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (auto& r : results) {
    if (!r) continue;
    for (auto& row : *r) report.rows.push_back(std::move(row));
  }
  if (!out.empty()) write_outputs(out, report, cfg);
  if (failure) {
    const CellTask& t = tasks[failure->task];
    const PlacementEntry& e = report.placements[t.placement];
    fail(failure->code,
         "cell method=" + e.method + " k=" + std::to_string(e.k) +
             " sigma=" + fmt17(cfg.sigmas[t.sigma_index]) + ": " +
             failure->message);
  }
  return report;
}

}  // namespace

void write_report_csv(std::ostream& os, const RunReport& report,
                      bool include_timing) {
  os << "case,method,k,sigma,seed,reconstructor,max_ae,mse,log10_kappa,"
        "wall_ms,placement_path\n";
  for (const auto& r : report.rows) {
    os << r.case_name << ',' << r.method << ',' << r.k << ','
       << fmt17(r.sigma) << ',' << r.seed << ',' << r.reconstructor << ','
       << fmt17(r.metrics.max_ae) << ',' << fmt17(r.metrics.mse) << ','
       << fmt17(r.log10_kappa) << ',';
    if (include_timing) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", r.wall_ms);
      os << buf;
    }
    os << ',' << r.placement_path << '\n';
  }
}

std::vector<GroupStats> summarize(const RunReport& report) {
  struct Acc {
    GroupStats s;
    std::map<std::string, std::pair<double, Index>> per_trial;
    double sum_mse = 0.0;
    double sum_max = 0.0;
  };
  std::vector<Acc> accs;
  std::map<std::tuple<std::string, Index, double, std::string>, std::size_t>
      where;
  for (const auto& r : report.rows) {
    const std::string g = method_group(r.method);
    const auto key = std::make_tuple(g, r.k, r.sigma, r.reconstructor);
    auto it = where.find(key);
    if (it == where.end()) {
      it = where.emplace(key, accs.size()).first;
      Acc a;
      a.s.method = g;
      a.s.k = r.k;
      a.s.sigma = r.sigma;
      a.s.reconstructor = r.reconstructor;
      accs.push_back(std::move(a));
    }
    Acc& a = accs[it->second];
    a.s.rows += 1;
    a.sum_mse += r.metrics.mse;
    a.sum_max += r.metrics.max_ae;
    auto& t = a.per_trial[r.method];
    t.first += r.metrics.mse;
    t.second += 1;
  }
  std::vector<GroupStats> out;
  for (auto& a : accs) {
    GroupStats s = a.s;
    s.mean_mse = a.sum_mse / static_cast<double>(s.rows);
    s.mean_max_ae = a.sum_max / static_cast<double>(s.rows);
    std::vector<double> means;
    for (const auto& [label, v] : a.per_trial) {
      means.push_back(v.first / static_cast<double>(v.second));
    }
    std::sort(means.begin(), means.end());
    s.trials = static_cast<Index>(means.size());
    const std::size_t mid = means.size() / 2;
    s.median_mse = means.size() % 2 ? means[mid]
                                    : 0.5 * (means[mid - 1] + means[mid]);
    s.min_mse = means.front();
    s.max_mse = means.back();
    out.push_back(s);
  }
  return out;
}

const GroupStats* find_group(const std::vector<GroupStats>& stats,
                             const std::string& method, Index k, double sigma,
                             const std::string& reconstructor) {
  for (const auto& s : stats) {
    if (s.method == method && s.k == k && s.sigma == sigma &&
        s.reconstructor == reconstructor) {
      return &s;
    }
  }
  return nullptr;
}

void write_summary_json(std::ostream& os, const RunReport& report,
                        const ExperimentConfig& cfg) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["config_hash"] = report.config_hash;
  j["case"] = cfg.case_spec.name;
  j["n"] = cfg.case_spec.candidate_count();
  j["train_size"] = cfg.train_size;
  j["test_size"] = cfg.test_size;
  ordered_json pl = ordered_json::array();
  for (const auto& e : report.placements) {
    pl.push_back({{"method", e.method},
                  {"k", e.k},
                  {"log10_kappa", e.log10_kappa},
                  {"indices", e.placement.indices},
                  {"path", e.path}});
  }
  j["placements"] = pl;
  ordered_json groups = ordered_json::array();
  for (const auto& s : summarize(report)) {
    groups.push_back({{"method", s.method},
                      {"k", s.k},
                      {"sigma", s.sigma},
                      {"reconstructor", s.reconstructor},
                      {"rows", s.rows},
                      {"trials", s.trials},
                      {"mean_mse", s.mean_mse},
                      {"mean_max_ae", s.mean_max_ae},
                      {"median_mse", s.median_mse},
                      {"min_mse", s.min_mse},
                      {"max_mse", s.max_mse}});
  }
  j["groups"] = groups;
  os << j.dump(2) << "\n";
}

}  // namespace pspo
