#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "pspo/error.hpp"
#include "pspo/harness.hpp"

namespace pspo {

namespace {

[[noreturn]] void config_error(const std::string& what) {
  fail(ErrorCode::kConfig, what);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<std::string> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const std::string t = boost::trim_copy(text);
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (ec != std::errc() || ptr != end || t.empty()) {
    config_error("bad value for '" + key + "': '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = boost::to_lower_copy(boost::trim_copy(text));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  config_error("bad boolean for '" + key + "': '" + text + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) {
    out.push_back(parse_number<T>(key, item));
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, std::string>) {
      out += xs[i];
    } else if constexpr (std::is_floating_point_v<T>) {
      out += fmt(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  case_spec.validate();
  const Index n = case_spec.candidate_count();
  if (methods.empty()) config_error("no placement methods");
  static const std::set<std::string> known_methods = {"pspo", "us", "rs",
                                                      "cns", "ecs"};
  for (const auto& m : methods) {
    if (!known_methods.count(m)) config_error("unknown method '" + m + "'");
  }
  if (ks.empty()) config_error("no sensor counts");
  for (Index k : ks) {
    if (k < 1 || k > n) config_error("k out of range: " + std::to_string(k));
  }
  if (rs_trials < 1) config_error("rs_trials must be >= 1");
  if (!(gamma > 0.0)) config_error("gamma must be positive");
  if (pod_modes < 1) config_error("pod_modes must be >= 1");
  if (train_size < 1 || test_size < 1) config_error("dataset sizes must be >= 1");
  if (sigmas.empty()) config_error("no noise levels");
  for (double s : sigmas) {
    if (!(s >= 0.0)) config_error("sigma must be >= 0");
  }
  if (noise_seeds.empty()) config_error("no noise seeds");
  static const std::set<std::string> known_recon = {"physics", "gappy_pod",
                                                    "pod_nn", "mlp"};
  if (reconstructors.empty()) config_error("no reconstructors");
  for (const auto& r : reconstructors) {
    if (!known_recon.count(r)) config_error("unknown reconstructor '" + r + "'");
  }
  for (Index h : hidden) {
    if (h < 1) config_error("hidden widths must be >= 1");
  }
  if (adam_iters < 0) config_error("adam_iters must be >= 0");
  if (!(learning_rate > 0.0)) config_error("learning_rate must be positive");
  if (threads < 1) config_error("threads must be >= 1");
  try {
    ga.validate();
  } catch (const Error& e) {
    config_error(std::string("GA settings: ") + e.what());
  }
}

ExperimentConfig parse_config(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    config_error(std::string("config parse error: ") + e.what());
  }

  std::string case_name = "heat1d";
  if (auto c = tree.get_child_optional("case")) {
    if (auto nm = c->get_optional<std::string>("name")) case_name = *nm;
  }
  ExperimentConfig cfg;
  cfg.case_spec = case_by_name(case_name);
  CaseSpec& cs = cfg.case_spec;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  std::map<std::string, std::map<std::string, Setter>> table;

  table["case"] = {
      {"name", [](auto&, auto&) {}},
      {"n", [&](auto& k, auto& v) { cs.n = parse_number<Index>(k, v); }},
      {"nx", [&](auto& k, auto& v) { cs.nx = parse_number<Index>(k, v); }},
      {"ny", [&](auto& k, auto& v) { cs.ny = parse_number<Index>(k, v); }},
      {"m", [&](auto& k, auto& v) { cs.stencil_size = parse_number<Index>(k, v); }},
      {"poly_degree",
       [&](auto& k, auto& v) { cs.rbf.poly_degree = parse_number<int>(k, v); }},
      {"phs_exponent",
       [&](auto& k, auto& v) { cs.rbf.phs_exponent = parse_number<int>(k, v); }},
      {"conductivity",
       [&](auto& k, auto& v) { cs.conductivity = parse_number<double>(k, v); }},
      {"t0", [&](auto& k, auto& v) { cs.t0 = parse_number<double>(k, v); }},
      {"source_unit",
       [&](auto& k, auto& v) { cs.source_unit = parse_number<double>(k, v); }},
      {"param_lo", [&](auto& k, auto& v) { cs.param_lo = parse_number<double>(k, v); }},
      {"param_hi", [&](auto& k, auto& v) { cs.param_hi = parse_number<double>(k, v); }},
      {"truth",
       [&](auto& k, auto& v) {
         if (v == "analytic") {
           cs.truth = TruthKind::kAnalytic;
         } else if (v == "discrete") {
           cs.truth = TruthKind::kDiscrete;
         } else {
           config_error("bad value for '" + k + "': '" + v + "'");
         }
       }},
      {"train_size", [&](auto& k, auto& v) { cfg.train_size = parse_number<Index>(k, v); }},
      {"test_size", [&](auto& k, auto& v) { cfg.test_size = parse_number<Index>(k, v); }},
      {"data_seed",
       [&](auto& k, auto& v) { cfg.data_seed = parse_number<std::uint64_t>(k, v); }},
      {"pod_modes", [&](auto& k, auto& v) { cfg.pod_modes = parse_number<Index>(k, v); }},
      {"pod_remove_mean",
       [&](auto& k, auto& v) { cfg.pod_remove_mean = parse_bool(k, v); }},
  };
  table["method"] = {
      {"methods", [&](auto&, auto& v) { cfg.methods = split_list(v); }},
      {"k", [&](auto& k, auto& v) { cfg.ks = parse_list<Index>(k, v); }},
      {"rs_trials", [&](auto& k, auto& v) { cfg.rs_trials = parse_number<Index>(k, v); }},
      {"seed",
       [&](auto& k, auto& v) { cfg.placement_seed = parse_number<std::uint64_t>(k, v); }},
      {"gamma", [&](auto& k, auto& v) { cfg.gamma = parse_number<double>(k, v); }},
      {"ga_population",
       [&](auto& k, auto& v) { cfg.ga.population_size = parse_number<Index>(k, v); }},
      {"ga_generations",
       [&](auto& k, auto& v) { cfg.ga.generations = parse_number<Index>(k, v); }},
      {"ga_crossover",
       [&](auto& k, auto& v) { cfg.ga.crossover_prob = parse_number<double>(k, v); }},
      {"ga_mutation",
       [&](auto& k, auto& v) { cfg.ga.mutation_prob = parse_number<double>(k, v); }},
      {"ga_elitism",
       [&](auto& k, auto& v) { cfg.ga.elitism = parse_number<Index>(k, v); }},
      {"ga_tournament",
       [&](auto& k, auto& v) { cfg.ga.tournament_size = parse_number<Index>(k, v); }},
      {"ecs_pool",
       [&](auto& k, auto& v) { cfg.ecs.pool_per_cell = parse_number<Index>(k, v); }},
  };
  table["noise"] = {
      {"sigma", [&](auto& k, auto& v) { cfg.sigmas = parse_list<double>(k, v); }},
      {"seeds",
       [&](auto& k, auto& v) { cfg.noise_seeds = parse_list<std::uint64_t>(k, v); }},
      {"seed_count",
       [&](auto& k, auto& v) {
         const auto count = parse_number<std::uint64_t>(k, v);
         cfg.noise_seeds.clear();
         for (std::uint64_t s = 0; s < count; ++s) cfg.noise_seeds.push_back(s);
       }},
  };
  table["reconstructors"] = {
      {"list", [&](auto&, auto& v) { cfg.reconstructors = split_list(v); }},
      {"hidden", [&](auto& k, auto& v) { cfg.hidden = parse_list<Index>(k, v); }},
      {"adam_iters", [&](auto& k, auto& v) { cfg.adam_iters = parse_number<Index>(k, v); }},
      {"learning_rate",
       [&](auto& k, auto& v) { cfg.learning_rate = parse_number<double>(k, v); }},
  };
  table["output"] = {
      {"dir", [&](auto&, auto& v) { cfg.output_dir = boost::trim_copy(v); }},
      {"threads", [&](auto& k, auto& v) { cfg.threads = parse_number<Index>(k, v); }},
      {"write_placements",
       [&](auto& k, auto& v) { cfg.write_placements = parse_bool(k, v); }},
  };

  for (const auto& [section, body] : tree) {
    auto sec = table.find(section);
    if (sec == table.end()) {
      if (body.empty() && !body.data().empty()) {
        config_error("key outside a section: '" + section + "'");
      }
      config_error("unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      auto it = sec->second.find(key);
      if (it == sec->second.end()) {
        config_error("unknown key '" + key + "' in [" + section + "]");
      }
      it->second(key, node.data());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file '" + path + "'");
  return parse_config(in);
}

std::string canonical_config(const ExperimentConfig& cfg) {
  const CaseSpec& cs = cfg.case_spec;
  std::ostringstream os;
  os << "case.name=" << cs.name << "\n"
     << "case.dim=" << cs.dim << "\n";
  if (cs.dim == 1) {
    os << "case.interval=" << fmt(cs.x_min) << "," << fmt(cs.x_max) << "\n"
       << "case.n=" << cs.n << "\n";
  } else {
    os << "case.size=" << fmt(cs.width) << "," << fmt(cs.height) << "\n"
       << "case.grid=" << cs.nx << "," << cs.ny << "\n"
       << "case.layout=" << tag_code(cs.layout.bottom) << tag_code(cs.layout.right)
       << tag_code(cs.layout.top) << tag_code(cs.layout.left) << "\n";
    for (const auto& r : cs.sources) {
      os << "case.source=" << fmt(r.x0) << "," << fmt(r.y0) << "," << fmt(r.x1)
         << "," << fmt(r.y1) << "\n";
    }
  }
  os << "case.m=" << cs.stencil_size << "\n"
     << "case.rbf=" << cs.rbf.phs_exponent << "," << cs.rbf.poly_degree << "\n"
     << "case.conductivity=" << fmt(cs.conductivity) << "\n"
     << "case.t0=" << fmt(cs.t0) << "\n"
     << "case.source_unit=" << fmt(cs.source_unit) << "\n"
     << "case.params=" << fmt(cs.param_lo) << "," << fmt(cs.param_hi) << "\n"
     << "case.truth=" << (cs.truth == TruthKind::kAnalytic ? "analytic" : "discrete")
     << "\n"
     << "case.pod=" << cfg.pod_modes << "," << cfg.pod_remove_mean << "\n"
     << "case.data=" << cfg.train_size << "," << cfg.test_size << ","
     << cfg.data_seed << "\n"
     << "method.methods=" << join(cfg.methods) << "\n"
     << "method.k=" << join(cfg.ks) << "\n"
     << "method.rs_trials=" << cfg.rs_trials << "\n"
     << "method.seed=" << cfg.placement_seed << "\n"
     << "method.gamma=" << fmt(cfg.gamma) << "\n"
     << "method.ga=" << cfg.ga.population_size << "," << cfg.ga.generations << ","
     << fmt(cfg.ga.crossover_prob) << "," << fmt(cfg.ga.mutation_prob) << ","
     << cfg.ga.elitism << "," << cfg.ga.tournament_size << "\n"
     << "method.ecs=" << cfg.ecs.pool_per_cell << "," << cfg.ecs.max_iterations
     << "\n"
     << "noise.sigma=" << join(cfg.sigmas) << "\n"
     << "noise.seeds=" << join(cfg.noise_seeds) << "\n"
     << "reconstructors.list=" << join(cfg.reconstructors) << "\n"
     << "reconstructors.hidden=" << join(cfg.hidden) << "\n"
     << "reconstructors.adam=" << cfg.adam_iters << "," << fmt(cfg.learning_rate)
     << "\n"
     << "output.dir=" << cfg.output_dir << "\n";
  return os.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_config(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pspo
