#include <cmath>
#include <random>

#include "pspo/error.hpp"
#include "pspo/harness.hpp"

namespace pspo {

bool SourceRect::contains(const Coord& p, double margin) const {
  return p.x() >= x0 - margin && p.x() <= x1 + margin &&
         p.y() >= y0 - margin && p.y() <= y1 + margin;
}

Index CaseSpec::parameter_count() const {
  return dim == 1 ? 2 : static_cast<Index>(sources.size());
}

void CaseSpec::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::kConfig, what); };
  if (dim != 1 && dim != 2) bad("case dimension must be 1 or 2");
  if (dim == 1) {
    if (!(x_max > x_min)) bad("empty interval");
    if (n < 3) bad("heat1d needs n >= 3");
  } else {
    if (!(width > 0.0 && height > 0.0)) bad("plate size must be positive");
    if (nx < 3 || ny < 3) bad("plate grid needs nx, ny >= 3");
    if (sources.empty()) bad("plate2d needs at least one source");
  }
  if (stencil_size < rbf.monomial_count(dim) || stencil_size > candidate_count()) {
    bad("stencil size out of range");
  }
  if (rbf.phs_exponent < 3 || rbf.phs_exponent % 2 == 0 || rbf.poly_degree < 1) {
    bad("invalid RBF settings");
  }
  if (!(conductivity > 0.0)) bad("conductivity must be positive");
  if (!(param_hi >= param_lo)) bad("empty parameter box");
  if (truth == TruthKind::kAnalytic && !analytic_solution) {
    bad("case has no analytic solution");
  }
}

CaseSpec heat1d_case() {
  CaseSpec s;
  s.name = "heat1d";
  s.dim = 1;
  s.x_min = -10.0;
  s.x_max = 10.0;
  s.n = 400;
  s.stencil_size = 25;
  s.conductivity = 1.0;
  s.analytic_solution = true;
  s.truth = TruthKind::kAnalytic;
  return s;
}

CaseSpec plate2d_case() {
  CaseSpec s;
  s.name = "plate2d";
  s.dim = 2;
  s.nx = 37;
  s.ny = 37;
  s.stencil_size = 25;
  s.conductivity = 150.0;
  s.t0 = 10.0;
  s.source_unit = 6e3;
  // roughly 13% of the plate
  s.sources = {
      {0.10, 0.60, 0.25, 0.75}, {0.40, 0.75, 0.60, 0.88},
      {0.72, 0.60, 0.88, 0.78}, {0.12, 0.25, 0.28, 0.40},
      {0.45, 0.35, 0.58, 0.50}, {0.70, 0.22, 0.86, 0.36},
  };
  s.analytic_solution = false;
  s.truth = TruthKind::kDiscrete;
  return s;
}

CaseSpec case_by_name(const std::string& name) {
  if (name == "heat1d") return heat1d_case();
  if (name == "plate2d") return plate2d_case();
  fail(ErrorCode::kConfig, "unknown case '" + name + "'");
}

Physics case_physics(const CaseSpec& spec) {
  Physics ph;
  ph.conductivity = spec.conductivity;
  if (spec.dim == 1) {
    ph.modes.push_back({"sin",
                        [](const Coord& x) { return -std::sin(0.7 * x.x()); },
                        [](const Coord& x) {
                          return std::sin(0.7 * x.x()) / 0.49;
                        }});
    ph.modes.push_back({"cos",
                        [](const Coord& x) { return -std::cos(1.5 * x.x()); },
                        [](const Coord& x) {
                          return std::cos(1.5 * x.x()) / 2.25;
                        }});
    ph.dirichlet_value = [](const Coord& x) { return -0.1 * x.x(); };
  } else {
    for (std::size_t i = 0; i < spec.sources.size(); ++i) {
      const SourceRect rect = spec.sources[i];
      const double unit = spec.source_unit;
      ph.modes.push_back(
          {"source" + std::to_string(i + 1),
           [rect, unit](const Coord& x) {
             return rect.contains(x, 1e-12) ? -unit : 0.0;
           },
           {}});
    }
    const double t0 = spec.t0;
    ph.dirichlet_value = [t0](const Coord&) { return t0; };
  }
  return ph;
}

CaseModel build_case(const CaseSpec& spec) {
  spec.validate();
  CaseModel m;
  m.spec = spec;
  m.cloud = spec.dim == 1
                ? generate_1d(spec.x_min, spec.x_max, spec.n)
                : generate_grid_2d(spec.width, spec.height, spec.nx, spec.ny,
                                   spec.layout);
  m.stencils = knn_stencils(m.cloud, spec.stencil_size);
  m.op = assemble(m.cloud, m.stencils, spec.rbf, case_physics(spec));
  return m;
}

double heat1d_exact(double x, const Vector& lambda) {
  require(lambda.size() == 2, "heat1d has two parameters");
  return lambda(0) / 0.49 * std::sin(0.7 * x) +
         lambda(1) / 2.25 * std::cos(1.5 * x) - 0.1 * x;
}

Vector ground_truth(const CaseModel& model, const Vector& lambda) {
  const CaseSpec& s = model.spec;
  if (lambda.size() != s.parameter_count()) {
    fail(ErrorCode::kShapeMismatch, "parameter vector has wrong length");
  }
  for (Index i = 0; i < lambda.size(); ++i) {
    require(lambda(i) >= s.param_lo && lambda(i) <= s.param_hi,
            "parameters outside the case box");
  }
  if (s.truth == TruthKind::kAnalytic) {
    Vector u(model.cloud.size());
    for (Index i = 0; i < u.size(); ++i) {
      u(i) = heat1d_exact(model.cloud.points[i].x(), lambda);
    }
    return u;
  }
  return forward_solve(model.op, lambda);
}

Matrix sample_parameters(const CaseSpec& spec, Index count,
                         std::uint64_t seed) {
  require(count >= 1, "sample count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(spec.param_lo, spec.param_hi);
  Matrix out(spec.parameter_count(), count);
  for (Index j = 0; j < count; ++j) {
    for (Index i = 0; i < out.rows(); ++i) out(i, j) = dist(rng);
  }
  return out;
}

FieldSet make_fields(const CaseModel& model, Index count, std::uint64_t seed) {
  FieldSet fs;
  fs.lambdas = sample_parameters(model.spec, count, seed);
  const Index n = model.cloud.size();
  fs.fields.resize(count, n);
  if (model.spec.truth == TruthKind::kAnalytic) {
    for (Index j = 0; j < count; ++j) {
      fs.fields.row(j) = ground_truth(model, fs.lambdas.col(j)).transpose();
    }
  } else {
    ForwardSolver solver(model.op);
    fs.fields = solver.solve_many(fs.lambdas).transpose();
  }
  return fs;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                          std::uint64_t b, std::uint64_t c) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

}  // namespace pspo
