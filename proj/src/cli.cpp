#include "hgrf/cli.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "hgrf/errors.hpp"
#include "hgrf/io.hpp"
#include "hgrf/kriging.hpp"
#include "hgrf/likelihood.hpp"
#include "hgrf/preprocessing.hpp"
#include "hgrf/simulation.hpp"
#include "hgrf/validity.hpp"

namespace hgrf {

namespace {

// Realizations generated in parallel before being written in order.
constexpr int kWriteBatch = 16;

struct GridArgs {
  int nx = 0, ny = 0;
  double dx = 1.0, dy = 1.0, x0 = 0.0, y0 = 0.0;

  void add(CLI::App* app, bool required) {
    auto* a = app->add_option("--nx", nx, "Grid points along x");
    auto* b = app->add_option("--ny", ny, "Grid points along y");
    if (required) {
      a->required();
      b->required();
    }
    app->add_option("--dx", dx, "Grid spacing along x")->capture_default_str();
    app->add_option("--dy", dy, "Grid spacing along y")->capture_default_str();
    app->add_option("--x0", x0, "x of the first node")->capture_default_str();
    app->add_option("--y0", y0, "y of the first node")->capture_default_str();
  }
  GridSpec spec() const {
    const GridSpec g{nx, ny, dx, dy, x0, y0};
    g.validate();
    return g;
  }
};

std::vector<VariableId> parse_vars(const std::string& list) {
  std::vector<VariableId> vars;
  std::istringstream in(list);
  for (std::string t; std::getline(in, t, ',');) {
    const VariableId v = parse_variable(t);
    if (std::find(vars.begin(), vars.end(), v) != vars.end())
      throw ParseError("variable '" + t + "' listed twice");
    vars.push_back(v);
  }
  if (vars.empty()) throw ParseError("empty variable list");
  return vars;
}

std::string numbered(const std::string& prefix, long k, const std::string& ext) {
  return prefix + "_" + std::to_string(k) + ext;
}

// ---- simulate

struct SimulateArgs {
  std::string params, vars = "psi,chi,u,v,zeta,div", out;
  GridArgs grid;
  std::optional<std::uint64_t> seed;
  int n = 1;
  int max_padding = 8;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const ParamsFile pf = read_params_file(a.params);
  const GridSpec g = a.grid.spec();
  const std::vector<VariableId> vars = parse_vars(a.vars);
  const std::uint64_t seed = a.seed.value_or(pf.seed.value_or(0));
  if (a.n < 0) throw DomainError("simulate: --n must be nonnegative");
  if (a.n == 0) return kExitOk;
  SimulationOptions opts;
  opts.max_padding = a.max_padding;
  const CirculantSimulator sim(pf.params, g, vars, opts);
  for (int b0 = 0; b0 < a.n; b0 += kWriteBatch) {
    const int nb = std::min(kWriteBatch, a.n - b0);
    std::vector<GridField> batch(nb);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < nb; ++k) batch[k] = sim.realization(seed, static_cast<std::uint64_t>(b0 + k));
    for (int k = 0; k < nb; ++k) write_grid_file(numbered(a.out, b0 + k, ".hgrf"), batch[k]);
  }
  out << "wrote " << a.n << " realization(s), padding " << sim.padding() << '\n';
  return kExitOk;
}

// ---- fit

struct FitArgs {
  std::string data, out, params_out;
  int half_width = 20;
  int starts = 10;
  std::uint64_t seed = 0;
  int max_evals = 3000;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const GridField f = read_grid_file(a.data);
  FitOptions opts;
  opts.n_starts = a.starts;
  opts.seed = a.seed;
  opts.max_evals = a.max_evals;
  const FitResult r = fit(f, NeighborhoodSet::square(a.half_width), opts);
  std::ostringstream os;
  write_fit(os, r);
  if (!a.out.empty())
    write_text_file(a.out, os.str());
  else
    out << os.str();
  if (!a.params_out.empty()) {
    std::ostringstream ps;
    write_params(ps, r.params);
    write_text_file(a.params_out, ps.str());
  }
  return kExitOk;
}

// ---- bootstrap

struct BootstrapArgs {
  std::string params, out;
  GridArgs grid;
  int replicates = 20;
  int half_width = 20;
  int starts = 10;
  std::optional<std::uint64_t> seed;
  int max_evals = 3000;
};

int cmd_bootstrap(const BootstrapArgs& a, std::ostream& out) {
  const ParamsFile pf = read_params_file(a.params);
  const GridSpec g = a.grid.spec();
  FitOptions opts;
  opts.n_starts = a.starts;
  opts.seed = a.seed.value_or(pf.seed.value_or(0));
  opts.max_evals = a.max_evals;
  const BootstrapEnsemble e =
      bootstrap(pf.params, g, NeighborhoodSet::square(a.half_width), a.replicates, opts);
  for (std::size_t k = 0; k < e.replicates.size(); ++k) {
    std::ostringstream os;
    if (e.failures[k].empty())
      write_fit(os, e.replicates[k]);
    else
      os << "failed=" << e.failures[k] << '\n';
    write_text_file(numbered(a.out, static_cast<long>(k), ".fit"), os.str());
  }
  std::ostringstream summary;
  write_bootstrap_summary(summary, e);
  write_text_file(a.out + "_summary.txt", summary.str());
  out << summary.str();
  return kExitOk;
}

// ---- krige

struct KrigeArgs {
  std::string params, obs, vars = "psi,chi", out, sd_out, cond_out;
  GridArgs grid;
  int realizations = 0;
  std::optional<std::uint64_t> seed;
};

int cmd_krige(const KrigeArgs& a, std::ostream& out) {
  const ParamsFile pf = read_params_file(a.params);
  const std::vector<Observation> obs = read_observations_file(a.obs);
  const GridSpec g = a.grid.spec();
  const std::vector<VariableId> vars = parse_vars(a.vars);
  const KrigeResult r = krige(pf.params, obs, g, vars);
  write_grid_file(a.out, r.mean);
  if (!a.sd_out.empty()) write_grid_file(a.sd_out, r.sd);
  if (a.realizations > 0) {
    if (a.cond_out.empty()) throw ParseError("--realizations needs --cond-out");
    const auto fields = conditional_simulate(pf.params, obs, g, vars,
                                             a.seed.value_or(pf.seed.value_or(0)), a.realizations);
    for (std::size_t k = 0; k < fields.size(); ++k)
      write_grid_file(numbered(a.cond_out, static_cast<long>(k), ".hgrf"), fields[k]);
  }
  out << "kriged " << vars.size() << " variable(s) from " << obs.size() << " observation(s)\n";
  return kExitOk;
}

// ---- validate

struct ValidateArgs {
  std::vector<std::string> daley;
  bool hankel = false;
  std::string params;
};

DaleyParams parse_daley(const std::vector<std::string>& kv) {
  std::map<std::string, double> m;
  for (const std::string& t : kv) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("--daley expects a=<value> lambda=<value>");
    const std::string key = t.substr(0, eq);
    if (key != "a" && key != "lambda") throw ParseError("--daley: unknown key '" + key + "'");
    if (m.count(key)) throw ParseError("--daley: duplicate key '" + key + "'");
    m[key] = parse_double(t.substr(eq + 1), "--daley " + key + ": ");
  }
  if (!m.count("a") || !m.count("lambda"))
    throw ParseError("--daley expects a=<value> lambda=<value>");
  return {m["a"], m["lambda"]};
}

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  if (a.daley.empty() == a.params.empty())
    throw ParseError("validate needs exactly one of --daley or --params");
  if (!a.daley.empty()) {
    const DaleyParams q = parse_daley(a.daley);
    if (a.hankel) {
      const SpectralReport r = spectral_valid(daley_spectrum(q, DaleyTransform::Hankel2D),
                                              default_frequency_grid());
      out << (r.valid ? "valid" : "invalid: " + r.reason) << '\n';
    } else {
      const ValidityReport r = daley_valid(q);
      out << (r.valid ? "valid" : "invalid") << (r.reason.empty() ? "" : ": " + r.reason) << '\n';
    }
    return kExitOk;
  }
  const ParamsFile pf = read_params_file(a.params);
  const SpectralReport r = spectral_valid(pf.params);
  if (r.valid)
    out << "valid: minimum normalized spectral determinant " << format_double(r.min_det) << '\n';
  else
    out << "invalid: " << r.reason << '\n';
  return kExitOk;
}

// ---- transform

struct TransformArgs {
  std::string data, out, ghat_out, qq_out, error_var;
  double bandwidth = 0.0;
  double c = 1.0 / 3.0;
};

int cmd_transform(const TransformArgs& a, std::ostream& out, std::ostream& err) {
  const GridField f = read_grid_file(a.data);
  const SmootherSpec spec{Kernel::Gaussian, a.bandwidth, a.c};
  const SmoothedEnergy ge = energy_smooth(f, spec);
  if (!ge.warning.empty()) err << "warning: " << ge.warning << '\n';
  const GridField t = transform(f, ge.ghat, a.c);
  write_grid_file(a.out, t);
  if (!a.ghat_out.empty()) write_grid_file(a.ghat_out, from_scalar(ge.ghat, "ghat"));

  const auto before = marginal_diagnostics(f);
  const auto after = marginal_diagnostics(t);
  for (std::size_t c = 0; c < before.size(); ++c) {
    out << "kurtosis " << to_string(before[c].var) << ' ' << format_double(before[c].kurtosis)
        << " -> " << format_double(after[c].kurtosis) << '\n';
    if (!a.qq_out.empty()) {
      std::ostringstream os;
      write_qq(os, after[c]);
      write_text_file(a.qq_out + "_" + std::string(to_string(after[c].var)) + ".txt", os.str());
    }
  }
  if (!a.error_var.empty()) {
    const VariableId v = parse_variable(a.error_var);
    out << "transform_error " << a.error_var << ' '
        << format_double(transform_error(f, v, ge.ghat, a.c)) << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Helmholtz-coupled Gaussian random fields: simulation, estimation and kriging",
               "hgrf"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0: all cores)")
      ->check(CLI::NonNegativeNumber);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Simulate fields on a grid by circulant embedding");
  sim->add_option("--params", sa.params, "Parameter file")->required();
  sa.grid.add(sim, true);
  sim->add_option("--vars", sa.vars, "Comma-separated variables")->capture_default_str();
  sim->add_option("--seed", sa.seed, "Random seed (default: params file seed, else 0)");
  sim->add_option("-n,--n", sa.n, "Number of realizations")->capture_default_str();
  sim->add_option("--max-padding", sa.max_padding, "Largest embedding padding factor")
      ->capture_default_str();
  sim->add_option("--out", sa.out, "Output prefix; files are <out>_<k>.hgrf")->required();

  FitArgs fa;
  auto* fi = app.add_subcommand("fit", "Fit the model to a (u, v) grid by pairwise likelihood");
  fi->add_option("--data", fa.data, "Grid file with u and v")->required();
  fi->add_option("--half-width", fa.half_width, "Neighbourhood half width (20: 41 x 41)")
      ->capture_default_str();
  fi->add_option("--starts", fa.starts, "Optimizer starts")->capture_default_str();
  fi->add_option("--seed", fa.seed, "Seed for the start design")->capture_default_str();
  fi->add_option("--max-evals", fa.max_evals, "Evaluations per start")->capture_default_str();
  fi->add_option("--out", fa.out, "Fit result file (default: stdout)");
  fi->add_option("--params-out", fa.params_out, "Also write the estimate as a parameter file");

  BootstrapArgs ba;
  auto* bo = app.add_subcommand("bootstrap", "Parametric bootstrap of the estimator");
  bo->add_option("--params", ba.params, "Parameter file of the model to resample")->required();
  ba.grid.add(bo, true);
  bo->add_option("--replicates", ba.replicates, "Number of replicates")->capture_default_str();
  bo->add_option("--half-width", ba.half_width, "Neighbourhood half width")->capture_default_str();
  bo->add_option("--starts", ba.starts, "Optimizer starts per replicate")->capture_default_str();
  bo->add_option("--seed", ba.seed, "Random seed (default: params file seed, else 0)");
  bo->add_option("--max-evals", ba.max_evals, "Evaluations per start")->capture_default_str();
  bo->add_option("--out", ba.out, "Output prefix: <out>_<k>.fit and <out>_summary.txt")
      ->required();

  KrigeArgs ka;
  auto* kr = app.add_subcommand("krige", "Kriging and conditional simulation on a grid");
  kr->add_option("--params", ka.params, "Parameter file")->required();
  kr->add_option("--obs", ka.obs, "Observation CSV (var,x,y,value,noise_sd)")->required();
  ka.grid.add(kr, true);
  kr->add_option("--vars", ka.vars, "Comma-separated target variables")->capture_default_str();
  kr->add_option("--out", ka.out, "Grid file for the kriging mean")->required();
  kr->add_option("--sd-out", ka.sd_out, "Grid file for the kriging standard deviation");
  kr->add_option("--realizations", ka.realizations, "Conditional realizations to draw")
      ->capture_default_str();
  kr->add_option("--cond-out", ka.cond_out, "Prefix for conditional realizations");
  kr->add_option("--seed", ka.seed, "Random seed (default: params file seed, else 0)");

  ValidateArgs va;
  auto* vl = app.add_subcommand("validate", "Check positive definiteness of a model");
  vl->add_option("--daley", va.daley, "Two-variable example: a=<value> lambda=<value>")
      ->expected(2);
  vl->add_flag("--hankel", va.hankel, "Use the two-dimensional spectrum for --daley");
  vl->add_option("--params", va.params, "Parameter file of the bivariate Matern model");

  TransformArgs ta;
  auto* tr = app.add_subcommand("transform", "Variance-stabilizing transform of a wind field");
  tr->add_option("--data", ta.data, "Grid file with u and v")->required();
  tr->add_option("--bandwidth", ta.bandwidth, "Gaussian kernel bandwidth")->required();
  tr->add_option("--c", ta.c, "Offset constant")->capture_default_str();
  tr->add_option("--out", ta.out, "Grid file for the transformed field")->required();
  tr->add_option("--ghat-out", ta.ghat_out, "Grid file for the smoothed energy");
  tr->add_option("--qq-out", ta.qq_out, "Prefix for QQ data <prefix>_<var>.txt");
  tr->add_option("--error-var", ta.error_var, "Report the transform error of psi or chi");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const int previous = omp_get_max_threads();
  if (threads > 0) omp_set_num_threads(threads);
  int code = kExitOk;
  try {
    if (*sim) code = cmd_simulate(sa, out);
    else if (*fi) code = cmd_fit(fa, out);
    else if (*bo) code = cmd_bootstrap(ba, out);
    else if (*kr) code = cmd_krige(ka, out);
    else if (*vl) code = cmd_validate(va, out);
    else if (*tr) code = cmd_transform(ta, out, err);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    code = kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    code = kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    code = kExitNumeric;
  }
  omp_set_num_threads(previous);
  return code;
}

}  // namespace hgrf
