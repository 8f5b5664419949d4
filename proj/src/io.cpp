#include "hgrf/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hgrf/errors.hpp"

namespace hgrf {

namespace {

std::string at_line(const std::string& source, long line) {
  return source + ":" + std::to_string(line) + ": ";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strips a trailing comment and surrounding blanks.
std::string content(const std::string& line) {
  return trim(line.substr(0, line.find('#')));
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

long parse_long(const std::string& token, const std::string& where) {
  long v = 0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ParseError(where + "expected an integer, got '" + token + "'");
  return v;
}

void write_model(std::ostream& out, const std::string& prefix, const ModelParams& p) {
  out << prefix << "sigma_psi=" << format_double(p.sigma_psi) << '\n'
      << prefix << "sigma_chi=" << format_double(p.sigma_chi) << '\n'
      << prefix << "rho=" << format_double(p.rho) << '\n'
      << prefix << "nu=" << format_double(p.nu) << '\n'
      << prefix << "r1=" << format_double(p.r1) << '\n'
      << prefix << "r2=" << format_double(p.r2) << '\n'
      << prefix << "theta=" << format_double(p.theta) << '\n';
}

}  // namespace

std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general);
  if (ec != std::errc()) throw ConsistencyError("cannot format a floating-point value");
  return std::string(buf.data(), ptr);
}

double parse_double(const std::string& token, const std::string& where) {
  double v = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || token.empty())
    throw ParseError(where + "expected a number, got '" + token + "'");
  if (!std::isfinite(v)) throw ParseError(where + "value '" + token + "' is not finite");
  return v;
}

ParamsFile parse_params(std::istream& in, const std::string& source) {
  static const std::array<const char*, 7> required = {"sigma_psi", "sigma_chi", "rho", "nu",
                                                      "r1",        "r2",        "theta"};
  std::map<std::string, double> values;
  ParamsFile out;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string c = content(line);
    if (c.empty()) continue;
    const auto eq = c.find('=');
    if (eq == std::string::npos) throw ParseError(at_line(source, n) + "expected key=value");
    const std::string key = trim(c.substr(0, eq)), val = trim(c.substr(eq + 1));
    if (key == "seed") {
      const long s = parse_long(val, at_line(source, n));
      if (s < 0) throw ParseError(at_line(source, n) + "seed must be nonnegative");
      out.seed = static_cast<std::uint64_t>(s);
      continue;
    }
    bool known = false;
    for (const char* k : required) known = known || key == k;
    if (!known) throw ParseError(at_line(source, n) + "unknown key '" + key + "'");
    if (values.count(key)) throw ParseError(at_line(source, n) + "duplicate key '" + key + "'");
    values[key] = parse_double(val, at_line(source, n));
  }
  for (const char* k : required)
    if (!values.count(k)) throw ParseError(source + ": missing key '" + std::string(k) + "'");
  ModelParams& p = out.params;
  p.sigma_psi = values["sigma_psi"];
  p.sigma_chi = values["sigma_chi"];
  p.rho = values["rho"];
  p.nu = values["nu"];
  p.r1 = values["r1"];
  p.r2 = values["r2"];
  p.theta = values["theta"];
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ParseError(source + ": " + e.what());
  }
  return out;
}

ParamsFile read_params_file(const std::string& path) {
  std::ifstream in = open_in(path);
  return parse_params(in, path);
}

void write_params(std::ostream& out, const ModelParams& p, std::optional<std::uint64_t> seed) {
  write_model(out, "", p);
  if (seed) out << "seed=" << *seed << '\n';
}

RawGrid parse_grid(std::istream& in, const std::string& source) {
  std::string line;
  long n = 0;
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++n;
      if (!trim(line).empty()) return true;
    }
    return false;
  };
  if (!next()) throw ParseError(source + ": empty grid file");
  std::istringstream head(line);
  std::vector<std::string> tok;
  for (std::string t; head >> t;) tok.push_back(t);
  if (tok.empty() || tok[0] != "HGRF1")
    throw ParseError(at_line(source, n) + "missing HGRF1 format tag");
  if (tok.size() != 8)
    throw ParseError(at_line(source, n) + "header needs: HGRF1 nx ny ncomp dx dy x0 y0");
  RawGrid g;
  const std::string w = at_line(source, n);
  const long nx = parse_long(tok[1], w), ny = parse_long(tok[2], w), nc = parse_long(tok[3], w);
  if (nx < 2 || ny < 2 || nc < 1 || nx > 1000000 || ny > 1000000 || nc > 64)
    throw ParseError(w + "grid dimensions out of range");
  g.spec = {static_cast<int>(nx), static_cast<int>(ny), parse_double(tok[4], w),
            parse_double(tok[5], w), parse_double(tok[6], w), parse_double(tok[7], w)};
  try {
    g.spec.validate();
  } catch (const DomainError& e) {
    throw ParseError(w + e.what());
  }

  if (!next()) throw ParseError(source + ": missing component-name line");
  std::istringstream names(line);
  for (std::string t; names >> t;) g.names.push_back(t);
  if (static_cast<long>(g.names.size()) != nc)
    throw ParseError(at_line(source, n) + "expected " + std::to_string(nc) +
                     " component names, got " + std::to_string(g.names.size()));

  g.values.assign(nc, std::vector<double>(g.spec.size()));
  for (long c = 0; c < nc; ++c)
    for (long j = 0; j < ny; ++j) {
      if (!next())
        throw ParseError(source + ": file ends before row " + std::to_string(j) + " of component " +
                         g.names[c]);
      std::istringstream row(line);
      long i = 0;
      for (std::string t; row >> t; ++i) {
        if (i >= nx) throw ParseError(at_line(source, n) + "more than nx values in row");
        g.values[c][g.spec.index(static_cast<int>(i), static_cast<int>(j))] =
            parse_double(t, at_line(source, n));
      }
      if (i != nx)
        throw ParseError(at_line(source, n) + "expected " + std::to_string(nx) + " values, got " +
                         std::to_string(i));
    }
  if (next()) throw ParseError(at_line(source, n) + "unexpected data after the last row");
  return g;
}

void write_grid(std::ostream& out, const RawGrid& g) {
  const GridSpec& s = g.spec;
  out << "HGRF1 " << s.nx << ' ' << s.ny << ' ' << g.names.size() << ' ' << format_double(s.dx)
      << ' ' << format_double(s.dy) << ' ' << format_double(s.x0) << ' ' << format_double(s.y0)
      << '\n';
  for (std::size_t c = 0; c < g.names.size(); ++c) out << (c ? " " : "") << g.names[c];
  out << '\n';
  std::string row;
  for (const auto& comp : g.values)
    for (int j = 0; j < s.ny; ++j) {
      row.clear();
      for (int i = 0; i < s.nx; ++i) {
        if (i) row += ' ';
        row += format_double(comp[s.index(i, j)]);
      }
      out << row << '\n';
    }
}

GridField to_field(const RawGrid& g, const std::string& source) {
  std::vector<VariableId> vars;
  for (const std::string& name : g.names) {
    try {
      vars.push_back(parse_variable(name));
    } catch (const ParseError&) {
      throw ParseError(source + ": unknown component '" + name + "'");
    }
  }
  GridField f(g.spec, vars);
  f.values = g.values;
  return f;
}

RawGrid from_field(const GridField& f) {
  RawGrid g{f.spec, {}, f.values};
  for (VariableId v : f.components) g.names.emplace_back(to_string(v));
  return g;
}

RawGrid from_scalar(const ScalarField& f, const std::string& name) {
  return {f.spec, {name}, {f.values}};
}

GridField read_grid_file(const std::string& path) {
  std::ifstream in = open_in(path);
  return to_field(parse_grid(in, path), path);
}

void write_grid_file(const std::string& path, const GridField& f) {
  write_grid_file(path, from_field(f));
}

void write_grid_file(const std::string& path, const RawGrid& g) {
  std::ostringstream os;
  write_grid(os, g);
  write_text_file(path, os.str());
}

void write_fit(std::ostream& out, const FitResult& r) {
  out << "seed=" << r.seed << '\n'
      << "n_starts=" << r.n_starts << '\n'
      << "converged=" << (r.converged ? "true" : "false") << '\n'
      << "cl_value=" << format_double(r.cl_value) << '\n';
  write_model(out, "", r.params);
  out << "lambda=" << format_double(r.params.lambda()) << '\n';
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    const StartTrace& t = r.trace[k];
    const std::string pre = "start." + std::to_string(k) + ".";
    out << pre << "value=" << format_double(t.value) << '\n'
        << pre << "evals=" << t.evals << '\n'
        << pre << "converged=" << (t.converged ? "true" : "false") << '\n';
    write_model(out, pre + "initial.", t.start);
    write_model(out, pre + "final.", t.end);
  }
}

void write_bootstrap_summary(std::ostream& out, const BootstrapEnsemble& e) {
  std::size_t failed = 0;
  for (const std::string& f : e.failures) failed += f.empty() ? 0 : 1;
  out << "# replicates=" << e.replicates.size() << " failures=" << failed << '\n';
  out << "parameter truth min q1 median q3 max\n";
  const std::array<double, 6> truth = free_parameters(e.truth);
  const std::array<Quantiles, 6> q = summarize(e);
  for (std::size_t k = 0; k < 6; ++k)
    out << kFreeParameterNames[k] << ' ' << format_double(truth[k]) << ' '
        << format_double(q[k].min) << ' ' << format_double(q[k].q1) << ' '
        << format_double(q[k].median) << ' ' << format_double(q[k].q3) << ' '
        << format_double(q[k].max) << '\n';
}

std::vector<Observation> parse_observations(std::istream& in, const std::string& source) {
  std::vector<Observation> obs;
  std::string line;
  long n = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++n;
    const std::string c = content(line);
    if (c.empty()) continue;
    std::vector<std::string> f;
    std::istringstream cells(c);
    for (std::string t; std::getline(cells, t, ',');) f.push_back(trim(t));
    if (first && !f.empty() && f[0] == "var") {
      first = false;
      continue;
    }
    first = false;
    if (f.size() != 5)
      throw ParseError(at_line(source, n) + "expected 5 fields var,x,y,value,noise_sd, got " +
                       std::to_string(f.size()));
    Observation o;
    try {
      o.var = parse_variable(f[0]);
    } catch (const ParseError&) {
      throw ParseError(at_line(source, n) + "unknown variable '" + f[0] + "'");
    }
    const std::string w = at_line(source, n);
    o.x = parse_double(f[1], w);
    o.y = parse_double(f[2], w);
    o.value = parse_double(f[3], w);
    o.noise_sd = parse_double(f[4], w);
    if (o.noise_sd < 0.0) throw ParseError(w + "noise_sd must be nonnegative");
    obs.push_back(o);
  }
  return obs;
}

std::vector<Observation> read_observations_file(const std::string& path) {
  std::ifstream in = open_in(path);
  return parse_observations(in, path);
}

void write_observations(std::ostream& out, const std::vector<Observation>& obs) {
  out << "var,x,y,value,noise_sd\n";
  for (const Observation& o : obs)
    out << to_string(o.var) << ',' << format_double(o.x) << ',' << format_double(o.y) << ','
        << format_double(o.value) << ',' << format_double(o.noise_sd) << '\n';
}

void write_qq(std::ostream& out, const MarginalDiagnostics& d) {
  for (const auto& [theory, sample] : d.qq)
    out << format_double(theory) << ' ' << format_double(sample) << '\n';
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace hgrf
