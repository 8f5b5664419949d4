#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hgrf/grid.hpp"
#include "hgrf/kriging.hpp"
#include "hgrf/likelihood.hpp"
#include "hgrf/preprocessing.hpp"

namespace hgrf {

/// Shortest decimal string that reads back to the same double (at most 17 significant digits).
std::string format_double(double x);

/// Parses a complete token as a finite double; ParseError naming `where` otherwise.
double parse_double(const std::string& token, const std::string& where);

// ---- ParamsFile: key=value lines, '#' comments, blank lines ignored.

struct ParamsFile {
  ModelParams params;
  std::optional<std::uint64_t> seed;
};

/// Keys sigma_psi, sigma_chi, rho, nu, r1, r2, theta are required, seed is optional and
/// anything else is rejected. Errors are ParseError "source:line: ...".
ParamsFile parse_params(std::istream& in, const std::string& source);
ParamsFile read_params_file(const std::string& path);
void write_params(std::ostream& out, const ModelParams& p,
                  std::optional<std::uint64_t> seed = std::nullopt);

// ---- GridFile: "HGRF1 nx ny ncomp dx dy x0 y0", a line of component names, then for each
// component ny lines of nx values (row j = 0 first).

/// Grid data with free-form component names ("ghat" as well as the six variables).
struct RawGrid {
  GridSpec spec;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
};

RawGrid parse_grid(std::istream& in, const std::string& source);
void write_grid(std::ostream& out, const RawGrid& g);

/// Component names must be variable names; ParseError otherwise.
GridField to_field(const RawGrid& g, const std::string& source);
RawGrid from_field(const GridField& f);
RawGrid from_scalar(const ScalarField& f, const std::string& name);

GridField read_grid_file(const std::string& path);
void write_grid_file(const std::string& path, const GridField& f);
void write_grid_file(const std::string& path, const RawGrid& g);

// ---- FitResult: key=value, with one block of start.<k>.* keys per optimizer start.

void write_fit(std::ostream& out, const FitResult& r);

/// Box statistics of each free parameter, one row per parameter.
void write_bootstrap_summary(std::ostream& out, const BootstrapEnsemble& e);

// ---- Observation CSV: var,x,y,value,noise_sd with an optional header line.

std::vector<Observation> parse_observations(std::istream& in, const std::string& source);
std::vector<Observation> read_observations_file(const std::string& path);
void write_observations(std::ostream& out, const std::vector<Observation>& obs);

/// Two columns: normal quantile, standardized sample value.
void write_qq(std::ostream& out, const MarginalDiagnostics& d);

/// Throws IoError if the file cannot be written.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace hgrf
