#pragma once

#include <string>
#include <vector>

#include "rg/decomp.hpp"
#include "rg/flow.hpp"

namespace rg {

// Run parameters shared by every subcommand.  Parsed from a flat
// key=value file; every key has a default, unknown keys are rejected.
struct RunConfig {
  int d = 4;
  int L = 2;
  int N = 5;
  std::vector<double> m2{0.0};

  std::string window_family = "bump";
  double window_tmin = 8.0;
  double window_tmax = 16.0;
  double window_shape = 0.5;
  int window_grid = 1 << 14;

  std::string zero_mode = "omit";            // omit | unset
  std::string sign_flag = "positive_spectrum"; // positive_spectrum | literal

  std::vector<long> ab_offset; // empty: (4, 0, ..., 0)

  double g0 = 0.02;
  double nu0 = 0.0;
  double y0 = 0.0;
  double z0 = 0.0;
  double lam_a0 = 1.0;
  double lam_b0 = 1.0;
  double q_a0 = 0.0;
  double q_b0 = 0.0;

  int j_begin = 0;
  int j_end = -1; // -1: N-1
  double omega = 2.0;

  double tol_closure = 1e-9;
  double tol_decay = 1e-2;
  double tol_roundtrip = 1e-12;

  // Path keys; excluded from the config hash.
  std::string out_dir = "out";
  std::string plot_input;  // plotdata: source CSV (trajectory or coefficients)
  std::string plot_output; // plotdata: destination CSV
};

// Parse key=value lines ('#' starts a comment, blank lines ignored,
// later assignments win).  Throws config_error on unknown keys or
// malformed values.  The result is validated: every value satisfies the
// preconditions of the module that will consume it.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

// Apply a single "key=value" override to an already-parsed config.
void apply_override(RunConfig& cfg, const std::string& assignment);

// Check every precondition that the compute modules rely on; throws
// config_error describing the first violation.  Derived defaults
// (ab_offset, j_end) are resolved at use time, not stored.
void validate(const RunConfig& cfg);

// 16 hex digits identifying every value that influences computed output
// (path keys out_dir / plot_input / plot_output are excluded).
std::string config_hash(const RunConfig& cfg);

// Canonical key=value serialisation, one line per key in fixed order.
std::string config_text(const RunConfig& cfg);

// Shortest decimal form that round-trips a double (17 significant digits).
std::string format_full(double v);

// Long-format plot table (series,j,value) from a trajectory or
// coefficients CSV previously written by this tool.  Missing input is a
// config_error; an input with no data rows yields a header-only output.
void export_plotdata(const std::string& input_csv, const std::string& output_csv);

// Execute one subcommand (decompose | coeffs | flow | derive | verify |
// plotdata).  Returns 0 on success, 1 when `verify` found a failing
// check; config_error / numeric_error / verification_error propagate.
int run_command(const std::string& subcommand, const RunConfig& cfg);

} // namespace rg
