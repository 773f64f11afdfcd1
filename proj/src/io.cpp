#include "rg/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "rg/coeffs.hpp"
#include "rg/errors.hpp"
#include "rg/flow_table.hpp"
#include "rg/symbolic.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace rg {

namespace {

using namespace sym;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  int r = 0;
  try {
    r = std::stoi(v, &used);
  } catch (const std::exception&) {
    throw config_error(key + ": expected integer, got '" + v + "'");
  }
  if (used != v.size())
    throw config_error(key + ": expected integer, got '" + v + "'");
  return r;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double r = 0;
  try {
    r = std::stod(v, &used);
  } catch (const std::exception&) {
    throw config_error(key + ": expected number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(r))
    throw config_error(key + ": expected finite number, got '" + v + "'");
  return r;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const std::string& part : split(v, ','))
    out.push_back(parse_double(key, trim(part)));
  return out;
}

std::vector<long> parse_long_list(const std::string& key, const std::string& v) {
  std::vector<long> out;
  for (const std::string& part : split(v, ',')) {
    const std::string p = trim(part);
    std::size_t used = 0;
    long r = 0;
    try {
      r = std::stol(p, &used);
    } catch (const std::exception&) {
      throw config_error(key + ": expected integer list, got '" + v + "'");
    }
    if (used != p.size())
      throw config_error(key + ": expected integer list, got '" + v + "'");
    out.push_back(r);
  }
  return out;
}

void set_key(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "d") c.d = parse_int(key, value);
  else if (key == "L") c.L = parse_int(key, value);
  else if (key == "N") c.N = parse_int(key, value);
  else if (key == "m2") c.m2 = parse_double_list(key, value);
  else if (key == "window_family") c.window_family = value;
  else if (key == "window_tmin") c.window_tmin = parse_double(key, value);
  else if (key == "window_tmax") c.window_tmax = parse_double(key, value);
  else if (key == "window_shape") c.window_shape = parse_double(key, value);
  else if (key == "window_grid") c.window_grid = parse_int(key, value);
  else if (key == "zero_mode") c.zero_mode = value;
  else if (key == "sign_flag") c.sign_flag = value;
  else if (key == "ab_offset")
    // empty list = derive the default offset from the dimension
    c.ab_offset = value.empty() ? std::vector<long>{}
                                : parse_long_list(key, value);
  else if (key == "g0") c.g0 = parse_double(key, value);
  else if (key == "nu0") c.nu0 = parse_double(key, value);
  else if (key == "y0") c.y0 = parse_double(key, value);
  else if (key == "z0") c.z0 = parse_double(key, value);
  else if (key == "lam_a0") c.lam_a0 = parse_double(key, value);
  else if (key == "lam_b0") c.lam_b0 = parse_double(key, value);
  else if (key == "q_a0") c.q_a0 = parse_double(key, value);
  else if (key == "q_b0") c.q_b0 = parse_double(key, value);
  else if (key == "j_begin") c.j_begin = parse_int(key, value);
  else if (key == "j_end") c.j_end = parse_int(key, value);
  else if (key == "omega") c.omega = parse_double(key, value);
  else if (key == "tol_closure") c.tol_closure = parse_double(key, value);
  else if (key == "tol_decay") c.tol_decay = parse_double(key, value);
  else if (key == "tol_roundtrip") c.tol_roundtrip = parse_double(key, value);
  else if (key == "out_dir") c.out_dir = value;
  else if (key == "plot_input") c.plot_input = value;
  else if (key == "plot_output") c.plot_output = value;
  else throw config_error("unknown config key '" + key + "'");
}

std::vector<long> effective_ab_offset(const RunConfig& c) {
  if (!c.ab_offset.empty()) return c.ab_offset;
  std::vector<long> def(static_cast<std::size_t>(c.d), 0);
  def[0] = 4;
  return def;
}

int effective_j_end(const RunConfig& c) {
  return c.j_end < 0 ? c.N - 1 : c.j_end;
}

ZeroMode zero_mode_of(const RunConfig& c) {
  return c.zero_mode == "omit" ? ZeroMode::omit : ZeroMode::unset;
}

// Canonical serialisation; the hash covers every key that influences
// computed values, path keys are appended only when include_paths is set.
std::string canonical_lines(const RunConfig& c, bool include_paths) {
  std::ostringstream out;
  auto put = [&out](const std::string& k, const std::string& v) {
    out << k << "=" << v << "\n";
  };
  auto join_d = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
      s += (i ? "," : "") + format_full(v[i]);
    return s;
  };
  auto join_l = [](const std::vector<long>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
      s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  put("d", std::to_string(c.d));
  put("L", std::to_string(c.L));
  put("N", std::to_string(c.N));
  put("m2", join_d(c.m2));
  put("window_family", c.window_family);
  put("window_tmin", format_full(c.window_tmin));
  put("window_tmax", format_full(c.window_tmax));
  put("window_shape", format_full(c.window_shape));
  put("window_grid", std::to_string(c.window_grid));
  put("zero_mode", c.zero_mode);
  put("sign_flag", c.sign_flag);
  put("ab_offset", join_l(c.ab_offset));
  put("g0", format_full(c.g0));
  put("nu0", format_full(c.nu0));
  put("y0", format_full(c.y0));
  put("z0", format_full(c.z0));
  put("lam_a0", format_full(c.lam_a0));
  put("lam_b0", format_full(c.lam_b0));
  put("q_a0", format_full(c.q_a0));
  put("q_b0", format_full(c.q_b0));
  put("j_begin", std::to_string(c.j_begin));
  put("j_end", std::to_string(c.j_end));
  put("omega", format_full(c.omega));
  put("tol_closure", format_full(c.tol_closure));
  put("tol_decay", format_full(c.tol_decay));
  put("tol_roundtrip", format_full(c.tol_roundtrip));
  if (include_paths) {
    put("out_dir", c.out_dir);
    put("plot_input", c.plot_input);
    put("plot_output", c.plot_output);
  }
  return out.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw config_error("cannot open output file " + path.string());
  f << content;
  if (!f) throw config_error("failed writing " + path.string());
}

void write_json_file(const fs::path& path, const ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

std::string mass_prefix(std::size_t i, std::size_t total) {
  return total > 1 ? "m" + std::to_string(i) + "_" : "";
}

fs::path prepare_out_dir(const RunConfig& c) {
  fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw config_error("cannot create output directory " + dir.string());
  return dir;
}

ordered_json window_json(const RunConfig& c) {
  ordered_json w;
  w["family"] = c.window_family;
  w["tmin"] = c.window_tmin;
  w["tmax"] = c.window_tmax;
  w["shape"] = c.window_shape;
  w["grid"] = c.window_grid;
  return w;
}

ScaleDecomposition build_for(const RunConfig& c, double mass) {
  TorusSpec spec = make_spec(c.d, c.L, c.N);
  WindowProfile win = make_window(c.window_tmin, c.window_tmax, c.window_shape,
                                  c.window_grid, c.window_family);
  ScaleDecomposition dec = build_decomposition(spec, mass, win, zero_mode_of(c));
  dec.signflag = c.sign_flag == "literal" ? LapSign::literal
                                          : LapSign::positive_spectrum;
  return dec;
}

int cmd_decompose(const RunConfig& c, const std::string& hash) {
  fs::path dir = prepare_out_dir(c);
  for (std::size_t i = 0; i < c.m2.size(); ++i) {
    const double mass = c.m2[i];
    const std::string pfx = mass_prefix(i, c.m2.size());
    ScaleDecomposition dec = build_for(c, mass);

    ordered_json manifest;
    manifest["config_hash"] = hash;
    manifest["format"] = "RFK1";
    manifest["spec"] = {{"d", dec.spec.d}, {"L", dec.spec.L},
                        {"N", dec.spec.N}, {"M", dec.spec.M}};
    manifest["mass"] = mass;
    manifest["zero_mode"] = c.zero_mode;
    manifest["sign_flag"] = c.sign_flag;
    manifest["window"] = window_json(c);

    ordered_json scales = ordered_json::array();
    for (int j = 1; j <= dec.spec.N - 1; ++j) {
      const std::string name = pfx + "slice_" + std::to_string(j) + ".rfk";
      dump_kernel(dec.slice(j), mass, (dir / name).string());
      ordered_json entry;
      entry["j"] = j;
      entry["file"] = name;
      entry["empty"] = static_cast<bool>(dec.empty_slice[static_cast<std::size_t>(j - 1)]);
      scales.push_back(entry);
      std::cout << "wrote " << (dir / name).string() << "\n";
    }
    manifest["scales"] = scales;

    const std::string rem = pfx + "remainder.rfk";
    dump_kernel(dec.remainder, mass, (dir / rem).string());
    std::cout << "wrote " << (dir / rem).string() << "\n";
    manifest["remainder"] = rem;
    manifest["warnings"] = dec.warnings;

    write_json_file(dir / (pfx + "manifest.json"), manifest);
    std::cout << "wrote " << (dir / (pfx + "manifest.json")).string() << "\n";
  }
  return 0;
}

int cmd_coeffs(const RunConfig& c, const std::string& hash) {
  fs::path dir = prepare_out_dir(c);
  const std::vector<long> ab = effective_ab_offset(c);
  for (std::size_t i = 0; i < c.m2.size(); ++i) {
    const double mass = c.m2[i];
    const std::string pfx = mass_prefix(i, c.m2.size());
    ScaleDecomposition dec = build_for(c, mass);
    const int N = dec.spec.N;

    std::vector<RawMoments> raws;
    for (int j = 0; j <= N; ++j)
      raws.push_back(raw_moments(dec, j, ab, /*last_scale=*/j >= N - 1));

    std::ostringstream csv;
    csv << "# config_hash=" << hash << "\n";
    csv << "# mass=" << format_full(mass) << "\n";
    csv << "j,beta,theta,etap,xip,pip,sigma,zeta,omega,eta,xi,pi,"
           "w1,w2,w3,wss,w2ss,w3ss,wdw1,wdwss,gwss,wbar1,wbarss,C00,Cab\n";
    std::vector<FlowCoefficients> fcs;
    for (int j = 0; j <= N - 1; ++j) {
      const RawMoments& mj = raws[static_cast<std::size_t>(j)];
      FlowCoefficients fc = greek_coefficients(
          mj, raws[static_cast<std::size_t>(j) + 1], j, dec.spec.L);
      fcs.push_back(fc);
      csv << j;
      for (double v : {fc.beta, fc.theta, fc.etap, fc.xip, fc.pip, fc.sigma,
                       fc.zeta, fc.omega, fc.eta, fc.xi, fc.pi, mj.w1, mj.w2,
                       mj.w3, mj.wss, mj.w2ss, mj.w3ss, mj.wdw1, mj.wdwss,
                       mj.gwss, fc.wbar1, fc.wbarss, mj.C00, mj.Cab})
        csv << "," << format_full(v);
      csv << "\n";
    }
    write_text_file(dir / (pfx + "coefficients.csv"), csv.str());
    std::cout << "wrote " << (dir / (pfx + "coefficients.csv")).string() << "\n";

    std::vector<double> beta_seq;
    for (const FlowCoefficients& fc : fcs) beta_seq.push_back(fc.beta);
    ScalePair sp = scales(mass, dec.spec.L, beta_seq, c.omega);
    AssumptionReport ar = check_assumptions(fcs, sp.j_Omega, c.omega, 1.0);

    ordered_json sj;
    sj["config_hash"] = hash;
    sj["mass"] = mass;
    sj["beta"] = beta_seq;
    // the infinite-volume estimate needs several populated scales;
    // report what is available and note when extrapolation is impossible
    try {
      BetaLimit bl = beta_limit(dec);
      sj["usable"] = bl.usable;
      sj["extrapolated"] = bl.extrapolated;
      sj["reference"] = bl.reference;
    } catch (const std::exception& e) {
      sj["extrapolation_note"] = e.what();
    }
    sj["j_m"] = sp.j_m;
    sj["j_Omega"] = sp.j_Omega;
    sj["assumptions"] = {{"a1_count", ar.a1_count}, {"a2_theta", ar.a2_theta},
                         {"a2_eta", ar.a2_eta},     {"a2_xi", ar.a2_xi},
                         {"a2_omega", ar.a2_omega}, {"a2_pi", ar.a2_pi}};
    write_json_file(dir / (pfx + "scales.json"), sj);
    std::cout << "wrote " << (dir / (pfx + "scales.json")).string() << "\n";
  }
  return 0;
}

int cmd_flow(const RunConfig& c, const std::string& hash) {
  fs::path dir = prepare_out_dir(c);
  const double mass = c.m2.front();
  const std::vector<long> ab = effective_ab_offset(c);
  ScaleDecomposition dec = build_for(c, mass);

  CouplingVector V0;
  V0.g = c.g0;
  V0.nu = c.nu0;
  V0.y = c.y0;
  V0.z = c.z0;
  V0.lam_a = c.lam_a0;
  V0.lam_b = c.lam_b0;
  V0.q_a = c.q_a0;
  V0.q_b = c.q_b0;

  const int j_end = effective_j_end(c);
  Trajectory tr = iterate_flow(V0, dec, c.j_begin, j_end, ab);

  std::ostringstream csv;
  csv << "# config_hash=" << hash << "\n";
  csv << "# mass=" << format_full(mass) << "\n";
  csv << "j,g,nu,y,z,lam_a,lam_b,q_a,q_b,mu,z0,"
         "gbar,zbar,mubar,residual_g,residual_z,residual_mu\n";
  double max_res = 0;
  for (const TrajectoryRow& r : tr.rows) {
    csv << r.j;
    for (double v : {r.V.g, r.V.nu, r.V.y, r.V.z, r.V.lam_a, r.V.lam_b,
                     r.V.q_a, r.V.q_b, r.B.mu, r.B.z0, r.T.g, r.T.z, r.T.mu,
                     r.residual.g, r.residual.z, r.residual.mu})
      csv << "," << format_full(v);
    csv << "\n";
    for (double v : {r.residual.g, r.residual.z, r.residual.mu})
      max_res = std::max(max_res, std::abs(v));
  }
  write_text_file(dir / "trajectory.csv", csv.str());
  std::cout << "wrote " << (dir / "trajectory.csv").string() << "\n";

  ordered_json sj;
  sj["config_hash"] = hash;
  sj["mass"] = mass;
  sj["j_begin"] = c.j_begin;
  sj["j_end"] = j_end;
  sj["j_ab"] = coalescence_scale(ab, dec.spec.L);
  sj["rows"] = tr.rows.size();
  if (!tr.rows.empty()) {
    const CouplingVector& V = tr.rows.back().V;
    sj["final"] = {{"j", tr.rows.back().j},
                   {"g", V.g},       {"nu", V.nu},      {"y", V.y},
                   {"z", V.z},       {"lam_a", V.lam_a}, {"lam_b", V.lam_b},
                   {"q_a", V.q_a},   {"q_b", V.q_b}};
  }
  sj["gbar_monotone"] = tr.gbar_monotone;
  sj["gbar_comparable"] = tr.gbar_comparable;
  sj["bulk_gap_g"] = tr.bulk_gap_g;
  sj["bulk_gap_mu"] = tr.bulk_gap_mu;
  sj["bulk_gap_z0"] = tr.bulk_gap_z0;
  sj["max_residual"] = max_res;
  sj["notes"] = tr.notes;
  write_json_file(dir / "flow_summary.json", sj);
  std::cout << "wrote " << (dir / "flow_summary.json").string() << "\n";
  return 0;
}

std::string phase_name(Phase p) {
  return p == Phase::below_jab ? "below_jab" : "at_or_above_jab";
}

int cmd_derive(const RunConfig& c, const std::string& hash) {
  fs::path dir = prepare_out_dir(c);

  std::ostringstream txt;
  txt << "# config_hash=" << hash << "\n";
  ordered_json tables;
  tables["config_hash"] = hash;
  ordered_json phases;
  for (Phase phase : {Phase::below_jab, Phase::at_or_above_jab}) {
    FlowTable t = derive_flow_table(phase);
    txt << "phase " << phase_name(phase) << "\n";
    ordered_json rows;
    for (const std::string& name : kFlowRowOrder) {
      const Poly& p = t.rows.at(name);
      txt << "  " << name << "_pt = " << p.str() << "\n";
      ordered_json terms = ordered_json::array();
      for (const auto& [mono, coeff] : p.terms()) {
        ordered_json term;
        std::ostringstream cs;
        cs << coeff;
        term["coeff"] = cs.str();
        ordered_json m;
        for (const auto& [sym, pow] : mono) m[sym] = pow;
        term["monomial"] = m;
        terms.push_back(term);
      }
      rows[name] = terms;
    }
    phases[phase_name(phase)] = rows;
  }
  tables["phases"] = phases;

  write_text_file(dir / "flow_table.txt", txt.str());
  std::cout << "wrote " << (dir / "flow_table.txt").string() << "\n";
  write_json_file(dir / "flow_table.json", tables);
  std::cout << "wrote " << (dir / "flow_table.json").string() << "\n";
  return 0;
}

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

int cmd_verify(const RunConfig& c, const std::string& hash) {
  fs::path dir = prepare_out_dir(c);
  const std::vector<long> ab = effective_ab_offset(c);
  std::vector<CheckResult> results;

  auto run_check = [&results](const std::string& name, auto&& fn) {
    CheckResult r;
    r.name = name;
    try {
      r.detail = fn(); // empty detail = pass
      r.pass = r.detail.empty();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = e.what();
    }
    results.push_back(r);
  };

  run_check("derived flow table matches fixed table", []() -> std::string {
    for (Phase phase : {Phase::below_jab, Phase::at_or_above_jab}) {
      std::string diff =
          compare_tables(derive_flow_table(phase), hardcoded_flow_table(phase));
      if (!diff.empty()) return phase_name(phase) + ": " + diff;
    }
    return "";
  });

  run_check("supersymmetry annihilates local monomials", []() -> std::string {
    Expr basis = tau('x') + tau2('x') + tau_nn('x') + tau_lap('x');
    if (!apply_Q(basis).is_zero()) return "residual after pairing map";
    return "";
  });

  std::vector<ScaleDecomposition> decs;
  for (double mass : c.m2) decs.push_back(build_for(c, mass));

  for (std::size_t i = 0; i < decs.size(); ++i) {
    const double mass = c.m2[i];
    run_check("decomposition closure at m2=" + format_full(mass),
              [&, i]() -> std::string {
                const ScaleDecomposition& dec = decs[i];
                Kernel full =
                    green_kernel(dec.spec, dec.m2, zero_mode_of(c));
                double num = 0, den = 0;
                for (std::size_t k = 0; k < full.v.size(); ++k) {
                  double sum = dec.remainder.v[k];
                  for (const Kernel& s : dec.slices) sum += s.v[k];
                  num = std::max(num, std::abs(sum - full.v[k]));
                  den = std::max(den, std::abs(full.v[k]));
                }
                double rel = den > 0 ? num / den : num;
                if (rel > c.tol_closure)
                  return "relative sup deviation " + format_full(rel) +
                         " exceeds " + format_full(c.tol_closure);
                return "";
              });
  }

  run_check("slice decay beyond its range", [&]() -> std::string {
    const ScaleDecomposition& dec = decs.front();
    std::string bad;
    for (int j = 2; j <= std::min(4, dec.spec.N - 1); ++j) {
      RangeReport rr = range_profile(dec, j);
      if (rr.ratio > c.tol_decay)
        bad += " j=" + std::to_string(j) + " ratio=" + format_full(rr.ratio);
    }
    return bad.empty() ? "" : "ratios above " + format_full(c.tol_decay) + bad;
  });

  run_check("coordinate change round-trip", [&]() -> std::string {
    // pick the mass and scale where the quadratic part of T is largest,
    // so the inverse is actually exercised (massless runs have nearly
    // vanishing moments at frequency zero and an almost-identity T)
    FlowCoefficients fc;
    bool first = true;
    for (const ScaleDecomposition& dec : decs) {
      const int N = dec.spec.N;
      for (int j = 0; j <= N - 1; ++j) {
        RawMoments mj = raw_moments(dec, j, ab, j >= N - 1);
        RawMoments mj1 = raw_moments(dec, j + 1, ab, j + 1 >= N - 1);
        FlowCoefficients cand = greek_coefficients(mj, mj1, j, dec.spec.L);
        if (first || std::abs(cand.wbar1) + std::abs(cand.wbarss) >
                         std::abs(fc.wbar1) + std::abs(fc.wbarss))
          fc = cand;
        first = false;
      }
    }
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    double worst = 0;
    for (int k = 0; k < 200; ++k) {
      BulkVector B{u(rng), u(rng), u(rng)};
      TransformedVector t = transform_T(B, fc);
      BulkVector back = invert_T(t, fc);
      worst = std::max({worst, std::abs(back.g - B.g),
                        std::abs(back.mu - B.mu), std::abs(back.z0 - B.z0)});
    }
    if (worst > c.tol_roundtrip)
      return "max deviation " + format_full(worst) + " exceeds " +
             format_full(c.tol_roundtrip);
    return "";
  });

  ordered_json report;
  report["config_hash"] = hash;
  ordered_json checks = ordered_json::array();
  bool all_pass = true;
  for (const CheckResult& r : results) {
    std::cout << (r.pass ? "PASS: " : "FAIL: ") << r.name;
    if (!r.pass && !r.detail.empty()) std::cout << " (" << r.detail << ")";
    std::cout << "\n";
    ordered_json cj;
    cj["name"] = r.name;
    cj["pass"] = r.pass;
    cj["detail"] = r.detail;
    checks.push_back(cj);
    all_pass = all_pass && r.pass;
  }
  report["checks"] = checks;
  report["all_pass"] = all_pass;
  write_json_file(dir / "verify_report.json", report);
  std::cout << "wrote " << (dir / "verify_report.json").string() << "\n";
  return all_pass ? 0 : 1;
}

void export_plotdata_impl(const std::string& input_csv,
                          const std::string& output_csv,
                          const std::string& fallback_hash) {
  std::ifstream in(input_csv, std::ios::binary);
  if (!in) throw config_error("plotdata input not found: " + input_csv);

  std::string hash_line;
  std::string header;
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# config_hash=", 0) == 0) hash_line = line;
      continue;
    }
    if (!header_seen) {
      header = line;
      header_seen = true;
      continue;
    }
    rows.push_back(split(line, ','));
  }
  if (!header_seen)
    throw config_error("plotdata input has no header row: " + input_csv);

  std::vector<std::string> cols = split(header, ',');
  int j_col = -1;
  for (std::size_t i = 0; i < cols.size(); ++i)
    if (cols[i] == "j") j_col = static_cast<int>(i);
  if (j_col < 0)
    throw config_error("plotdata input lacks a j column: " + input_csv);
  for (const auto& r : rows)
    if (r.size() != cols.size())
      throw config_error("plotdata input has a malformed row: " + input_csv);

  std::ostringstream out;
  if (!hash_line.empty())
    out << hash_line << "\n";
  else if (!fallback_hash.empty())
    out << "# config_hash=" << fallback_hash << "\n";
  out << "series,j,value\n";
  for (std::size_t ci = 0; ci < cols.size(); ++ci) {
    if (static_cast<int>(ci) == j_col) continue;
    for (const auto& r : rows)
      out << cols[ci] << "," << r[static_cast<std::size_t>(j_col)] << ","
          << r[ci] << "\n";
  }
  write_text_file(output_csv, out.str());
}

int cmd_plotdata(const RunConfig& c, const std::string& hash) {
  if (c.plot_input.empty())
    throw config_error("plotdata requires plot_input");
  if (c.plot_output.empty())
    throw config_error("plotdata requires plot_output");
  export_plotdata_impl(c.plot_input, c.plot_output, hash);
  std::cout << "wrote " << c.plot_output << "\n";
  return 0;
}

} // namespace

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void validate(const RunConfig& c) {
  if (c.d < 1 || c.d > 6) throw config_error("d must be in 1..6");
  if (c.L < 2) throw config_error("L must be at least 2");
  if (c.N < 1) throw config_error("N must be at least 1");
  double sites = std::pow(static_cast<double>(c.L), c.d * c.N);
  if (sites > 6.5e7)
    throw config_error("lattice too large: L^(d*N) exceeds the memory budget");
  if (c.m2.empty()) throw config_error("m2 needs at least one value");
  for (double m : c.m2)
    if (m < 0) throw config_error("m2 entries must be nonnegative");
  if (c.window_family != "bump")
    throw config_error("window_family: only 'bump' is available");
  if (!(c.window_tmin > 0) || !(c.window_tmax > c.window_tmin))
    throw config_error("window requires 0 < window_tmin < window_tmax");
  if (!(c.window_shape > 0)) throw config_error("window_shape must be positive");
  if (c.window_grid < 16) throw config_error("window_grid must be at least 16");
  if (c.zero_mode != "omit" && c.zero_mode != "unset")
    throw config_error("zero_mode must be omit or unset");
  for (double m : c.m2)
    if (m == 0 && c.zero_mode != "omit")
      throw config_error("m2=0 requires zero_mode=omit");
  if (c.sign_flag != "positive_spectrum" && c.sign_flag != "literal")
    throw config_error("sign_flag must be positive_spectrum or literal");
  if (!c.ab_offset.empty() &&
      c.ab_offset.size() != static_cast<std::size_t>(c.d))
    throw config_error("ab_offset needs exactly d entries");
  const int j_end = effective_j_end(c);
  if (c.j_begin < 0 || c.j_begin > j_end || j_end > c.N - 1)
    throw config_error("scale range requires 0 <= j_begin <= j_end <= N-1");
  if (!(c.omega > 0)) throw config_error("omega must be positive");
  if (!(c.tol_closure > 0) || !(c.tol_decay > 0) || !(c.tol_roundtrip > 0))
    throw config_error("tolerances must be positive");
  if (c.out_dir.empty()) throw config_error("out_dir must not be empty");
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hashpos = line.find('#');
    if (hashpos != std::string::npos) line = line.substr(0, hashpos);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("line " + std::to_string(lineno) +
                         ": expected key=value, got '" + line + "'");
    set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw config_error("config file not found: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw config_error("override expected key=value, got '" + assignment + "'");
  set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string config_text(const RunConfig& cfg) {
  return canonical_lines(cfg, /*include_paths=*/true);
}

std::string config_hash(const RunConfig& cfg) {
  const std::string s = canonical_lines(cfg, /*include_paths=*/false);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

void export_plotdata(const std::string& input_csv,
                     const std::string& output_csv) {
  export_plotdata_impl(input_csv, output_csv, "");
}

int run_command(const std::string& subcommand, const RunConfig& cfg) {
  RunConfig c = cfg;
  validate(c);
  const std::string hash = config_hash(c);
  if (subcommand == "decompose") return cmd_decompose(c, hash);
  if (subcommand == "coeffs") return cmd_coeffs(c, hash);
  if (subcommand == "flow") return cmd_flow(c, hash);
  if (subcommand == "derive") return cmd_derive(c, hash);
  if (subcommand == "verify") return cmd_verify(c, hash);
  if (subcommand == "plotdata") return cmd_plotdata(c, hash);
  throw config_error("unknown subcommand '" + subcommand + "'");
}

} // namespace rg
