// Command-line front end: parses a flat key=value config, applies
// overrides, and dispatches to one subcommand.  Exit codes: 0 success,
// 1 verification failure, 2 config error, 3 numerical error.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rg/errors.hpp"
#include "rg/io.hpp"

namespace {

void emit_error_record(const std::string& kind, const std::string& message) {
  nlohmann::ordered_json rec;
  rec["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << rec.dump() << "\n";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"scale decomposition and second-order flow for the "
               "four-dimensional lattice Green function"};
  app.require_subcommand(1);

  struct SubOpts {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir;
  };
  std::map<std::string, SubOpts> opts;
  std::map<std::string, std::pair<std::string, std::string>> positionals;

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"decompose", "build the scale decomposition and dump per-scale kernels"},
      {"coeffs", "compute per-scale flow coefficients"},
      {"flow", "iterate the second-order flow equations"},
      {"derive", "derive the flow equations symbolically and emit them"},
      {"verify", "run self-checks with configurable tolerances"},
      {"plotdata", "re-export a trajectory or coefficients CSV as long-format "
                   "(series,j,value) rows"},
  };
  for (const auto& [name, desc] : subs) {
    CLI::App* sub = app.add_subcommand(name, desc);
    SubOpts& o = opts[name];
    sub->add_option("--config", o.config_path,
                    "key=value config file (defaults apply when omitted)");
    sub->add_option("--set", o.sets, "override a single key, e.g. --set N=6")
        ->take_all();
    sub->add_option("--out", o.out_dir, "output directory (out_dir key)");
    if (name == "plotdata") {
      auto& pos = positionals[name];
      sub->add_option("input", pos.first, "source CSV");
      sub->add_option("output", pos.second, "destination CSV");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error_record("config", e.what());
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  const SubOpts& o = opts[name];

  try {
    rg::RunConfig cfg;
    if (!o.config_path.empty()) cfg = rg::load_config(o.config_path);
    for (const std::string& s : o.sets) rg::apply_override(cfg, s);
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (name == "plotdata") {
      const auto& pos = positionals[name];
      if (!pos.first.empty()) cfg.plot_input = pos.first;
      if (!pos.second.empty()) cfg.plot_output = pos.second;
    }
    return rg::run_command(name, cfg);
  } catch (const rg::config_error& e) {
    emit_error_record("config", e.what());
    return 2;
  } catch (const rg::verification_error& e) {
    emit_error_record("verification", e.what());
    return 1;
  } catch (const rg::numeric_error& e) {
    emit_error_record("numeric", e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_error_record("internal", e.what());
    return 3;
  }
}
