// gkdvlab: a numerical laboratory for the focusing mass-critical gKdV
// equation u_t = -(u_xx + u^5)_x on a periodic box.
//
// Subcommands: verify, simulate, decompose, coercivity, report, sweep.
// Recorded outcomes (including departure and blow-up) exit 0; only usage
// and I/O errors exit nonzero.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gkdvlab/lab.hpp"

namespace {

using namespace gkdvlab;

void print_checks(const std::vector<CheckResult>& checks) {
  int failed = 0;
  for (const CheckResult& c : checks) {
    std::printf("%s  %-34s residual=%.3e  tol=%.1e\n",
                c.pass ? "PASS" : "FAIL", c.name.c_str(), c.residual,
                c.tolerance);
    if (!c.pass) ++failed;
  }
  if (failed == 0)
    std::printf("all %zu checks passed\n", checks.size());
  else
    std::printf("%d of %zu checks FAILED\n", failed, checks.size());
}

void print_report(const RunReport& report) {
  std::printf("outcome: %s\n", report.outcome.c_str());
  if (report.blow_up)
    std::printf("blow-up: t=%.6g sup=%.3e (%s)\n", report.blow_up->t,
                report.blow_up->sup, report.blow_up->reason.c_str());
  if (report.departure_time)
    std::printf("departure time: %.17g\n", *report.departure_time);
  std::printf("mass drift: %.3e   energy drift: %.3e\n", report.mass_drift,
              report.energy_drift);
  std::printf("mass gap: %.17g (%s)\n", report.mass_gap,
              report.mass_gap_sign.c_str());
  if (report.max_eps_l2)
    std::printf("max |eps|_2: %.3e\n", *report.max_eps_l2);
  if (report.envelope_c)
    std::printf("envelope constant: %.6g\n", *report.envelope_c);
  if (report.max_decay_ratio)
    std::printf("max decay ratio: %.6g\n", *report.max_decay_ratio);
  print_checks(report.checks);
  std::printf("report: %s/report.json\n", report.dir.c_str());
}

Field constraint_by_name(const Grid& grid, const std::string& name) {
  if (name == "Q") return q_profile(grid);
  return q_direction(grid, direction_from_name(name));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "numerical laboratory for the focusing quintic KdV equation\n"
      "u_t = -(u_xx + u^5)_x on a periodic box"};
  app.require_subcommand(1);

  // verify
  auto* verify = app.add_subcommand("verify", "run the identity battery");
  int verifyN = 4096;
  double verifyL = 100.0;
  verify->add_option("--N", verifyN, "grid size (default 4096)");
  verify->add_option("--L", verifyL, "box length (default 100)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run one scenario config");
  std::string configPath;
  simulate->add_option("config", configPath, "scenario config file")
      ->required();

  // decompose
  auto* decomposeCmd =
      app.add_subcommand("decompose", "decompose a field file");
  std::string fieldPath;
  double guessLambda = 0, guessX = 0;
  decomposeCmd->add_option("field", fieldPath, "field file")->required();
  auto* optLambda =
      decomposeCmd->add_option("--lambda", guessLambda, "initial scale guess");
  auto* optX =
      decomposeCmd->add_option("--x", guessX, "initial center guess");
  optLambda->needs(optX);
  optX->needs(optLambda);

  // coercivity
  auto* coercivity =
      app.add_subcommand("coercivity", "constrained quadratic-form extremum");
  int coN = 512;
  double coL = 50.0;
  std::string coConstraints = "Q,yLamQ";
  coercivity->add_option("--N", coN, "grid size (default 512, dense: <= 2048)");
  coercivity->add_option("--L", coL, "box length (default 50)");
  coercivity->add_option(
      "--constraints", coConstraints,
      "comma list from {Q, Qy, LamQ, yQy, yLamQ} (default Q,yLamQ)");

  // report
  auto* reportCmd =
      app.add_subcommand("report", "re-derive a run's analysis artifacts");
  std::string runDir;
  reportCmd->add_option("run-dir", runDir, "run directory")->required();

  // sweep
  auto* sweepCmd =
      app.add_subcommand("sweep", "run every *.cfg in a directory");
  std::string sweepDir;
  sweepCmd->add_option("config-dir", sweepDir, "directory of configs")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify) {
      VerifyOptions options;
      options.N = verifyN;
      options.L = verifyL;
      print_checks(verify_suite(options).checks);
      return 0;
    }

    if (*simulate) {
      const ScenarioConfig config = load_config(configPath);
      print_report(run_scenario(config));
      return 0;
    }

    if (*decomposeCmd) {
      const Field u = load_field(fieldPath);
      const Frame guess = (*optLambda) ? Frame{guessLambda, guessX}
                                       : auto_frame_guess(u);
      const Decomposition dec = decompose(u, guess);
      nlohmann::ordered_json j;
      j["lambda"] = dec.frame.lambda;
      j["x0"] = dec.frame.x0;
      j["converged"] = dec.converged;
      j["iterations"] = dec.iterations;
      j["rho1"] = dec.rho1;
      j["rho2"] = dec.rho2;
      j["eps_l2"] = l2_norm(dec.eps);
      j["eps_h1"] = h1_norm(dec.eps);
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*coercivity) {
      const Grid grid = make_grid(coL, coN);
      std::vector<Field> fields;
      std::vector<std::string> names;
      for (const std::string& name : detail::split_list(coConstraints)) {
        fields.push_back(constraint_by_name(grid, name));
        names.push_back(name);
      }
      const ConstrainedSpectrum spec =
          coercivity_estimate(grid, fields, coConstraints);
      nlohmann::ordered_json j;
      j["N"] = coN;
      j["L"] = coL;
      j["constraints"] = names;
      j["delta1"] = spec.delta1;
      j["extremal"] = spec.extremal;
      j["min"] = spec.min_value;
      j["max"] = spec.max_value;
      j["sign"] = to_string(spec.sign);
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*reportCmd) {
      const RunReport report = materialize_analysis(runDir);
      std::cout << report_to_json(report).dump(2) << "\n";
      return 0;
    }

    if (*sweepCmd) {
      const std::vector<SweepResult> results = sweep(sweepDir);
      bool anyError = false;
      for (const SweepResult& res : results) {
        if (res.ok)
          std::printf("%s: %s (%s)\n", res.file.c_str(), res.outcome.c_str(),
                      res.dir.c_str());
        else {
          std::printf("%s: ERROR %s\n", res.file.c_str(), res.outcome.c_str());
          anyError = true;
        }
      }
      return anyError ? 2 : 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
