#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "gkdvlab/lab.hpp"
#include "support/reference_values.hpp"

using namespace gkdvlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("gkdvlab_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(static_cast<bool>(out));
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(static_cast<bool>(in));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quick_run_block(const std::string& outDir) {
  return "[evolve]\ndt = 1e-3\nT = 0.02\nstride = 5\n[output]\ndir = " +
         outDir + "\n";
}

std::map<std::string, CheckResult> by_name(const RunReport& report) {
  std::map<std::string, CheckResult> out;
  for (const CheckResult& c : report.checks) out[c.name] = c;
  return out;
}

}  // namespace

TEST_CASE("load_config fills defaults from a minimal file") {
  const fs::path dir = fresh_dir("minimal");
  const fs::path cfgPath = dir / "min.cfg";
  write_text(cfgPath, "[recipe]\ntype = scaledQ\na = 0.99\n");
  const ScenarioConfig config = load_config(cfgPath.string());
  CHECK(config.L == 100.0);
  CHECK(config.N == 4096);
  CHECK(config.recipe == RecipeType::ScaledQ);
  CHECK(config.a == 0.99);
  CHECK(config.evolve.dt == 2e-4);
  CHECK(config.evolve.T == 1.0);
  CHECK(config.evolve.stride == 50);
  CHECK(config.delta == 0.1);
  CHECK_FALSE(config.monitors.virialJ);
  CHECK_FALSE(config.monitors.tailsEnabled);
  CHECK_FALSE(config.outputDirSet);
  CHECK(config.seed == 1);
  fs::remove_all(dir);
}

TEST_CASE("load_config reports parse and validation errors with context") {
  const fs::path dir = fresh_dir("badcfg");
  const auto path = [&](const std::string& name) {
    return (dir / name).string();
  };

  write_text(dir / "odd.cfg", "[grid]\nN = 15\n");
  CHECK_THROWS_WITH_AS(load_config(path("odd.cfg")), "N must be even",
                       std::invalid_argument);

  write_text(dir / "monitor.cfg", "[monitors]\nenable = virialX\n");
  CHECK_THROWS_WITH_AS(
      load_config(path("monitor.cfg")),
      doctest::Contains(
          "valid: virialJ, virialM, morawetz, tails, rates, massIdentity"),
      std::runtime_error);

  write_text(dir / "syntax.cfg", "# header\n[grid]\njunk line\n");
  CHECK_THROWS_WITH_AS(load_config(path("syntax.cfg")),
                       doctest::Contains("config line 3"), std::runtime_error);
  CHECK_THROWS_WITH_AS(load_config(path("syntax.cfg")),
                       doctest::Contains("expected key = value"),
                       std::runtime_error);

  write_text(dir / "key.cfg", "[grid]\nM = 3\n");
  CHECK_THROWS_WITH_AS(load_config(path("key.cfg")),
                       doctest::Contains("unknown key \"M\" in section [grid]"),
                       std::runtime_error);

  write_text(dir / "section.cfg", "[grid2]\nL = 100\n");
  CHECK_THROWS_WITH_AS(load_config(path("section.cfg")),
                       doctest::Contains("unknown section [grid2]"),
                       std::runtime_error);

  write_text(dir / "number.cfg", "[grid]\nL = wide\n");
  CHECK_THROWS_WITH_AS(load_config(path("number.cfg")),
                       doctest::Contains("invalid number \"wide\""),
                       std::runtime_error);

  write_text(dir / "dt.cfg", "[evolve]\ndt = -1e-3\n");
  CHECK_THROWS_WITH_AS(load_config(path("dt.cfg")), "dt must be positive",
                       std::runtime_error);

  write_text(dir / "recipe.cfg", "[recipe]\ntype = blowupQ\n");
  CHECK_THROWS_WITH_AS(
      load_config(path("recipe.cfg")),
      doctest::Contains("valid: scaledQ, soliton, perturbed, file"),
      std::runtime_error);

  write_text(dir / "dir.cfg", "[recipe]\ntype = perturbed\ndirection = Qz\n");
  CHECK_THROWS_WITH_AS(load_config(path("dir.cfg")),
                       doctest::Contains("valid: Qy, LamQ, yQy, yLamQ"),
                       std::runtime_error);

  CHECK_THROWS_WITH_AS(load_config(path("missing.cfg")),
                       doctest::Contains("cannot open config file"),
                       std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("config echo round-trips through JSON") {
  ScenarioConfig config;
  config.L = 50;
  config.N = 512;
  config.recipe = RecipeType::Perturbed;
  config.direction = "yLamQ";
  config.coefficient = 0.02;
  config.evolve.dt = 1e-3;
  config.evolve.T = 0.5;
  config.evolve.stride = 10;
  config.delta = 0.2;
  config.monitors.virialM = true;
  config.monitors.tailsEnabled = true;
  config.monitors.tails = {4.0, 7.5};
  config.monitors.morawetz = true;
  config.monitors.morawetz_R = 12.0;
  config.monitors.morawetz_center = -3.0;
  config.outputDir = "runs/echo";
  config.seed = 42;

  const ScenarioConfig back = config_from_json(config_to_json(config));
  CHECK(back.L == config.L);
  CHECK(back.N == config.N);
  CHECK(back.recipe == config.recipe);
  CHECK(back.direction == config.direction);
  CHECK(back.coefficient == config.coefficient);
  CHECK(back.evolve.dt == config.evolve.dt);
  CHECK(back.evolve.T == config.evolve.T);
  CHECK(back.evolve.stride == config.evolve.stride);
  CHECK(back.delta == config.delta);
  CHECK(back.monitors.virialM);
  CHECK_FALSE(back.monitors.virialJ);
  CHECK(back.monitors.morawetz);
  CHECK(back.monitors.morawetz_R == 12.0);
  CHECK(back.monitors.morawetz_center == -3.0);
  CHECK(back.monitors.tailsEnabled);
  CHECK(back.monitors.tails == config.monitors.tails);
  CHECK(back.outputDir == config.outputDir);
  CHECK(back.seed == config.seed);
}

TEST_CASE("environment override redirects the output directory") {
  const fs::path dir = fresh_dir("envcfg");
  const fs::path cfgPath = dir / "env.cfg";
  write_text(cfgPath, "[recipe]\ntype = scaledQ\na = 1\n[output]\ndir = x\n");
  setenv("GKDV_LAB_OUT", (dir / "redirected").c_str(), 1);
  const ScenarioConfig config = load_config(cfgPath.string());
  unsetenv("GKDV_LAB_OUT");
  CHECK(config.outputDir == (dir / "redirected").string());
  CHECK(config.outputDirFromEnv);
  const ScenarioConfig plain = load_config(cfgPath.string());
  CHECK(plain.outputDir == "x");
  CHECK_FALSE(plain.outputDirFromEnv);
  fs::remove_all(dir);
}

TEST_CASE("initial data recipes build the advertised fields") {
  const Grid g = make_grid(100, 4096);
  const Field q = q_profile(g);

  ScenarioConfig scaled;
  scaled.recipe = RecipeType::ScaledQ;
  scaled.a = 2.0;
  CHECK(sup_norm(Field{g, initial_data(scaled).v - 2.0 * q.v}) == 0.0);

  ScenarioConfig framed;
  framed.recipe = RecipeType::Soliton;
  framed.frame = {0.5, 3.0};
  const Field sol = soliton_on_grid(g, {0.5, 3.0});
  CHECK(sup_norm(Field{g, initial_data(framed).v - sol.v}) == 0.0);

  ScenarioConfig pert;
  pert.recipe = RecipeType::Perturbed;
  pert.direction = "Qy";
  pert.coefficient = 0.01;
  const Field qy = q_direction(g, Direction::Qy);
  CHECK(sup_norm(Field{g, initial_data(pert).v - (q.v + 0.01 * qy.v)}) == 0.0);

  const fs::path dir = fresh_dir("filerecipe");
  save_field(q, (dir / "u0.txt").string());
  ScenarioConfig fromFile;
  fromFile.recipe = RecipeType::FromFile;
  fromFile.fieldPath = (dir / "u0.txt").string();
  CHECK(sup_norm(Field{g, initial_data(fromFile).v - q.v}) == 0.0);

  const Grid small = make_grid(50, 512);
  save_field(q_profile(small), (dir / "small.txt").string());
  fromFile.fieldPath = (dir / "small.txt").string();
  CHECK_THROWS_WITH_AS(initial_data(fromFile),
                       "field file grid does not match the configured grid",
                       std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("run_scenario keeps an exact soliton on the family") {
  const fs::path dir = fresh_dir("soliton_run");
  const fs::path cfgPath = dir / "run.cfg";
  write_text(cfgPath, "[recipe]\ntype = scaledQ\na = 1\n[monitors]\n"
                      "enable = massIdentity, rates\n" +
                          quick_run_block((dir / "out").string()));
  const RunReport report = run_scenario(load_config(cfgPath.string()));
  CHECK(report.outcome == "completed");
  CHECK_FALSE(report.departure_time.has_value());
  CHECK_FALSE(report.blow_up.has_value());
  REQUIRE(report.max_eps_l2.has_value());
  CHECK(*report.max_eps_l2 < 1e-5);
  CHECK(report.mass_drift < 1e-11);
  for (const CheckResult& c : report.checks) CHECK(c.pass);
  for (const char* name :
       {"config.json", "series/meta.json", "track.csv", "monitors.csv",
        "report.json"})
    CHECK(fs::exists(dir / "out" / name));
  fs::remove_all(dir);
}

TEST_CASE("scenario outputs are byte-identical across runs and report re-runs") {
  const fs::path dir = fresh_dir("determinism");
  const std::string body =
      "[recipe]\ntype = scaledQ\na = 0.99\n[monitors]\n"
      "enable = virialJ, virialM, morawetz, massIdentity, rates, tails\n"
      "tails = 5, 10\n";
  write_text(dir / "one.cfg", body + quick_run_block((dir / "one").string()));
  write_text(dir / "two.cfg", body + quick_run_block((dir / "two").string()));
  run_scenario(load_config((dir / "one.cfg").string()));
  run_scenario(load_config((dir / "two.cfg").string()));

  // Identical config (up to the output location) => identical CSV bytes.
  CHECK(read_text(dir / "one/track.csv") == read_text(dir / "two/track.csv"));
  CHECK(read_text(dir / "one/monitors.csv") ==
        read_text(dir / "two/monitors.csv"));

  // Re-deriving the analysis from the persisted files reproduces every
  // artifact byte-identically, report.json included.
  const std::string track = read_text(dir / "one/track.csv");
  const std::string monitors = read_text(dir / "one/monitors.csv");
  const std::string reportText = read_text(dir / "one/report.json");
  materialize_analysis((dir / "one").string());
  CHECK(read_text(dir / "one/track.csv") == track);
  CHECK(read_text(dir / "one/monitors.csv") == monitors);
  CHECK(read_text(dir / "one/report.json") == reportText);
  fs::remove_all(dir);
}

TEST_CASE("degenerate recipes terminate with recorded outcomes") {
  const fs::path dir = fresh_dir("degenerate");

  write_text(dir / "zero.cfg", "[recipe]\ntype = scaledQ\na = 0\n" +
                                   quick_run_block((dir / "zero").string()));
  const RunReport zero = run_scenario(load_config((dir / "zero.cfg").string()));
  CHECK(zero.outcome == "departed");
  REQUIRE(zero.departure_time.has_value());
  CHECK(*zero.departure_time == 0.0);
  CHECK(zero.mass_gap == doctest::Approx(refvals::mass_q / 2).epsilon(1e-12));

  // Above the ground-state mass: the constrained re-framing of 1.05*Q
  // carries |eps|_2 = 0.109, so a delta = 0.2 window tracks it; the report
  // flags the negative mass gap.
  write_text(dir / "heavy.cfg", "[recipe]\ntype = scaledQ\na = 1.05\n"
                                "[modulation]\ndelta = 0.2\n" +
                                    quick_run_block((dir / "heavy").string()));
  const RunReport heavy =
      run_scenario(load_config((dir / "heavy.cfg").string()));
  CHECK(heavy.mass_gap < 0);
  CHECK(heavy.mass_gap_sign == "negative");
  CHECK(heavy.outcome == "completed");

  // Far from the family and violently under-resolved in time: the stepper
  // hits a non-finite state and the run records a typed blow-up outcome.
  write_text(dir / "far.cfg",
             "[recipe]\ntype = perturbed\ndirection = Qy\ncoefficient = 5\n" +
                 quick_run_block((dir / "far").string()));
  const RunReport far = run_scenario(load_config((dir / "far.cfg").string()));
  CHECK(far.outcome == "blow-up");
  REQUIRE(far.blow_up.has_value());
  CHECK_FALSE(far.blow_up->reason.empty());
  fs::remove_all(dir);
}

TEST_CASE("verify_suite passes and the operator hook injects failures") {
  VerifyOptions options;
  options.N = 1024;
  const RunReport clean = verify_suite(options);
  CHECK(clean.outcome == "verify");
  CHECK(clean.checks.size() == 9);
  for (const CheckResult& c : clean.checks) CHECK(c.pass);

  // Flip the sign of the potential term: L becomes -d_yy + 1 + 5 Q^4.
  options.applyL = [](const Field& f) {
    const Grid& g = f.grid;
    Vec weight(g.N);
    for (int i = 0; i < g.N; ++i) {
      const double q = q_eval(g.node(i));
      weight[i] = q * q * q * q;
    }
    const Field honest = apply_L(f);
    return Field{g, honest.v + 10.0 * weight * f.v};
  };
  const auto mutated = by_name(verify_suite(options));
  CHECK_FALSE(mutated.at("scaling identity L(LamQ) + 2Q").pass);
  CHECK_FALSE(mutated.at("kernel identity L(Qy)").pass);
  CHECK(mutated.at("elliptic profile residual").pass);
  CHECK(mutated.at("ground-state energy").pass);
  CHECK(mutated.at("decomposition recovery").pass);
}

TEST_CASE("verify residuals shrink under grid refinement") {
  VerifyOptions coarse;
  coarse.N = 1024;
  VerifyOptions fine;
  fine.N = 4096;
  const auto lo = by_name(verify_suite(coarse));
  const auto hi = by_name(verify_suite(fine));
  for (const auto& [name, check] : lo) CHECK(check.pass);
  for (const auto& [name, check] : hi) CHECK(check.pass);
  for (const char* name : {"elliptic profile residual", "kernel identity L(Qy)",
                           "scaling identity L(LamQ) + 2Q"}) {
    CHECK(hi.at(name).residual < lo.at(name).residual);
  }
}

TEST_CASE("sweep runs every config concurrently into its own directory") {
  const fs::path dir = fresh_dir("sweep");
  fs::create_directories(dir / "configs");
  write_text(dir / "configs/a.cfg", "[recipe]\ntype = scaledQ\na = 0\n" +
                                        quick_run_block((dir / "a").string()));
  write_text(dir / "configs/b.cfg", "[recipe]\ntype = scaledQ\na = 1\n" +
                                        quick_run_block((dir / "b").string()));
  write_text(dir / "configs/skip.txt", "not a config\n");
  const std::vector<SweepResult> results = sweep((dir / "configs").string());
  REQUIRE(results.size() == 2);
  CHECK(results[0].file == "a.cfg");
  CHECK(results[0].ok);
  CHECK(results[0].outcome == "departed");
  CHECK(results[1].file == "b.cfg");
  CHECK(results[1].ok);
  CHECK(results[1].outcome == "completed");
  CHECK(fs::exists(dir / "a/report.json"));
  CHECK(fs::exists(dir / "b/report.json"));

  CHECK_THROWS_WITH_AS(sweep((dir / "nowhere").string()),
                       doctest::Contains("not a directory"),
                       std::runtime_error);
  fs::remove_all(dir);
}
