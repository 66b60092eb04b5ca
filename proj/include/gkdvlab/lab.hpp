#pragma once

// Scenario configuration, orchestration, persistence, and the identity
// battery behind the CLI.  A scenario is: build initial data from a recipe,
// evolve it, persist every snapshot, then derive all analysis artifacts
// (track.csv, monitors.csv, report.json) from the persisted files alone, so
// re-running `report` on a run directory reproduces every number exactly.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gkdvlab/evolve.hpp"
#include "gkdvlab/functionals.hpp"
#include "gkdvlab/grid.hpp"
#include "gkdvlab/linearized.hpp"
#include "gkdvlab/modulation.hpp"
#include "gkdvlab/soliton.hpp"

namespace gkdvlab {

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

enum class RecipeType { ScaledQ, Soliton, Perturbed, FromFile };

/// Monitor selection.  Flags come from the `enable` list; the scale knobs
/// (morawetz_R, morawetz_center, tails offsets) have their own keys.
struct MonitorSet {
  bool virialJ = false;
  bool virialM = false;
  bool morawetz = false;
  bool massIdentity = false;
  bool rates = false;
  bool tailsEnabled = false;
  double morawetz_R = 20.0;
  double morawetz_center = 0.0;
  std::vector<double> tails{5.0, 10.0, 20.0};
};

struct ScenarioConfig {
  double L = 100.0;
  int N = 4096;

  RecipeType recipe = RecipeType::ScaledQ;
  double a = 1.0;               // scaledQ amplitude
  Frame frame{1.0, 0.0};        // soliton recipe
  std::string direction = "Qy"; // perturbed recipe
  double coefficient = 0.0;
  std::string fieldPath;        // file recipe

  EvolveConfig evolve;          // dt = 2e-4, T = 1, stride = 50
  double delta = 0.1;
  MonitorSet monitors;

  std::string outputDir = "runs/scenario";
  bool outputDirSet = false;      // an [output] dir appeared in the file
  bool outputDirFromEnv = false;  // GKDV_LAB_OUT override applied
  unsigned long seed = 1;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double config_double(const std::string& value, const std::string& key,
                            int line) {
  std::size_t used = 0;
  double parsed = 0;
  try {
    parsed = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size())
    throw std::runtime_error("config line " + std::to_string(line) +
                             ": invalid number \"" + value + "\" for key \"" +
                             key + "\"");
  return parsed;
}

inline long config_long(const std::string& value, const std::string& key,
                        int line) {
  const double parsed = config_double(value, key, line);
  const long rounded = std::lround(parsed);
  if (parsed != static_cast<double>(rounded))
    throw std::runtime_error("config line " + std::to_string(line) +
                             ": invalid integer \"" + value + "\" for key \"" +
                             key + "\"");
  return rounded;
}

inline std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace detail

inline Direction direction_from_name(const std::string& name) {
  if (name == "Qy") return Direction::Qy;
  if (name == "LamQ") return Direction::LamQ;
  if (name == "yQy") return Direction::yQy;
  if (name == "yLamQ") return Direction::yLamQ;
  throw std::runtime_error("unknown direction \"" + name +
                           "\" (valid: Qy, LamQ, yQy, yLamQ)");
}

/// Semantic validation shared by load_config and run_scenario.  Messages
/// name the offending field; grid checks reuse make_grid's own wording.
inline void validate(const ScenarioConfig& config) {
  const Grid grid = make_grid(config.L, config.N);
  if (!(config.evolve.dt > 0)) throw std::runtime_error("dt must be positive");
  if (!(config.evolve.T > 0)) throw std::runtime_error("T must be positive");
  if (config.evolve.stride < 1)
    throw std::runtime_error("stride must be at least 1");
  if (!(config.delta > 0)) throw std::runtime_error("delta must be positive");
  switch (config.recipe) {
    case RecipeType::ScaledQ:
      if (!std::isfinite(config.a)) throw std::runtime_error("a must be finite");
      break;
    case RecipeType::Soliton:
      require_resolvable(grid, config.frame);
      break;
    case RecipeType::Perturbed:
      direction_from_name(config.direction);
      if (!std::isfinite(config.coefficient))
        throw std::runtime_error("coefficient must be finite");
      break;
    case RecipeType::FromFile:
      if (config.fieldPath.empty())
        throw std::runtime_error("recipe type file requires a path");
      break;
  }
  if (config.monitors.morawetz) {
    if (!(config.monitors.morawetz_R > 0))
      throw std::runtime_error("morawetz_R must be positive");
    if (config.monitors.morawetz_R > config.L / 4)
      throw std::runtime_error(
          "morawetz_R must not exceed a quarter of the box length");
  }
  if (config.monitors.tailsEnabled) {
    if (config.monitors.tails.empty())
      throw std::runtime_error("tails monitor requires at least one offset");
    for (double x0 : config.monitors.tails)
      if (!(x0 >= 0))
        throw std::runtime_error("tails offsets must be nonnegative");
  }
}

/// Parses the sectioned key/value format documented in the README.
/// Lines are `key = value` under a `[section]` header; `#` starts a comment.
inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);

  ScenarioConfig config;
  std::string section;
  std::string lineText;
  int line = 0;
  bool recipeTypeSeen = false;

  const auto fail = [&](const std::string& what) {
    throw std::runtime_error("config line " + std::to_string(line) + ": " +
                             what);
  };

  while (std::getline(in, lineText)) {
    ++line;
    std::string text = lineText;
    const std::size_t hash = text.find('#');
    if (hash != std::string::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;

    if (text.front() == '[') {
      if (text.back() != ']')
        fail("expected a section header like [grid]");
      section = detail::trim(text.substr(1, text.size() - 2));
      static const char* known[] = {"grid",     "recipe",   "evolve",
                                    "modulation", "monitors", "output",
                                    "random"};
      if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
            return section == k;
          }) == std::end(known))
        fail("unknown section [" + section + "]");
      continue;
    }

    const std::size_t eq = text.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key.empty()) fail("expected key = value");
    if (section.empty()) fail("key \"" + key + "\" appears before any section");

    const auto unknownKey = [&]() {
      fail("unknown key \"" + key + "\" in section [" + section + "]");
    };

    if (section == "grid") {
      if (key == "L") config.L = detail::config_double(value, key, line);
      else if (key == "N")
        config.N = static_cast<int>(detail::config_long(value, key, line));
      else unknownKey();
    } else if (section == "recipe") {
      if (key == "type") {
        recipeTypeSeen = true;
        if (value == "scaledQ") config.recipe = RecipeType::ScaledQ;
        else if (value == "soliton") config.recipe = RecipeType::Soliton;
        else if (value == "perturbed") config.recipe = RecipeType::Perturbed;
        else if (value == "file") config.recipe = RecipeType::FromFile;
        else
          fail("unknown recipe type \"" + value +
               "\" (valid: scaledQ, soliton, perturbed, file)");
      } else if (key == "a")
        config.a = detail::config_double(value, key, line);
      else if (key == "lambda")
        config.frame.lambda = detail::config_double(value, key, line);
      else if (key == "x0")
        config.frame.x0 = detail::config_double(value, key, line);
      else if (key == "direction")
        config.direction = value;
      else if (key == "coefficient")
        config.coefficient = detail::config_double(value, key, line);
      else if (key == "path")
        config.fieldPath = value;
      else unknownKey();
    } else if (section == "evolve") {
      if (key == "dt") config.evolve.dt = detail::config_double(value, key, line);
      else if (key == "T")
        config.evolve.T = detail::config_double(value, key, line);
      else if (key == "stride")
        config.evolve.stride =
            static_cast<int>(detail::config_long(value, key, line));
      else unknownKey();
    } else if (section == "modulation") {
      if (key == "delta") config.delta = detail::config_double(value, key, line);
      else unknownKey();
    } else if (section == "monitors") {
      if (key == "enable") {
        MonitorSet fresh;
        fresh.tails = config.monitors.tails;
        fresh.morawetz_R = config.monitors.morawetz_R;
        fresh.morawetz_center = config.monitors.morawetz_center;
        for (const std::string& name : detail::split_list(value)) {
          if (name == "virialJ") fresh.virialJ = true;
          else if (name == "virialM") fresh.virialM = true;
          else if (name == "morawetz") fresh.morawetz = true;
          else if (name == "massIdentity") fresh.massIdentity = true;
          else if (name == "rates") fresh.rates = true;
          else if (name == "tails") fresh.tailsEnabled = true;
          else
            fail("unknown monitor \"" + name +
                 "\" (valid: virialJ, virialM, morawetz, tails, rates, "
                 "massIdentity)");
        }
        config.monitors = fresh;
      } else if (key == "morawetz_R")
        config.monitors.morawetz_R = detail::config_double(value, key, line);
      else if (key == "morawetz_center")
        config.monitors.morawetz_center =
            detail::config_double(value, key, line);
      else if (key == "tails") {
        config.monitors.tails.clear();
        for (const std::string& item : detail::split_list(value))
          config.monitors.tails.push_back(
              detail::config_double(item, key, line));
      } else unknownKey();
    } else if (section == "output") {
      if (key == "dir") {
        config.outputDir = value;
        config.outputDirSet = true;
      } else unknownKey();
    } else if (section == "random") {
      if (key == "seed")
        config.seed =
            static_cast<unsigned long>(detail::config_long(value, key, line));
      else unknownKey();
    }
  }

  if (!recipeTypeSeen && config.recipe == RecipeType::ScaledQ) {
    // defaults already describe a plain soliton run; nothing to do
  }
  if (const char* env = std::getenv("GKDV_LAB_OUT")) {
    if (*env != '\0') {
      config.outputDir = env;
      config.outputDirFromEnv = true;
    }
  }
  validate(config);
  return config;
}

// ---------------------------------------------------------------------------
// config echo (JSON round-trip used by report re-runs)
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json config_to_json(const ScenarioConfig& config) {
  nlohmann::ordered_json j;
  j["grid"] = {{"L", config.L}, {"N", config.N}};
  nlohmann::ordered_json recipe;
  switch (config.recipe) {
    case RecipeType::ScaledQ:
      recipe = {{"type", "scaledQ"}, {"a", config.a}};
      break;
    case RecipeType::Soliton:
      recipe = {{"type", "soliton"},
                {"lambda", config.frame.lambda},
                {"x0", config.frame.x0}};
      break;
    case RecipeType::Perturbed:
      recipe = {{"type", "perturbed"},
                {"direction", config.direction},
                {"coefficient", config.coefficient}};
      break;
    case RecipeType::FromFile:
      recipe = {{"type", "file"}, {"path", config.fieldPath}};
      break;
  }
  j["recipe"] = recipe;
  j["evolve"] = {{"dt", config.evolve.dt},
                 {"T", config.evolve.T},
                 {"stride", config.evolve.stride}};
  j["modulation"] = {{"delta", config.delta}};
  std::vector<std::string> enabled;
  if (config.monitors.virialJ) enabled.push_back("virialJ");
  if (config.monitors.virialM) enabled.push_back("virialM");
  if (config.monitors.morawetz) enabled.push_back("morawetz");
  if (config.monitors.massIdentity) enabled.push_back("massIdentity");
  if (config.monitors.rates) enabled.push_back("rates");
  if (config.monitors.tailsEnabled) enabled.push_back("tails");
  j["monitors"] = {{"enable", enabled},
                   {"morawetz_R", config.monitors.morawetz_R},
                   {"morawetz_center", config.monitors.morawetz_center},
                   {"tails", config.monitors.tails}};
  j["output"] = {{"dir", config.outputDir}};
  j["random"] = {{"seed", config.seed}};
  return j;
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  ScenarioConfig config;
  config.L = j.at("grid").at("L").get<double>();
  config.N = j.at("grid").at("N").get<int>();
  const std::string type = j.at("recipe").at("type").get<std::string>();
  if (type == "scaledQ") {
    config.recipe = RecipeType::ScaledQ;
    config.a = j["recipe"].at("a").get<double>();
  } else if (type == "soliton") {
    config.recipe = RecipeType::Soliton;
    config.frame.lambda = j["recipe"].at("lambda").get<double>();
    config.frame.x0 = j["recipe"].at("x0").get<double>();
  } else if (type == "perturbed") {
    config.recipe = RecipeType::Perturbed;
    config.direction = j["recipe"].at("direction").get<std::string>();
    config.coefficient = j["recipe"].at("coefficient").get<double>();
  } else if (type == "file") {
    config.recipe = RecipeType::FromFile;
    config.fieldPath = j["recipe"].at("path").get<std::string>();
  } else {
    throw std::runtime_error("unknown recipe type \"" + type + "\"");
  }
  config.evolve.dt = j.at("evolve").at("dt").get<double>();
  config.evolve.T = j.at("evolve").at("T").get<double>();
  config.evolve.stride = j.at("evolve").at("stride").get<int>();
  config.delta = j.at("modulation").at("delta").get<double>();
  const auto& mon = j.at("monitors");
  for (const auto& name : mon.at("enable")) {
    const std::string n = name.get<std::string>();
    if (n == "virialJ") config.monitors.virialJ = true;
    else if (n == "virialM") config.monitors.virialM = true;
    else if (n == "morawetz") config.monitors.morawetz = true;
    else if (n == "massIdentity") config.monitors.massIdentity = true;
    else if (n == "rates") config.monitors.rates = true;
    else if (n == "tails") config.monitors.tailsEnabled = true;
  }
  config.monitors.morawetz_R = mon.at("morawetz_R").get<double>();
  config.monitors.morawetz_center = mon.at("morawetz_center").get<double>();
  config.monitors.tails = mon.at("tails").get<std::vector<double>>();
  config.outputDir = j.at("output").at("dir").get<std::string>();
  config.outputDirSet = true;
  config.seed = j.at("random").at("seed").get<unsigned long>();
  return config;
}

// ---------------------------------------------------------------------------
// initial data
// ---------------------------------------------------------------------------

inline Field initial_data(const ScenarioConfig& config) {
  const Grid grid = make_grid(config.L, config.N);
  switch (config.recipe) {
    case RecipeType::ScaledQ: {
      const Field q = q_profile(grid);
      return Field{grid, config.a * q.v};
    }
    case RecipeType::Soliton:
      return soliton_on_grid(grid, config.frame);
    case RecipeType::Perturbed: {
      const Field q = q_profile(grid);
      const Field dir = q_direction(grid, direction_from_name(config.direction));
      return Field{grid, q.v + config.coefficient * dir.v};
    }
    case RecipeType::FromFile: {
      Field f = load_field(config.fieldPath);
      if (!(f.grid == grid))
        throw std::runtime_error(
            "field file grid does not match the configured grid");
      return f;
    }
  }
  throw std::logic_error("unreachable recipe type");
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

struct CheckResult {
  std::string name;
  double residual = 0;
  double tolerance = 0;
  bool pass = false;
};

/// Everything `simulate` or `verify` reports.  Every scalar in a scenario
/// report is re-derivable from the persisted run directory.
struct RunReport {
  nlohmann::ordered_json config;
  std::string dir;
  std::string outcome;  // "completed" | "departed" | "blow-up" | "verify"
  std::optional<BlowUpEvent> blow_up;
  std::optional<double> departure_time;
  double mass_drift = 0;
  double energy_drift = 0;
  double mass_gap = 0;
  std::string mass_gap_sign;
  std::optional<double> max_eps_l2;
  std::optional<double> envelope_c;
  std::optional<double> max_decay_ratio;
  std::vector<CheckResult> checks;
  std::vector<std::string> files;
};

namespace detail {

inline void put_optional(nlohmann::ordered_json& j, const char* key,
                         const std::optional<double>& value) {
  if (value && std::isfinite(*value)) j[key] = *value;
  else j[key] = nullptr;
}

inline std::string csv_number(double v) {
  return std::isfinite(v) ? format17(v) : std::string("nan");
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["config"] = report.config;
  j["outcome"] = report.outcome;
  if (report.blow_up)
    j["blow_up"] = {{"t", report.blow_up->t},
                    {"sup", report.blow_up->sup},
                    {"reason", report.blow_up->reason}};
  else
    j["blow_up"] = nullptr;
  detail::put_optional(j, "departure_time", report.departure_time);
  j["mass_drift"] = report.mass_drift;
  j["energy_drift"] = report.energy_drift;
  j["mass_gap"] = report.mass_gap;
  j["mass_gap_sign"] = report.mass_gap_sign;
  detail::put_optional(j, "max_eps_l2", report.max_eps_l2);
  detail::put_optional(j, "envelope_c", report.envelope_c);
  detail::put_optional(j, "max_decay_ratio", report.max_decay_ratio);
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const CheckResult& c : report.checks)
    checks.push_back({{"name", c.name},
                      {"residual", std::isfinite(c.residual)
                                       ? nlohmann::ordered_json(c.residual)
                                       : nlohmann::ordered_json(nullptr)},
                      {"tolerance", c.tolerance},
                      {"pass", c.pass}});
  j["checks"] = checks;
  j["files"] = report.files;
  return j;
}

// ---------------------------------------------------------------------------
// analysis from persisted data
// ---------------------------------------------------------------------------

/// Rebuilds track.csv, monitors.csv, and report.json inside `dir` from the
/// persisted config.json and series/ alone.  `run_scenario` calls this right
/// after saving the series, and the `report` CLI calls it again later; both
/// paths run the same code on the same files, so every scalar reproduces
/// byte-identically.
inline RunReport materialize_analysis(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream cfgIn(fs::path(dir) / "config.json");
  if (!cfgIn) throw std::runtime_error("cannot open config.json in " + dir);
  nlohmann::json cfgJson;
  cfgIn >> cfgJson;
  const ScenarioConfig config = config_from_json(cfgJson);
  const MonitorSet& mon = config.monitors;

  const TimeSeries series = load_series((fs::path(dir) / "series").string());
  if (series.snapshots.empty())
    throw std::runtime_error("series in " + dir + " has no snapshots");

  const ModulationTrack tracked = track(series, config.delta);
  save_track_csv(tracked, (fs::path(dir) / "track.csv").string());

  const double massGap = mass_gap(series.snapshots.front());

  // monitors.csv: one row per track record, columns for enabled monitors.
  std::vector<std::string> header{"t"};
  if (mon.virialJ) header.push_back("virialJ");
  if (mon.virialM) header.push_back("virialM");
  if (mon.morawetz) header.push_back("morawetz");
  if (mon.massIdentity) header.push_back("massIdentity");
  if (mon.rates) {
    header.push_back("rate_a");
    header.push_back("rate_b");
  }
  if (mon.tailsEnabled)
    for (double x0 : mon.tails) {
      header.push_back("tailL_" + detail::short_number(x0));
      header.push_back("tailR_" + detail::short_number(x0));
    }

  double maxMassIdentity = 0;
  bool anyMassIdentity = false;
  double maxDecay = 0;
  bool anyDecay = false;

  std::ofstream monOut(fs::path(dir) / "monitors.csv");
  if (!monOut)
    throw std::runtime_error("cannot open monitors.csv in " + dir +
                             " for writing");
  for (std::size_t c = 0; c < header.size(); ++c)
    monOut << header[c] << (c + 1 < header.size() ? "," : "\n");

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < tracked.records.size(); ++i) {
    const TrackRecord& rec = tracked.records[i];
    const Field& u = series.snapshots[i];
    const bool frameUsable = std::isfinite(rec.lambda) && rec.lambda > 0 &&
                             std::isfinite(rec.x);
    std::optional<Decomposition> dec;
    if (frameUsable) dec = decompose(u, Frame{rec.lambda, rec.x});

    std::vector<double> row{rec.t};
    const auto guarded = [&](const std::function<double()>& f) {
      if (!dec) return nan;
      try {
        return f();
      } catch (const std::exception&) {
        return nan;
      }
    };
    if (mon.virialJ)
      row.push_back(guarded([&] { return virial_J(dec->eps, rec.lambda); }));
    if (mon.virialM)
      row.push_back(guarded([&] { return virial_M(dec->eps, rec.lambda); }));
    if (mon.morawetz)
      row.push_back(
          morawetz_potential(u, mon.morawetz_R, mon.morawetz_center));
    if (mon.massIdentity) {
      const double r =
          guarded([&] { return mass_identity_residual(dec->eps, massGap); });
      row.push_back(r);
      if (!rec.departed && std::isfinite(r)) {
        maxMassIdentity = std::max(maxMassIdentity, r);
        anyMassIdentity = true;
      }
    }
    if (mon.rates) {
      row.push_back(rec.rate_a);
      row.push_back(rec.rate_b);
    }
    if (mon.tailsEnabled)
      for (double x0 : mon.tails) {
        const double left = guarded([&] {
          return decay_bound_ratio(u, Frame{rec.lambda, rec.x}, x0,
                                   Side::Left);
        });
        const double right = guarded([&] {
          return decay_bound_ratio(u, Frame{rec.lambda, rec.x}, x0,
                                   Side::Right);
        });
        row.push_back(left);
        row.push_back(right);
        if (!rec.departed) {
          if (std::isfinite(left)) {
            maxDecay = std::max(maxDecay, left);
            anyDecay = true;
          }
          if (std::isfinite(right)) {
            maxDecay = std::max(maxDecay, right);
            anyDecay = true;
          }
        }
      }

    for (std::size_t c = 0; c < row.size(); ++c)
      monOut << detail::csv_number(row[c]) << (c + 1 < row.size() ? "," : "\n");
  }
  if (!monOut) throw std::runtime_error("failed writing monitors.csv in " + dir);
  monOut.close();

  RunReport report;
  report.config = config_to_json(config);
  report.dir = dir;
  report.blow_up = series.blow_up;
  for (const TrackRecord& rec : tracked.records)
    if (rec.departed) {
      report.departure_time = rec.t;
      break;
    }
  report.outcome = series.blow_up ? "blow-up"
                   : report.departure_time ? "departed"
                                           : "completed";
  report.mass_drift = series.mass_drift;
  report.energy_drift = series.energy_drift;
  report.mass_gap = massGap;
  report.mass_gap_sign =
      massGap > 0 ? "positive" : (massGap < 0 ? "negative" : "zero");

  double maxEps = 0;
  bool anyEps = false;
  double maxOrtho = 0;
  for (const TrackRecord& rec : tracked.records) {
    if (rec.departed) continue;
    if (std::isfinite(rec.eps_l2)) {
      maxEps = std::max(maxEps, rec.eps_l2);
      anyEps = true;
      maxOrtho = std::max(
          maxOrtho,
          (std::abs(rec.rho1) + std::abs(rec.rho2)) / (1 + rec.eps_l2));
    }
  }
  if (anyEps) report.max_eps_l2 = maxEps;
  report.envelope_c = tracked.envelope_c;
  if (anyDecay) report.max_decay_ratio = maxDecay;

  report.checks.push_back(
      {"orthogonality", maxOrtho, 1e-10, maxOrtho < 1e-10});
  if (mon.massIdentity)
    report.checks.push_back({"mass identity", anyMassIdentity ? maxMassIdentity : 0,
                             1e-8, !anyMassIdentity || maxMassIdentity < 1e-8});

  report.files = {"config.json", "series/meta.json", "track.csv",
                  "monitors.csv"};

  std::ofstream repOut(fs::path(dir) / "report.json");
  if (!repOut)
    throw std::runtime_error("cannot open report.json in " + dir +
                             " for writing");
  repOut << report_to_json(report).dump(2) << "\n";
  if (!repOut) throw std::runtime_error("failed writing report.json in " + dir);
  return report;
}

/// Builds the initial data, evolves it, persists everything under the
/// configured output directory, and derives the analysis artifacts from the
/// persisted files.  Blow-up and departure are recorded outcomes.
inline RunReport run_scenario(const ScenarioConfig& config) {
  namespace fs = std::filesystem;
  validate(config);
  fs::create_directories(config.outputDir);
  {
    std::ofstream out(fs::path(config.outputDir) / "config.json");
    if (!out)
      throw std::runtime_error("cannot open config.json in " +
                               config.outputDir + " for writing");
    out << config_to_json(config).dump(2) << "\n";
    if (!out)
      throw std::runtime_error("failed writing config.json in " +
                               config.outputDir);
  }
  const Field u0 = initial_data(config);
  const TimeSeries series = evolve(u0, config.evolve);
  save_series(series, (fs::path(config.outputDir) / "series").string());
  return materialize_analysis(config.outputDir);
}

// ---------------------------------------------------------------------------
// identity battery
// ---------------------------------------------------------------------------

struct VerifyOptions {
  int N = 4096;
  double L = 100.0;
  /// Test hook: replaces the linearized operator inside the operator
  /// identity checks.  Leave empty to use the real one.
  std::function<Field(const Field&)> applyL;
};

/// Runs the full identity battery at the requested resolution and returns
/// one pass/fail entry per check.  Tolerances are loose enough to pass at
/// N = 1024 and tight enough that a genuine defect (a wrong sign, a wrong
/// coefficient, a broken transform) fails by many orders of magnitude.
inline RunReport verify_suite(const VerifyOptions& options = {}) {
  const Grid grid = make_grid(options.L, options.N);
  const auto applyOp = [&](const Field& f) {
    return options.applyL ? options.applyL(f) : apply_L(f);
  };

  RunReport report;
  report.config = {{"grid", {{"L", options.L}, {"N", options.N}}}};
  report.outcome = "verify";

  const auto add = [&](const std::string& name, double residual, double tol) {
    report.checks.push_back(
        {name, residual, tol, std::isfinite(residual) && residual < tol});
  };

  const Field q = q_profile(grid);
  add("elliptic profile residual", elliptic_residual(grid), 1e-8);

  const Field qy = q_direction(grid, Direction::Qy);
  add("kernel identity L(Qy)", sup_norm(applyOp(qy)), 1e-6);

  const Field lam = q_direction(grid, Direction::LamQ);
  const Field lres = applyOp(lam);
  add("scaling identity L(LamQ) + 2Q",
      sup_norm(Field{grid, lres.v + 2.0 * q.v}), 1e-6);

  add("ground-state energy", std::abs(energy(q)), 1e-12);

  const double kappa = 0.25 * integral(q) * integral(q);
  add("ground-state virial J", std::abs(virial_J(q, 1.0) + 2.0 * kappa), 1e-12);

  {
    const Field u0{grid, 0.99 * q.v};
    const Field eps{grid, -0.01 * q.v};
    add("mass identity closure",
        mass_identity_residual(eps, mass_gap(u0)), 1e-12);
  }

  {
    const Field u = soliton_on_grid(grid, {0.8, 3.0});
    const Decomposition dec = decompose(u, auto_frame_guess(u));
    const double residual = dec.converged
                                ? std::abs(dec.frame.lambda - 0.8) +
                                      std::abs(dec.frame.x0 - 3.0) +
                                      l2_norm(dec.eps)
                                : std::numeric_limits<double>::infinity();
    add("decomposition recovery", residual, 1e-7);
  }

  {
    // Manufactured traveling soliton crossing the weight's transition band,
    // where the potential is genuinely curved in time.
    TimeSeries series;
    series.grid = grid;
    series.config.dt = 1e-3;
    for (int j = 0; j < 3; ++j) {
      series.times.push_back(j * series.config.dt);
      series.snapshots.push_back(
          soliton_on_grid(grid, {1.0, 25.0 + j * series.config.dt}));
    }
    add("morawetz derivative identity",
        morawetz_derivative_check(series, 20.0, -8.0), 1e-6);
  }

  {
    const std::vector<double> times{0.0, 0.25, 0.5, 0.75, 1.0};
    const std::vector<double> scales(times.size(), 0.5);
    const std::vector<double> s = rescaled_time(times, scales);
    double worst = 0;
    for (std::size_t i = 0; i < times.size(); ++i)
      worst = std::max(worst, std::abs(s[i] - 8.0 * times[i]));
    add("rescaled-time identity", worst, 1e-12);
  }

  return report;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepResult {
  std::string file;     // config file name
  std::string dir;      // run directory
  bool ok = false;      // scenario ran to a recorded outcome
  std::string outcome;  // outcome, or the error message when !ok
};

/// Runs every *.cfg file in `configDir` concurrently, one worker per
/// scenario.  Scenarios without an explicit output directory land in
/// runs/<config-stem> (or $GKDV_LAB_OUT/<config-stem>).  Results come back
/// in filename order.
inline std::vector<SweepResult> sweep(const std::string& configDir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(configDir))
    throw std::runtime_error("not a directory: " + configDir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(configDir))
    if (entry.is_regular_file() && entry.path().extension() == ".cfg")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw std::runtime_error("no .cfg files in " + configDir);

  std::vector<SweepResult> results(files.size());
  std::vector<std::thread> workers;
  workers.reserve(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    workers.emplace_back([&, i] {
      SweepResult& res = results[i];
      res.file = files[i].filename().string();
      try {
        ScenarioConfig config = load_config(files[i].string());
        const std::string stem = files[i].stem().string();
        if (config.outputDirFromEnv)
          config.outputDir = (fs::path(config.outputDir) / stem).string();
        else if (!config.outputDirSet)
          config.outputDir = (fs::path("runs") / stem).string();
        res.dir = config.outputDir;
        const RunReport report = run_scenario(config);
        res.ok = true;
        res.outcome = report.outcome;
      } catch (const std::exception& ex) {
        res.ok = false;
        res.outcome = ex.what();
      }
    });
  }
  for (std::thread& w : workers) w.join();
  return results;
}

}  // namespace gkdvlab
