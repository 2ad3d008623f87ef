#pragma once

// Canned experiments: the Toy2D contrast runs and the counterexample sweep.
// Each preset knows its expected outcome and checks it after running.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lss/equilibria.hpp"
#include "lss/errors.hpp"
#include "lss/game.hpp"
#include "lss/io.hpp"
#include "lss/parallel.hpp"
#include "lss/runner.hpp"
#include "lss/svg.hpp"

#ifndef LSS_BUILD_ID
#define LSS_BUILD_ID "unknown"
#endif

namespace lss {

/// Toy2D LASE from a Newton search over [-15,15]² (residual < 1e-10):
/// three DNE followed by the non-Nash LASE.
inline const std::vector<Eigen::Vector2d>& toy2d_lase_fixture() {
  static const std::vector<Eigen::Vector2d> pts = {
      {-12.476604033044675, -8.677925595945252},
      {-11.426652020836206, 8.004295345248245},
      {12.39500714641877, -6.372831318444234},
      {-1.3165279824134042, -1.224274722558197},
  };
  return pts;
}

/// One initialization per LASE basin: each LASE moved 0.3 toward the origin.
inline std::vector<Eigen::VectorXd> toy2d_initializations() {
  std::vector<Eigen::VectorXd> out;
  for (const auto& p : toy2d_lase_fixture()) out.emplace_back(p - 0.3 * p.normalized());
  return out;
}

inline SearchBox toy2d_search_box() { return {Eigen::Vector2d(-15, -15), Eigen::Vector2d(15, 15)}; }

inline Game counterexample_game() {
  Eigen::Matrix2d m;
  m << 1.0, 1.0, 1.0, 0.1;
  return Game::quadratic(m, 1, 1);
}

struct PresetRun {
  std::string label;
  RunConfig cfg;
  Eigen::VectorXd init;
  long steps = 0;
};

struct Preset {
  std::string name;
  Game game;
  SearchBox box;
  int grid = 2;
  std::vector<PresetRun> runs;
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"toy2d-figure1", "toy2d-figure2", "counterexample-appB"};
  return names;
}

inline Preset make_preset(const std::string& name) {
  if (name == "toy2d-figure1" || name == "toy2d-figure2") {
    Preset p{name, Game::toy2d(), toy2d_search_box(), 40, {}};
    RunConfig base;
    base.lambda.xi1 = 1e-4;
    base.damping.xi2 = 1e-4;
    const auto inits = toy2d_initializations();
    for (std::size_t i = 0; i < inits.size(); ++i) {
      const std::string tag = "_init" + std::to_string(i);
      RunConfig ode = base;
      ode.dt = 0.01;
      ode.stride = 10;
      if (name == "toy2d-figure1") {
        ode.rule = Rule::SimGDOde;
        p.runs.push_back({"simgd-ode" + tag, ode, inits[i], 10000});
      } else {
        RunConfig lss = base;
        lss.rule = Rule::LSS;
        lss.a = StepSchedule::constant(0.004, Timescale::Slow);
        lss.b = StepSchedule::constant(0.005, Timescale::Fast);
        lss.stride = 1;
        p.runs.push_back({"lss" + tag, lss, inits[i], 40000});
      }
      ode.rule = Rule::LSSOde;
      p.runs.push_back({"lss-ode" + tag, ode, inits[i], 10000});
    }
    return p;
  }
  if (name == "counterexample-appB") {
    Preset p{name, counterexample_game(), {Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2)}, 5, {}};
    const Eigen::VectorXd init = Eigen::Vector2d(0.3, -0.3);
    RunConfig tts;
    tts.rule = Rule::TwoTimescaleSimGD;
    tts.a = StepSchedule::power(0.1, 0.6, Timescale::Slow);
    tts.b = StepSchedule::power(0.4, 0.55, Timescale::Fast);
    tts.stride = 100;
    p.runs.push_back({"2ts-simgd", tts, init, 100000});
    for (double lam : {0.1, 1.0, 10.0}) {
      char tag[32];
      std::snprintf(tag, sizeof tag, "_lambda%g", lam);
      RunConfig co;
      co.rule = Rule::Consensus;
      co.a = StepSchedule::constant(0.01);
      co.lambda_co = lam;
      co.stride = 10;
      p.runs.push_back({std::string("co") + tag, co, init, 10000});
      RunConfig sga = co;
      sga.rule = Rule::SGA;
      sga.lambda_sga = lam;
      p.runs.push_back({std::string("sga") + tag, sga, init, 10000});
    }
    RunConfig lss;
    lss.rule = Rule::LSS;
    lss.a = StepSchedule::constant(0.004, Timescale::Slow);
    lss.b = StepSchedule::constant(0.005, Timescale::Fast);
    lss.stride = 10;
    p.runs.push_back({"lss", lss, init, 20000});
    return p;
  }
  std::string valid;
  for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw InvalidInput("unknown preset '" + name + "' (valid: " + valid + ")");
}

struct TerminalClass {
  bool is_critical = false;  // terminal within kTerminalMatch of a critical point
  Eigen::VectorXd critical_point;
  std::optional<Classification> classification;
};

/// A terminal point counts as reaching a critical point within this distance.
inline constexpr double kTerminalMatch = 1e-3;

inline TerminalClass classify_terminal(const Game& game, const std::vector<SpectrumReport>& known,
                                       const Eigen::VectorXd& z) {
  TerminalClass out;
  for (const auto& r : known) {
    if ((r.z - z).norm() <= kTerminalMatch) {
      out.is_critical = true;
      out.critical_point = r.z;
      out.classification = r.classification;
      return out;
    }
  }
  // Not among the precomputed points: try Newton from the terminal itself.
  SearchBox anywhere{z.array() - 1.0, z.array() + 1.0};
  const auto found = find_critical_points(game, anywhere, {z});
  if (!found.points.empty() && (found.points.front().z.coords() - z).norm() <= kTerminalMatch) {
    out.is_critical = true;
    out.critical_point = found.points.front().z.coords();
    out.classification = classify(game, found.points.front()).classification;
  }
  return out;
}

struct PresetCheck {
  std::string description;
  bool pass = false;
};

struct PresetResult {
  std::string name;
  std::vector<PresetRun> runs;
  std::vector<Trajectory> trajectories;
  std::vector<TerminalClass> terminals;
  std::vector<SpectrumReport> critical_points;
  std::vector<PresetCheck> checks;
  bool any_diverged = false;

  bool expectations_met() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

namespace detail {

inline bool rule_prefix(const PresetRun& r, const std::string& prefix) {
  return r.label.rfind(prefix, 0) == 0 && (r.label.size() == prefix.size() || r.label[prefix.size()] == '_');
}

inline std::vector<PresetCheck> preset_expectations(const PresetResult& res) {
  std::vector<PresetCheck> checks;
  auto at = [&](std::size_t i, Classification c) {
    return !res.trajectories[i].diverged && res.terminals[i].classification == c;
  };
  if (res.name == "counterexample-appB") {
    for (std::size_t i = 0; i < res.runs.size(); ++i) {
      const auto& run = res.runs[i];
      const Eigen::VectorXd& zT = res.trajectories[i].terminal().z;
      if (rule_prefix(run, "lss")) {
        checks.push_back({run.label + " leaves the 0.5-ball around the origin", zT.norm() > 0.5});
      } else {
        checks.push_back({run.label + " terminates within 1e-3 of the non-Nash origin",
                          zT.norm() <= 1e-3 && at(i, Classification::NonNashLASE)});
      }
    }
  } else if (res.name == "toy2d-figure1") {
    bool all_dne = true, any_non_nash = false;
    for (std::size_t i = 0; i < res.runs.size(); ++i) {
      if (rule_prefix(res.runs[i], "lss-ode")) all_dne = all_dne && at(i, Classification::DNE);
      if (rule_prefix(res.runs[i], "simgd-ode")) any_non_nash = any_non_nash || at(i, Classification::NonNashLASE);
    }
    checks.push_back({"lss-ode terminates only at DNE points", all_dne});
    checks.push_back({"simgd-ode terminates at the non-Nash LASE from at least one initialization", any_non_nash});
  } else if (res.name == "toy2d-figure2") {
    bool all_dne = true;
    for (std::size_t i = 0; i < res.runs.size(); ++i) all_dne = all_dne && at(i, Classification::DNE);
    checks.push_back({"lss and lss-ode terminate only at DNE points", all_dne});
  }
  return checks;
}

}  // namespace detail

/// Runs every (rule, init) pair, concurrently when LSS_THREADS allows.
inline PresetResult run_preset(const Preset& p) {
  PresetResult res;
  res.name = p.name;
  res.runs = p.runs;

  for (const auto& cp : find_critical_points(p.game, p.box, p.grid).points) {
    res.critical_points.push_back(classify(p.game, cp));
  }

  res.trajectories.resize(p.runs.size());
  res.terminals.resize(p.runs.size());
  parallel_for(p.runs.size(), [&](std::size_t i) {
    const auto& run = p.runs[i];
    const StrategyPoint z0 = p.game.point(run.init);
    res.trajectories[i] =
        run_rule(p.game, run.cfg, TwoTimescaleState::at_rest(z0, run.cfg.rule == Rule::TVLSS), run.steps);
    res.terminals[i] = classify_terminal(p.game, res.critical_points, res.trajectories[i].terminal().z);
  });
  for (const auto& t : res.trajectories) res.any_diverged = res.any_diverged || t.diverged;
  res.checks = detail::preset_expectations(res);
  return res;
}

inline PlotSpec preset_plot(const PresetResult& res, const std::vector<std::size_t>& which, const std::string& title) {
  PlotSpec spec;
  spec.title = title;
  const auto& pal = default_palette();
  for (std::size_t k = 0; k < which.size(); ++k) {
    const auto i = which[k];
    const bool ode = is_ode(res.runs[i].cfg.rule);
    spec.series.push_back({&res.trajectories[i], res.runs[i].label, pal[k % pal.size()], !ode});
  }
  for (const auto& r : res.critical_points) {
    if (r.z.size() == 2) spec.markers.push_back({Eigen::Vector2d(r.z[0], r.z[1]), r.classification});
  }
  fit_axes(spec);
  return spec;
}

inline nlohmann::json preset_summary(const PresetResult& res) {
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    const auto& run = res.runs[i];
    const auto& t = res.trajectories[i];
    const auto& tc = res.terminals[i];
    nlohmann::json r = {{"label", run.label},
                        {"config", to_json(run.cfg)},
                        {"init", to_json(run.init)},
                        {"steps", run.steps},
                        {"terminal", to_json(t.terminal().z)},
                        {"terminal_n", t.terminal().n},
                        {"diverged", t.diverged},
                        {"csv", run.label + ".csv"},
                        {"svg", run.label + ".svg"}};
    if (t.diverged) r["diverged_at"] = t.diverged_at;
    if (tc.is_critical) {
      r["terminal_classification"] = to_string(*tc.classification);
      r["terminal_critical_point"] = to_json(tc.critical_point);
    } else {
      r["terminal_classification"] = "not_a_critical_point";
    }
    runs.push_back(std::move(r));
  }
  nlohmann::json cps = nlohmann::json::array();
  for (const auto& r : res.critical_points) cps.push_back(to_json(r));
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : res.checks) checks.push_back({{"check", c.description}, {"pass", c.pass}});
  return {{"preset", res.name},       {"build_id", LSS_BUILD_ID},
          {"runs", runs},             {"critical_points", cps},
          {"expectations", checks},   {"expectations_met", res.expectations_met()},
          {"any_diverged", res.any_diverged}};
}

/// Writes <label>.csv and <label>.svg per run plus summary.json.
inline void write_preset_outputs(const PresetResult& res, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    const auto& label = res.runs[i].label;
    std::ofstream csv(dir / (label + ".csv"));
    if (!csv) throw InvalidInput("cannot write " + (dir / (label + ".csv")).string());
    write_csv(csv, res.trajectories[i]);
    std::ofstream svg(dir / (label + ".svg"));
    write_svg(svg, preset_plot(res, {i}, res.name + ": " + label));
  }
  std::vector<std::size_t> all(res.runs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::ofstream overview(dir / "overview.svg");
  write_svg(overview, preset_plot(res, all, res.name));
  std::ofstream summary(dir / "summary.json");
  summary << preset_summary(res).dump(2) << '\n';
}

}  // namespace lss
