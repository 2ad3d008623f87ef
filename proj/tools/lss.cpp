// lss: command-line driver for the game dynamics library.
//
//   lss analyze  --game G [--box lo,hi] [--grid N] [--out F]
//   lss simulate --game G --rule R --init z [--steps N] ... [--out F.csv] [--svg F.svg]
//   lss preset   --name P [--out-dir D]
//   lss lockin   --game G --z-star z ... [--out F.json]
//
// Exit codes: 0 ok, 1 usage/config error, 2 analysis warning, 3 divergence.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lss/equilibria.hpp"
#include "lss/io.hpp"
#include "lss/presets.hpp"
#include "lss/runner.hpp"
#include "lss/stochastic.hpp"
#include "lss/svg.hpp"

namespace {

using lss::json;

enum Exit : int { kOk = 0, kUsage = 1, kWarning = 2, kDiverged = 3 };

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

/// Writes to `path`, or stdout when empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw lss::InvalidInput("cannot write '" + path + "'");
  out << text;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lss::InvalidInput("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw lss::InvalidInput("malformed JSON in '" + path + "': " + e.what());
  }
}

lss::SearchBox parse_box(const std::vector<double>& v, int d) {
  if (v.size() == 2) return {Eigen::VectorXd::Constant(d, v[0]), Eigen::VectorXd::Constant(d, v[1])};
  if (static_cast<int>(v.size()) == 2 * d) {
    lss::SearchBox b{Eigen::VectorXd(d), Eigen::VectorXd(d)};
    for (int i = 0; i < d; ++i) b.lo[i] = v[2 * i], b.hi[i] = v[2 * i + 1];
    return b;
  }
  throw lss::InvalidInput("--box takes lo,hi or lo_1,hi_1,...,lo_d,hi_d");
}

lss::SearchBox default_box(const lss::Game& g) {
  const double r = g.kind() == lss::GameKind::Toy2D ? 15.0 : 2.0;
  return {Eigen::VectorXd::Constant(g.dim(), -r), Eigen::VectorXd::Constant(g.dim(), r)};
}

// Flags shared by simulate and lockin.
struct DynamicsFlags {
  std::string rule = "lss";
  double a_c = 0.004, a_alpha = 0.0, b_c = 0.005, b_alpha = 0.0;
  double xi1 = 1e-4, xi2 = 1e-4, lambda_co = 1.0, lambda_sga = 1.0, xi_tv = 1e-2;
  bool x_slow = false;
  std::string noise = "none";
  double c_z = 0.0, c_v = 0.0, sigma = 0.5;
  std::uint64_t seed = 0;

  void attach(CLI::App* app) {
    app->add_option("--rule", rule, "simgd, 2ts-simgd, co, sga, lss, tvlss, simgd-ode, lss-ode");
    app->add_option("--a-c", a_c, "slow step constant (the step size of one-timescale rules)");
    app->add_option("--a-alpha", a_alpha, "slow step exponent: a_n = c/(1+n)^alpha");
    app->add_option("--b-c", b_c, "fast step constant");
    app->add_option("--b-alpha", b_alpha, "fast step exponent");
    app->add_option("--xi1", xi1, "lambda(z) scale");
    app->add_option("--xi2", xi2, "damping scale");
    app->add_option("--lambda-co", lambda_co, "consensus weight");
    app->add_option("--lambda-sga", lambda_sga, "SGA weight");
    app->add_option("--xi-tv", xi_tv, "TVLSS lambda_1 scale");
    app->add_flag("--x-slow", x_slow, "2ts-simgd: put x on the slow timescale instead of y");
    app->add_option("--noise", noise, "none, uniform, gaussian");
    app->add_option("--c-z", c_z, "noise bound on the z update");
    app->add_option("--c-v", c_v, "noise bound on the v update");
    app->add_option("--sigma", sigma, "gaussian scale as a fraction of the bound");
    app->add_option("--seed", seed, "noise seed");
  }

  /// Overlays explicitly given flags on `base`.
  lss::RunConfig config(const CLI::App* app, lss::RunConfig base) const {
    auto given = [&](const char* name) { return app->get_option(name)->count() > 0; };
    if (given("--rule")) base.rule = lss::parse_rule(rule);
    if (given("--a-c") || given("--a-alpha")) {
      base.a = lss::StepSchedule::power(given("--a-c") ? a_c : base.a.c(), given("--a-alpha") ? a_alpha : base.a.alpha(),
                                        lss::Timescale::Slow);
    }
    if (given("--b-c") || given("--b-alpha")) {
      base.b = lss::StepSchedule::power(given("--b-c") ? b_c : base.b.c(), given("--b-alpha") ? b_alpha : base.b.alpha(),
                                        lss::Timescale::Fast);
    }
    if (given("--xi1")) base.lambda.xi1 = xi1;
    if (given("--xi2")) base.damping.xi2 = xi2;
    if (given("--lambda-co")) base.lambda_co = lambda_co;
    if (given("--lambda-sga")) base.lambda_sga = lambda_sga;
    if (given("--xi-tv")) base.tv.lambda1.xi = xi_tv;
    if (given("--x-slow")) base.x_fast = !x_slow;
    if (given("--seed")) base.seed = seed;
    if (base.lambda.xi1 < 0 || base.damping.xi2 < 0) throw lss::InvalidInput("--xi1 and --xi2 must be nonnegative");
    return base;
  }

  lss::NoiseModel noise_model(const CLI::App* app, lss::NoiseModel base) const {
    auto given = [&](const char* name) { return app->get_option(name)->count() > 0; };
    if (given("--noise")) base.kind = lss::parse_noise_kind(noise);
    if (given("--c-z")) base.c_z = c_z;
    if (given("--c-v")) base.c_v = c_v;
    if (given("--sigma")) base.sigma = sigma;
    if (given("--seed")) base.seed = seed;
    return lss::NoiseModel::validated(base);
  }
};

// ---------------------------------------------------------------- analyze

struct AnalyzeCmd {
  std::string game;
  std::vector<double> box;
  int grid = 0;
  std::string out;

  void attach(CLI::App* app) {
    app->add_option("--game", game, "game JSON file, or toy2d / counterexample")->required();
    app->add_option("--box", box, "search box lo,hi (all axes) or per-axis pairs")->delimiter(',');
    app->add_option("--grid", grid, "Newton seeds per axis (default 40 for toy2d, 5 otherwise)");
    app->add_option("--out", out, "output JSON (default stdout)");
  }

  int run() const {
    const lss::Game g = lss::load_game(game);
    const lss::SearchBox b = box.empty() ? default_box(g) : parse_box(box, g.dim());
    const int n = grid > 0 ? grid : (g.kind() == lss::GameKind::Toy2D ? 40 : 5);
    const auto found = lss::find_critical_points(g, b, n);
    json arr = json::array();
    bool warn = false;
    for (const auto& cp : found.points) {
      const auto r = lss::classify(g, cp);
      warn = warn || r.classification == lss::Classification::NonHyperbolic;
      arr.push_back(lss::to_json(r));
    }
    emit(out, arr.dump(2) + "\n");
    std::fprintf(stderr, "analyze: %zu critical point(s) from %d seeds (%d singular, %d unconverged, %d outside box)\n",
                 found.points.size(), found.seeds, found.singular_seeds, found.unconverged_seeds, found.outside_box);
    return warn ? kWarning : kOk;
  }
};

// --------------------------------------------------------------- simulate

struct SimulateCmd {
  std::string game;
  std::vector<double> init;
  long steps = 1000;
  long start_n = 0;
  long stride = 1;
  double dt = 0.01;
  std::string out, json_out, svg, config, config_out;
  DynamicsFlags dyn;
  CLI::App* app = nullptr;

  void attach(CLI::App* a) {
    app = a;
    a->add_option("--game", game, "game JSON file, or toy2d / counterexample");
    a->add_option("--init", init, "initial z, comma separated")->delimiter(',');
    a->add_option("--steps", steps, "iterations (or RK4 steps for ODE rules)");
    a->add_option("--start-n", start_n, "initial iteration counter n0 for the step schedules");
    a->add_option("--stride", stride, "record every k-th state");
    a->add_option("--dt", dt, "RK4 step for ODE rules");
    dyn.attach(a);
    a->add_option("--out", out, "trajectory CSV (default stdout)");
    a->add_option("--json", json_out, "trajectory JSON mirror");
    a->add_option("--svg", svg, "SVG plot (2-D games only)");
    a->add_option("--config", config, "replay a config echo; explicit flags override it");
    a->add_option("--config-out", config_out, "write the config echo here (default <out>.config.json)");
  }

  int run() const {
    auto given = [&](const char* name) { return app->get_option(name)->count() > 0; };
    json base = config.empty() ? json::object() : read_json_file(config);

    const std::string game_src = given("--game") ? game : base.value("game_source", std::string{});
    if (game_src.empty()) throw lss::InvalidInput("--game is required");
    const lss::Game g = lss::load_game(game_src);

    lss::RunConfig cfg = base.contains("run") ? lss::run_config_from_json(base["run"]) : lss::RunConfig{};
    cfg = dyn.config(app, cfg);
    if (given("--stride")) cfg.stride = stride;
    if (given("--dt")) cfg.dt = dt;
    lss::NoiseModel nm;
    if (base.contains("noise")) {
      const json& n = base["noise"];
      nm = {lss::parse_noise_kind(n.value("kind", "none")), n.value("c_z", 0.0), n.value("c_v", 0.0),
            n.value("sigma", 0.5), n.value("seed", std::uint64_t{0})};
    }
    nm = dyn.noise_model(app, nm);
    if (nm.kind != lss::NoiseKind::None && lss::is_ode(cfg.rule)) {
      throw lss::InvalidInput("noise is only defined for discrete step rules");
    }

    std::vector<double> z0 = given("--init") ? init : base.value("init", std::vector<double>{});
    if (z0.empty()) throw lss::InvalidInput("--init is required");
    if (static_cast<int>(z0.size()) != g.dim()) {
      throw lss::InvalidInput("--init has " + std::to_string(z0.size()) + " coordinates, game has " +
                              std::to_string(g.dim()));
    }
    const long n_steps = given("--steps") ? steps : base.value("steps", steps);
    const long n0 = given("--start-n") ? start_n : base.value("start_n", start_n);

    json echo = {{"game_source", game_src}, {"game", lss::game_to_json(g)}, {"run", lss::to_json(cfg)},
                 {"noise", lss::to_json(nm)}, {"init", z0},
                 {"steps", n_steps},         {"start_n", n0}};

    const lss::StrategyPoint zp = g.point(to_vector(z0));
    lss::TwoTimescaleState s0 = lss::TwoTimescaleState::at_rest(zp, cfg.rule == lss::Rule::TVLSS, n0);
    const lss::Trajectory t = lss::run_noisy(g, cfg, s0, n_steps, nm);

    emit(out, lss::to_csv(t));
    const std::string echo_path = !config_out.empty() ? config_out : (out.empty() || out == "-" ? "" : out + ".config.json");
    if (!echo_path.empty()) emit(echo_path, echo.dump(2) + "\n");
    if (!json_out.empty()) {
      json j = lss::to_json(t);
      j["config"] = echo;
      emit(json_out, j.dump(2) + "\n");
    }
    if (!svg.empty()) {
      if (g.dim() != 2) throw lss::InvalidInput("--svg needs a 2-D game");
      lss::PlotSpec spec;
      spec.title = std::string(lss::to_string(cfg.rule)) + " on " + g.name();
      spec.series.push_back({&t, lss::to_string(cfg.rule), lss::default_palette()[0], !lss::is_ode(cfg.rule)});
      for (const auto& cp : lss::find_critical_points(g, default_box(g), g.kind() == lss::GameKind::Toy2D ? 40 : 5).points) {
        spec.markers.push_back({Eigen::Vector2d(cp.z.coords()[0], cp.z.coords()[1]), lss::classify(g, cp).classification});
      }
      lss::fit_axes(spec);
      emit(svg, lss::to_svg(spec));
    }
    if (t.diverged) {
      std::fprintf(stderr, "simulate: diverged at n=%ld (%s)\n", t.diverged_at, t.divergence_reason.c_str());
      return kDiverged;
    }
    return kOk;
  }
};

// ----------------------------------------------------------------- preset

struct PresetCmd {
  std::string name;
  std::string out_dir;

  void attach(CLI::App* app) {
    app->add_option("--name", name, "toy2d-figure1, toy2d-figure2, counterexample-appB")->required();
    app->add_option("--out-dir", out_dir, "output directory (default ./preset-<name>)");
  }

  int run() const {
    const lss::Preset p = lss::make_preset(name);
    const lss::PresetResult res = lss::run_preset(p);
    const std::filesystem::path dir = out_dir.empty() ? "preset-" + name : out_dir;
    lss::write_preset_outputs(res, dir);
    for (const auto& c : res.checks) std::printf("[%s] %s\n", c.pass ? "PASS" : "FAIL", c.description.c_str());
    std::printf("summary: %s\n", (dir / "summary.json").string().c_str());
    if (res.any_diverged) return kDiverged;
    return res.expectations_met() ? kOk : kWarning;
  }
};

// ----------------------------------------------------------------- lockin

struct LockinCmd {
  std::string game = "toy2d";
  std::vector<double> z_star;
  double r0 = 0.2, epsilon = 0.05, v_radius = 1e-3;
  long n0 = 1000, n1 = -1, horizon = -1;
  int trials = 200;
  std::string out, trials_csv;
  DynamicsFlags dyn;
  CLI::App* app = nullptr;

  void attach(CLI::App* a) {
    app = a;
    a->add_option("--game", game, "game JSON file, or toy2d / counterexample");
    a->add_option("--z-star", z_star, "target equilibrium (polished by Newton; must be a DNE)")->delimiter(',')->required();
    a->add_option("--r0", r0, "initialization radius");
    a->add_option("--epsilon", epsilon, "lock-in radius (< r0)");
    a->add_option("--v-radius", v_radius, "initial distance of v from v*(z)");
    a->add_option("--n0", n0, "starting iteration");
    a->add_option("--n1", n1, "start of the lock-in window (default n0+20000)");
    a->add_option("--horizon", horizon, "last iteration (default n1+10000)");
    a->add_option("--trials", trials, "Monte Carlo trials");
    a->add_option("--out", out, "result JSON (default stdout)");
    a->add_option("--trials-csv", trials_csv, "per-trial outcomes CSV");
    dyn.attach(a);
  }

  int run() const {
    const lss::Game g = lss::load_game(game);
    lss::RunConfig base;
    base.rule = lss::Rule::LSS;
    base.a = lss::StepSchedule::power(0.05, 0.8, lss::Timescale::Slow);
    base.b = lss::StepSchedule::power(0.2, 0.6, lss::Timescale::Fast);
    base.diagnostics = false;
    const lss::RunConfig cfg = dyn.config(app, base);
    lss::NoiseModel nm{lss::NoiseKind::BoundedUniform, 0.05, 0.05, 0.5, 0};
    nm = dyn.noise_model(app, nm);

    if (static_cast<int>(z_star.size()) != g.dim()) throw lss::InvalidInput("--z-star has the wrong dimension");
    const Eigen::VectorXd guess = to_vector(z_star);
    const auto found = lss::find_critical_points(
        g, {guess.array() - 1e-2, guess.array() + 1e-2}, std::vector<Eigen::VectorXd>{guess});
    if (found.points.empty()) throw lss::InvalidInput("--z-star is not within 1e-2 of a critical point");
    const auto report = lss::classify(g, found.points.front(), cfg.lambda, cfg.damping);
    if (report.classification != lss::Classification::DNE) {
      throw lss::InvalidInput(std::string("--z-star is classified ") + lss::to_string(report.classification) +
                              ", lock-in needs a DNE");
    }

    lss::LockInConfig lc;
    lc.z_star = report.z;
    lc.r0 = r0;
    lc.epsilon = epsilon;
    lc.n0 = n0;
    lc.n1 = n1 >= 0 ? n1 : n0 + 20000;
    lc.horizon = horizon >= 0 ? horizon : lc.n1 + 10000;
    lc.trials = trials;
    lc.v_radius = v_radius;
    const auto est = lss::estimate_lockin(g, cfg, lc, nm);

    json j = lss::to_json(est);
    j["config"] = {{"game", lss::game_to_json(g)}, {"run", lss::to_json(cfg)},   {"noise", lss::to_json(nm)},
                   {"z_star", to_std(lc.z_star)},  {"r0", lc.r0},                {"epsilon", lc.epsilon},
                   {"n0", lc.n0},                  {"n1", lc.n1},                {"horizon", lc.horizon},
                   {"v_radius", lc.v_radius}};
    emit(out, j.dump(2) + "\n");
    if (!trials_csv.empty()) {
      std::ofstream csv(trials_csv);
      if (!csv) throw lss::InvalidInput("cannot write '" + trials_csv + "'");
      lss::write_trials_csv(csv, est);
    }
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local symplectic surgery and gradient dynamics for zero-sum games"};
  app.require_subcommand(1);
  AnalyzeCmd analyze;
  SimulateCmd simulate;
  PresetCmd preset;
  LockinCmd lockin;
  analyze.attach(app.add_subcommand("analyze", "find and classify critical points"));
  simulate.attach(app.add_subcommand("simulate", "run one rule from one initialization"));
  preset.attach(app.add_subcommand("preset", "run a canned experiment and check its expected outcome"));
  lockin.attach(app.add_subcommand("lockin", "Monte Carlo lock-in probability at a DNE"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (app.got_subcommand("analyze")) return analyze.run();
    if (app.got_subcommand("simulate")) return simulate.run();
    if (app.got_subcommand("preset")) return preset.run();
    if (app.got_subcommand("lockin")) return lockin.run();
  } catch (const lss::InvalidInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const lss::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  return kUsage;
}
