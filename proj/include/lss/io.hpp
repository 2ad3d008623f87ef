#pragma once

// JSON game files and report serialization.

#include <complex>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lss/equilibria.hpp"
#include "lss/errors.hpp"
#include "lss/game.hpp"
#include "lss/runner.hpp"
#include "lss/schedule.hpp"
#include "lss/stochastic.hpp"
#include "lss/trajectory.hpp"

namespace lss {

using nlohmann::json;

namespace detail {

inline const json& require(const json& j, const char* field) {
  if (!j.contains(field)) throw InvalidInput(std::string("game: missing field '") + field + "'");
  return j.at(field);
}

inline int require_dim(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_number_integer() || v.get<long>() < 1) {
    throw InvalidInput(std::string("game: field '") + field + "' must be a positive integer");
  }
  return v.get<int>();
}

}  // namespace detail

/// {"kind":"quadratic","dx":..,"dy":..,"matrix":[[..],..]} or {"kind":"toy2d"}.
/// Matrices asymmetric beyond 1e-9 are rejected; smaller asymmetry is averaged out.
inline Game game_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("game: top level must be a JSON object");
  const json& kind = detail::require(j, "kind");
  if (!kind.is_string()) throw InvalidInput("game: field 'kind' must be a string");
  const std::string k = kind.get<std::string>();
  if (k == "toy2d") return Game::toy2d();
  if (k != "quadratic") throw InvalidInput("game: field 'kind' must be \"quadratic\" or \"toy2d\", got \"" + k + "\"");

  const int dx = detail::require_dim(j, "dx");
  const int dy = detail::require_dim(j, "dy");
  const int d = dx + dy;
  const json& rows = detail::require(j, "matrix");
  if (!rows.is_array() || static_cast<int>(rows.size()) != d) {
    throw InvalidInput("game: field 'matrix' must be an array of " + std::to_string(d) + " rows");
  }
  Eigen::MatrixXd m(d, d);
  for (int r = 0; r < d; ++r) {
    const json& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != d) {
      throw InvalidInput("game: field 'matrix' row " + std::to_string(r) + " must have " + std::to_string(d) +
                         " numbers");
    }
    for (int c = 0; c < d; ++c) {
      const json& e = row[static_cast<std::size_t>(c)];
      if (!e.is_number()) {
        throw InvalidInput("game: field 'matrix' entry [" + std::to_string(r) + "][" + std::to_string(c) +
                           "] is not a number");
      }
      m(r, c) = e.get<double>();
    }
  }
  if (!m.allFinite()) throw InvalidInput("game: field 'matrix' has non-finite entries");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw InvalidInput("game: field 'matrix' is not symmetric within 1e-9");
  }
  return Game::quadratic(0.5 * (m + m.transpose()), dx, dy);
}

inline Game game_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("game: malformed JSON: ") + e.what());
  }
  return game_from_json(j);
}

/// Loads a game file, or a built-in by name ("toy2d", "counterexample").
inline Game load_game(const std::string& path_or_name) {
  if (path_or_name == "toy2d") return Game::toy2d();
  if (path_or_name == "counterexample") {
    Eigen::Matrix2d m;
    m << 1.0, 1.0, 1.0, 0.1;
    return Game::quadratic(m, 1, 1);
  }
  std::ifstream in(path_or_name);
  if (!in) throw InvalidInput("game: cannot open '" + path_or_name + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return game_from_string(ss.str());
}

inline json game_to_json(const Game& g) {
  json j;
  j["kind"] = to_string(g.kind());
  j["dx"] = g.dx();
  j["dy"] = g.dy();
  if (g.kind() == GameKind::Quadratic) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < g.matrix().rows(); ++r) rows.push_back(to_json(Eigen::VectorXd(g.matrix().row(r))));
    j["matrix"] = rows;
  }
  j["hash"] = game_hash(g);
  return j;
}

inline json complex_list(const std::vector<std::complex<double>>& v) {
  json a = json::array();
  for (const auto& c : v) a.push_back({{"re", c.real()}, {"im", c.imag()}});
  return a;
}

inline json to_json(const SpectrumReport& r) {
  return {{"z", to_json(r.z)},
          {"residual", r.residual},
          {"classification", to_string(r.classification)},
          {"hyperbolic", r.hyperbolic},
          {"jacobian_eigs", complex_list(r.jacobian_eigs)},
          {"s_eigs_x", r.s_eigs_x},
          {"s_eigs_y", r.s_eigs_y},
          {"h_eigs", complex_list(r.h_eigs)}};
}

inline json to_json(const LockInEstimate& e) {
  return {{"trials", e.trials},
          {"successes", e.successes},
          {"p_hat", e.p_hat},
          {"wilson", {e.wilson.first, e.wilson.second}},
          {"wall_seconds", e.wall_seconds}};
}

inline json to_json(const StepSchedule& s) { return {{"c", s.c()}, {"alpha", s.alpha()}}; }

inline json to_json(const RunConfig& c) {
  json j = {{"rule", to_string(c.rule)},
            {"a", to_json(c.a)},
            {"b", to_json(c.b)},
            {"xi1", c.lambda.xi1},
            {"xi2", c.damping.xi2},
            {"lambda_co", c.lambda_co},
            {"lambda_sga", c.lambda_sga},
            {"x_fast", c.x_fast},
            {"xi_tv", c.tv.lambda1.xi},
            {"dt", c.dt},
            {"stride", c.stride},
            {"diagnostics", c.diagnostics},
            {"seed", c.seed}};
  if (c.tv.u0.size()) j["u0"] = to_json(c.tv.u0);
  return j;
}

namespace detail {
template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(std::string("config: field '") + key + "' has the wrong type");
  }
}

inline StepSchedule schedule_from_json(const json& j, const char* key, const StepSchedule& fallback) {
  if (!j.contains(key)) return fallback;
  const json& s = j.at(key);
  if (!s.is_object()) throw InvalidInput(std::string("config: field '") + key + "' must be an object {c, alpha}");
  return StepSchedule::power(get_or(s, "c", fallback.c()), get_or(s, "alpha", fallback.alpha()), fallback.role());
}
}  // namespace detail

/// Inverse of to_json(RunConfig); absent keys keep the values in `base`.
inline RunConfig run_config_from_json(const json& j, RunConfig base = {}) {
  if (!j.is_object()) throw InvalidInput("config: must be a JSON object");
  if (j.contains("rule")) base.rule = parse_rule(detail::get_or<std::string>(j, "rule", ""));
  base.a = detail::schedule_from_json(j, "a", base.a);
  base.b = detail::schedule_from_json(j, "b", base.b);
  base.lambda.xi1 = detail::get_or(j, "xi1", base.lambda.xi1);
  base.damping.xi2 = detail::get_or(j, "xi2", base.damping.xi2);
  base.lambda_co = detail::get_or(j, "lambda_co", base.lambda_co);
  base.lambda_sga = detail::get_or(j, "lambda_sga", base.lambda_sga);
  base.x_fast = detail::get_or(j, "x_fast", base.x_fast);
  base.tv.lambda1.xi = detail::get_or(j, "xi_tv", base.tv.lambda1.xi);
  if (j.contains("u0")) {
    const auto v = detail::get_or<std::vector<double>>(j, "u0", {});
    base.tv.u0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  base.dt = detail::get_or(j, "dt", base.dt);
  base.stride = detail::get_or(j, "stride", base.stride);
  base.diagnostics = detail::get_or(j, "diagnostics", base.diagnostics);
  base.seed = detail::get_or(j, "seed", base.seed);
  return base;
}

inline json to_json(const NoiseModel& m) {
  return {{"kind", to_string(m.kind)}, {"c_z", m.c_z}, {"c_v", m.c_v}, {"sigma", m.sigma}, {"seed", m.seed}};
}

}  // namespace lss
