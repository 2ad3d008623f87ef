#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "lss/io.hpp"
#include "lss/presets.hpp"
#include "lss/svg.hpp"
#include "oracles.hpp"

using lss::Game;
using lss::Rule;
using lss::RunConfig;

namespace {

std::string error_of(const std::string& text) {
  try {
    lss::game_from_string(text);
  } catch (const lss::InvalidInput& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

}  // namespace

TEST_CASE("game JSON round trip", "[io]") {
  const Game g = lss::game_from_string(R"({"kind":"quadratic","dx":1,"dy":1,"matrix":[[1,1],[1,0.1]]})");
  CHECK(g.kind() == lss::GameKind::Quadratic);
  CHECK(lss::game_hash(g) == lss::game_hash(oracle::counterexample()));
  const auto j = lss::game_to_json(g);
  CHECK(j["hash"] == lss::game_hash(g));
  CHECK(lss::game_hash(lss::game_from_json(j)) == lss::game_hash(g));
  CHECK(lss::game_from_string(R"({"kind":"toy2d"})").kind() == lss::GameKind::Toy2D);
  CHECK(lss::load_game("counterexample").matrix() == oracle::counterexample().matrix());
}

TEST_CASE("malformed game JSON names the offending field", "[io][error]") {
  CHECK(contains(error_of("{"), "malformed JSON"));
  CHECK(contains(error_of("[]"), "JSON object"));
  CHECK(contains(error_of(R"({"dx":1})"), "'kind'"));
  CHECK(contains(error_of(R"({"kind":"cubic"})"), "'kind'"));
  CHECK(contains(error_of(R"({"kind":"quadratic","dy":1,"matrix":[[1]]})"), "'dx'"));
  CHECK(contains(error_of(R"({"kind":"quadratic","dx":1,"dy":0,"matrix":[[1]]})"), "'dy'"));
  CHECK(contains(error_of(R"({"kind":"quadratic","dx":1,"dy":1})"), "'matrix'"));
  CHECK(contains(error_of(R"({"kind":"quadratic","dx":1,"dy":1,"matrix":[[1,0]]})"), "'matrix'"));
  CHECK(contains(error_of(R"({"kind":"quadratic","dx":1,"dy":1,"matrix":[[1,0],[0]]})"), "row 1"));
  CHECK(contains(error_of(R"({"kind":"quadratic","dx":1,"dy":1,"matrix":[[1,"a"],[0,1]]})"), "[0][1]"));
  CHECK(contains(error_of(R"({"kind":"quadratic","dx":1,"dy":1,"matrix":[[1,0],[0.5,1]]})"), "symmetric"));
  CHECK_THROWS_AS(lss::load_game("/nonexistent/game.json"), lss::InvalidInput);
}

TEST_CASE("near-symmetric matrices are accepted and symmetrized", "[io]") {
  const Game g = lss::game_from_string(R"({"kind":"quadratic","dx":1,"dy":1,"matrix":[[1,1],[1.0000000001,0.1]]})");
  CHECK(g.matrix()(0, 1) == g.matrix()(1, 0));
  CHECK(contains(error_of(R"({"kind":"quadratic","dx":1,"dy":1,"matrix":[[1,1],[1.00000001,0.1]]})"), "symmetric"));
}

TEST_CASE("run config JSON round trip", "[io]") {
  RunConfig c;
  c.rule = Rule::TVLSS;
  c.a = lss::StepSchedule::power(0.05, 0.8);
  c.b = lss::StepSchedule::power(0.2, 0.6, lss::Timescale::Fast);
  c.lambda.xi1 = 3e-4;
  c.damping.xi2 = 0.0;
  c.lambda_co = 2.5;
  c.x_fast = false;
  c.tv.u0 = Eigen::Vector2d(0.6, 0.8);
  c.stride = 9;
  c.seed = 123;
  const auto back = lss::run_config_from_json(nlohmann::json::parse(lss::to_json(c).dump()));
  CHECK(lss::to_json(back) == lss::to_json(c));
  CHECK(back.schedule_description() == c.schedule_description());
  CHECK(back.b.role() == lss::Timescale::Fast);

  CHECK_THROWS_AS(lss::run_config_from_json(nlohmann::json::parse(R"({"rule":"nope"})")), lss::InvalidInput);
  CHECK_THROWS_AS(lss::run_config_from_json(nlohmann::json::parse(R"({"stride":"x"})")), lss::InvalidInput);
  CHECK_THROWS_AS(lss::run_config_from_json(nlohmann::json::parse(R"({"a":3})")), lss::InvalidInput);
}

TEST_CASE("spectrum report JSON uses snake case keys", "[io]") {
  const auto r = lss::classify_point(oracle::counterexample(), Eigen::Vector2d(0, 0));
  const auto j = lss::to_json(r);
  CHECK(j["classification"] == "NonNashLASE");
  CHECK(j["jacobian_eigs"].size() == 2);
  CHECK(j["jacobian_eigs"][0]["re"].get<double>() == Catch::Approx(0.45));
  for (const auto& [k, v] : j.items()) {
    for (char ch : k) CHECK_FALSE(std::isupper(static_cast<unsigned char>(ch)));
  }
}

TEST_CASE("SVG output marks equilibria and rejects non-planar games", "[svg]") {
  const Game ce = oracle::counterexample();
  RunConfig cfg;
  cfg.rule = Rule::SimGD;
  cfg.a = lss::StepSchedule::constant(0.01);
  const auto t = lss::run_rule(ce, cfg, lss::TwoTimescaleState::at_rest(ce.point(Eigen::Vector2d(0.3, -0.3))), 200);
  lss::PlotSpec spec;
  spec.title = "a < b & c";
  spec.series.push_back({&t, "simgd", "#000000", false});
  spec.markers.push_back({Eigen::Vector2d(0, 0), lss::Classification::NonNashLASE});
  spec.markers.push_back({Eigen::Vector2d(0.1, 0.1), lss::Classification::DNE});
  lss::fit_axes(spec);
  const std::string svg = lss::to_svg(spec);
  CHECK(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
  CHECK(contains(svg, ">*</text>"));
  CHECK(contains(svg, ">x</text>"));
  CHECK(contains(svg, "a &lt; b &amp; c"));
  CHECK(contains(svg, "<polyline"));
  CHECK(svg.ends_with("</svg>\n"));

  // Plotting is read-only over the trajectory.
  const std::string csv = lss::to_csv(t);
  (void)lss::to_svg(spec);
  CHECK(lss::to_csv(t) == csv);

  const Game g3 = Game::quadratic(Eigen::Matrix3d::Identity(), 1, 2);
  const auto t3 = lss::run_rule(g3, cfg, lss::TwoTimescaleState::at_rest(g3.point(Eigen::Vector3d(1, 1, 1))), 3);
  lss::PlotSpec bad;
  bad.series.push_back({&t3, "3d", "#000000", false});
  CHECK_THROWS_AS(lss::to_svg(bad), lss::InvalidInput);
}

TEST_CASE("preset names and errors", "[preset]") {
  CHECK(lss::preset_names().size() == 3);
  try {
    lss::make_preset("figure3");
    FAIL("expected InvalidInput");
  } catch (const lss::InvalidInput& e) {
    for (const auto& n : lss::preset_names()) CHECK(contains(e.what(), n));
  }
  const auto p = lss::make_preset("toy2d-figure1");
  CHECK(p.runs.size() == 8);
}

TEST_CASE("counterexample preset meets its expectation table", "[preset]") {
  const auto res = lss::run_preset(lss::make_preset("counterexample-appB"));
  REQUIRE(res.critical_points.size() == 1);
  CHECK(res.critical_points[0].classification == lss::Classification::NonNashLASE);
  CHECK(res.runs.size() == 8);
  for (const auto& c : res.checks) {
    INFO(c.description);
    CHECK(c.pass);
  }
  CHECK(res.expectations_met());
  CHECK_FALSE(res.any_diverged);

  const auto dir = std::filesystem::temp_directory_path() / "lss_test_preset_outputs";
  std::filesystem::remove_all(dir);
  lss::write_preset_outputs(res, dir);
  const auto summary = nlohmann::json::parse(std::ifstream(dir / "summary.json"));
  CHECK(summary["preset"] == "counterexample-appB");
  CHECK(summary["expectations_met"] == true);
  CHECK(summary.contains("build_id"));
  for (const auto& r : summary["runs"]) {
    CHECK(std::filesystem::exists(dir / r["csv"].get<std::string>()));
    CHECK(std::filesystem::exists(dir / r["svg"].get<std::string>()));
    if (r["label"] == "lss") CHECK(r["terminal_classification"] == "not_a_critical_point");
    else CHECK(r["terminal_classification"] == "NonNashLASE");
  }
  CHECK(std::filesystem::exists(dir / "overview.svg"));
  std::filesystem::remove_all(dir);
}
