#include <catch_amalgamated.hpp>

#include <random>

#include "lss/autodiff.hpp"
#include "lss/dual.hpp"
#include "lss/game.hpp"
#include "lss/jvp.hpp"
#include "oracles.hpp"

using Catch::Approx;
using lss::Game;

TEST_CASE("strategy point validates its split", "[game]") {
  CHECK_THROWS_AS(lss::StrategyPoint(Eigen::VectorXd::Zero(3), 1, 1), lss::InvalidInput);
  CHECK_THROWS_AS(lss::StrategyPoint(Eigen::VectorXd::Zero(2), 0, 2), lss::InvalidInput);
  const lss::StrategyPoint z(Eigen::Vector3d(1, 2, 3), 2, 1);
  CHECK(z.x().size() == 2);
  CHECK(z.y()[0] == 3.0);
}

TEST_CASE("quadratic game rejects bad matrices", "[game]") {
  Eigen::Matrix2d asym;
  asym << 1, 2, 0, 1;
  CHECK_THROWS_AS(Game::quadratic(asym, 1, 1), lss::InvalidInput);
  CHECK_THROWS_AS(Game::quadratic(Eigen::Matrix3d::Identity(), 1, 1), lss::InvalidInput);
  CHECK_THROWS_AS(Game::quadratic(Eigen::Matrix2d::Identity(), 0, 2), lss::InvalidInput);
}

TEST_CASE("eval_cost examples", "[game]") {
  const Game ce = oracle::counterexample();
  CHECK(lss::eval_cost(ce, ce.point(Eigen::Vector2d(0, 0))) == 0.0);
  CHECK(lss::eval_cost(ce, ce.point(Eigen::Vector2d(1, 1))) == Approx(1.55).epsilon(1e-15));
  const Game t = Game::toy2d();
  CHECK(lss::eval_cost(t, t.point(Eigen::Vector2d(0, 0))) == 0.0);
  CHECK_THROWS_AS(lss::eval_cost(t, lss::StrategyPoint(Eigen::Vector3d::Zero(), 2, 1)), lss::InvalidInput);
}

TEST_CASE("eval_omega examples", "[game]") {
  const Game ce = oracle::counterexample();
  const Eigen::VectorXd w = lss::eval_omega(ce, ce.point(Eigen::Vector2d(1, 0)));
  CHECK(w[0] == 1.0);
  CHECK(w[1] == -1.0);
  // (x + y, -x - 0.1y)
  const Eigen::VectorXd w2 = lss::eval_omega(ce, ce.point(Eigen::Vector2d(0.7, -2.0)));
  CHECK(w2[0] == Approx(0.7 - 2.0));
  CHECK(w2[1] == Approx(-0.7 + 0.2));
  CHECK(lss::eval_omega(ce, ce.point(Eigen::Vector2d(0, 0))).norm() == 0.0);

  const Game t = Game::toy2d();
  const Eigen::Vector2d z(0.3, -0.2);
  CHECK((lss::eval_omega(t, t.point(z)) - oracle::fd_omega(t, z)).norm() < 1e-7);
}

TEST_CASE("eval_omega matches finite differences on random points", "[game][property]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (const Game& g : {Game::toy2d(), oracle::counterexample(), oracle::smooth_user_game()}) {
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd z(g.dim());
      for (int i = 0; i < g.dim(); ++i) z[i] = u(rng);
      const Eigen::VectorXd ad = lss::eval_omega(g, g.point(z));
      const Eigen::VectorXd fd = oracle::fd_omega(g, z);
      INFO(g.name() << " at " << z.transpose());
      CHECK((ad - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("counterexample Jacobian and its split", "[game]") {
  const Game ce = oracle::counterexample();
  const auto j = lss::eval_jacobian(ce, ce.point(Eigen::Vector2d(0.4, -1.3)));
  Eigen::Matrix2d expected;
  expected << 1, 1, -1, -0.1;
  CHECK(j.matrix.isApprox(expected, 0.0));
  CHECK(j.symmetric_part == Eigen::Matrix2d(Eigen::Vector2d(1, -0.1).asDiagonal()));
  Eigen::Matrix2d a;
  a << 0, 1, -1, 0;
  CHECK(j.antisymmetric_part == a);
  // Constant in z, bitwise.
  const auto j2 = lss::eval_jacobian(ce, ce.point(Eigen::Vector2d(-7, 3)));
  CHECK(j2.matrix == j.matrix);
}

TEST_CASE("Jacobian split invariants on every game", "[game][property]") {
  std::mt19937_64 rng(5);
  for (const Game& g : {Game::toy2d(), oracle::counterexample(), oracle::smooth_user_game(),
                        oracle::random_quadratic(rng, 2, 3)}) {
    for (int k = 0; k < 20; ++k) {
      const Eigen::VectorXd z = oracle::random_vector(rng, g.dim(), 2.0);
      const auto j = lss::eval_jacobian(g, g.point(z));
      CHECK((j.symmetric_part + j.antisymmetric_part) == j.matrix);
      CHECK((j.symmetric_part - j.symmetric_part.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((j.antisymmetric_part + j.antisymmetric_part.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(j.antisymmetric_part.topLeftCorner(g.dx(), g.dx()).isZero(0.0));
      CHECK(j.antisymmetric_part.bottomRightCorner(g.dy(), g.dy()).isZero(0.0));
      const Eigen::MatrixXd fd = oracle::fd_omega_jacobian(g, z);
      CHECK((j.matrix - fd).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
      // S blocks are D²xx f and -D²yy f.
      const Eigen::MatrixXd hf =
          oracle::fd_jacobian([&](const Eigen::VectorXd& p) -> Eigen::VectorXd { return g.signs().cwiseProduct(lss::eval_omega(g, g.point(p))); }, z);
      CHECK((j.symmetric_part.topLeftCorner(g.dx(), g.dx()) - hf.topLeftCorner(g.dx(), g.dx())).cwiseAbs().maxCoeff() <
            1e-5 * std::max(1.0, hf.cwiseAbs().maxCoeff()));
      CHECK((j.symmetric_part.bottomRightCorner(g.dy(), g.dy()) + hf.bottomRightCorner(g.dy(), g.dy()))
                .cwiseAbs()
                .maxCoeff() < 1e-5 * std::max(1.0, hf.cwiseAbs().maxCoeff()));
    }
  }
}

namespace {
// Overloads that disagree: the second-order path sees a one-sided coupling,
// so the "Hessian" it produces is not symmetric.
struct Lopsided {
  double operator()(std::span<const double> z) const { return z[0] * z[0] + z[1] * z[1]; }
  lss::Dual1 operator()(std::span<const lss::Dual1> z) const { return z[0] * z[0] + z[1] * z[1]; }
  lss::Dual2 operator()(std::span<const lss::Dual2> z) const {
    lss::Dual2 r = z[0] * z[0] + z[1] * z[1];
    r.d.d += 3.0 * z[1].v.d * z[0].d.v;
    return r;
  }
};
}  // namespace

TEST_CASE("inconsistent user cost trips the split check", "[game]") {
  const Game g = Game::user_scalar("lopsided", 1, 1, Lopsided{});
  CHECK_THROWS_AS(lss::eval_jacobian(g, g.point(Eigen::Vector2d(1, 1))), lss::NumericalError);
  const Game ok = Game::user_scalar("coupled", 1, 1, [](auto z) { return z[0] * z[0] + 3.0 * z[0] * z[1]; });
  CHECK_NOTHROW(lss::eval_jacobian(ok, ok.point(Eigen::Vector2d(1, 1))));
}

TEST_CASE("eval_omega reports non-finite values", "[game]") {
  const Game g = Game::user_scalar("blowup", 1, 1, [](auto z) {
    using std::exp;
    return exp(z[0] * z[0]) + z[1];
  });
  CHECK_THROWS_AS(lss::eval_omega(g, g.point(Eigen::Vector2d(40.0, 0.0))), lss::NumericalError);
}

TEST_CASE("game hash is stable and discriminating", "[game]") {
  CHECK(lss::game_hash(oracle::counterexample()) == lss::game_hash(oracle::counterexample()));
  CHECK(lss::game_hash(oracle::counterexample()) != lss::game_hash(Game::toy2d()));
  CHECK(lss::game_hash(Game::toy2d()).size() == 16);
}

// ---------------------------------------------------------------- dual / AD

TEST_CASE("dual arithmetic follows the product and quotient rules", "[autodiff]") {
  const lss::Dual1 a{3.0, 2.0}, b{-1.5, 0.5};
  const auto p = a * b;
  CHECK(p.v == -4.5);
  CHECK(p.d == Approx(2.0 * -1.5 + 3.0 * 0.5));
  const auto q = a / b;
  CHECK(q.d == Approx((2.0 * -1.5 - 3.0 * 0.5) / (1.5 * 1.5)));
  const auto e = exp(a);
  CHECK(e.d == Approx(std::exp(3.0) * 2.0));
  CHECK(cos(a).d == Approx(-std::sin(3.0) * 2.0));
  CHECK(tanh(a).d == Approx((1 - std::tanh(3.0) * std::tanh(3.0)) * 2.0));
  CHECK(pow(a, 2.5).d == Approx(2.5 * std::pow(3.0, 1.5) * 2.0));
}

TEST_CASE("nested duals give mixed second derivatives", "[autodiff]") {
  // f = x²y: ∂²f/∂x∂y = 2x.
  const lss::Dual2 x{lss::Dual1{1.5, 1.0}, lss::Dual1{0.0, 0.0}};
  const lss::Dual2 y{lss::Dual1{2.0, 0.0}, lss::Dual1{1.0, 0.0}};
  const lss::Dual2 f = x * x * y;
  CHECK(f.d.d == Approx(3.0));
}

TEST_CASE("grad_scalar examples", "[autodiff]") {
  Eigen::Matrix2d m;
  m << 1, 1, 1, 0.1;
  const lss::QuadraticCost q{m};
  const Eigen::VectorXd g = lss::grad_scalar(q, Eigen::Vector2d(1, 1));
  CHECK(g[0] == Approx(2.0));
  CHECK(g[1] == Approx(1.1));

  const auto constant = [](auto z) { using T = typename decltype(z)::value_type; return T(4.2) + 0.0 * z[0]; };
  CHECK(lss::grad_scalar(constant, Eigen::Vector2d(3, -1)).norm() == 0.0);

  const Game t = Game::toy2d();
  const Eigen::Vector2d z(0.5, 0.5);
  const Eigen::VectorXd ad = lss::grad_scalar(t.cost_fn(), z);
  CHECK((t.signs().cwiseProduct(ad) - oracle::fd_omega(t, z)).norm() < 1e-7);
}

TEST_CASE("grad_scalar reports the offending coordinate", "[autodiff]") {
  // Only the second tangent overflows.
  const auto f = [](auto z) { return z[0] + z[1] * z[1] * 1e300; };
  try {
    lss::grad_scalar(f, Eigen::Vector2d(1.0, 1e10));
    FAIL("expected a NumericalError");
  } catch (const lss::NumericalError& e) {
    CHECK(std::string(e.what()).find("coordinate 1") != std::string::npos);
  }
}

// ---------------------------------------------------------------- JVPs

TEST_CASE("signed block selector", "[jvp]") {
  const lss::SignedBlockSelector s(2, 1);
  const Eigen::Vector3d u(1, 2, 3);
  CHECK(s.plus_minus(s.plus_minus(u)) == Eigen::VectorXd(u));
  CHECK(s.minus_plus(u) == Eigen::VectorXd(Eigen::Vector3d(-1, -2, 3)));
  CHECK(s.x_part(u) + s.y_part(u) == Eigen::VectorXd(u));
}

TEST_CASE("jt_vec and j_vec examples on the counterexample", "[jvp]") {
  const Game ce = oracle::counterexample();
  const auto z = ce.point(Eigen::Vector2d(0.2, 0.9));
  const Eigen::VectorXd jtu = lss::jt_vec(ce, z, Eigen::Vector2d(1, 0));
  CHECK(jtu == Eigen::VectorXd(Eigen::Vector2d(1, 1)));
  const Eigen::VectorXd jv = lss::j_vec_via_two_jtv(ce, z, Eigen::Vector2d(1, 1));
  CHECK(jv[0] == Approx(2.0));
  CHECK(jv[1] == Approx(-1.1));
  CHECK(lss::jt_vec(ce, z, Eigen::Vector2d::Zero()).norm() == 0.0);
  CHECK(lss::j_vec_via_two_jtv(ce, z, Eigen::Vector2d::Zero()).norm() == 0.0);
  // The dual path agrees with the closed form.
  CHECK((lss::jt_vec_autodiff(ce, z, Eigen::Vector2d(0.3, -2)) - lss::jt_vec(ce, z, Eigen::Vector2d(0.3, -2))).norm() <
        1e-14);
  CHECK_THROWS_AS(lss::jt_vec(ce, z, Eigen::Vector3d::Ones()), lss::InvalidInput);
}

TEST_CASE("matrix-free products match dense J on random inputs", "[jvp][property]") {
  std::mt19937_64 rng(2024);
  const Game t = Game::toy2d();
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd z = oracle::random_vector(rng, 2, 5.0);
    const Eigen::VectorXd v = oracle::random_vector(rng, 2);
    const Eigen::MatrixXd j = lss::eval_jacobian(t, t.point(z)).matrix;
    CHECK((lss::j_vec_via_two_jtv(t, t.point(z), v) - j * v).norm() <= 1e-8 * (j * v).norm());
    CHECK((lss::jt_vec(t, t.point(z), v) - j.transpose() * v).norm() <= 1e-8 * (j.transpose() * v).norm());
  }
  const Game u = oracle::smooth_user_game();
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd z = oracle::random_vector(rng, 4);
    const Eigen::VectorXd v = oracle::random_vector(rng, 4);
    const Eigen::MatrixXd j = lss::eval_jacobian(u, u.point(z)).matrix;
    CHECK((lss::j_vec_via_two_jtv(u, u.point(z), v) - j * v).norm() <= 1e-8 * (j * v).norm());
  }
}

TEST_CASE("jt_vec is linear and consistent with the chain rule", "[jvp][property]") {
  std::mt19937_64 rng(99);
  for (const Game& g : {Game::toy2d(), oracle::smooth_user_game()}) {
    for (int k = 0; k < 20; ++k) {
      const auto z = g.point(oracle::random_vector(rng, g.dim(), 2.0));
      const Eigen::VectorXd u1 = oracle::random_vector(rng, g.dim()), u2 = oracle::random_vector(rng, g.dim());
      const double a = 0.7, b = -1.9;
      const Eigen::VectorXd lhs = lss::jt_vec(g, z, a * u1 + b * u2);
      const Eigen::VectorXd rhs = a * lss::jt_vec(g, z, u1) + b * lss::jt_vec(g, z, u2);
      CHECK((lhs - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()));

      // ∇ ½‖ω‖² = Jᵀω
      const auto half_sq = [&](const Eigen::VectorXd& p) { return 0.5 * lss::eval_omega(g, g.point(p)).squaredNorm(); };
      Eigen::VectorXd fd(g.dim());
      for (int i = 0; i < g.dim(); ++i) {
        Eigen::VectorXd p = z.coords(), m = z.coords();
        p[i] += 1e-6;
        m[i] -= 1e-6;
        fd[i] = (half_sq(p) - half_sq(m)) / 2e-6;
      }
      const Eigen::VectorXd jtw = lss::jt_vec(g, z, lss::eval_omega(g, z));
      CHECK((jtw - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("zero-sum structure is what makes two JᵀVPs give Jv", "[jvp][property]") {
  // For a general (non-gradient-signed) matrix the identity fails; for
  // every zero-sum game it holds.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Game g = oracle::random_quadratic(rng, 1 + trial % 3, 1 + (trial / 3) % 3);
    const auto z = g.point(oracle::random_vector(rng, g.dim()));
    const Eigen::VectorXd v = oracle::random_vector(rng, g.dim());
    const Eigen::MatrixXd j = lss::eval_jacobian(g, z).matrix;
    CHECK((lss::j_vec_via_two_jtv(g, z, v) - j * v).norm() <= 1e-8 * std::max(1e-300, (j * v).norm()));
  }
}
