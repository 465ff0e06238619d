#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "ppsd/objective.hpp"

using namespace ppsd;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<int>(vals.size()));
  int i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}

// Central difference of f_i along a direction, for gradient spot checks.
double directional_derivative(const ProblemInstance& inst, int i, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& dir, double h) {
  auto value = [&](const Eigen::VectorXd& p) {
    if (inst.kind == "rendezvous") {
      auto pts = inst.meta.at("points").at(i - 1).get<std::vector<double>>();
      Eigen::Map<Eigen::VectorXd> pi(pts.data(), static_cast<int>(pts.size()));
      return 0.5 * (p - pi).squaredNorm();
    }
    auto rows = inst.meta.at("Q").at(i - 1);
    const int r = static_cast<int>(rows.size());
    Eigen::MatrixXd Q(r, inst.d);
    for (int a = 0; a < r; ++a) {
      auto row = rows.at(a).get<std::vector<double>>();
      for (int b = 0; b < inst.d; ++b) Q(a, b) = row[b];
    }
    auto mv = inst.meta.at("m").at(i - 1).get<std::vector<double>>();
    Eigen::Map<Eigen::VectorXd> m(mv.data(), static_cast<int>(mv.size()));
    return (Q * p - m).squaredNorm();
  };
  return (value(x + h * dir) - value(x - h * dir)) / (2.0 * h);
}

}  // namespace

TEST_CASE("rendezvous gradients and minimizer") {
  ProblemInstance inst = rendezvous({vec({1, 2}), vec({-1, 0})});
  CHECK(inst.gradient_of(1)(vec({0, 0})) == vec({-1, -2}));
  CHECK(inst.minimizer->isApprox(vec({0, 1})));

  ProblemInstance pair = rendezvous({vec({1}), vec({-1})});
  CHECK((*pair.minimizer)(0) == doctest::Approx(0.0));

  ProblemInstance three = rendezvous({vec({0}), vec({1}), vec({5})});
  CHECK((*three.minimizer)(0) == doctest::Approx(2.0));
  CHECK(three.mu == doctest::Approx(3.0));
  CHECK(three.L == doctest::Approx(1.0));
  CHECK(three.Lbar == doctest::Approx(3.0));
  CHECK(global_gradient_at(pair, vec({0})).norm() == doctest::Approx(0.0));

  CHECK_THROWS_AS(rendezvous({vec({1, 2}), vec({1})}), std::invalid_argument);
}

TEST_CASE("regression gradient, smoothness and normal-equations solve") {
  Eigen::MatrixXd I1 = Eigen::MatrixXd::Identity(1, 1);
  ProblemInstance gd = linear_regression({I1}, {vec({0})});
  CHECK(gd.gradient_of(1)(vec({1}))(0) == doctest::Approx(2.0));
  ProblemInstance shift = linear_regression({I1}, {vec({3})});
  CHECK((*shift.minimizer)(0) == doctest::Approx(3.0));
  CHECK(shift.L == doctest::Approx(2.0));

  ProblemInstance inst = generate_linear_regression(5, 10, 10, 0.2, 123);
  // Independent oracle: the gradient sum must vanish at the solve result.
  CHECK(global_gradient_at(inst, *inst.minimizer).norm() <= 1e-10);
  CHECK(inst.mu > 0.0);
  // Spectral normalization puts every local smoothness at exactly 2.
  for (const auto& f : inst.locals) CHECK(f.smoothness == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("generated instances are seeded deterministically") {
  ProblemInstance a = generate_linear_regression(4, 6, 8, 0.2, 99);
  ProblemInstance b = generate_linear_regression(4, 6, 8, 0.2, 99);
  CHECK(a.meta == b.meta);
  CHECK(a.minimizer->isApprox(*b.minimizer, 0.0));
  ProblemInstance c = generate_rendezvous(4, 2, 5.0, 7);
  ProblemInstance d = generate_rendezvous(4, 2, 5.0, 7);
  CHECK(c.meta == d.meta);
}

TEST_CASE("gradients match central finite differences") {
  std::mt19937_64 rng(55);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ProblemInstance fams[] = {generate_rendezvous(3, 4, 5.0, 11),
                            generate_linear_regression(3, 4, 6, 0.2, 12)};
  for (const auto& inst : fams) {
    for (int trial = 0; trial < 100; ++trial) {
      const int i = 1 + trial % inst.n;
      Eigen::VectorXd x(inst.d), dir(inst.d);
      for (int l = 0; l < inst.d; ++l) {
        x(l) = gauss(rng);
        dir(l) = gauss(rng);
      }
      dir.normalize();
      const double fd = directional_derivative(inst, i, x, dir, 1e-5);
      const double an = inst.gradient_of(i)(x).dot(dir);
      REQUIRE(fd == doctest::Approx(an).epsilon(1e-6));
    }
  }
}

TEST_CASE("sampled gradients respect the Lipschitz constant") {
  std::mt19937_64 rng(66);
  std::normal_distribution<double> gauss(0.0, 2.0);
  ProblemInstance inst = generate_linear_regression(4, 5, 7, 0.2, 13);
  for (int trial = 0; trial < 100; ++trial) {
    const int i = 1 + trial % inst.n;
    Eigen::VectorXd x1(inst.d), x2(inst.d);
    for (int l = 0; l < inst.d; ++l) {
      x1(l) = gauss(rng);
      x2(l) = gauss(rng);
    }
    const double lhs = (inst.gradient_of(i)(x1) - inst.gradient_of(i)(x2)).norm();
    REQUIRE(lhs <= inst.locals[i - 1].smoothness * (x1 - x2).norm() * (1.0 + 1e-6));
  }
}

TEST_CASE("global minimizer is a stationary point across instances") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    ProblemInstance r = generate_rendezvous(6, 3, 5.0, seed);
    CHECK(global_gradient_at(r, *r.minimizer).norm() <= 1e-10 * (1.0 + r.minimizer->norm()));
    ProblemInstance q = generate_linear_regression(6, 5, 8, 0.2, seed);
    CHECK(global_gradient_at(q, *q.minimizer).norm() <= 1e-10 * (1.0 + q.minimizer->norm()));
  }
}

TEST_CASE("degenerate regression is rejected") {
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(linear_regression({zero}, {vec({0, 0})}), std::runtime_error);
}

TEST_CASE("instance JSON round trip") {
  ProblemInstance a = generate_linear_regression(3, 4, 5, 0.2, 77);
  ProblemInstance back = instance_from_json(instance_to_json(a));
  CHECK(back.n == a.n);
  CHECK(back.minimizer->isApprox(*a.minimizer, 1e-14));
  ProblemInstance r = generate_rendezvous(3, 2, 5.0, 78);
  ProblemInstance rback = instance_from_json(instance_to_json(r));
  CHECK(rback.minimizer->isApprox(*r.minimizer, 0.0));
}
