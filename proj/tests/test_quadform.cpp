#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "qtop/quadform.hpp"

using qtop::InertiaTriple;
using qtop::Pencil;
using qtop::QuadraticForm;

namespace {

QuadraticForm diag(std::initializer_list<double> entries) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(entries.size()));
  int i = 0;
  for (double v : entries) d[i++] = v;
  return QuadraticForm(Eigen::MatrixXd(d.asDiagonal()));
}

Eigen::MatrixXd random_symmetric(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = gauss(rng);
  return 0.5 * (m + m.transpose());
}

// Test-only oracle: expand prod_i (lambda_i - t) coefficient by coefficient.
// Independent of the Faddeev-LeVerrier route used by the library.
std::vector<double> poly_from_roots(const std::vector<double>& roots) {
  std::vector<double> c{1.0};  // polynomial 1
  for (double r : roots) {
    // multiply by (r - t)
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += r * c[i];
      next[i + 1] -= c[i];
    }
    c = std::move(next);
  }
  return c;
}

}  // namespace

TEST_CASE("quadratic form constructor symmetrizes and validates") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 3.0, 1.0, 2.0;
  QuadraticForm q{m};
  CHECK(q.matrix()(0, 1) == Catch::Approx(2.0));
  CHECK(q.matrix()(1, 0) == Catch::Approx(2.0));

  CHECK_THROWS_AS(QuadraticForm(Eigen::MatrixXd::Zero(2, 3)), qtop::Error);
}

TEST_CASE("pencil requires matching dimensions") {
  std::vector<QuadraticForm> forms;
  forms.push_back(QuadraticForm::identity(3));
  forms.push_back(QuadraticForm::zero(2));
  CHECK_THROWS_AS(Pencil(std::move(forms)), qtop::Error);
}

TEST_CASE("evaluate_pencil identity and cancellation cases") {
  Pencil pencil({QuadraticForm::identity(3), QuadraticForm::zero(3),
                 QuadraticForm::zero(3)});
  Eigen::Vector3d omega(1.0, 0.0, 0.0);
  CHECK(qtop::evaluate_pencil(pencil, omega).matrix().isIdentity(1e-15));

  Pencil cancel({QuadraticForm::identity(3),
                 QuadraticForm(-Eigen::MatrixXd::Identity(3, 3)),
                 QuadraticForm::zero(3)});
  const double s = 1.0 / std::sqrt(2.0);
  Eigen::Vector3d diag_omega(s, s, 0.0);
  CHECK(qtop::evaluate_pencil(cancel, diag_omega).matrix().norm() ==
        Catch::Approx(0.0).margin(1e-15));

  Eigen::Vector2d wrong(1.0, 0.0);
  CHECK_THROWS_AS(qtop::evaluate_pencil(pencil, wrong), qtop::Error);
}

TEST_CASE("evaluate_pencil of diagonal forms stays diagonal with entries omega.d_i") {
  Pencil pencil({diag({1.0, 2.0, -1.0}), diag({0.5, 0.0, 3.0}),
                 diag({-2.0, 1.0, 1.0})});
  Eigen::Vector3d omega(2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0);
  auto form = qtop::evaluate_pencil(pencil, omega);
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector3d d(pencil.form(0).matrix()(i, i), pencil.form(1).matrix()(i, i),
                      pencil.form(2).matrix()(i, i));
    CHECK(form.matrix()(i, i) == Catch::Approx(omega.dot(d)));
    for (int j = 0; j < 3; ++j) {
      if (i != j) CHECK(form.matrix()(i, j) == 0.0);
    }
  }
}

TEST_CASE("linear_combination is linear in the coefficients") {
  std::mt19937_64 rng(7);
  Pencil pencil({QuadraticForm(random_symmetric(4, rng)),
                 QuadraticForm(random_symmetric(4, rng)),
                 QuadraticForm(random_symmetric(4, rng))});
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector3d u, v;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < 3; ++i) {
      u[i] = gauss(rng);
      v[i] = gauss(rng);
    }
    auto sum = qtop::linear_combination(pencil, u + v);
    Eigen::MatrixXd parts = qtop::linear_combination(pencil, u).matrix() +
                            qtop::linear_combination(pencil, v).matrix();
    CHECK((sum.matrix() - parts).cwiseAbs().maxCoeff() ==
          Catch::Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("inertia_eigen on definite, indefinite, and zero forms") {
  CHECK(qtop::inertia_eigen(QuadraticForm::identity(4), 1e-9) ==
        InertiaTriple{4, 0, 0});
  CHECK(qtop::inertia_eigen(diag({1.0, -2.0, 3.0}), 1e-9) ==
        InertiaTriple{2, 1, 0});
  CHECK(qtop::inertia_eigen(QuadraticForm::zero(3), 1e-9) ==
        InertiaTriple{0, 0, 3});
  CHECK_THROWS_AS(qtop::inertia_eigen(QuadraticForm::identity(2), 0.0),
                  qtop::Error);
}

TEST_CASE("char_poly_coeffs matches hand-expanded cases") {
  auto id2 = qtop::char_poly_coeffs(QuadraticForm::identity(2));
  REQUIRE(id2.size() == 3);
  CHECK(id2[0] == Catch::Approx(1.0));
  CHECK(id2[1] == Catch::Approx(-2.0));
  CHECK(id2[2] == Catch::Approx(1.0));

  auto zero2 = qtop::char_poly_coeffs(QuadraticForm::zero(2));
  CHECK(zero2[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(zero2[1] == Catch::Approx(0.0).margin(1e-15));
  CHECK(zero2[2] == Catch::Approx(1.0));

  // (1-t)(-2-t)(3-t) = -6 + 5t + 2t^2 - t^3
  auto d3 = qtop::char_poly_coeffs(diag({1.0, -2.0, 3.0}));
  REQUIRE(d3.size() == 4);
  CHECK(d3[0] == Catch::Approx(-6.0));
  CHECK(d3[1] == Catch::Approx(5.0));
  CHECK(d3[2] == Catch::Approx(2.0));
  CHECK(d3[3] == Catch::Approx(-1.0));

  auto oracle = poly_from_roots({1.0, -2.0, 3.0});
  for (int i = 0; i < 4; ++i) CHECK(d3[i] == Catch::Approx(oracle[i]));
}

TEST_CASE("char poly vanishes at the eigenvalues of random forms") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int dim = 2 + static_cast<int>(rng() % 7);
    QuadraticForm q(random_symmetric(dim, rng));
    auto coeffs = qtop::char_poly_coeffs(q);
    double amax = 0.0;
    for (double c : coeffs) amax = std::max(amax, std::abs(c));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(q.matrix());
    for (int i = 0; i < dim; ++i) {
      const double t = solver.eigenvalues()[i];
      double value = 0.0;
      double power = 1.0;
      for (double c : coeffs) {
        value += c * power;
        power *= t;
      }
      CHECK(std::abs(value) <= 1e-6 * (1.0 + amax));
    }
  }
}

TEST_CASE("inertia_descartes on simple definite cases") {
  CHECK(qtop::inertia_descartes(QuadraticForm::identity(3), 1e-9) == 3);
  CHECK(qtop::inertia_descartes(diag({1.0, -2.0, 3.0}), 1e-9) == 2);
  CHECK(qtop::inertia_descartes(
            QuadraticForm(-Eigen::MatrixXd::Identity(3, 3)), 1e-9) == 0);
  CHECK(qtop::inertia_descartes(QuadraticForm::zero(3), 1e-9) == 0);
}

TEST_CASE("inertia_descartes agrees with inertia_eigen away from degeneracy") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int dim = 2 + static_cast<int>(rng() % 11);
    QuadraticForm q(random_symmetric(dim, rng));
    const double tol = qtop::relative_zero_tol(q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(q.matrix(),
                                                          Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().cwiseAbs().minCoeff() <= 10.0 * tol) continue;
    ++checked;
    CHECK(qtop::inertia_descartes(q, qtop::kZeroTolRel) ==
          qtop::inertia_eigen(q, tol).positive);
  }
  CHECK(checked >= 390);
}

TEST_CASE("Sylvester invariance: congruence preserves inertia") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> stretch(0.5, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 2 + static_cast<int>(rng() % 7);
    QuadraticForm q(random_symmetric(dim, rng));
    // Well-conditioned invertible M: random orthogonal times a moderate
    // diagonal stretch.
    Eigen::MatrixXd g(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) g(i, j) = gauss(rng);
    Eigen::MatrixXd orth = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    Eigen::VectorXd d(dim);
    for (int i = 0; i < dim; ++i) d[i] = stretch(rng);
    Eigen::MatrixXd m = orth * d.asDiagonal();

    QuadraticForm congruent(m.transpose() * q.matrix() * m);
    CHECK(qtop::inertia_eigen(q) == qtop::inertia_eigen(congruent));
  }
}

TEST_CASE("random_posdef is deterministic, definite, and in spectral range") {
  auto a = qtop::random_posdef(5, 42);
  auto b = qtop::random_posdef(5, 42);
  CHECK(a.matrix() == b.matrix());

  auto c = qtop::random_posdef(5, 43);
  CHECK(a.matrix() != c.matrix());

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int dim = 1 + static_cast<int>(seed % 6);
    auto q = qtop::random_posdef(dim, seed);
    CHECK(qtop::inertia_eigen(q).positive == dim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(q.matrix(),
                                                          Eigen::EigenvaluesOnly);
    CHECK(solver.eigenvalues().minCoeff() >= 0.5 - 1e-12);
    CHECK(solver.eigenvalues().maxCoeff() <= 1.5 + 1e-12);
  }

  auto one = qtop::random_posdef(1, 7);
  CHECK(one.matrix()(0, 0) >= 0.5);
  CHECK(one.matrix()(0, 0) <= 1.5);
}
