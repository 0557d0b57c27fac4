#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "dyndisc/kernel.hpp"

using namespace dyndisc;

TEST_CASE("bernoulli polynomial values") {
  CHECK(bernoulli_poly(1, 0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(bernoulli_poly(2, 0.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(bernoulli_poly(4, 1.0) == doctest::Approx(-1.0 / 30.0).epsilon(1e-15));
  CHECK(bernoulli_poly(1, 0.0) == doctest::Approx(-0.5));
  CHECK(bernoulli_poly(4, 0.0) == doctest::Approx(-1.0 / 30.0));
  CHECK_THROWS_AS(bernoulli_poly(3, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(bernoulli_poly(1, 1.5), std::domain_error);
}

TEST_CASE("k1 reference values") {
  CHECK(std::abs(k1(0.0, 0.0) - 201.0 / 720.0) < 1e-12);
  CHECK(std::abs(k1(0.5, 0.5) - 1.0 / 120.0) < 1e-12);
  CHECK(k1(0.3, 0.8) == k1(0.8, 0.3));
  CHECK(k1(0.123, 0.123) > 0.0);
  CHECK_THROWS_AS(k1(-0.1, 0.5), std::domain_error);
  CHECK_THROWS_AS(k1(0.5, 1.1), std::domain_error);
}

TEST_CASE("k2 is the product of k1 factors") {
  CHECK(std::abs(k2(0.0, 0.0, 0.0, 0.0) - std::pow(201.0 / 720.0, 2)) < 1e-12);
  CHECK(std::abs(k2(0.5, 0.5, 0.5, 0.5) - std::pow(1.0 / 120.0, 2)) < 1e-12);
  const double a = 0.21, b = 0.77, c = 0.48, d = 0.95;
  CHECK(k2(a, b, c, d) == doctest::Approx(k1(a, c) * k1(b, d)).epsilon(1e-15));
  CHECK(k2(a, b, c, d) == doctest::Approx(k2(c, d, a, b)).epsilon(1e-15));
}

TEST_CASE("gram matrices of k1 and k2 are positive semidefinite") {
  std::mt19937_64 gen(1234);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n = 100;

  Eigen::MatrixXd gram1(n, n);
  std::vector<double> u(n), v(n);
  for (int i = 0; i < n; ++i) {
    u[i] = unif(gen);
    v[i] = unif(gen);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gram1(i, j) = k1(u[i], u[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s1(gram1);
  CHECK(s1.eigenvalues().minCoeff() >= -1e-8);

  Eigen::MatrixXd gram2(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gram2(i, j) = k2(u[i], v[i], u[j], v[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s2(gram2);
  CHECK(s2.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("k1 satisfies the zero-mean ANOVA constraint under grid quadrature") {
  const int g = 512;
  for (const double u : {0.0, 0.123, 0.5, 0.77, 1.0}) {
    double mean = 0.0;
    for (int i = 0; i < g; ++i) mean += k1(u, (i + 0.5) / g);
    mean /= g;
    CHECK(std::abs(mean) < 1e-6);
  }
}
