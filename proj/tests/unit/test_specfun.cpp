#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tfsns/errors.hpp"
#include "tfsns/specfun.hpp"

using namespace tfsns;
using namespace tfsns::specfun;

namespace {

struct MLCase {
  double a, b, x, value;
};

// 120-digit Taylor sums, rounded to 17 digits.
constexpr MLCase kML[] = {
    {0.5, 1, -0.5, 0.61569034419292587},
    {0.5, 1, -3, 0.17900115118138995},
    {0.3, 0.3, -5, 0.0072751008031549117},
    {0.3, 0.9, -5, 0.12122108841797325},
    {0.3, 0.6, -5, 0.065399530352207126},
    {0.7, 0.7, -12, 0.0018480871323738784},
    {0.9, 1, -40, 0.0027434496977920995},
    {0.9, 0.9, -2, 0.11059802429320849},
    {0.8, 1.8, -7.85, 0.12318402886100427},
    {0.8, 2.8, -3, 0.23227824783176839},
    {0.9, 1.9, -10, 0.098717939394889785},
    {0.6, 1.5, 2.5, 77.242587409931026},
    {0.25, 1, -1.5, 0.36327790329995259},
    {0.95, 0.95, -60, 1.4446014014213375e-5},
    {0.5, 0.5, -25, 0.00045027273172231336},
};

struct MainardiCase {
  double eta, s, value;
};

constexpr MainardiCase kMainardi[] = {
    {0.25, 0.5, 0.56796881884076958},
    {0.5, 1.2, 0.39362171585714364},
    {0.7, 0.3, 0.41769048460521698},
    {0.9, 0.8, 0.59406388434599555},
    {0.8, 2.0, 0.13288480043900966},
    {0.3333333333333333, 1.0, 0.39623947970650259},
};

double rel(double got, double want) {
  return std::abs(got - want) / std::abs(want);
}

}  // namespace

TEST_CASE("closed forms") {
  CHECK(mittag_leffler(1, 1, 1) == doctest::Approx(std::numbers::e).epsilon(1e-15));
  CHECK(mittag_leffler(1, 1, -3) == doctest::Approx(std::exp(-3.0)).epsilon(1e-15));
  CHECK(mittag_leffler(1, 2, -2) == doctest::Approx(-std::expm1(-2.0) / 2).epsilon(1e-15));
  CHECK(mittag_leffler(0.7, 1.3, 0) == doctest::Approx(1 / std::tgamma(1.3)).epsilon(1e-15));
  for (double x : {0.1, 1.0, 4.0, 9.0}) {
    // E_{1/2}(-x) = exp(x^2) erfc(x)
    const double want = std::exp(x * x) * std::erfc(x);
    CHECK(rel(mittag_leffler(0.5, 1, -x), want) < 1e-12);
  }
  for (double s : {0.0, 0.4, 1.5, 3.0}) {
    const double want = std::exp(-s * s / 4) / std::sqrt(std::numbers::pi);
    CHECK(rel(mainardi(0.5, s), want) < 1e-12);
  }
}

TEST_CASE("frozen Mittag-Leffler values across branches") {
  for (const auto& c : kML) {
    CAPTURE(c.a);
    CAPTURE(c.b);
    CAPTURE(c.x);
    CHECK(rel(mittag_leffler(c.a, c.b, c.x), c.value) < 1e-10);
  }
}

TEST_CASE("frozen Mainardi values") {
  for (const auto& c : kMainardi) {
    CAPTURE(c.eta);
    CAPTURE(c.s);
    CHECK(rel(mainardi(c.eta, c.s), c.value) < 1e-11);
  }
}

TEST_CASE("branches are taken where expected") {
  CHECK(mittag_leffler_branch({0.5, 1, 0}) == MLBranch::closed_form);
  CHECK(mittag_leffler_branch({0.5, 1, -0.5}) == MLBranch::series);
  CHECK(mittag_leffler_branch({0.9, 1, 3}) == MLBranch::series);
  CHECK(mittag_leffler_branch({0.9, 1, -40}) == MLBranch::asymptotic);
  CHECK(mittag_leffler_branch({0.9, 0.9, -7}) == MLBranch::contour);
}

TEST_CASE("doubling the series truncation changes nothing") {
  for (const auto& c : kML) {
    if (std::pow(std::abs(c.x), 1 / c.a) > Tolerances::series_cancellation_limit) continue;
    const int n = ml_series_terms(c.a, c.b, c.x);
    CHECK(std::abs(ml_series(c.a, c.b, c.x, n) - ml_series(c.a, c.b, c.x, 2 * n)) < 1e-12);
  }
}

TEST_CASE("Mainardi Laplace transforms reproduce E_{a,1} and E_{a,a}") {
  for (double a : {0.3, 0.6, 0.9}) {
    for (double x : {0.05, 1.0, 20.0}) {
      CAPTURE(a);
      CAPTURE(x);
      CHECK(std::abs(ml_via_mainardi_quadrature(a, x, MainardiMoment::first) -
                     mittag_leffler(a, 1, -x)) < 1e-9);
      CHECK(std::abs(ml_via_mainardi_quadrature(a, x, MainardiMoment::second) -
                     mittag_leffler(a, a, -x)) < 1e-9);
    }
  }
}

TEST_CASE("Mainardi density integrates to one") {
  // int_0^inf K_eta = E_{eta,1}(0) = 1
  CHECK(ml_via_mainardi_quadrature(0.6, 0.0, MainardiMoment::first) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("monotone decay on the negative axis") {
  for (double a : {0.4, 0.8}) {
    double prev = 1.0;
    for (double x = 0.25; x < 80; x *= 1.5) {
      const double v = mittag_leffler(a, 1, -x);
      CHECK(v > 0);
      CHECK(v < prev);
      prev = v;
    }
  }
}

TEST_CASE("argument errors") {
  CHECK_THROWS_AS(mittag_leffler(0, 1, -1), ParameterError);
  CHECK_THROWS_AS(mittag_leffler(1.2, 1, -1), ParameterError);
  CHECK_THROWS_AS(mittag_leffler(0.5, -1, -1), ParameterError);
  CHECK_THROWS_AS(mittag_leffler(0.5, 1, NAN), DomainError);
  CHECK_THROWS_AS(mainardi(0.5, -1), DomainError);
  CHECK_THROWS_AS(mainardi(1.0, 1), ParameterError);
  CHECK_THROWS_AS(ml_via_mainardi_quadrature(0.5, -1, MainardiMoment::first), DomainError);
  CHECK(rgamma(-2.0) == 0.0);
}
