#include "bvcf/error.hpp"
#include "bvcf/kernel.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace bvcf;

TEST_CASE("eval_coag examples") {
  CHECK(eval_coag(CoagKernel::constant(2.0), 0.5, 0.3) == 2.0);
  CHECK(eval_coag(CoagKernel::bound_form(1.0, 0.5, 0.5), 0.25, 0.25) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(eval_coag(CoagKernel::additive(), 0.2, 0.3) == doctest::Approx(0.5));
  CHECK(eval_coag(CoagKernel::multiplicative(), 0.2, 0.3) == doctest::Approx(0.06));
  CHECK(eval_coag(CoagKernel::lower_form(2.0, 0.5, 0.5), 0.25, 1.0) ==
        doctest::Approx(2.0 * (std::pow(0.25, -0.5) * 1.0 + 1.0 * std::pow(0.25, 0.5))));
  CHECK_THROWS_AS(eval_coag(CoagKernel::constant(1.0), 0.0, 0.5), DomainError);
  CHECK_THROWS_AS(eval_coag(CoagKernel::constant(1.0), 0.5, -1.0), DomainError);
}

TEST_CASE("tabulated kernel interpolates bilinearly") {
  Eigen::MatrixXd v(2, 2);
  v << 1.0, 2.0, 3.0, 5.0;  // v(ix, iy)
  const KernelTable table({0.0, 1.0}, {0.0, 2.0}, v);
  // by hand on the single cell: (1-u)(1-w) 1 + (1-u) w 2 + u (1-w) 3 + u w 5
  const double x = 0.25, y = 0.5, u = 0.25, w = 0.25;
  const double expected = (1 - u) * (1 - w) * 1 + (1 - u) * w * 2 + u * (1 - w) * 3 + u * w * 5;
  CHECK(table(x, y) == doctest::Approx(expected).epsilon(1e-14));
  // clamped outside
  CHECK(table(2.0, 5.0) == 5.0);

  std::istringstream csv("x,y,value\n0,0,1\n0,2,2\n1,0,3\n1,2,5\n");
  const KernelTable read = KernelTable::read_csv(csv);
  CHECK(read(x, y) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("kernels are symmetric bit for bit") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  Eigen::MatrixXd v(3, 3);
  v << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  const std::vector<CoagKernel> kernels{
      CoagKernel::constant(1.5),          CoagKernel::additive(),
      CoagKernel::multiplicative(),       CoagKernel::bound_form(1.0, 0.3, 0.7),
      CoagKernel::lower_form(1.0, 0.5, 0.5), CoagKernel::tabulated(KernelTable({0, 0.5, 1}, {0, 0.5, 1}, v)),
      truncate(CoagKernel::bound_form(1.0, 0.5, 0.5), 8).kernel()};
  const std::vector<FragKernel> frags{FragKernel::constant(1.0), FragKernel::power(1.0, 0.5),
                                      FragKernel::additive(), FragKernel::multiplicative()};
  for (int k = 0; k < 2000; ++k) {
    const double x = u(rng), y = u(rng);
    for (const auto& K : kernels) CHECK(K(x, y) == K(y, x));
    for (const auto& F : frags) CHECK(F(x, y) == F(y, x));
  }
}

TEST_CASE("truncation") {
  const CoagKernel K = CoagKernel::bound_form(1.0, 0.5, 0.5);
  const TruncatedKernel K4 = truncate(K, 4);
  CHECK(K4(0.2, 0.5) == 0.0);
  CHECK(K4(0.25, 0.5) == 0.0);  // strict indicator
  CHECK(K4(0.3, 0.5) == K(0.3, 0.5));
  CHECK_THROWS_AS(truncate(K, 0), ConfigError);

  // K_j <= K pointwise, equal once min(x, y) > 1/j
  for (int j : {2, 5, 17, 100}) {
    const CoagKernel Kj = truncate(K, j).kernel();
    CHECK(Kj.truncation() == j);
    for (int a = 1; a <= 40; ++a) {
      for (int b = 1; b <= 40; ++b) {
        const double x = a / 40.0, y = b / 40.0;
        CHECK(Kj(x, y) <= K(x, y));
        if (std::min(x, y) > 1.0 / j) CHECK(Kj(x, y) == K(x, y));
      }
    }
  }
}

TEST_CASE("detailed_balance_frag") {
  const auto Q = [](double x) { return std::exp(-x); };
  const FragKernel F1 = detailed_balance_frag(CoagKernel::constant(1.0), Q);
  CHECK(F1(0.3, 0.4) == doctest::Approx(1.0).epsilon(1e-14));
  const FragKernel F2 = detailed_balance_frag(CoagKernel::multiplicative(), Q);
  CHECK(F2(0.3, 0.4) == doctest::Approx(0.12).epsilon(1e-14));
  const FragKernel F3 = detailed_balance_frag(CoagKernel::constant(1.0), [](double x) { return x * std::exp(-x); });
  CHECK(F3(0.3, 0.4) == doctest::Approx(0.3 * 0.4 / 0.7).epsilon(1e-14));

  const FragKernel bad = detailed_balance_frag(CoagKernel::constant(1.0), [](double x) { return x < 1.0 ? 1.0 : 0.0; });
  CHECK_THROWS_AS(bad(0.6, 0.6), SingularProfileError);

  // |F Q(x+y) - K Q Q| <= 1e-12 K Q Q on sampled points
  const CoagKernel K = CoagKernel::bound_form(1.0, 0.5, 0.5);
  const auto Qp = [](double x) { return std::pow(x, 0.5) * std::exp(-2.0 * x); };
  const FragKernel F = detailed_balance_frag(K, Qp);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(1e-4, 2.0);
  for (int k = 0; k < 2000; ++k) {
    const double x = u(rng), y = u(rng);
    const double lhs = K(x, y) * Qp(x) * Qp(y);
    CHECK(std::abs(F(x, y) * Qp(x + y) - lhs) <= 1e-12 * lhs);
  }
}

TEST_CASE("validate_bounds") {
  SUBCASE("built-in families report no violation") {
    for (const auto& K : {CoagKernel::constant(2.0), CoagKernel::additive(), CoagKernel::multiplicative(),
                          CoagKernel::bound_form(1.0, 0.5, 0.5), CoagKernel::lower_form(1.5, 0.3, 0.8)}) {
      const BoundReport r = validate_bounds(K, 2000, 5);
      CHECK(r.max_violation <= 1e-12);
      CHECK(r.max_lower_violation <= 1e-12);
      CHECK(r.samples > 2000);
    }
    for (const auto& F : {FragKernel::constant(1.0), FragKernel::power(2.0, 0.5), FragKernel::additive(),
                          FragKernel::multiplicative()}) {
      CHECK(validate_bounds(F, 2000, 5).max_violation <= 1e-12);
    }
  }
  SUBCASE("K = 1 against K0 = 1, alpha = beta = 0") {
    const auto K = CoagKernel::custom("one", [](double, double) { return 1.0; }, CoagBounds{1.0, 0.0, 0.0, {}});
    CHECK(validate_bounds(K, 1000, 1).max_violation == 0.0);
  }
  SUBCASE("x^-2 against alpha = 1 is caught near 0") {
    const auto K = CoagKernel::custom("inv-square", [](double x, double y) { return 1.0 / (x * x) + 1.0 / (y * y); },
                                      CoagBounds{1.0, 1.0, 0.0, {}});
    const BoundReport r = validate_bounds(K, 1000, 1);
    CHECK(r.max_violation > 0.0);
    CHECK(std::min(r.worst_point[0], r.worst_point[1]) < 1e-3);
    // at x = 1e-3: 1e6 + 1 against 1 (1e3 + 1)(1 + 1) -- a big relative excess
    CHECK(r.max_violation > (1e6 / (2.0 * 1001.0)) - 1.0 - 1.0);
  }
}

TEST_CASE("bounded_params") {
  const auto one = bounded_params(CoagKernel::constant(1.0), 0.0);
  CHECK(one.K_inf == 1.0);
  CHECK(one.K_beta == 1.0);
  const auto add = bounded_params(CoagKernel::additive(), 1.0);
  CHECK(add.K_inf == 2.0);
  CHECK(add.K_beta == 2.0);
  const auto trunc = bounded_params(truncate(CoagKernel::bound_form(1.0, 1.0, 0.0), 10).kernel(), 0.0);
  CHECK(trunc.K_inf == doctest::Approx(40.0).epsilon(1e-9));
  CHECK_THROWS_AS(bounded_params(CoagKernel::bound_form(1.0, 0.5, 0.5), 0.5), UnboundedKernelError);
  CHECK(CoagKernel::bound_form(1.0, 0.5, 0.5).singular());
  CHECK_FALSE(truncate(CoagKernel::bound_form(1.0, 0.5, 0.5), 4).kernel().singular());
}
