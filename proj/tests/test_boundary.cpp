#include "bvcf/boundary.hpp"
#include "bvcf/error.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace bvcf;
using testing_oracle::rel;
using testing_oracle::simpson;

namespace {
const double e1 = std::exp(-1.0);
}

TEST_CASE("moment_M closed forms") {
  const auto g = BoundaryDatum::exponential(1.0, 1.0);
  CHECK(moment_M(g, 0.0, 0.0) == doctest::Approx(0.3678794412).epsilon(1e-10));
  CHECK(moment_M(g, 1.0, 0.0) == doctest::Approx(0.7357588823).epsilon(1e-10));
  const auto p = BoundaryDatum::power_tail(3.0, 4.0);
  CHECK(moment_M(p, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(moment_M(p, 1.0, 0.0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK_THROWS_AS(moment_M(p, 3.0, 0.0), ConfigError);
  CHECK_THROWS_AS(BoundaryDatum::power_tail(1.0, 2.0).require_moment(1.0), ConfigError);
}

TEST_CASE("moment_M agrees with a brute-force oracle on all families") {
  struct Case {
    BoundaryDatum g;
    double lambda;
    std::function<double(double)> g0;
  };
  const std::vector<Case> cases{
      {BoundaryDatum::exponential(2.0, 1.5), 0.5, [](double y) { return 2.0 * std::exp(-1.5 * y); }},
      {BoundaryDatum::exponential(1.0, 0.7), 0.0, [](double y) { return std::exp(-0.7 * y); }},
      {BoundaryDatum::power_exponential(1.0, 0.5, 1.0), 1.0, [](double y) { return std::pow(y, -0.5) * std::exp(-y); }},
      {BoundaryDatum::power_tail(2.0, 3.5), 0.5, [](double y) { return 2.0 * std::pow(y, -3.5); }},
  };
  for (const auto& c : cases) {
    double ref;
    if (c.g.kind() == BoundaryDatum::Kind::PowerTail) {
      // substitute y = 1/s: integral_0^1 s^(p - lambda - 2) A ds, smooth for these exponents
      const double p = c.g.tail_exponent();
      ref = simpson([&](double s) { return s <= 0.0 ? 0.0 : c.g.amplitude() * std::pow(s, p - c.lambda - 2.0); }, 0.0,
                    1.0, 2000000);
    } else {
      ref = simpson([&](double y) { return std::pow(y, c.lambda) * c.g0(y); }, 1.0, 80.0, 4000000);
    }
    CHECK(rel(moment_M(c.g, c.lambda, 0.0), ref) < 1e-8);
  }
}

TEST_CASE("time modulation") {
  const auto g = BoundaryDatum::exponential(1.0, 1.0).with_modulation(TimeModulation::decaying(2.0));
  CHECK(moment_M(g, 0.0, 1.0) == doctest::Approx(e1).epsilon(1e-12));
  CHECK(moment_sup(g, 0.0) == doctest::Approx(2.0 * e1).epsilon(1e-12));
  const auto s = TimeModulation::sampled({0.0, 1.0, 2.0}, {1.0, 3.0, 2.0});
  CHECK(s(0.5) == doctest::Approx(2.0));
  CHECK(s(5.0) == doctest::Approx(2.0));
  CHECK(s.sup() == doctest::Approx(3.0));
}

TEST_CASE("eval_G examples") {
  const auto g = BoundaryDatum::exponential(1.0, 1.0);
  for (double x : {0.01, 0.3, 1.0}) {
    CHECK(eval_G(CoagKernel::constant(1.0), g, 0.0, x) == doctest::Approx(e1).epsilon(1e-10));
    CHECK(eval_G(CoagKernel::multiplicative(), g, 0.0, x) == doctest::Approx(2.0 * e1 * x).epsilon(1e-10));
  }
  const CoagKernel K = CoagKernel::bound_form(1.0, 0.5, 0.5);
  const double ref = simpson([&](double y) { return K(0.25, y) * std::exp(-y); }, 1.0, 60.0, 1000000);
  CHECK(rel(eval_G(K, g, 0.0, 0.25), ref) < 1e-6);
  CHECK_THROWS_AS(eval_G(K, g, 0.0, 1.5), DomainError);
}

TEST_CASE("eval_C examples") {
  const auto g = BoundaryDatum::exponential(1.0, 1.0);
  CHECK(eval_C(FragKernel::constant(1.0), g, 0.0, 0.4) == doctest::Approx(e1).epsilon(1e-10));
  CHECK(eval_C(FragKernel::additive(), g, 0.0, 0.4) == doctest::Approx(2.0 * e1).epsilon(1e-10));
  CHECK(eval_C(FragKernel::multiplicative(), g, 0.0, 0.5) == doctest::Approx(0.75 * e1).epsilon(1e-10));
}

TEST_CASE("lemma bounds on G and C") {
  const auto g = BoundaryDatum::exponential(1.5, 0.8);
  const CoagKernel K = CoagKernel::bound_form(0.7, 0.5, 0.5);
  const FragKernel F = FragKernel::power(1.2, 0.5);
  const double Mb = moment_M(g, 0.5, 0.0), Mg = moment_M(g, 0.5, 0.0);
  for (int k = 1; k <= 100; ++k) {
    const double x = k / 100.0;
    CHECK(eval_G(K, g, 0.0, x) * std::pow(x, 0.5) <= 4.0 * 0.7 * Mb * (1 + 1e-12));
    CHECK(eval_C(F, g, 0.0, x) <= 2.0 * 1.2 * Mg * (1 + 1e-12));
  }
}

TEST_CASE("linearity in the amplitude") {
  const auto g1 = BoundaryDatum::power_exponential(1.0, 0.5, 1.0);
  const auto g2 = BoundaryDatum::power_exponential(2.0, 0.5, 1.0);
  const CoagKernel K = CoagKernel::bound_form(1.0, 0.5, 0.5);
  const FragKernel F = FragKernel::additive();
  CHECK(moment_M(g2, 0.5, 0.0) == doctest::Approx(2.0 * moment_M(g1, 0.5, 0.0)).epsilon(1e-13));
  CHECK(eval_G(K, g2, 0.0, 0.3) == doctest::Approx(2.0 * eval_G(K, g1, 0.0, 0.3)).epsilon(1e-13));
  CHECK(eval_C(F, g2, 0.0, 0.3) == doctest::Approx(2.0 * eval_C(F, g1, 0.0, 0.3)).epsilon(1e-13));
}

TEST_CASE("precomputed tables") {
  const auto grid = Grid::uniform(8);
  const auto g = BoundaryDatum::exponential(1.0, 1.0);
  const BoundaryCoupling coupling(CoagKernel::constant(1.0), FragKernel::constant(1.0), g, *grid);
  const BoundaryTables a = coupling.at(0.0), b = coupling.at(3.0);
  CHECK(a.G == b.G);
  CHECK(a.C == b.C);
  CHECK_FALSE(coupling.time_dependent());
  const BoundaryTables direct = precompute_tables(CoagKernel::constant(1.0), FragKernel::constant(1.0), g, *grid, 0.0);
  CHECK(direct.G.isApprox(a.G, 1e-14));

  const BoundaryTables zero =
      precompute_tables(CoagKernel::constant(1.0), FragKernel::constant(1.0), BoundaryDatum::zero(), *grid, 0.0);
  CHECK(zero.G.isZero(0.0));
  CHECK(zero.C.isZero(0.0));
  CHECK(zero.G_atom == 0.0);

  const BoundaryCoupling moving(CoagKernel::constant(1.0), FragKernel::constant(1.0),
                                g.with_modulation(TimeModulation::decaying(1.0)), *grid);
  CHECK(moving.time_dependent());
  CHECK(moving.at(1.0).G.isApprox(0.5 * moving.at(0.0).G, 1e-14));
}
