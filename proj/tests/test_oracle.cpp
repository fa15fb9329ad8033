#include "bvcf/boundary.hpp"
#include "bvcf/oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace bvcf;

TEST_CASE("discrete_rhs examples") {
  DiscreteSystem sys = DiscreteSystem::zeros(2);
  sys.K(0, 0) = 1.0;
  const Eigen::VectorXd r = discrete_rhs(Eigen::Vector2d(1.0, 0.0), sys);
  CHECK(r[0] == doctest::Approx(-1.0));
  CHECK(r[1] == doctest::Approx(0.5));

  DiscreteSystem src = DiscreteSystem::zeros(3);
  src.Q << 0.1, 0.2, 0.3;
  CHECK(discrete_rhs(Eigen::Vector3d(0.4, 0.5, 0.6), src) == src.Q);

  DiscreteSystem frag = DiscreteSystem::zeros(2);
  frag.F(0, 0) = 1.0;
  const Eigen::VectorXd f = discrete_rhs(Eigen::Vector2d(0.0, 1.0), frag);
  CHECK(f[0] == doctest::Approx(1.0));
  CHECK(f[1] == doctest::Approx(-0.5));
  CHECK(1.0 * f[0] + 2.0 * f[1] == doctest::Approx(0.0));
}

TEST_CASE("integrate_discrete") {
  const std::vector<double> times{0.0, 0.25, 0.5, 1.0};
  SUBCASE("zero rates") {
    const DiscreteSystem sys = DiscreteSystem::zeros(5);
    const Eigen::VectorXd c0 = Eigen::VectorXd::LinSpaced(5, 1.0, 2.0);
    const DiscreteTrajectory tr = integrate_discrete(sys, c0, times, 0.1);
    for (const auto& c : tr.states) CHECK(c == c0);
  }
  SUBCASE("constant kernel, monodisperse start") {
    DiscreteSystem sys = DiscreteSystem::zeros(64);
    sys.K.setOnes();
    Eigen::VectorXd c0 = Eigen::VectorXd::Zero(64);
    c0[0] = 1.0;
    const DiscreteTrajectory tr = integrate_discrete(sys, c0, times, 0.05);
    for (std::size_t k = 0; k < times.size(); ++k) {
      CHECK(tr.moment(k, 0.0) == doctest::Approx(1.0 / (1.0 + times[k] / 2.0)).epsilon(1e-7));
      CHECK(tr.states[k].dot(Eigen::VectorXd::LinSpaced(64, 1.0, 64.0)) == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
  SUBCASE("linear sink") {
    DiscreteSystem sys = DiscreteSystem::zeros(4);
    sys.S.setConstant(0.7);
    const Eigen::VectorXd c0 = Eigen::Vector4d(1.0, 0.5, 0.25, 2.0);
    const DiscreteTrajectory tr = integrate_discrete(sys, c0, times, 0.1);
    for (std::size_t k = 0; k < times.size(); ++k)
      for (int i = 0; i < 4; ++i)
        CHECK(tr.states[k][i] == doctest::Approx(c0[i] * std::exp(-0.7 * times[k])).epsilon(1e-9));
  }
  SUBCASE("closed system conserves mass") {
    // large enough that nothing merges past N by t = 1
    const int N = 120;
    DiscreteSystem sys = DiscreteSystem::zeros(N);
    sys.K.setOnes();
    sys.F.setConstant(0.5);
    Eigen::VectorXd c0 = Eigen::VectorXd::Zero(N);
    c0.head(4) << 0.4, 0.3, 0.2, 0.1;
    const DiscreteTrajectory tr = integrate_discrete(sys, c0, times, 0.05);
    const Eigen::VectorXd sizes = Eigen::VectorXd::LinSpaced(N, 1.0, N);
    const double m1 = c0.dot(sizes);
    for (const auto& c : tr.states) CHECK(std::abs(c.dot(sizes) - m1) <= 1e-10 * m1);
  }
}

TEST_CASE("lattice system mirrors the problem") {
  Problem p;
  p.grid = Grid::lattice(8);
  p.coag = CoagKernel::additive();
  p.frag = FragKernel::constant(2.0);
  p.boundary = BoundaryDatum::exponential(1.0, 1.0);
  const DiscreteSystem sys = lattice_system(p);
  const double h = 1.0 / 8;
  CHECK(sys.N == 8);
  CHECK(sys.h == h);
  CHECK(sys.K(2, 4) == doctest::Approx(3 * h + 5 * h));
  CHECK(sys.F(1, 3) == doctest::Approx(2.0 * h));
  CHECK(sys.S[3] == doctest::Approx(eval_G(p.coag, p.boundary, 0.0, 4 * h)));
  CHECK(sys.Q[3] == doctest::Approx(h * eval_C(p.frag, p.boundary, 0.0, 4 * h)));
  CHECK(sys.K.isApprox(sys.K.transpose()));
  CHECK(sys.F.isApprox(sys.F.transpose()));
}

TEST_CASE("quad_oracle") {
  const OracleQuadrature lin = quad_oracle([](double x) { return x; }, 0.0, 1.0, 1000);
  CHECK(lin.value == doctest::Approx(0.5).epsilon(1e-14));
  const OracleQuadrature ex = quad_oracle([](double y) { return std::exp(-y); }, 1.0, 50.0, 1 << 20);
  CHECK(std::abs(ex.value - std::exp(-1.0)) < 1e-10);
  CHECK(ex.converged);

  const CoagKernel K = CoagKernel::bound_form(1.0, 0.5, 0.5);
  const auto g = BoundaryDatum::exponential(1.0, 1.0);
  for (double x : {0.01, 0.3, 1.0}) {
    const OracleQuadrature G = quad_oracle([&](double y) { return K(x, y) * g.profile(y); }, 1.0, 60.0, 1 << 20);
    CHECK(eval_G(K, g, 0.0, x) == doctest::Approx(G.value).epsilon(1e-6));
  }
}
