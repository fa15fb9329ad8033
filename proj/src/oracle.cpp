#include "bvcf/oracle.hpp"

#include "bvcf/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bvcf {

DiscreteSystem DiscreteSystem::zeros(int N, double h) {
  DiscreteSystem s;
  s.N = N;
  s.h = h;
  s.K = Eigen::MatrixXd::Zero(N, N);
  s.F = Eigen::MatrixXd::Zero(N, N);
  s.Q = Eigen::VectorXd::Zero(N);
  s.S = Eigen::VectorXd::Zero(N);
  return s;
}

Eigen::VectorXd discrete_rhs(const Eigen::VectorXd& c, const DiscreteSystem& sys) {
  const int N = sys.N;
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(N);
  // species i is c[i-1]
  for (int i = 1; i <= N; ++i) {
    double gain = 0.0, loss = 0.0, frag_out = 0.0, frag_in = 0.0;
    for (int j = 1; j <= i - 1; ++j) {
      gain += sys.K(j - 1, i - j - 1) * c[j - 1] * c[i - j - 1];
      frag_out += sys.F(j - 1, i - j - 1);
    }
    for (int j = 1; j <= N; ++j) loss += sys.K(i - 1, j - 1) * c[j - 1];
    for (int j = 1; j <= N - i; ++j) frag_in += sys.F(i - 1, j - 1) * c[i + j - 1];
    dc[i - 1] = 0.5 * gain - loss * c[i - 1] - 0.5 * frag_out * c[i - 1] + frag_in + sys.Q[i - 1] -
                sys.S[i - 1] * c[i - 1];
  }
  return dc;
}

DiscreteSystem lattice_system(const Problem& problem, double t) {
  if (!problem.grid || !problem.grid->is_lattice()) throw ConfigError("the discrete oracle needs a lattice grid");
  const int N = problem.grid->size();
  const double h = problem.grid->spacing();
  DiscreteSystem sys = DiscreteSystem::zeros(N, h);
  for (int i = 1; i <= N; ++i) {
    for (int j = 1; j <= N; ++j) {
      sys.K(i - 1, j - 1) = problem.coag(i * h, j * h);
      if (!problem.frag.is_zero()) sys.F(i - 1, j - 1) = h * problem.frag(i * h, j * h);
    }
  }
  for (int i = 1; i <= N; ++i) {
    const double x = std::min(i * h, 1.0);
    sys.Q[i - 1] = h * eval_C(problem.frag, problem.boundary, t, x);
    sys.S[i - 1] = eval_G(problem.boundary_kernel(), problem.boundary, t, x);
  }
  return sys;
}

double DiscreteTrajectory::moment(std::size_t k, double lambda) const {
  const Eigen::VectorXd& c = states[k];
  double sum = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) sum += std::pow((i + 1) * h, lambda) * c[i];
  return sum;
}

namespace {

std::vector<Eigen::VectorXd> rk4_outputs(const DiscreteSystem& sys, const Eigen::VectorXd& c0,
                                         const std::vector<double>& outputs, double dt) {
  std::vector<Eigen::VectorXd> states;
  Eigen::VectorXd c = c0;
  double t = 0.0;
  for (double target : outputs) {
    const double span = target - t;
    const long steps = span > 0.0 ? static_cast<long>(std::ceil(span / dt - 1e-9)) : 0;
    const double h = steps > 0 ? span / steps : 0.0;
    for (long s = 0; s < steps; ++s) {
      const Eigen::VectorXd k1 = discrete_rhs(c, sys);
      const Eigen::VectorXd k2 = discrete_rhs(c + 0.5 * h * k1, sys);
      const Eigen::VectorXd k3 = discrete_rhs(c + 0.5 * h * k2, sys);
      const Eigen::VectorXd k4 = discrete_rhs(c + h * k3, sys);
      c += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    t = target;
    states.push_back(c);
  }
  return states;
}

double max_rel_difference(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max(1.0, a[k].lpNorm<Eigen::Infinity>());
    worst = std::max(worst, (a[k] - b[k]).lpNorm<Eigen::Infinity>() / scale);
  }
  return worst;
}

}  // namespace

DiscreteTrajectory integrate_discrete(const DiscreteSystem& sys, const Eigen::VectorXd& c0,
                                      const std::vector<double>& output_times, double dt) {
  if (!(dt > 0.0)) throw ConfigError("oracle step must be > 0");
  if (c0.size() != sys.N) throw ConfigError("oracle initial vector has the wrong length");
  if (!std::is_sorted(output_times.begin(), output_times.end()) ||
      (!output_times.empty() && output_times.front() < 0.0)) {
    throw ConfigError("oracle output times must be sorted and nonnegative");
  }
  auto coarse = rk4_outputs(sys, c0, output_times, dt);
  for (int halving = 0; halving < 12; ++halving) {
    auto fine = rk4_outputs(sys, c0, output_times, 0.5 * dt);
    const double diff = max_rel_difference(coarse, fine);
    dt *= 0.5;
    if (diff <= 1e-8) {
      DiscreteTrajectory out;
      out.times = output_times;
      out.states = std::move(fine);
      out.dt = dt;
      out.h = sys.h;
      return out;
    }
    coarse = std::move(fine);
  }
  throw DomainError("discrete oracle did not settle under step halving");
}

OracleQuadrature quad_oracle(const std::function<double(double)>& f, double a, double b, long n) {
  if (!(b > a) || !std::isfinite(a) || !std::isfinite(b)) throw ConfigError("quad_oracle needs a finite interval");
  if (n < 4) n = 4;
  n += n % 4 == 0 ? 0 : 4 - n % 4;
  const double h = (b - a) / n;
  // Sums over nodes of the n-, n/2- and n/4-interval rules share the coarse nodes.
  double s4 = 0.5 * (f(a) + f(b)), s2 = 0.0, s1 = 0.0;
  for (long k = 1; k < n; ++k) {
    const double v = f(a + k * h);
    if (k % 4 == 0) s4 += v;
    else if (k % 2 == 0) s2 += v;
    else s1 += v;
  }
  const double T4 = 4.0 * h * s4;
  const double T2 = 2.0 * h * (s4 + s2);
  const double T1 = h * (s4 + s2 + s1);
  OracleQuadrature out;
  out.trapezoid = T1;
  out.value = T1 + (T1 - T2) / 3.0;
  const double d_fine = T2 - T1, d_coarse = T4 - T2;
  out.ratio = d_fine != 0.0 ? d_coarse / d_fine : 0.0;
  const double negligible = 1e-13 * std::max(1.0, std::abs(T1));
  out.converged = std::abs(d_fine) <= negligible || (out.ratio > 2.0 && out.ratio < 8.0);
  return out;
}

}  // namespace bvcf
