#include "bvcf/boundary.hpp"

#include "bvcf/csv.hpp"
#include "bvcf/error.hpp"
#include "bvcf/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace bvcf {

// --- modulation -----------------------------------------------------------------

TimeModulation TimeModulation::constant(double c) {
  if (!(c >= 0.0)) throw ConfigError("time modulation must be nonnegative");
  TimeModulation m;
  m.c_ = c;
  return m;
}

TimeModulation TimeModulation::decaying(double c) {
  TimeModulation m = constant(c);
  m.kind_ = Kind::Decaying;
  return m;
}

TimeModulation TimeModulation::sampled(std::vector<double> ts, std::vector<double> factors) {
  if (ts.empty() || ts.size() != factors.size()) throw ConfigError("sampled modulation needs matching (t, factor) pairs");
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (k > 0 && !(ts[k] > ts[k - 1])) throw ConfigError("sampled modulation times must increase");
    if (!(factors[k] >= 0.0)) throw ConfigError("sampled modulation factors must be nonnegative");
  }
  TimeModulation m;
  m.kind_ = Kind::Sampled;
  m.ts_ = std::move(ts);
  m.fs_ = std::move(factors);
  return m;
}

TimeModulation TimeModulation::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open modulation CSV " + path);
  std::string line;
  std::getline(in, line);
  std::vector<double> ts, fs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < 2) throw ConfigError("modulation CSV rows need (t, factor)");
    ts.push_back(parse_double(f[0]));
    fs.push_back(parse_double(f[1]));
  }
  return sampled(std::move(ts), std::move(fs));
}

double TimeModulation::operator()(double t) const {
  switch (kind_) {
    case Kind::Constant: return c_;
    case Kind::Decaying: return c_ / (1.0 + t);
    case Kind::Sampled: {
      if (t <= ts_.front()) return fs_.front();
      if (t >= ts_.back()) return fs_.back();
      const auto k = static_cast<std::size_t>(std::upper_bound(ts_.begin(), ts_.end(), t) - ts_.begin());
      const double w = (t - ts_[k - 1]) / (ts_[k] - ts_[k - 1]);
      return (1.0 - w) * fs_[k - 1] + w * fs_[k];
    }
  }
  return 0.0;
}

double TimeModulation::sup() const {
  if (kind_ == Kind::Sampled) return *std::max_element(fs_.begin(), fs_.end());
  return c_;
}

double PowerExpProfile::operator()(double x) const { return A * std::pow(x, p) * std::exp(-r * x); }

// --- datum --------------------------------------------------------------------------

BoundaryDatum BoundaryDatum::zero() { return BoundaryDatum(); }

BoundaryDatum BoundaryDatum::exponential(double A, double q) {
  if (!(A >= 0.0) || !(q > 0.0)) throw ConfigError("exponential boundary datum needs A >= 0 and q > 0");
  BoundaryDatum g;
  g.kind_ = Kind::Exponential;
  g.A_ = A;
  g.q_ = q;
  return g;
}

BoundaryDatum BoundaryDatum::power_tail(double A, double p) {
  if (!(A >= 0.0) || !std::isfinite(p)) throw ConfigError("power-tail boundary datum needs A >= 0");
  BoundaryDatum g;
  g.kind_ = Kind::PowerTail;
  g.A_ = A;
  g.p_ = p;
  return g;
}

BoundaryDatum BoundaryDatum::power_exponential(double A, double p, double q) {
  if (!(A >= 0.0) || !(q > 0.0) || !std::isfinite(p)) {
    throw ConfigError("power-exponential boundary datum needs A >= 0 and q > 0");
  }
  BoundaryDatum g;
  g.kind_ = Kind::PowerExponential;
  g.A_ = A;
  g.p_ = p;
  g.q_ = q;
  return g;
}

BoundaryDatum BoundaryDatum::with_modulation(TimeModulation m) const {
  BoundaryDatum g = *this;
  g.modulation_ = std::move(m);
  return g;
}

BoundaryDatum BoundaryDatum::with_cutoff(double y_max) const {
  if (!(y_max > 1.0)) throw ConfigError("boundary cutoff must exceed 1");
  BoundaryDatum g = *this;
  g.y_max_ = y_max;
  return g;
}

double BoundaryDatum::profile(double y) const {
  switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Exponential: return A_ * std::exp(-q_ * y);
    case Kind::PowerTail: return A_ * std::pow(y, -p_);
    case Kind::PowerExponential: return A_ * std::pow(y, -p_) * std::exp(-q_ * y);
  }
  return 0.0;
}

void BoundaryDatum::require_moment(double lambda) const {
  if (kind_ == Kind::PowerTail && A_ > 0.0 && !(p_ > lambda + 1.0)) {
    std::ostringstream msg;
    msg << "boundary moment M_" << lambda << " diverges for the power tail y^-" << p_ << " (need p > "
        << lambda + 1.0 << ")";
    throw ConfigError(msg.str());
  }
}

double BoundaryDatum::upper_limit(double s) const {
  if (kind_ == Kind::PowerTail) return std::numeric_limits<double>::infinity();
  if (kind_ == Kind::Zero) return y_max_;
  if (kind_ == Kind::PowerExponential) s -= p_;
  auto tail = [&](double Y) {
    const double base = std::pow(Y, s) * std::exp(-q_ * Y) / q_;
    return A_ * (s > 0.0 ? 2.0 * base : base);
  };
  double Y = std::max(y_max_, s > 0.0 ? 2.0 * s / q_ : 0.0);
  while (tail(Y) >= 1e-12) Y *= 1.25;
  return Y;
}

double BoundaryDatum::spatial_moment(double lambda) const {
  require_moment(lambda);
  switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Exponential:
      return A_ * std::pow(q_, -(lambda + 1.0)) * upper_incomplete_gamma(lambda + 1.0, q_);
    case Kind::PowerTail: return A_ / (p_ - lambda - 1.0);
    case Kind::PowerExponential:
      return integrate_adaptive([&](double y) { return std::pow(y, lambda) * profile(y); }, 1.0,
                                upper_limit(lambda))
          .value;
  }
  return 0.0;
}

std::string BoundaryDatum::describe() const {
  std::ostringstream s;
  switch (kind_) {
    case Kind::Zero: s << "zero"; break;
    case Kind::Exponential: s << A_ << "*exp(-" << q_ << "y)"; break;
    case Kind::PowerTail: s << A_ << "*y^-" << p_; break;
    case Kind::PowerExponential: s << A_ << "*y^-" << p_ << "*exp(-" << q_ << "y)"; break;
  }
  return s.str();
}

double moment_M(const BoundaryDatum& g, double lambda, double t) {
  return g.modulation()(t) * g.spatial_moment(lambda);
}

double moment_sup(const BoundaryDatum& g, double lambda) { return g.modulation().sup() * g.spatial_moment(lambda); }

// --- coupling integrals -------------------------------------------------------------

namespace {

double coag_tail_exponent(const CoagKernel& k) { return k.bounds() ? k.bounds()->beta : 1.0; }
double frag_tail_exponent(const FragKernel& f) { return f.bounds() ? f.bounds()->gamma : 1.0; }

double spatial_G(const CoagKernel& k, const BoundaryDatum& g, double x) {
  if (g.is_zero()) return 0.0;
  const double s = coag_tail_exponent(k);
  g.require_moment(s);
  return integrate_adaptive([&](double y) { return k(x, y) * g.profile(y); }, 1.0, g.upper_limit(s)).value;
}

double spatial_C(const FragKernel& f, const BoundaryDatum& g, double x) {
  if (g.is_zero() || f.is_zero()) return 0.0;
  const double s = frag_tail_exponent(f);
  g.require_moment(s);
  return integrate_adaptive([&](double y) { return f(y - x, x) * g.profile(y); }, 1.0, g.upper_limit(s)).value;
}

}  // namespace

double eval_G(const CoagKernel& k, const BoundaryDatum& g, double t, double x) {
  if (!(x > 0.0 && x <= 1.0)) throw DomainError("G is evaluated on (0,1]");
  return g.modulation()(t) * spatial_G(k, g, x);
}

double eval_C(const FragKernel& f, const BoundaryDatum& g, double t, double x) {
  if (!(x > 0.0 && x <= 1.0)) throw DomainError("C is evaluated on (0,1]");
  return g.modulation()(t) * spatial_C(f, g, x);
}

BoundaryTables precompute_tables(const CoagKernel& k, const FragKernel& f, const BoundaryDatum& g,
                                 const Grid& grid, double t) {
  BoundaryCoupling coupling(k, f, g, grid);
  return coupling.at(t);
}

BoundaryCoupling::BoundaryCoupling(const CoagKernel& k, const FragKernel& f, const BoundaryDatum& g,
                                   const Grid& grid)
    : modulation_(g.modulation()) {
  const int n = grid.size();
  base_.G.resize(n);
  base_.C.resize(n);
  for (int i = 0; i < n; ++i) {
    base_.G[i] = spatial_G(k, g, grid.pivot(i));
    base_.C[i] = spatial_C(f, g, grid.pivot(i));
  }
  base_.G_atom = spatial_G(k, g, 1.0);
}

BoundaryTables BoundaryCoupling::at(double t) const {
  const double m = modulation_(t);
  BoundaryTables out;
  out.t = t;
  out.G = m * base_.G;
  out.C = m * base_.C;
  out.G_atom = m * base_.G_atom;
  return out;
}

}  // namespace bvcf
