#include "bvcf/kernel.hpp"

#include "bvcf/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <utility>

namespace bvcf {

namespace {

void require_positive(double x, double y) {
  if (!(x > 0.0) || !(y > 0.0)) {
    std::ostringstream msg;
    msg << "kernel evaluated at nonpositive size (" << x << ", " << y << ")";
    throw DomainError(msg.str());
  }
}

double upper_bound_expr(const CoagBounds& b, double x, double y) {
  return b.K0 * (std::pow(x, -b.alpha) + std::pow(y, -b.alpha)) *
         (std::pow(x, b.beta) + std::pow(y, b.beta));
}

double lower_bound_expr(double K1, const CoagBounds& b, double x, double y) {
  return K1 * (std::pow(x, -b.alpha) * std::pow(y, b.beta) +
               std::pow(y, -b.alpha) * std::pow(x, b.beta));
}

double relative_excess(double value, double bound) {
  if (bound > 0.0) return std::max(0.0, (value - bound) / bound);
  return value > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

/// Log-uniform lattice of (0,1] plus seeded uniform points.
std::vector<std::array<double, 2>> sample_unit_square(std::size_t n_random, std::uint64_t seed) {
  constexpr int kLattice = 48;
  std::vector<std::array<double, 2>> pts;
  pts.reserve(kLattice * kLattice + n_random);
  std::vector<double> axis(kLattice);
  for (int k = 0; k < kLattice; ++k) {
    axis[k] = std::pow(10.0, -6.0 + 6.0 * k / (kLattice - 1));
  }
  for (double x : axis)
    for (double y : axis) pts.push_back({x, y});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t s = 0; s < n_random; ++s) {
    pts.push_back({1.0 - unif(rng), 1.0 - unif(rng)});
  }
  return pts;
}

}  // namespace

const char* to_string(CoagKind kind) {
  switch (kind) {
    case CoagKind::Constant: return "constant";
    case CoagKind::Additive: return "additive";
    case CoagKind::Multiplicative: return "multiplicative";
    case CoagKind::BoundForm: return "bound_form";
    case CoagKind::LowerForm: return "lower_form";
    case CoagKind::Tabulated: return "tabulated";
    case CoagKind::Custom: return "custom";
    case CoagKind::Truncated: return "truncated";
  }
  return "unknown";
}

const char* to_string(FragKind kind) {
  switch (kind) {
    case FragKind::Zero: return "zero";
    case FragKind::Constant: return "constant";
    case FragKind::Power: return "power";
    case FragKind::Additive: return "additive";
    case FragKind::Multiplicative: return "multiplicative";
    case FragKind::Tabulated: return "tabulated";
    case FragKind::DetailedBalance: return "detailed_balance";
    case FragKind::Custom: return "custom";
  }
  return "unknown";
}

// --- KernelTable -----------------------------------------------------------

KernelTable::KernelTable(std::vector<double> xs, std::vector<double> ys, Eigen::MatrixXd values)
    : xs_(std::move(xs)), ys_(std::move(ys)), values_(std::move(values)) {
  if (xs_.size() < 2 || ys_.size() < 2) throw ConfigError("kernel table needs at least 2x2 nodes");
  if (values_.rows() != static_cast<Eigen::Index>(xs_.size()) ||
      values_.cols() != static_cast<Eigen::Index>(ys_.size())) {
    throw ConfigError("kernel table values do not match its axes");
  }
  if (!std::is_sorted(xs_.begin(), xs_.end()) || !std::is_sorted(ys_.begin(), ys_.end())) {
    throw ConfigError("kernel table axes must be increasing");
  }
  if ((values_.array() < 0.0).any()) throw ConfigError("kernel table has negative entries");
}

KernelTable KernelTable::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty kernel table");
  std::vector<std::array<double, 3>> rows;
  std::set<double> xset, yset;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::array<double, 3> r{};
    if (!(ss >> r[0] >> r[1] >> r[2])) throw ConfigError("malformed kernel table row: " + line);
    rows.push_back(r);
    xset.insert(r[0]);
    yset.insert(r[1]);
  }
  std::vector<double> xs(xset.begin(), xset.end()), ys(yset.begin(), yset.end());
  if (rows.size() != xs.size() * ys.size()) throw ConfigError("kernel table is not a full rectangular grid");
  Eigen::MatrixXd values = Eigen::MatrixXd::Constant(xs.size(), ys.size(), -1.0);
  for (const auto& r : rows) {
    const auto i = std::lower_bound(xs.begin(), xs.end(), r[0]) - xs.begin();
    const auto j = std::lower_bound(ys.begin(), ys.end(), r[1]) - ys.begin();
    values(i, j) = r[2];
  }
  return KernelTable(std::move(xs), std::move(ys), std::move(values));
}

KernelTable KernelTable::read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open kernel table " + path);
  return read_csv(in);
}

double KernelTable::operator()(double x, double y) const {
  auto bracket = [](const std::vector<double>& axis, double v, std::size_t& lo, double& w) {
    v = std::clamp(v, axis.front(), axis.back());
    auto it = std::upper_bound(axis.begin(), axis.end(), v);
    lo = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - axis.begin() - 1, 0), axis.size() - 2);
    w = (v - axis[lo]) / (axis[lo + 1] - axis[lo]);
  };
  std::size_t i = 0, j = 0;
  double wx = 0.0, wy = 0.0;
  bracket(xs_, x, i, wx);
  bracket(ys_, y, j, wy);
  return (1 - wx) * (1 - wy) * values_(i, j) + wx * (1 - wy) * values_(i + 1, j) +
         (1 - wx) * wy * values_(i, j + 1) + wx * wy * values_(i + 1, j + 1);
}

// --- CoagKernel ------------------------------------------------------------

CoagKernel::CoagKernel(CoagKind kind, std::string name, Evaluator fn, std::optional<CoagBounds> bounds,
                       std::map<std::string, double> params)
    : kind_(kind), name_(std::move(name)), eval_(std::move(fn)), bounds_(bounds), params_(std::move(params)) {}

CoagKernel CoagKernel::constant(double value) {
  if (!(value >= 0.0)) throw ConfigError("constant kernel must be nonnegative");
  // 4 K0 = value at alpha = beta = 0; the lower form is 2 K1.
  return CoagKernel(CoagKind::Constant, "constant", [value](double, double) { return value; },
                    CoagBounds{value / 4.0, 0.0, 0.0, value / 2.0}, {{"value", value}});
}

CoagKernel CoagKernel::additive() {
  return CoagKernel(CoagKind::Additive, "additive", [](double x, double y) { return x + y; },
                    CoagBounds{0.5, 0.0, 1.0, 1.0}, {});
}

CoagKernel CoagKernel::multiplicative() {
  return CoagKernel(CoagKind::Multiplicative, "multiplicative", [](double x, double y) { return x * y; },
                    CoagBounds{0.5, 0.0, 1.0, std::nullopt}, {});
}

CoagKernel CoagKernel::bound_form(double K0, double alpha, double beta) {
  if (!(K0 >= 0.0) || alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0) {
    throw ConfigError("bound_form kernel needs K0 >= 0 and alpha, beta in [0,1]");
  }
  return CoagKernel(
      CoagKind::BoundForm, "bound_form",
      [K0, alpha, beta](double x, double y) {
        return K0 * (std::pow(x, -alpha) + std::pow(y, -alpha)) * (std::pow(x, beta) + std::pow(y, beta));
      },
      CoagBounds{K0, alpha, beta, K0}, {{"K0", K0}, {"alpha", alpha}, {"beta", beta}});
}

CoagKernel CoagKernel::lower_form(double K1, double alpha, double beta) {
  if (!(K1 >= 0.0) || alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0) {
    throw ConfigError("lower_form kernel needs K1 >= 0 and alpha, beta in [0,1]");
  }
  return CoagKernel(
      CoagKind::LowerForm, "lower_form",
      [K1, alpha, beta](double x, double y) {
        return K1 * (std::pow(x, -alpha) * std::pow(y, beta) + std::pow(y, -alpha) * std::pow(x, beta));
      },
      CoagBounds{K1, alpha, beta, K1}, {{"K1", K1}, {"alpha", alpha}, {"beta", beta}});
}

CoagKernel CoagKernel::tabulated(KernelTable table, std::optional<CoagBounds> declared) {
  auto shared = std::make_shared<const KernelTable>(std::move(table));
  return CoagKernel(CoagKind::Tabulated, "tabulated", [shared](double x, double y) { return (*shared)(x, y); },
                    declared, {});
}

CoagKernel CoagKernel::custom(std::string name, Evaluator fn, std::optional<CoagBounds> declared) {
  return CoagKernel(CoagKind::Custom, std::move(name), std::move(fn), declared, {});
}

double CoagKernel::operator()(double x, double y) const {
  require_positive(x, y);
  return x <= y ? eval_(x, y) : eval_(y, x);
}

bool CoagKernel::singular() const {
  if (truncation_ > 0) return false;
  switch (kind_) {
    case CoagKind::BoundForm:
    case CoagKind::LowerForm:
    case CoagKind::Custom:
      return bounds_ && bounds_->alpha > 0.0 && bounds_->K0 > 0.0;
    default:
      return false;
  }
}

double eval_coag(const CoagKernel& k, double x, double y) { return k(x, y); }

// --- truncation -----------------------------------------------------------

double TruncatedKernel::operator()(double x, double y) const {
  require_positive(x, y);
  const double threshold = 1.0 / j;
  if (x <= threshold || y <= threshold) return 0.0;
  return base(x, y);
}

CoagKernel TruncatedKernel::kernel() const {
  auto shared = std::make_shared<const CoagKernel>(base.base());
  const int index = j;
  const double threshold = 1.0 / index;
  std::optional<CoagBounds> bounds = shared->bounds();
  if (bounds) bounds->K1.reset();  // K_j vanishes near 0, so no lower bound survives
  auto params = shared->parameters();
  params["j"] = index;
  CoagKernel out(
      CoagKind::Truncated, shared->name() + "_truncated",
      [shared, threshold](double x, double y) {
        if (x <= threshold || y <= threshold) return 0.0;
        return (*shared)(x, y);
      },
      bounds, std::move(params));
  out.truncation_ = index;
  out.base_ = shared;
  return out;
}

TruncatedKernel truncate(const CoagKernel& k, int j) {
  if (j < 1) throw ConfigError("truncation index j must be >= 1");
  return TruncatedKernel{k.base(), j};
}

// --- FragKernel ------------------------------------------------------------

FragKernel::FragKernel(FragKind kind, std::string name, Evaluator fn, std::optional<FragBounds> bounds,
                       std::map<std::string, double> params)
    : kind_(kind), name_(std::move(name)), eval_(std::move(fn)), bounds_(bounds), params_(std::move(params)) {}

FragKernel FragKernel::zero() {
  return FragKernel(FragKind::Zero, "zero", [](double, double) { return 0.0; }, FragBounds{0.0, 0.0}, {});
}

FragKernel FragKernel::constant(double value) {
  if (!(value >= 0.0)) throw ConfigError("constant fragmentation kernel must be nonnegative");
  return FragKernel(FragKind::Constant, "constant", [value](double, double) { return value; },
                    FragBounds{value / 2.0, 0.0}, {{"value", value}});
}

FragKernel FragKernel::power(double F0, double gamma) {
  if (!(F0 >= 0.0) || gamma < 0.0 || gamma > 1.0) throw ConfigError("power fragmentation needs F0 >= 0, gamma in [0,1]");
  return FragKernel(
      FragKind::Power, "power",
      [F0, gamma](double x, double y) { return F0 * (std::pow(x, gamma) + std::pow(y, gamma)); },
      FragBounds{F0, gamma}, {{"F0", F0}, {"gamma", gamma}});
}

FragKernel FragKernel::additive() {
  return FragKernel(FragKind::Additive, "additive", [](double x, double y) { return x + y; },
                    FragBounds{1.0, 1.0}, {});
}

FragKernel FragKernel::multiplicative() {
  // xy <= (x + y) / 2 on (0,1]^2
  return FragKernel(FragKind::Multiplicative, "multiplicative", [](double x, double y) { return x * y; },
                    FragBounds{0.5, 1.0}, {});
}

FragKernel FragKernel::tabulated(KernelTable table, std::optional<FragBounds> declared) {
  auto shared = std::make_shared<const KernelTable>(std::move(table));
  return FragKernel(FragKind::Tabulated, "tabulated", [shared](double x, double y) { return (*shared)(x, y); },
                    declared, {});
}

FragKernel FragKernel::custom(std::string name, Evaluator fn, std::optional<FragBounds> declared) {
  return FragKernel(FragKind::Custom, std::move(name), std::move(fn), declared, {});
}

double FragKernel::operator()(double x, double y) const {
  require_positive(x, y);
  return x <= y ? eval_(x, y) : eval_(y, x);
}

FragKernel detailed_balance_frag(const CoagKernel& k, std::function<double(double)> Q,
                                 std::optional<FragBounds> declared) {
  return FragKernel(
      FragKind::DetailedBalance, "detailed_balance",
      [k, Q = std::move(Q)](double x, double y) {
        const double merged = Q(x + y);
        if (!(merged > 0.0)) {
          std::ostringstream msg;
          msg << "detailed-balance profile vanishes at x+y = " << x + y;
          throw SingularProfileError(msg.str());
        }
        return k(x, y) * Q(x) * Q(y) / merged;
      },
      declared, {});
}

// --- bound validation ----------------------------------------------------

BoundReport validate_bounds(const CoagKernel& k, std::size_t n_samples, std::uint64_t seed) {
  if (!k.bounds()) throw ConfigError("kernel '" + k.name() + "' declares no bound parameters");
  const CoagBounds& b = *k.bounds();
  BoundReport report;
  for (const auto& p : sample_unit_square(n_samples, seed)) {
    const double value = k(p[0], p[1]);
    const double excess = relative_excess(value, upper_bound_expr(b, p[0], p[1]));
    if (excess > report.max_violation) {
      report.max_violation = excess;
      report.worst_point = p;
    }
    if (b.K1) {
      const double lower = lower_bound_expr(*b.K1, b, p[0], p[1]);
      const double deficit = lower > 0.0 ? std::max(0.0, (lower - value) / lower) : 0.0;
      if (deficit > report.max_lower_violation) {
        report.max_lower_violation = deficit;
        report.worst_lower_point = p;
      }
    }
    ++report.samples;
  }
  return report;
}

BoundReport validate_bounds(const FragKernel& f, std::size_t n_samples, std::uint64_t seed) {
  if (!f.bounds()) throw ConfigError("fragmentation kernel '" + f.name() + "' declares no bound parameters");
  const FragBounds& b = *f.bounds();
  BoundReport report;
  for (const auto& p : sample_unit_square(n_samples, seed)) {
    const double bound = b.F0 * (std::pow(p[0], b.gamma) + std::pow(p[1], b.gamma));
    const double excess = relative_excess(f(p[0], p[1]), bound);
    if (excess > report.max_violation) {
      report.max_violation = excess;
      report.worst_point = p;
    }
    ++report.samples;
  }
  return report;
}

// --- bounded kernel constants ----------------------------------------------

BoundedKernelParams bounded_params(const CoagKernel& k, double tail_beta) {
  if (k.singular()) {
    throw UnboundedKernelError("kernel '" + k.name() + "' is singular on (0,1]^2; truncate it first");
  }
  BoundedKernelParams out;
  out.beta = tail_beta;
  if (k.truncation() == 0) {
    const auto& p = k.parameters();
    switch (k.kind()) {
      case CoagKind::Constant:
        if (tail_beta < 0.0) break;
        out.K_inf = out.K_beta = p.at("value");
        out.exact = true;
        return out;
      case CoagKind::Additive:
        // (x + y) / y^beta with x <= 1 < y peaks as y -> 1 when beta >= 1.
        if (tail_beta < 1.0) throw UnboundedKernelError("additive kernel grows faster than y^beta");
        out.K_inf = 2.0;
        out.K_beta = 2.0;
        out.exact = true;
        return out;
      case CoagKind::Multiplicative:
        if (tail_beta < 1.0) throw UnboundedKernelError("multiplicative kernel grows faster than y^beta");
        out.K_inf = 1.0;
        out.K_beta = 1.0;
        out.exact = true;
        return out;
      default:
        break;
    }
  }

  // Sampled estimate. Truncated kernels are probed just above 1/j.
  const double lo = k.truncation() > 0 ? std::nextafter(1.0 / k.truncation(), 2.0) : 1e-9;
  constexpr int kAxis = 400;
  std::vector<double> xs{lo};
  for (int s = 1; s < kAxis; ++s) xs.push_back(lo * std::pow(1.0 / lo, static_cast<double>(s) / (kAxis - 1)));
  xs.back() = 1.0;
  for (double x : xs)
    for (double y : xs) out.K_inf = std::max(out.K_inf, k(x, y));

  std::vector<double> ys{std::nextafter(1.0, 2.0)};
  for (int s = 1; s < 200; ++s) ys.push_back(std::pow(10.0, 6.0 * s / 199.0));
  for (double x : xs) {
    for (double y : ys) out.K_beta = std::max(out.K_beta, k(x, y) / std::pow(y, tail_beta));
  }
  if (!std::isfinite(out.K_inf) || !std::isfinite(out.K_beta)) {
    throw UnboundedKernelError("kernel '" + k.name() + "' is not bounded on the sampled set");
  }
  return out;
}

}  // namespace bvcf
