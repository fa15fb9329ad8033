#include "bvcf/state.hpp"

#include "bvcf/csv.hpp"
#include "bvcf/error.hpp"
#include "bvcf/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace bvcf {

const char* to_string(GridKind kind) {
  switch (kind) {
    case GridKind::Uniform: return "uniform";
    case GridKind::Geometric: return "geometric";
    case GridKind::Lattice: return "lattice";
    case GridKind::Custom: return "custom";
  }
  return "unknown";
}

// --- Grid -------------------------------------------------------------------

Grid::Grid(GridKind kind, Eigen::VectorXd edges, Eigen::VectorXd pivots, double ratio)
    : kind_(kind), edges_(std::move(edges)), pivots_(std::move(pivots)), ratio_(ratio) {
  const Eigen::Index n = pivots_.size();
  if (n < 1 || edges_.size() != n + 1) throw ConfigError("grid needs n >= 1 cells and n+1 edges");
  if (edges_[0] != 0.0 || edges_[n] != 1.0) throw ConfigError("grid edges must run from 0 to 1");
  widths_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(edges_[i + 1] > edges_[i])) throw ConfigError("grid edges must be strictly increasing");
    if (!(pivots_[i] > edges_[i] && pivots_[i] <= edges_[i + 1])) {
      throw ConfigError("grid pivot outside its cell");
    }
    widths_[i] = edges_[i + 1] - edges_[i];
  }
}

namespace {

Eigen::VectorXd geometric_pivots(const Eigen::VectorXd& edges) {
  const Eigen::Index n = edges.size() - 1;
  Eigen::VectorXd p(n);
  p[0] = 0.5 * edges[1];
  for (Eigen::Index i = 1; i < n; ++i) p[i] = std::sqrt(edges[i] * edges[i + 1]);
  return p;
}

}  // namespace

GridPtr Grid::uniform(int n) {
  if (n < 2) throw ConfigError("uniform grid needs n >= 2");
  Eigen::VectorXd e(n + 1);
  for (int i = 0; i <= n; ++i) e[i] = static_cast<double>(i) / n;
  auto p = geometric_pivots(e);
  return std::shared_ptr<const Grid>(new Grid(GridKind::Uniform, std::move(e), std::move(p), 1.0));
}

GridPtr Grid::geometric(int n, double rho) {
  if (n < 2) throw ConfigError("geometric grid needs n >= 2");
  if (!(rho > 1.0)) throw ConfigError("geometric grid needs ratio > 1");
  Eigen::VectorXd e(n + 1);
  e[0] = 0.0;
  for (int i = 1; i <= n; ++i) e[i] = std::pow(rho, i - n);
  auto p = geometric_pivots(e);
  return std::shared_ptr<const Grid>(new Grid(GridKind::Geometric, std::move(e), std::move(p), rho));
}

GridPtr Grid::lattice(int n) {
  if (n < 2) throw ConfigError("lattice grid needs n >= 2");
  Eigen::VectorXd e(n + 1), p(n);
  for (int i = 0; i <= n; ++i) e[i] = static_cast<double>(i) / n;
  for (int i = 0; i < n; ++i) p[i] = e[i + 1];
  return std::shared_ptr<const Grid>(new Grid(GridKind::Lattice, std::move(e), std::move(p), 1.0));
}

GridPtr Grid::custom(Eigen::VectorXd edges, Eigen::VectorXd pivots) {
  return std::shared_ptr<const Grid>(new Grid(GridKind::Custom, std::move(edges), std::move(pivots), 0.0));
}

int Grid::locate(double x) const {
  if (!(x > 0.0)) return -1;
  if (x > 1.0) return size();
  // first edge >= x; the cell is the one ending there
  const double* begin = edges_.data() + 1;
  const double* it = std::lower_bound(begin, edges_.data() + edges_.size(), x);
  return static_cast<int>(it - begin);
}

bool Grid::same_as(const Grid& other) const {
  return this == &other || (edges_.size() == other.edges_.size() && edges_ == other.edges_ &&
                            pivots_ == other.pivots_);
}

// --- measures -----------------------------------------------------------------

StateMeasure from_density(const std::function<double(double)>& f_in, GridPtr grid) {
  StateMeasure s(grid);
  const auto& rule = gauss_legendre(16);
  for (int i = 0; i < grid->size(); ++i) {
    s.counts[i] = integrate_gl(
        [&](double x) {
          const double v = f_in(x);
          if (!(v >= 0.0)) {
            std::ostringstream msg;
            msg << "initial density negative or undefined at x = " << x;
            throw DomainError(msg.str());
          }
          return v;
        },
        grid->left(i), grid->right(i), rule);
  }
  return s;
}

double interior_moment(const StateMeasure& s, double lambda) {
  if (lambda == 0.0) return s.counts.sum();
  return (s.counts.array() * s.grid->pivots().array().pow(lambda)).sum();
}

double moment_m(const StateMeasure& s, double lambda) { return interior_moment(s, lambda) + s.atom; }

double prefix_count(const StateMeasure& s, double delta) {
  double sum = 0.0;
  for (int i = 0; i < s.size() && s.grid->pivot(i) < delta; ++i) sum += s.counts[i];
  return sum;
}

std::optional<std::string> resolution_warning(const StateMeasure& s) {
  const double total = s.total_variation();
  if (total > 0.0 && s.counts[0] > 0.5 * total) {
    std::ostringstream msg;
    msg << "first cell holds " << 100.0 * s.counts[0] / total
        << "% of the count; negative moments are under-resolved";
    return msg.str();
  }
  return std::nullopt;
}

// --- test functions -----------------------------------------------------------

TestFunction::TestFunction(std::vector<double> breakpoints, std::vector<double> values, std::string name)
    : xs_(std::move(breakpoints)), vs_(std::move(values)), name_(std::move(name)) {
  if (xs_.empty() || xs_.size() != vs_.size()) throw ConfigError("test function needs matching breakpoints/values");
  double prev_x = 0.0, prev_v = 0.0;
  for (std::size_t k = 0; k < xs_.size(); ++k) {
    if (!(xs_[k] > prev_x) || xs_[k] > 1.0) throw ConfigError("test function breakpoints must increase within (0,1]");
    lip_ = std::max(lip_, std::abs(vs_[k] - prev_v) / (xs_[k] - prev_x));
    sup_ = std::max(sup_, std::abs(vs_[k]));
    prev_x = xs_[k];
    prev_v = vs_[k];
  }
}

TestFunction TestFunction::sample(const std::function<double(double)>& f, std::vector<double> breakpoints,
                                  std::string name) {
  std::vector<double> values(breakpoints.size());
  std::transform(breakpoints.begin(), breakpoints.end(), values.begin(), f);
  return TestFunction(std::move(breakpoints), std::move(values), std::move(name));
}

TestFunction TestFunction::sample_uniform(const std::function<double(double)>& f, int pieces, std::string name) {
  std::vector<double> xs(pieces);
  for (int k = 0; k < pieces; ++k) xs[k] = static_cast<double>(k + 1) / pieces;
  return sample(f, std::move(xs), std::move(name));
}

TestFunction TestFunction::identity() { return TestFunction({1.0}, {1.0}, "x"); }

TestFunction TestFunction::ramp(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("ramp width must lie in (0,1)");
  return TestFunction({eps, 1.0}, {1.0, 1.0}, "ramp");
}

double TestFunction::operator()(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= xs_.back()) return vs_.back();
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - xs_.begin());
  const double x0 = k == 0 ? 0.0 : xs_[k - 1];
  const double v0 = k == 0 ? 0.0 : vs_[k - 1];
  return v0 + (vs_[k] - v0) * (x - x0) / (xs_[k] - x0);
}

double pair_test(const StateMeasure& s, const TestFunction& phi) {
  double sum = s.atom * phi(1.0);
  for (int i = 0; i < s.size(); ++i) sum += s.counts[i] * phi(s.grid->pivot(i));
  return sum;
}

std::vector<TestFunction> test_battery(int pieces) {
  std::vector<TestFunction> out;
  for (int k = 1; k <= 10; ++k) {
    out.push_back(TestFunction::sample_uniform([k](double x) { return std::pow(x, k); }, pieces,
                                               "x^" + std::to_string(k)));
  }
  for (int k = 1; k <= 10; ++k) {
    out.push_back(TestFunction::sample_uniform(
        [k](double x) { return std::sin(k * std::numbers::pi * x / 2.0); }, pieces,
        "sin(" + std::to_string(k) + "pi x/2)"));
  }
  return out;
}

// --- CSV ------------------------------------------------------------------------

void write_state_csv(std::ostream& out, const StateMeasure& s) {
  out << "cell_index,left_edge,right_edge,pivot,count\n";
  for (int i = 0; i < s.size(); ++i) {
    out << i + 1 << ',' << format_double(s.grid->left(i)) << ',' << format_double(s.grid->right(i)) << ','
        << format_double(s.grid->pivot(i)) << ',' << format_double(s.counts[i]) << '\n';
  }
  out << "atom,1,1,1," << format_double(s.atom) << '\n';
}

void write_state_csv(const std::string& path, const StateMeasure& s) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  write_state_csv(out, s);
}

StateMeasure read_state_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty state CSV");
  std::vector<double> lefts, rights, pivots, counts;
  double atom = 0.0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw ConfigError("state CSV row needs 5 fields: " + line);
    if (f[0] == "atom") {
      atom = parse_double(f[4]);
      continue;
    }
    lefts.push_back(parse_double(f[1]));
    rights.push_back(parse_double(f[2]));
    pivots.push_back(parse_double(f[3]));
    counts.push_back(parse_double(f[4]));
  }
  if (pivots.empty()) throw ConfigError("state CSV has no cells");
  const Eigen::Index n = static_cast<Eigen::Index>(pivots.size());
  Eigen::VectorXd edges(n + 1);
  edges[0] = lefts[0];
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i > 0 && lefts[i] != rights[i - 1]) throw ConfigError("state CSV cells are not contiguous");
    edges[i + 1] = rights[i];
  }
  StateMeasure s(Grid::custom(edges, Eigen::Map<Eigen::VectorXd>(pivots.data(), n)));
  s.counts = Eigen::Map<Eigen::VectorXd>(counts.data(), n);
  s.atom = atom;
  if ((s.counts.array() < 0.0).any() || atom < 0.0) throw DomainError("state CSV has negative counts");
  return s;
}

StateMeasure read_state_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return read_state_csv(in);
}

}  // namespace bvcf
