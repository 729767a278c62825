#include "slgp/reference_fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace slgp {

namespace {

void check_unit(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument("x must lie in [0, 1], got " + std::to_string(x));
  }
}

constexpr std::size_t kSamplingNodes = 1001;

}  // namespace

std::string_view to_string(MedianId id) { return id == MedianId::f1 ? "f1" : "f2"; }

std::string_view to_string(FieldKind kind) {
  return kind == FieldKind::truncated_gaussian ? "truncated_gaussian" : "multimodal";
}

MedianId parse_median_id(std::string_view name) {
  if (name == "f1") return MedianId::f1;
  if (name == "f2") return MedianId::f2;
  throw std::invalid_argument("unknown median function '" + std::string(name) + "'");
}

FieldKind parse_field_kind(std::string_view name) {
  if (name == "truncated_gaussian" || name == "tg") return FieldKind::truncated_gaussian;
  if (name == "multimodal" || name == "mm") return FieldKind::multimodal;
  throw std::invalid_argument("unknown field kind '" + std::string(name) + "'");
}

double f1(double x) {
  check_unit(x);
  return 0.25 * std::sin(16.0 * x + 9.0) + 0.25 * std::sin(4.8 * x + 2.7) + 0.625;
}

double f2(double x) {
  check_unit(x);
  const double u = 10.0 * x - 5.0;
  return 0.15 + (7.0 / 72.0) * (1.1 * u * u - 5.0 * u + 6.1) / (u * u + 1.0);
}

double median_function(MedianId id, double x) { return id == MedianId::f1 ? f1(x) : f2(x); }

double ReferenceField::half_width(double x) const {
  const double m = median_at(x);
  return std::min(m, 1.0 - m);
}

double ReferenceField::unnormalized(double x, double t) const {
  const double m = median_at(x);
  const double u = t - m;
  if (std::abs(u) > half_width(x)) return 0.0;
  if (kind == FieldKind::truncated_gaussian) {
    return std::exp(-0.5 * u * u / (scale * scale));
  }
  double value = 0.0;
  for (double s : {-1.0, 1.0}) {
    const double d = u - s * mode_offset;
    value += 0.5 * std::exp(-0.5 * d * d / (mode_scale * mode_scale));
  }
  return value;
}

namespace {

/// Rescale the parts of a density left and right of m so that the
/// interpolated trapezoidal CDF is exactly 1/2 at m and the total mass is 1.
/// Truncation edges fall between nodes at different offsets on either side,
/// which otherwise leaves the two halves with unequal discrete mass.
bool balance_halves(const QuadratureGrid& grid, Eigen::VectorXd& values, double m) {
  const auto& t = grid.nodes();
  const Eigen::Index n = t.size();
  if (!(m > t[0] && m < t[n - 1])) return false;
  Eigen::Index k = 0;
  while (t[k + 1] <= m) ++k;
  const Eigen::VectorXd cdf = grid.cumulative(values);
  const double h = t[k + 1] - t[k];
  const double theta = (m - t[k]) / h;
  const double left = cdf[k];
  const double right = cdf[n - 1] - cdf[k + 1];
  const double cl = 0.5 * h * values[k];
  const double cr = 0.5 * h * values[k + 1];
  // a (left + theta cl) + b theta cr = 1/2,  a (left + cl) + b (cr + right) = 1
  const double a11 = left + theta * cl, a12 = theta * cr;
  const double a21 = left + cl, a22 = cr + right;
  const double det = a11 * a22 - a12 * a21;
  if (!(std::abs(det) > 1e-300)) return false;
  const double a = (0.5 * a22 - a12) / det;
  const double b = (a11 - 0.5 * a21) / det;
  if (!(a > 0.0 && b > 0.0)) return false;
  values.head(k + 1) *= a;
  values.tail(n - k - 1) *= b;
  return true;
}

}  // namespace

DensityGrid reference_density(const ReferenceField& field, double x, const GridPtr& t_grid) {
  check_unit(x);
  Eigen::VectorXd values(static_cast<Eigen::Index>(t_grid->size()));
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    values[k] = field.unnormalized(x, t_grid->nodes()[k]);
  }
  double mass = t_grid->integrate(values);
  if (!(mass > 0.0)) {
    // Window narrower than a grid cell: put all mass on the nearest node.
    const double m = field.median_at(x);
    Eigen::Index nearest = 0;
    (t_grid->nodes().array() - m).abs().minCoeff(&nearest);
    values.setZero();
    values[nearest] = 1.0;
    mass = t_grid->integrate(values);
  }
  values /= mass;
  balance_halves(*t_grid, values, field.median_at(x));
  return {t_grid, values};
}

std::vector<DensityGrid> reference_field_grid(const ReferenceField& field,
                                              std::span<const double> x_grid,
                                              const GridPtr& t_grid) {
  std::vector<DensityGrid> out;
  out.reserve(x_grid.size());
  for (double x : x_grid) out.push_back(reference_density(field, x, t_grid));
  return out;
}

std::vector<double> sample_reference(const ReferenceField& field, double x, std::size_t k,
                                     Rng& rng) {
  if (k == 0) throw std::invalid_argument("sample size must be positive");
  const double m = field.median_at(x);
  const double c = field.half_width(x);
  if (!(c > 0.0)) return std::vector<double>(k, m);
  // Both kinds are symmetric about m: draw |t - m| by inverse CDF on a
  // refined grid over [0, c], then a fair sign.
  const QuadratureGrid offsets = QuadratureGrid::regular(kSamplingNodes, 0.0, c);
  Eigen::VectorXd values(static_cast<Eigen::Index>(offsets.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    values[i] = field.unnormalized(x, std::min(m + offsets.nodes()[i], m + c));
  }
  if (!(offsets.integrate(values) > 0.0)) return std::vector<double>(k, m);
  const InverseCdf inverse(offsets, values);
  std::vector<double> out(k);
  for (auto& t : out) {
    const double u = std::clamp(inverse(uniform01(rng)), 0.0, c);
    t = uniform01(rng) < 0.5 ? m - u : m + u;
  }
  return out;
}

std::vector<double> random_design(std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("design size must be positive");
  std::vector<double> xs(n);
  for (auto& x : xs) x = uniform01(rng);
  return xs;
}

Dataset sample_random_design(const ReferenceField& field, std::size_t n, Rng& rng) {
  Dataset data;
  for (double x : random_design(n, rng)) {
    data.add(x, sample_reference(field, x, 1, rng).front());
  }
  return data;
}

}  // namespace slgp
