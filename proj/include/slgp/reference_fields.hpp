#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "slgp/model.hpp"
#include "slgp/random.hpp"

namespace slgp {

enum class MedianId { f1, f2 };
enum class FieldKind { truncated_gaussian, multimodal };

std::string_view to_string(MedianId id);
std::string_view to_string(FieldKind kind);
MedianId parse_median_id(std::string_view name);
FieldKind parse_field_kind(std::string_view name);

/// 0.25 sin(16x + 9) + 0.25 sin(4.8x + 2.7) + 0.625, minimised near x = 0.5095.
double f1(double x);

/// 0.15 + (7/72) (1.1 u^2 - 5u + 6.1) / (u^2 + 1) with u = 10x - 5,
/// minimised near x = 0.7414.
double f2(double x);

double median_function(MedianId id, double x);

/// A closed-form density field on [0, 1] x [0, 1] whose x-slice has median
/// median(x). Both kinds are symmetric about the median and truncated to
/// |t - median(x)| <= min(median(x), 1 - median(x)).
struct ReferenceField {
  FieldKind kind = FieldKind::truncated_gaussian;
  MedianId median = MedianId::f1;
  double scale = 0.05;          ///< sd of the truncated Gaussian
  double mode_offset = 0.1;     ///< bump offset for the multimodal kind
  double mode_scale = 0.03;     ///< bump sd for the multimodal kind

  double median_at(double x) const { return median_function(median, x); }
  double half_width(double x) const;

  /// Unnormalized density at (x, t); zero outside the truncation window.
  double unnormalized(double x, double t) const;
};

DensityGrid reference_density(const ReferenceField& field, double x, const GridPtr& t_grid);

/// Reference density at each x of x_grid.
std::vector<DensityGrid> reference_field_grid(const ReferenceField& field,
                                              std::span<const double> x_grid,
                                              const GridPtr& t_grid);

/// k i.i.d. draws at x: the offset from the median by inverse CDF on a
/// 1001-node grid, then a fair sign.
std::vector<double> sample_reference(const ReferenceField& field, double x, std::size_t k, Rng& rng);

std::vector<double> random_design(std::size_t n, Rng& rng);

/// One uniformly located observation per design point.
Dataset sample_random_design(const ReferenceField& field, std::size_t n, Rng& rng);

}  // namespace slgp
