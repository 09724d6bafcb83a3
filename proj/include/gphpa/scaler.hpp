#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

namespace gphpa {

/// Affine map of [min, max] onto [lo, hi].
///
/// A degenerate fit (min == max) maps everything to the midpoint of the
/// target range and inverts back to the fitted constant.
struct MinMaxScaler {
  double min = 0.0;
  double max = 1.0;
  double lo = 0.0;
  double hi = 1.0;

  static MinMaxScaler fit(std::span<const double> xs, double lo, double hi) {
    if (xs.empty()) throw std::invalid_argument("MinMaxScaler::fit: no data");
    if (!(lo < hi)) throw std::invalid_argument("MinMaxScaler::fit: empty target range");
    const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
    return {*mn, *mx, lo, hi};
  }

  bool degenerate() const noexcept { return !(max > min); }

  double transform(double x) const noexcept {
    if (degenerate()) return 0.5 * (lo + hi);
    return lo + (x - min) / (max - min) * (hi - lo);
  }

  double inverse(double y) const noexcept {
    if (degenerate()) return min;
    return min + (y - lo) / (hi - lo) * (max - min);
  }

  /// d(inverse)/dy; zero for a degenerate fit.
  double inverse_slope() const noexcept {
    if (degenerate()) return 0.0;
    return (max - min) / (hi - lo);
  }
};

}  // namespace gphpa
