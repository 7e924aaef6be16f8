#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "gswe/errors.hpp"

namespace gswe {

/// Samples of a one-dimensional empirical measure with uniform weights 1/n.
struct Samples1D {
  std::vector<double> values;

  Samples1D() = default;
  Samples1D(std::vector<double> v) : values(std::move(v)) {  // NOLINT
    if (values.empty()) {
      throw std::invalid_argument("Samples1D: empty sample set");
    }
    for (double x : values) {
      if (!std::isfinite(x)) {
        throw numerical_error("Samples1D: non-finite sample");
      }
    }
  }

  std::size_t size() const { return values.size(); }
};

/// Empirical quantile function: sorted values anchored at the midpoint
/// levels (m - 0.5)/n, piecewise-linear in between, clamped outside.
struct QuantileFn {
  std::vector<double> sorted_values;

  explicit QuantileFn(const Samples1D& s) : sorted_values(s.values) {
    std::sort(sorted_values.begin(), sorted_values.end());
  }

  std::size_t size() const { return sorted_values.size(); }

  double level(std::size_t m) const {
    return (static_cast<double>(m) + 0.5) / static_cast<double>(size());
  }
};

namespace detail {

/// One interpolation stencil: value(u) = (1-w)*sorted[lo] + w*sorted[hi].
/// Shared by every consumer of the quantile convention, so the plain and
/// the differentiable paths agree bit for bit.
struct InterpNode {
  std::size_t lo = 0, hi = 0;
  double w = 0.0;
};

inline InterpNode quantile_stencil(std::size_t n, double u) {
  const double dn = static_cast<double>(n);
  const double first = 0.5 / dn;
  const double last = (dn - 0.5) / dn;
  if (u <= first) return {0, 0, 0.0};
  if (u >= last) return {n - 1, n - 1, 0.0};
  // Bracketing midpoints: (j + 0.5)/n <= u < (j + 1.5)/n.
  std::size_t j = static_cast<std::size_t>(u * dn - 0.5);
  if (j >= n - 1) j = n - 2;
  double lj = (static_cast<double>(j) + 0.5) / dn;
  while (j > 0 && u < lj) {
    --j;
    lj = (static_cast<double>(j) + 0.5) / dn;
  }
  double lnext = (static_cast<double>(j) + 1.5) / dn;
  while (j + 2 < n && u >= lnext) {
    ++j;
    lj = lnext;
    lnext = (static_cast<double>(j) + 1.5) / dn;
  }
  return {j, j + 1, (u - lj) / (lnext - lj)};
}

// Quantile on the closed interval [0, 1]; endpoints clamp to the extremes.
inline double quantile_closed(const QuantileFn& q, double u) {
  const auto st = quantile_stencil(q.size(), u);
  return (1.0 - st.w) * q.sorted_values[st.lo] + st.w * q.sorted_values[st.hi];
}

// Exact integral of |d0 + (d1-d0)*s|^p over s in [0,1], times width.
inline double segment_abs_pow_integral(double d0, double d1, double width,
                                       double p) {
  const double slope = d1 - d0;
  const double scale = std::max(std::abs(d0), std::abs(d1));
  if (std::abs(slope) <= 1e-14 * std::max(1.0, scale)) {
    const double mid = 0.5 * (d0 + d1);
    return std::pow(std::abs(mid), p) * width;
  }
  // Antiderivative of |w|^p is sign(w)|w|^{p+1}/(p+1), continuous at 0.
  auto anti = [p](double w) {
    const double a = std::pow(std::abs(w), p + 1.0) / (p + 1.0);
    return w >= 0.0 ? a : -a;
  };
  return width * (anti(d1) - anti(d0)) / slope;
}

}  // namespace detail

/// Piecewise-linear quantile evaluation at level u in (0, 1).
inline double quantile(const QuantileFn& q, double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error("quantile: level " + std::to_string(u) +
                            " outside (0, 1)");
  }
  return detail::quantile_closed(q, u);
}

/// p-Wasserstein distance between 1-D empirical measures. Equal sizes use
/// the sorted-samples closed form; unequal sizes integrate the quantile
/// difference exactly over the merged midpoint grid.
inline double wasserstein_1d(const Samples1D& a, const Samples1D& b,
                             double p) {
  if (p < 1.0) {
    throw std::domain_error("wasserstein_1d: order p must be >= 1, got " +
                            std::to_string(p));
  }
  const QuantileFn qa(a), qb(b);
  if (a.size() == b.size()) {
    const double n = static_cast<double>(a.size());
    double acc = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m) {
      acc += std::pow(std::abs(qa.sorted_values[m] - qb.sorted_values[m]), p);
    }
    return std::pow(acc / n, 1.0 / p);
  }
  // Merged breakpoints; both quantile functions are linear between them.
  std::vector<double> grid;
  grid.reserve(a.size() + b.size() + 2);
  grid.push_back(0.0);
  for (std::size_t m = 0; m < a.size(); ++m) grid.push_back(qa.level(m));
  for (std::size_t m = 0; m < b.size(); ++m) grid.push_back(qb.level(m));
  grid.push_back(1.0);
  std::sort(grid.begin(), grid.end());
  double acc = 0.0;
  double u0 = grid.front();
  double d0 = detail::quantile_closed(qa, u0) - detail::quantile_closed(qb, u0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double u1 = grid[i];
    if (u1 <= u0) continue;
    const double d1 =
        detail::quantile_closed(qa, u1) - detail::quantile_closed(qb, u1);
    acc += detail::segment_abs_pow_integral(d0, d1, u1 - u0, p);
    u0 = u1;
    d0 = d1;
  }
  return std::pow(acc, 1.0 / p);
}

/// Monge map between equal-size empirical measures: position m carries the
/// image of the m-th smallest reference sample, i.e. the m-th smallest
/// sample of a.
inline std::vector<double> monge_map_equal(const Samples1D& a,
                                           const Samples1D& ref) {
  if (a.size() != ref.size()) {
    throw std::invalid_argument(
        "monge_map_equal: size mismatch " + std::to_string(a.size()) + " vs " +
        std::to_string(ref.size()) + "; use monge_map_interp");
  }
  QuantileFn qa(a);
  return qa.sorted_values;
}

/// Monge map via quantile interpolation; defined for any pair of sizes.
/// Entry m is the quantile of a at the reference midpoint level (m-0.5)/M.
inline std::vector<double> monge_map_interp(const Samples1D& a,
                                            const Samples1D& ref) {
  const QuantileFn qa(a);
  const std::size_t m_ref = ref.size();
  std::vector<double> out(m_ref);
  for (std::size_t m = 0; m < m_ref; ++m) {
    const double u = (static_cast<double>(m) + 0.5) / static_cast<double>(m_ref);
    out[m] = detail::quantile_closed(qa, u);
  }
  return out;
}

/// Cumulative distribution transform: the Monge map of a against ref minus
/// the sorted reference. Equal sizes take the exact sorted path.
inline std::vector<double> cdt(const Samples1D& a, const Samples1D& ref) {
  std::vector<double> map = a.size() == ref.size() ? monge_map_equal(a, ref)
                                                   : monge_map_interp(a, ref);
  const QuantileFn qr(ref);
  for (std::size_t m = 0; m < map.size(); ++m) {
    map[m] -= qr.sorted_values[m];
  }
  return map;
}

/// Exact minimal matching cost over all bijections, by exhaustive search.
/// Small instances only; this is a verification oracle, not a solver.
inline double assignment_oracle(const Samples1D& a, const Samples1D& b,
                                double p) {
  if (a.size() != b.size()) {
    throw std::domain_error("assignment_oracle: sizes must match");
  }
  if (a.size() > 10) {
    throw std::domain_error("assignment_oracle: limited to n <= 10, got " +
                            std::to_string(a.size()));
  }
  if (p < 1.0) {
    throw std::domain_error("assignment_oracle: order p must be >= 1");
  }
  const std::size_t n = a.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cost += std::pow(std::abs(a.values[i] - b.values[perm[i]]), p);
    }
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best / static_cast<double>(n), 1.0 / p);
}

}  // namespace gswe
