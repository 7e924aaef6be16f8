#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gswe/autodiff.hpp"
#include "gswe/optim.hpp"
#include "gswe/pointset.hpp"
#include "gswe/slicers.hpp"
#include "gswe/transport1d.hpp"

namespace gswe {

struct GswConfig {
  double p = 2.0;
  std::size_t L = 64;          // slice budget when sampling a slicer
  std::uint64_t seed = 0;
  int max_gsw_steps = 200;     // ascent iterations for max-GSW
  double max_gsw_lr = 0.05;

  void validate() const {
    if (p < 1.0) throw std::domain_error("GswConfig: order p must be >= 1");
    if (L < 1) throw std::invalid_argument("GswConfig: L must be >= 1");
  }
};

namespace detail {

inline std::vector<double> column(const Tensor& m, std::size_t l) {
  std::vector<double> out(m.extent(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.at(i, l);
  return out;
}

}  // namespace detail

struct GswResult {
  double value = 0.0;
  // Standard error of the Monte-Carlo mean of per-slice p-th power
  // distances, on the power scale.
  double mc_stderr = 0.0;
};

/// Sliced distance with the given slicer's L slices: the per-slice 1-D
/// p-Wasserstein distances averaged on the p-th power scale. Slices are
/// fixed by the slicer; nothing is resampled here, so the value is exactly
/// comparable with the embedding path under the same slicer.
inline GswResult gsw_detailed(const PointSet& a, const PointSet& b,
                              const Slicer& s, const GswConfig& cfg) {
  cfg.validate();
  if (a.dim() != s.d || b.dim() != s.d) {
    throw std::invalid_argument(
        "gsw: point dimension " + std::to_string(a.dim()) + "/" +
        std::to_string(b.dim()) + " does not match slicer dimension " +
        std::to_string(s.d));
  }
  const Tensor sa = s.slice_values(a.points);
  const Tensor sb = s.slice_values(b.points);
  const std::size_t L = s.L;
  std::vector<double> powers(L);
  double acc = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const double w = wasserstein_1d(Samples1D(detail::column(sa, l)),
                                    Samples1D(detail::column(sb, l)), cfg.p);
    powers[l] = std::pow(w, cfg.p);
    acc += powers[l];
  }
  const double mean_pow = acc / static_cast<double>(L);
  GswResult r;
  r.value = std::pow(mean_pow, 1.0 / cfg.p);
  if (L > 1) {
    double var = 0.0;
    for (double pw : powers) var += (pw - mean_pow) * (pw - mean_pow);
    var /= static_cast<double>(L - 1);
    r.mc_stderr = std::sqrt(var / static_cast<double>(L));
  }
  return r;
}

inline double gsw(const PointSet& a, const PointSet& b, const Slicer& s,
                  const GswConfig& cfg) {
  return gsw_detailed(a, b, s, cfg).value;
}

namespace detail {

// Differentiable 1-D p-Wasserstein^p between two slice columns already on
// the tape. Sorting permutations are computed from forward values and enter
// the graph as constant gathers. Equal sizes use the exact sorted form;
// unequal sizes evaluate both quantile functions on a fixed midpoint grid.
inline Var wasserstein_pow_on_tape(Tape& t, Var col_a, Var col_b, double p) {
  const auto& va = t.value(col_a).data();
  const auto& vb = t.value(col_b).data();
  auto argsort = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    return idx;
  };
  const auto pa = argsort(va);
  const auto pb = argsort(vb);
  Var diff{};
  if (va.size() == vb.size()) {
    Var sa = t.gather(col_a, pa);
    Var sb = t.gather(col_b, pb);
    diff = sa - sb;
  } else {
    // Quadrature grid of midpoint levels; fine enough for ascent steps.
    const std::size_t grid = 4 * std::max(va.size(), vb.size());
    auto interp = [&](Var col, const std::vector<std::size_t>& perm) {
      const std::size_t n = perm.size();
      std::vector<std::size_t> lo(grid), hi(grid);
      std::vector<double> wlo(grid), whi(grid);
      for (std::size_t r = 0; r < grid; ++r) {
        const double u =
            (static_cast<double>(r) + 0.5) / static_cast<double>(grid);
        const auto st = detail::quantile_stencil(n, u);
        lo[r] = perm[st.lo];
        hi[r] = perm[st.hi];
        wlo[r] = 1.0 - st.w;
        whi[r] = st.w;
      }
      Var vlo = t.mul(t.gather(col, lo), t.leaf(Tensor::vector(wlo)));
      Var vhi = t.mul(t.gather(col, hi), t.leaf(Tensor::vector(whi)));
      return t.add(vlo, vhi);
    };
    diff = interp(col_a, pa) - interp(col_b, pb);
  }
  Var mag = p == 2.0 ? t.mul(diff, diff) : t.power(abs_value(diff), p);
  return t.mean(mag);
}

}  // namespace detail

/// Max-sliced distance: gradient ascent of the single-slice 1-D distance
/// over the slicer parameters, constraints re-projected each step, best
/// probed value kept. The start slicer must have L == 1; the initial
/// parameters are the first probe.
inline std::pair<double, Slicer> max_gsw(const PointSet& a, const PointSet& b,
                                         Slicer start, const GswConfig& cfg) {
  cfg.validate();
  if (start.L != 1) {
    throw std::invalid_argument("max_gsw: slicer must have exactly one slice");
  }
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("max_gsw: point dimensions differ");
  }
  GswConfig probe_cfg = cfg;
  auto probe = [&](const Slicer& s) { return gsw(a, b, s, probe_cfg); };

  Slicer current = std::move(start);
  double best = probe(current);
  Slicer best_slicer = current;
  Adam opt(cfg.max_gsw_lr);
  for (int step = 0; step < cfg.max_gsw_steps; ++step) {
    Tape t;
    auto bound = current.bind(t);
    Var xa = t.leaf(a.points);
    Var xb = t.leaf(b.points);
    Var sa = bound.forward(t, xa);
    Var sb = bound.forward(t, xb);
    const std::size_t ma = t.value(sa).extent(0);
    const std::size_t mb = t.value(sb).extent(0);
    std::vector<std::size_t> ia(ma), ib(mb);
    for (std::size_t i = 0; i < ma; ++i) ia[i] = i;  // single column
    for (std::size_t i = 0; i < mb; ++i) ib[i] = i;
    Var objective =
        detail::wasserstein_pow_on_tape(t, t.gather(sa, ia), t.gather(sb, ib),
                                        cfg.p);
    Var loss = t.neg(objective);  // ascent
    Gradients g = t.backward(loss);
    std::vector<Tensor> grads;
    for (Var v : bound.vars) grads.push_back(g.grad(v));
    opt.step(current.params(), grads);
    current.project_constraints();
    const double value = probe(current);
    if (value > best) {
      best = value;
      best_slicer = current;
    }
  }
  return {best, best_slicer};
}

}  // namespace gswe
