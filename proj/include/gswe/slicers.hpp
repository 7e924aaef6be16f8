#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gswe/autodiff.hpp"
#include "gswe/rng.hpp"
#include "gswe/tensor.hpp"

namespace gswe {

/// Plain feed-forward network with ReLU hidden layers, applied row-wise to
/// an M x in matrix. Used both as the shared slicer trunk and as the
/// per-element backbone in front of pooling.
struct Mlp {
  std::size_t in = 0, out = 0;
  std::vector<std::size_t> hidden;
  std::vector<Tensor> weights;  // layer i: {fan_in, fan_out}
  std::vector<Tensor> biases;   // layer i: {fan_out}

  static Mlp init(std::size_t in, std::vector<std::size_t> hidden,
                  std::size_t out, Rng& rng) {
    Mlp net;
    net.in = in;
    net.out = out;
    net.hidden = std::move(hidden);
    std::size_t fan_in = in;
    auto widths = net.hidden;
    widths.push_back(out);
    for (std::size_t w : widths) {
      Tensor wt({fan_in, w});
      const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (auto& v : wt.data()) v = rng.normal(0.0, scale);
      net.weights.push_back(std::move(wt));
      net.biases.emplace_back(std::vector<std::size_t>{w});  // zeros
      fan_in = w;
    }
    return net;
  }

  std::size_t layer_count() const { return weights.size(); }

  std::vector<Tensor*> params() {
    std::vector<Tensor*> out_ptrs;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      out_ptrs.push_back(&weights[i]);
      out_ptrs.push_back(&biases[i]);
    }
    return out_ptrs;
  }

  std::vector<const Tensor*> params() const {
    std::vector<const Tensor*> out_ptrs;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      out_ptrs.push_back(&weights[i]);
      out_ptrs.push_back(&biases[i]);
    }
    return out_ptrs;
  }

  /// Parameter handles on a tape, in params() order.
  struct Bound {
    const Mlp* net = nullptr;
    std::vector<Var> vars;

    Var forward(Tape& t, Var x) const {
      const std::size_t rows = t.value(x).extent(0);
      Var h = x;
      for (std::size_t i = 0; i < net->layer_count(); ++i) {
        Var z = t.add(t.matmul(h, vars[2 * i]),
                      t.broadcast(vars[2 * i + 1],
                                  {rows, t.value(vars[2 * i]).extent(1)}));
        h = i + 1 < net->layer_count() ? t.relu(z) : z;
      }
      return h;
    }
  };

  Bound bind(Tape& t) const {
    Bound b;
    b.net = this;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      b.vars.push_back(t.leaf(weights[i]));
      b.vars.push_back(t.leaf(biases[i]));
    }
    return b;
  }
};

enum class SlicerKind { linear, polynomial, mlp };

inline const char* to_string(SlicerKind k) {
  switch (k) {
    case SlicerKind::linear: return "linear";
    case SlicerKind::polynomial: return "polynomial";
    case SlicerKind::mlp: return "mlp";
  }
  return "?";
}

inline SlicerKind slicer_kind_from_string(const std::string& s) {
  if (s == "linear") return SlicerKind::linear;
  if (s == "polynomial" || s == "poly") return SlicerKind::polynomial;
  if (s == "mlp") return SlicerKind::mlp;
  throw std::invalid_argument("unknown slicer kind: " + s);
}

/// Parametric slicing family g: R^d -> R^L mapping set elements to L
/// one-dimensional projections.
///
///   linear      columns of a d x L matrix, each kept on the unit sphere;
///   polynomial  one coefficient per monomial of total degree <= degree,
///               per slice, columns kept at unit norm;
///   mlp         shared ReLU trunk with a final hidden x L layer, so the L
///               slices differ only in the last layer.
struct Slicer {
  SlicerKind kind = SlicerKind::linear;
  std::size_t d = 0;
  std::size_t L = 0;
  int degree = 5;                      // polynomial only
  std::vector<std::size_t> hidden;     // mlp trunk widths
  Tensor theta;                        // linear {d, L} / polynomial {n_mono, L}
  Mlp net;                             // mlp only
  Rng rerand{0};                       // replaces degenerate columns

  /// Enumerates exponent vectors of all monomials with total degree
  /// <= degree, graded by total degree then lexicographic. Fixed order;
  /// checkpoints depend on it.
  static std::vector<std::vector<unsigned>> monomial_exponents(std::size_t d,
                                                               int degree) {
    std::vector<std::vector<unsigned>> out;
    std::vector<unsigned> cur(d, 0);
    for (int total = 0; total <= degree; ++total) {
      enumerate_degree(d, 0, static_cast<unsigned>(total), cur, out);
    }
    return out;
  }

  static std::size_t monomial_count(std::size_t d, int degree) {
    return monomial_exponents(d, degree).size();
  }

  std::vector<Tensor*> params() {
    if (kind == SlicerKind::mlp) return net.params();
    return {&theta};
  }

  std::vector<const Tensor*> params() const {
    if (kind == SlicerKind::mlp) return net.params();
    return {&theta};
  }

  /// Parameter handles on a tape plus the row-wise forward map.
  struct Bound {
    const Slicer* s = nullptr;
    std::vector<Var> vars;

    /// x: {M, d} on the tape; result: {M, L} of slice values.
    Var forward(Tape& t, Var x) const {
      const Tensor& xv = t.value(x);
      if (xv.rank() != 2 || xv.extent(1) != s->d) {
        throw std::invalid_argument(
            "slice: points of shape " + Tensor::shape_str(xv.shape()) +
            " do not match slicer input dimension " + std::to_string(s->d));
      }
      switch (s->kind) {
        case SlicerKind::linear:
          return t.matmul(x, vars[0]);
        case SlicerKind::mlp: {
          Mlp::Bound nb{&s->net, vars};
          return nb.forward(t, x);
        }
        case SlicerKind::polynomial:
          return poly_forward(t, x);
      }
      throw std::logic_error("unreachable");
    }

   private:
    Var poly_forward(Tape& t, Var x) const {
      const std::size_t rows = t.value(x).extent(0);
      const auto monos = monomial_exponents(s->d, s->degree);
      // Feature columns, one per monomial.
      std::vector<Var> features;
      features.reserve(monos.size());
      std::vector<Var> coord(s->d);
      std::vector<bool> coord_used(s->d, false);
      for (const auto& expo : monos) {
        Var f = t.broadcast(t.scalar(1.0), {rows});
        bool constant = true;
        for (std::size_t j = 0; j < s->d; ++j) {
          if (expo[j] == 0) continue;
          if (!coord_used[j]) {
            std::vector<std::size_t> idx(rows);
            for (std::size_t m = 0; m < rows; ++m) idx[m] = m * s->d + j;
            coord[j] = t.gather(x, idx);
            coord_used[j] = true;
          }
          Var term = expo[j] == 1
                         ? coord[j]
                         : t.power(coord[j], static_cast<double>(expo[j]));
          f = constant ? term : t.mul(f, term);
          constant = false;
        }
        features.push_back(f);
      }
      // Column l of the output: sum_m coeff[m, l] * feature_m, assembled
      // column-major and re-gathered into row-major {M, L}.
      std::vector<Var> columns;
      columns.reserve(s->L);
      for (std::size_t l = 0; l < s->L; ++l) {
        Var col{};
        for (std::size_t m = 0; m < monos.size(); ++m) {
          Var c = t.gather(vars[0], {m * s->L + l}, {});
          Var scaled = t.mul(features[m], t.broadcast(c, {rows}));
          col = m == 0 ? scaled : t.add(col, scaled);
        }
        columns.push_back(col);
      }
      Var stacked = t.concat(columns);  // column-major {L*M}
      std::vector<std::size_t> idx(rows * s->L);
      for (std::size_t m = 0; m < rows; ++m) {
        for (std::size_t l = 0; l < s->L; ++l) {
          idx[m * s->L + l] = l * rows + m;
        }
      }
      return t.gather(stacked, idx, {rows, s->L});
    }
  };

  Bound bind(Tape& t) const {
    Bound b;
    b.s = this;
    if (kind == SlicerKind::mlp) {
      for (std::size_t i = 0; i < net.layer_count(); ++i) {
        b.vars.push_back(t.leaf(net.weights[i]));
        b.vars.push_back(t.leaf(net.biases[i]));
      }
    } else {
      b.vars.push_back(t.leaf(theta));
    }
    return b;
  }

  /// Slice values of a point matrix with frozen parameters.
  Tensor slice_values(const Tensor& points) const {
    Tape t;
    Var x = t.leaf(points);
    return t.value(bind(t).forward(t, x));
  }

  /// Re-projects parameters onto their constraint sets after an update:
  /// unit-norm columns for linear and polynomial slicers, no-op for mlp.
  /// A column whose norm underflows is re-randomized.
  void project_constraints() {
    if (kind == SlicerKind::mlp) return;
    const std::size_t rows = theta.extent(0);
    for (std::size_t l = 0; l < L; ++l) {
      double norm2 = 0.0;
      for (std::size_t j = 0; j < rows; ++j) {
        norm2 += theta.at(j, l) * theta.at(j, l);
      }
      const double norm = std::sqrt(norm2);
      if (norm < 1e-12) {
        double fresh2 = 0.0;
        for (std::size_t j = 0; j < rows; ++j) {
          theta.at(j, l) = rerand.normal();
          fresh2 += theta.at(j, l) * theta.at(j, l);
        }
        const double fresh = std::sqrt(fresh2);
        for (std::size_t j = 0; j < rows; ++j) theta.at(j, l) /= fresh;
      } else {
        for (std::size_t j = 0; j < rows; ++j) theta.at(j, l) /= norm;
      }
    }
  }

 private:
  static void enumerate_degree(std::size_t d, std::size_t pos, unsigned left,
                               std::vector<unsigned>& cur,
                               std::vector<std::vector<unsigned>>& out) {
    if (pos + 1 == d) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (unsigned e = left; e != static_cast<unsigned>(-1); --e) {
      cur[pos] = e;
      enumerate_degree(d, pos + 1, left - e, cur, out);
    }
  }
};

struct SlicerHyper {
  int degree = 5;
  std::vector<std::size_t> hidden = {64, 64};
};

/// Draws a fresh slicer. Linear columns are uniform on the unit sphere;
/// polynomial coefficients are i.i.d. normal with unit-norm columns; mlp
/// weights use fan-in-scaled normals with a ReLU trunk.
inline Slicer init_slicer(SlicerKind kind, std::size_t d, std::size_t L,
                          std::uint64_t seed, SlicerHyper hyper = {}) {
  if (d < 1 || L < 1) {
    throw std::invalid_argument("init_slicer: require d >= 1 and L >= 1");
  }
  Slicer s;
  s.kind = kind;
  s.d = d;
  s.L = L;
  s.rerand = Rng::derive(seed, 0x5eed);
  Rng rng(seed);
  switch (kind) {
    case SlicerKind::linear:
      s.theta = Tensor({d, L});
      break;
    case SlicerKind::polynomial: {
      s.degree = hyper.degree;
      s.theta = Tensor({Slicer::monomial_count(d, s.degree), L});
      break;
    }
    case SlicerKind::mlp:
      s.hidden = hyper.hidden;
      s.net = Mlp::init(d, hyper.hidden, L, rng);
      return s;
  }
  for (auto& v : s.theta.data()) v = rng.normal();
  // Column normalization doubles as the sphere draw for the linear family.
  const std::size_t rows = s.theta.extent(0);
  for (std::size_t l = 0; l < L; ++l) {
    double norm2 = 0.0;
    for (std::size_t j = 0; j < rows; ++j) {
      norm2 += s.theta.at(j, l) * s.theta.at(j, l);
    }
    double norm = std::sqrt(norm2);
    while (norm < 1e-12) {
      norm2 = 0.0;
      for (std::size_t j = 0; j < rows; ++j) {
        s.theta.at(j, l) = rng.normal();
        norm2 += s.theta.at(j, l) * s.theta.at(j, l);
      }
      norm = std::sqrt(norm2);
    }
    for (std::size_t j = 0; j < rows; ++j) s.theta.at(j, l) /= norm;
  }
  return s;
}

}  // namespace gswe
