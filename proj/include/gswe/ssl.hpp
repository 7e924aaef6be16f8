#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gswe/autodiff.hpp"
#include "gswe/model.hpp"
#include "gswe/optim.hpp"
#include "gswe/pointset.hpp"
#include "gswe/rng.hpp"

namespace gswe {

enum class LossKind { simclr, simsiam };
enum class AugmentKind { rotate2d, jitter };

inline const char* to_string(LossKind k) {
  return k == LossKind::simclr ? "simclr" : "simsiam";
}
inline const char* to_string(AugmentKind k) {
  return k == AugmentKind::rotate2d ? "rotate2d" : "jitter";
}

struct TrainConfig {
  LossKind loss = LossKind::simclr;
  double tau = 0.1;           // temperature
  double p = 2.0;
  std::size_t batch_size = 32;
  int epochs = 50;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  AugmentKind augmentation = AugmentKind::rotate2d;
  double jitter_sigma = 1.0;
  // The similarity uses raw inner products exp(x.y / tau); set cosine to
  // normalize embeddings first, which is the more common variant.
  bool cosine = false;

  void validate() const {
    if (tau <= 0.0) throw std::invalid_argument("TrainConfig: tau must be > 0");
    if (loss == LossKind::simclr && batch_size < 2) {
      throw std::invalid_argument(
          "TrainConfig: simclr needs batch_size >= 2");
    }
    if (p < 1.0) throw std::domain_error("TrainConfig: order p must be >= 1");
  }
};

namespace detail {

// Sums scalar terms in ascending order of their forward values. Makes the
// result bit-identical under any permutation of the inputs: tied values are
// interchangeable and everything else sorts to a canonical sequence.
inline Var ordered_sum(Tape& t, std::vector<Var> terms) {
  std::stable_sort(terms.begin(), terms.end(), [&](Var a, Var b) {
    return t.value(a)[0] < t.value(b)[0];
  });
  return t.sum(t.concat(terms));
}

inline Var normalize_rows(Tape& t, Var x) {
  Var n = t.power(t.sum(t.mul(x, x)), 0.5);
  return t.div(x, t.broadcast(n, t.value(x).shape()));
}

// -log( exp(pos/tau) / sum_j exp(terms_j/tau) ), evaluated with a constant
// max shift for stability; pos must be one of the terms.
inline Var info_nce_term(Tape& t, Var pos, const std::vector<Var>& terms,
                         double tau) {
  Var inv_tau = t.scalar(1.0 / tau);
  double shift = -std::numeric_limits<double>::infinity();
  for (Var v : terms) shift = std::max(shift, t.value(v)[0] / tau);
  Var c = t.scalar(shift);
  std::vector<Var> exps;
  exps.reserve(terms.size());
  for (Var v : terms) exps.push_back(t.exp(t.mul(v, inv_tau) - c));
  Var lse = t.log(ordered_sum(t, std::move(exps))) + c;
  return lse - t.mul(pos, inv_tau);
}

}  // namespace detail

/// Contrastive loss over a batch of embeddings and their augmented views.
/// For each sample the positive similarity competes against every
/// view-to-view and view-to-original similarity in the batch; both
/// directions are averaged. Similarity is exp(x.y / tau).
inline Var simclr_loss(Tape& t, const std::vector<Var>& emb,
                       const std::vector<Var>& aug, double tau,
                       bool cosine = false) {
  const std::size_t B = emb.size();
  if (B < 2 || aug.size() != B) {
    throw std::invalid_argument(
        "simclr_loss: need matching batches of size >= 2, got " +
        std::to_string(B) + " and " + std::to_string(aug.size()));
  }
  if (tau <= 0.0) {
    throw std::invalid_argument("simclr_loss: tau must be > 0");
  }
  std::vector<Var> x(emb), y(aug);
  if (cosine) {
    for (auto& v : x) v = detail::normalize_rows(t, v);
    for (auto& v : y) v = detail::normalize_rows(t, v);
  }
  auto dot = [&](Var a, Var b) { return t.sum(t.mul(a, b)); };
  // d_xy[i][j] = x_i . y_j ; d_xx / d_yy are symmetric, computed once.
  std::vector<std::vector<Var>> d_xy(B, std::vector<Var>(B));
  std::vector<std::vector<Var>> d_xx(B, std::vector<Var>(B));
  std::vector<std::vector<Var>> d_yy(B, std::vector<Var>(B));
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < B; ++j) d_xy[i][j] = dot(x[i], y[j]);
    for (std::size_t j = i + 1; j < B; ++j) {
      d_xx[i][j] = d_xx[j][i] = dot(x[i], x[j]);
      d_yy[i][j] = d_yy[j][i] = dot(y[i], y[j]);
    }
  }
  std::vector<Var> losses;
  losses.reserve(2 * B);
  for (std::size_t i = 0; i < B; ++i) {
    std::vector<Var> denom;  // originals against views and other originals
    denom.reserve(2 * B - 1);
    for (std::size_t j = 0; j < B; ++j) denom.push_back(d_xy[i][j]);
    for (std::size_t k = 0; k < B; ++k) {
      if (k != i) denom.push_back(d_xx[i][k]);
    }
    losses.push_back(detail::info_nce_term(t, d_xy[i][i], denom, tau));
    std::vector<Var> denom_bar;  // views against originals and other views
    denom_bar.reserve(2 * B - 1);
    for (std::size_t j = 0; j < B; ++j) denom_bar.push_back(d_xy[j][i]);
    for (std::size_t k = 0; k < B; ++k) {
      if (k != i) denom_bar.push_back(d_yy[i][k]);
    }
    losses.push_back(detail::info_nce_term(t, d_xy[i][i], denom_bar, tau));
  }
  Var total = detail::ordered_sum(t, std::move(losses));
  return t.mul(total, t.scalar(1.0 / (2.0 * static_cast<double>(B))));
}

/// Positive-only loss: (1/2B) sum_i D(v_i, w_i) + D(w_i, v_i) with
/// D(x, y) = ||x - stopgrad(y)||_p^p. The stop-gradient prevents latent
/// collapse despite the absence of negative pairs.
inline Var simsiam_loss(Tape& t, const std::vector<Var>& emb,
                        const std::vector<Var>& aug, double p) {
  const std::size_t B = emb.size();
  if (B == 0 || aug.size() != B) {
    throw std::invalid_argument("simsiam_loss: empty or mismatched batch");
  }
  auto dist_pow = [&](Var a, Var b) {
    Var diff = a - t.stop_gradient(b);
    Var mag = p == 2.0 ? t.mul(diff, diff) : t.power(abs_value(diff), p);
    return t.sum(mag);
  };
  std::vector<Var> terms;
  terms.reserve(2 * B);
  for (std::size_t i = 0; i < B; ++i) {
    terms.push_back(dist_pow(emb[i], aug[i]));
    terms.push_back(dist_pow(aug[i], emb[i]));
  }
  Var total = t.sum(t.concat(terms));
  return t.mul(total, t.scalar(1.0 / (2.0 * static_cast<double>(B))));
}

/// Rotates every element of a 2-d set by the same angle.
inline PointSet rotate2d(const PointSet& z, double angle) {
  if (z.dim() != 2) {
    throw std::invalid_argument("rotate2d requires 2-d points, got d=" +
                                std::to_string(z.dim()));
  }
  Tensor pts = z.points;
  const double c = std::cos(angle), s = std::sin(angle);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double px = pts.at(i, 0), py = pts.at(i, 1);
    pts.at(i, 0) = c * px - s * py;
    pts.at(i, 1) = s * px + c * py;
  }
  PointSet out(std::move(pts), z.label);
  out.split = z.split;
  return out;
}

/// Set augmentation: rotate2d applies one shared random rotation to every
/// element (d == 2 only); jitter adds i.i.d. N(0, sigma^2) noise per
/// coordinate.
inline PointSet augment(const PointSet& z, AugmentKind kind, Rng& rng,
                        double jitter_sigma = 1.0) {
  if (kind == AugmentKind::rotate2d) {
    return rotate2d(z, rng.uniform(0.0, 6.283185307179586476925286766559));
  }
  Tensor pts = z.points;
  for (auto& v : pts.data()) v += rng.normal(0.0, jitter_sigma);
  PointSet out(std::move(pts), z.label);
  out.split = z.split;
  return out;
}

struct TrainResult {
  std::vector<double> epoch_loss;  // mean batch loss per epoch
};

/// Minibatch self-supervised training of the full model (backbone, slicer,
/// reference bank) with Adam; slicer constraints are re-projected after
/// every step. Deterministic under the config seed.
inline TrainResult train(const SetDataset& data, Model& model,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (data.sets.empty()) throw std::invalid_argument("train: empty dataset");
  Rng shuffle_rng = Rng::derive(cfg.seed, 1);
  Rng aug_rng = Rng::derive(cfg.seed, 2);
  Adam opt(cfg.lr);
  TrainResult result;
  const std::size_t n = data.sets.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the dedicated stream.
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle_rng.below(i + 1)]);
    }
    double epoch_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, n);
      const std::size_t B = end - begin;
      if (cfg.loss == LossKind::simclr && B < 2) continue;
      const std::size_t batch_index = begin / cfg.batch_size;
      try {
        Tape t;
        BoundModel bm = bind(t, model);
        std::vector<Var> emb, emb_aug;
        emb.reserve(B);
        emb_aug.reserve(B);
        for (std::size_t i = begin; i < end; ++i) {
          const PointSet& ps = data.sets[order[i]];
          PointSet aug =
              augment(ps, cfg.augmentation, aug_rng, cfg.jitter_sigma);
          emb.push_back(bm.embed(t, t.leaf(ps.points)));
          emb_aug.push_back(bm.embed(t, t.leaf(aug.points)));
        }
        Var loss = cfg.loss == LossKind::simclr
                       ? simclr_loss(t, emb, emb_aug, cfg.tau, cfg.cosine)
                       : simsiam_loss(t, emb, emb_aug, cfg.p);
        const double loss_value = t.value(loss)[0];
        if (!std::isfinite(loss_value)) {
          throw numerical_error("non-finite loss value");
        }
        Gradients g = t.backward(loss);
        std::vector<Tensor> grads;
        for (Var v : bm.param_vars()) grads.push_back(g.grad(v));
        opt.step(model.params(), grads);
        model.slicer.project_constraints();
        epoch_sum += loss_value;
        ++batches;
      } catch (const numerical_error& e) {
        throw numerical_error(
            "train: aborted at epoch " + std::to_string(epoch) + ", batch " +
            std::to_string(batch_index) + ": " + e.what());
      }
    }
    result.epoch_loss.push_back(batches ? epoch_sum / static_cast<double>(batches)
                                        : 0.0);
  }
  return result;
}

}  // namespace gswe
