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
#include "gswe/rng.hpp"
#include "gswe/ssl.hpp"

namespace gswe {

/// 1-nearest-neighbor label agreement: the fraction of test rows whose
/// closest training row (l_p distance, ties resolved to the lowest index)
/// carries the same label.
inline double nn_accuracy(const std::vector<std::vector<double>>& train,
                          const std::vector<int>& train_labels,
                          const std::vector<std::vector<double>>& test,
                          const std::vector<int>& test_labels,
                          double p = 2.0) {
  if (train.empty() || test.empty()) {
    throw std::invalid_argument("nn_accuracy: empty embedding set");
  }
  if (train.size() != train_labels.size() ||
      test.size() != test_labels.size()) {
    throw std::invalid_argument("nn_accuracy: label count mismatch");
  }
  const std::size_t dim = train.front().size();
  for (const auto& r : train) {
    if (r.size() != dim) {
      throw std::invalid_argument("nn_accuracy: ragged training embeddings");
    }
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test[i].size() != dim) {
      throw std::invalid_argument(
          "nn_accuracy: test embedding " + std::to_string(i) + " has length " +
          std::to_string(test[i].size()) + ", expected " +
          std::to_string(dim));
    }
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < train.size(); ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        acc += std::pow(std::abs(test[i][c] - train[j][c]), p);
      }
      if (acc < best) {  // strict: ties keep the lowest index
        best = acc;
        best_j = j;
      }
    }
    if (train_labels[best_j] == test_labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

/// Deterministic stratified fold assignment: per-class shuffled round-robin,
/// so per-fold class counts differ from the global proportions by at most
/// one sample. Classes with fewer than k members are rejected.
inline std::vector<int> stratified_folds(const std::vector<int>& labels, int k,
                                         std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_folds: k must be >= 2");
  std::vector<int> fold(labels.size(), -1);
  int max_label = -1;
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("stratified_folds: missing label");
    max_label = std::max(max_label, l);
  }
  Rng rng(seed);
  for (int cls = 0; cls <= max_label; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    if (members.empty()) continue;
    if (members.size() < static_cast<std::size_t>(k)) {
      throw std::invalid_argument(
          "stratified_folds: class " + std::to_string(cls) + " has only " +
          std::to_string(members.size()) + " members for k=" +
          std::to_string(k));
    }
    for (std::size_t i = members.size() - 1; i > 0; --i) {
      std::swap(members[i], members[rng.below(i + 1)]);
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      fold[members[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
  }
  return fold;
}

struct HeadConfig {
  std::size_t hidden = 128;
  int epochs = 50;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct KfoldResult {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::vector<double> fold_accuracy;
};

namespace detail {

// Cross-entropy of one logits row {1, C} against an integer label, with a
// constant max shift for stability.
inline Var cross_entropy(Tape& t, Var logits, int label) {
  const Tensor& lv = t.value(logits);
  const std::size_t C = lv.size();
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < C; ++c) shift = std::max(shift, lv[c]);
  Var flat = t.gather(logits, [&] {
    std::vector<std::size_t> idx(C);
    for (std::size_t c = 0; c < C; ++c) idx[c] = c;
    return idx;
  }());
  Var shifted = flat - t.broadcast(t.scalar(shift), {C});
  Var lse = t.log(t.sum(t.exp(shifted)));
  Var picked = t.gather(shifted, {static_cast<std::size_t>(label)}, {});
  return lse - picked;
}

}  // namespace detail

/// Stratified k-fold evaluation: per fold, a fresh copy of the model plus a
/// one-hidden-layer softmax head is trained end-to-end with cross-entropy on
/// the training folds, then scored on the held-out fold.
inline KfoldResult kfold_classify(const SetDataset& data, const Model& proto,
                                  int k, const HeadConfig& cfg) {
  data.validate();
  std::vector<int> labels;
  for (const auto& ps : data.sets) {
    if (!ps.label) {
      throw std::invalid_argument("kfold_classify: unlabeled set");
    }
    labels.push_back(*ps.label);
  }
  const auto fold = stratified_folds(labels, k, cfg.seed);
  const std::size_t emb_dim = proto.embedding_dim();

  KfoldResult result;
  for (int f = 0; f < k; ++f) {
    Model model = proto;
    Rng head_rng = Rng::derive(cfg.seed, 100 + static_cast<std::uint64_t>(f));
    Mlp head = Mlp::init(emb_dim, {cfg.hidden},
                         static_cast<std::size_t>(data.n_classes), head_rng);
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < data.sets.size(); ++i) {
      if (fold[i] != f) train_idx.push_back(i);
    }
    Rng shuffle_rng = Rng::derive(cfg.seed, 200 + static_cast<std::uint64_t>(f));
    Adam opt(cfg.lr);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (std::size_t i = train_idx.size() - 1; i > 0; --i) {
        std::swap(train_idx[i], train_idx[shuffle_rng.below(i + 1)]);
      }
      for (std::size_t begin = 0; begin < train_idx.size();
           begin += cfg.batch_size) {
        const std::size_t end =
            std::min(begin + cfg.batch_size, train_idx.size());
        Tape t;
        BoundModel bm = bind(t, model);
        Mlp::Bound bh = head.bind(t);
        std::vector<Var> losses;
        for (std::size_t i = begin; i < end; ++i) {
          const PointSet& ps = data.sets[train_idx[i]];
          Var emb = bm.embed(t, t.leaf(ps.points));
          Var logits =
              bh.forward(t, t.gather(emb, [&] {
                std::vector<std::size_t> idx(emb_dim);
                for (std::size_t c = 0; c < emb_dim; ++c) idx[c] = c;
                return idx;
              }(), {1, emb_dim}));
          losses.push_back(detail::cross_entropy(t, logits, *ps.label));
        }
        Var loss = t.mul(t.sum(t.concat(losses)),
                         t.scalar(1.0 / static_cast<double>(losses.size())));
        Gradients g = t.backward(loss);
        std::vector<Tensor> grads;
        auto pvars = bm.param_vars();
        for (Var v : pvars) grads.push_back(g.grad(v));
        for (Var v : bh.vars) grads.push_back(g.grad(v));
        std::vector<Tensor*> params = model.params();
        for (auto* hp : head.params()) params.push_back(hp);
        opt.step(params, grads);
        model.slicer.project_constraints();
      }
    }
    // Held-out accuracy by argmax, lowest index on ties.
    std::size_t hits = 0, total = 0;
    for (std::size_t i = 0; i < data.sets.size(); ++i) {
      if (fold[i] != f) continue;
      Tape t;
      BoundModel bm = bind(t, model);
      Mlp::Bound bh = head.bind(t);
      Var emb = bm.embed(t, t.leaf(data.sets[i].points));
      std::vector<std::size_t> idx(emb_dim);
      for (std::size_t c = 0; c < emb_dim; ++c) idx[c] = c;
      Var logits = bh.forward(t, t.gather(emb, idx, {1, emb_dim}));
      const Tensor& lv = t.value(logits);
      std::size_t arg = 0;
      for (std::size_t c = 1; c < lv.size(); ++c) {
        if (lv[c] > lv[arg]) arg = c;
      }
      if (static_cast<int>(arg) == *data.sets[i].label) ++hits;
      ++total;
    }
    result.fold_accuracy.push_back(static_cast<double>(hits) /
                                   static_cast<double>(total));
  }
  double mean = 0.0;
  for (double a : result.fold_accuracy) mean += a;
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (double a : result.fold_accuracy) var += (a - mean) * (a - mean);
  result.mean_accuracy = mean;
  result.std_accuracy = std::sqrt(var / static_cast<double>(k));
  return result;
}

}  // namespace gswe
