#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gswe/eval.hpp"
#include "gswe/rng.hpp"
#include "testutil.hpp"

using gswe::HeadConfig;
using gswe::kfold_classify;
using gswe::Model;
using gswe::nn_accuracy;
using gswe::stratified_folds;
using gswe::Tensor;

namespace {

std::vector<std::vector<double>> random_rows(std::size_t n, std::size_t d,
                                             gswe::Rng& rng) {
  std::vector<std::vector<double>> rows(n);
  for (auto& r : rows) r = testutil::random_values(d, rng);
  return rows;
}

}  // namespace

TEST_CASE("a test set contained in the training set matches itself",
          "[eval]") {
  gswe::Rng rng(1);
  auto rows = random_rows(20, 4, rng);
  std::vector<int> labels(20);
  for (std::size_t i = 0; i < 20; ++i) labels[i] = static_cast<int>(i % 3);
  CHECK(nn_accuracy(rows, labels, rows, labels) == 1.0);
}

TEST_CASE("shuffled labels score at chance", "[eval][property]") {
  gswe::Rng rng(2);
  double acc_sum = 0.0;
  const int seeds = 24;
  for (int s = 0; s < seeds; ++s) {
    auto train = random_rows(60, 3, rng);
    auto test = random_rows(120, 3, rng);
    std::vector<int> trl(60), tel(120);
    for (std::size_t i = 0; i < trl.size(); ++i) trl[i] = i % 2;
    for (std::size_t i = 0; i < tel.size(); ++i) {
      tel[i] = static_cast<int>(rng.below(2));
    }
    acc_sum += nn_accuracy(train, trl, test, tel);
  }
  const double mean = acc_sum / seeds;
  CHECK(mean == Approx(0.5).margin(0.05));
}

TEST_CASE("a single training point decides every query", "[eval]") {
  gswe::Rng rng(3);
  auto train = random_rows(1, 2, rng);
  auto test = random_rows(50, 2, rng);
  std::vector<int> tel(50, 7);
  CHECK(nn_accuracy(train, {7}, test, tel) == 1.0);
  std::vector<int> wrong(50, 3);
  CHECK(nn_accuracy(train, {7}, test, wrong) == 0.0);
}

TEST_CASE("nearest-neighbor ties resolve to the lowest index", "[eval]") {
  // Two training rows at the same location with different labels.
  std::vector<std::vector<double>> train = {{1.0, 0.0}, {1.0, 0.0}};
  std::vector<int> trl = {4, 9};
  std::vector<std::vector<double>> test = {{1.0, 0.0}};
  CHECK(nn_accuracy(train, trl, test, {4}) == 1.0);
  CHECK(nn_accuracy(train, trl, test, {9}) == 0.0);
}

TEST_CASE("accuracy is invariant under training order with distinct "
          "distances",
          "[eval]") {
  gswe::Rng rng(4);
  auto train = random_rows(30, 3, rng);
  auto test = random_rows(40, 3, rng);
  std::vector<int> trl(30), tel(40);
  for (auto& l : trl) l = static_cast<int>(rng.below(3));
  for (auto& l : tel) l = static_cast<int>(rng.below(3));
  const double base = nn_accuracy(train, trl, test, tel);
  std::vector<std::size_t> perm(30);
  for (std::size_t i = 0; i < 30; ++i) perm[i] = i;
  for (std::size_t i = 29; i > 0; --i) {
    std::swap(perm[i], perm[rng.below(i + 1)]);
  }
  std::vector<std::vector<double>> ptrain(30);
  std::vector<int> ptrl(30);
  for (std::size_t i = 0; i < 30; ++i) {
    ptrain[i] = train[perm[i]];
    ptrl[i] = trl[perm[i]];
  }
  CHECK(nn_accuracy(ptrain, ptrl, test, tel) == base);
}

TEST_CASE("accuracy is invariant under a common orthogonal transform",
          "[eval]") {
  gswe::Rng rng(5);
  const std::size_t d = 4;
  // Random orthogonal matrix by Gram-Schmidt on gaussian columns.
  std::vector<std::vector<double>> q(d, std::vector<double>(d));
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t r = 0; r < d; ++r) q[c][r] = rng.normal();
    for (std::size_t prev = 0; prev < c; ++prev) {
      double dot = 0.0;
      for (std::size_t r = 0; r < d; ++r) dot += q[c][r] * q[prev][r];
      for (std::size_t r = 0; r < d; ++r) q[c][r] -= dot * q[prev][r];
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < d; ++r) norm += q[c][r] * q[c][r];
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < d; ++r) q[c][r] /= norm;
  }
  auto apply = [&](const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<double>> out(rows.size(),
                                         std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t r = 0; r < d; ++r) {
          out[i][c] += q[c][r] * rows[i][r];
        }
      }
    }
    return out;
  };
  auto train = random_rows(25, d, rng);
  auto test = random_rows(35, d, rng);
  std::vector<int> trl(25), tel(35);
  for (auto& l : trl) l = static_cast<int>(rng.below(2));
  for (auto& l : tel) l = static_cast<int>(rng.below(2));
  CHECK(nn_accuracy(apply(train), trl, apply(test), tel) ==
        nn_accuracy(train, trl, test, tel));
}

TEST_CASE("nn_accuracy validates dimensions", "[eval]") {
  std::vector<std::vector<double>> train = {{1.0, 2.0}};
  std::vector<std::vector<double>> test = {{1.0}};
  CHECK_THROWS_AS(nn_accuracy(train, {0}, test, {0}), std::invalid_argument);
}

TEST_CASE("fold assignment is stratified and deterministic", "[eval]") {
  gswe::Rng rng(6);
  std::vector<int> labels;
  for (int i = 0; i < 47; ++i) labels.push_back(static_cast<int>(rng.below(3)));
  const auto f1 = stratified_folds(labels, 5, 99);
  const auto f2 = stratified_folds(labels, 5, 99);
  CHECK(f1 == f2);
  // Per-fold class counts within one of the even split.
  for (int cls = 0; cls < 3; ++cls) {
    std::vector<int> counts(5, 0);
    int total = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) {
        ++counts[f1[i]];
        ++total;
      }
    }
    const int lo = total / 5, hi = (total + 4) / 5;
    for (int c : counts) {
      CHECK(c >= lo);
      CHECK(c <= hi);
    }
  }
}

TEST_CASE("classes smaller than k are rejected", "[eval]") {
  std::vector<int> labels = {0, 0, 0, 1, 1};  // class 1 has two members
  CHECK_THROWS_WITH(stratified_folds(labels, 3, 0),
                    Catch::Matchers::Contains("class 1"));
}

namespace {

// Two well-separated clusters of tiny sets; linearly separable embeddings.
gswe::SetDataset separable_toy(gswe::Rng& rng, int per_class) {
  gswe::SetDataset ds;
  ds.d = 2;
  ds.n_classes = 2;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < per_class; ++i) {
      const double cx = c == 0 ? -4.0 : 4.0;
      Tensor pts({3, 2});
      for (std::size_t m = 0; m < 3; ++m) {
        pts.at(m, 0) = cx + 0.2 * rng.normal();
        pts.at(m, 1) = 0.2 * rng.normal();
      }
      gswe::PointSet ps(std::move(pts), c);
      ds.sets.push_back(std::move(ps));
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("k-fold classification separates an easy two-cluster toy",
          "[eval][slow]") {
  gswe::Rng rng(7);
  gswe::SetDataset ds = separable_toy(rng, 20);
  Model proto;
  proto.p = 2.0;
  proto.slicer = gswe::init_slicer(gswe::SlicerKind::linear, 2, 2, 3);
  proto.bank = gswe::init_bank(1, 3, 2, 4);
  HeadConfig cfg;
  cfg.epochs = 40;
  cfg.batch_size = 16;
  cfg.seed = 5;
  const auto r = kfold_classify(ds, proto, 5, cfg);
  for (double acc : r.fold_accuracy) CHECK(acc == 1.0);
  CHECK(r.mean_accuracy == 1.0);
  CHECK(r.std_accuracy == 0.0);
}

TEST_CASE("constant-label data scores perfectly", "[eval]") {
  gswe::Rng rng(8);
  gswe::SetDataset ds = separable_toy(rng, 8);
  for (auto& ps : ds.sets) ps.label = 0;
  ds.n_classes = 1;
  Model proto;
  proto.slicer = gswe::init_slicer(gswe::SlicerKind::linear, 2, 1, 3);
  proto.bank = gswe::init_bank(1, 2, 2, 4);
  HeadConfig cfg;
  cfg.epochs = 2;
  const auto r = kfold_classify(ds, proto, 4, cfg);
  CHECK(r.mean_accuracy == 1.0);
}

TEST_CASE("leave-one-out on a small class trips the stratification guard",
          "[eval]") {
  gswe::Rng rng(9);
  gswe::SetDataset ds = separable_toy(rng, 4);
  Model proto;
  proto.slicer = gswe::init_slicer(gswe::SlicerKind::linear, 2, 1, 3);
  proto.bank = gswe::init_bank(1, 2, 2, 4);
  HeadConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(kfold_classify(ds, proto, static_cast<int>(ds.sets.size()),
                                 cfg),
                  std::invalid_argument);
}
