#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gswe/autodiff.hpp"
#include "gswe/pointset.hpp"
#include "gswe/rng.hpp"
#include "gswe/slicers.hpp"
#include "gswe/tensor.hpp"
#include "gswe/transport1d.hpp"

namespace gswe {

/// K learnable reference point sets, each M points in the sliced domain's
/// input space (post-backbone when a backbone is configured).
struct ReferenceBank {
  std::vector<Tensor> refs;  // each {M, d}
  std::size_t K = 0, M = 0, d = 0;

  std::vector<Tensor*> params() {
    std::vector<Tensor*> out;
    for (auto& r : refs) out.push_back(&r);
    return out;
  }

  std::vector<const Tensor*> params() const {
    std::vector<const Tensor*> out;
    for (const auto& r : refs) out.push_back(&r);
    return out;
  }
};

enum class BankInit { gaussian, data };

/// Fresh reference bank. gaussian: i.i.d. N(0,1) entries; data: reference
/// points drawn uniformly from the pooled points of the given dataset.
inline ReferenceBank init_bank(std::size_t K, std::size_t M, std::size_t d,
                               std::uint64_t seed,
                               BankInit strategy = BankInit::gaussian,
                               const SetDataset* data = nullptr) {
  if (K < 1 || M < 1 || d < 1) {
    throw std::invalid_argument("init_bank: require K, M, d >= 1");
  }
  ReferenceBank bank;
  bank.K = K;
  bank.M = M;
  bank.d = d;
  Rng rng(seed);
  if (strategy == BankInit::gaussian) {
    for (std::size_t k = 0; k < K; ++k) {
      Tensor r({M, d});
      for (auto& v : r.data()) v = rng.normal();
      bank.refs.push_back(std::move(r));
    }
    return bank;
  }
  if (data == nullptr || data->sets.empty()) {
    throw std::invalid_argument("init_bank: data strategy needs a dataset");
  }
  if (data->d != d) {
    throw std::invalid_argument("init_bank: dataset dimension " +
                                std::to_string(data->d) + " != bank dimension " +
                                std::to_string(d));
  }
  std::vector<const double*> pool;
  for (const auto& ps : data->sets) {
    for (std::size_t m = 0; m < ps.size(); ++m) {
      pool.push_back(&ps.points.data()[m * d]);
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    Tensor r({M, d});
    for (std::size_t m = 0; m < M; ++m) {
      const double* src = pool[rng.below(pool.size())];
      for (std::size_t j = 0; j < d; ++j) r.at(m, j) = src[j];
    }
    bank.refs.push_back(std::move(r));
  }
  return bank;
}

/// Flat Euclidean embedding of one set: weight-scaled transport coefficients
/// against every reference and slice, concatenated k-major, then l, then m.
/// Plain l_p distance between two embeddings equals the sliced distance
/// averaged over slices and references.
struct SetEmbedding {
  std::vector<double> vec;
  std::size_t K = 0, L = 0, M = 0;
  double p = 2.0;
  std::uint64_t bank_id = 0;
};

namespace detail {

inline std::uint64_t fnv1a64(const void* bytes, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char* b = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= b[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t bank_identity(const ReferenceBank& bank) {
  std::uint64_t h = fnv1a64(&bank.K, sizeof(bank.K));
  h = fnv1a64(&bank.M, sizeof(bank.M), h);
  h = fnv1a64(&bank.d, sizeof(bank.d), h);
  for (const auto& r : bank.refs) {
    h = fnv1a64(r.data().data(), r.data().size() * sizeof(double), h);
  }
  return h;
}

inline std::vector<std::size_t> argsort_column(const Tensor& m,
                                               std::size_t l) {
  std::vector<std::size_t> idx(m.extent(0));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  // Stable: ties keep original index order, so embeddings of permuted sets
  // are bit-identical even with repeated slice values.
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return m.at(a, l) < m.at(b, l);
  });
  return idx;
}

}  // namespace detail

struct BoundBank {
  const ReferenceBank* bank = nullptr;
  std::vector<Var> refs;
};

inline BoundBank bind(Tape& t, const ReferenceBank& bank) {
  BoundBank b;
  b.bank = &bank;
  for (const auto& r : bank.refs) b.refs.push_back(t.leaf(r));
  return b;
}

/// Differentiable embedding of the points already on the tape (post-backbone
/// when one is in use). When the set has exactly M points the sorted
/// difference of slice values is used; otherwise the transport map is
/// interpolated at the reference midpoint levels. Every coefficient carries
/// the weight (1/(M*L*K))^(1/p). force_interp routes equal sizes through
/// the interpolation path (verification hook; the two must agree).
inline Var embed_on_tape(Tape& t, const Slicer& s, const Slicer::Bound& bs,
                         const BoundBank& bb, Var points, double p,
                         bool force_interp = false) {
  const ReferenceBank& bank = *bb.bank;
  const Tensor& pv = t.value(points);
  if (pv.rank() != 2 || pv.extent(0) == 0) {
    throw std::invalid_argument("embed: empty point set");
  }
  if (pv.extent(1) != s.d || bank.d != s.d) {
    throw std::invalid_argument(
        "embed: dimension mismatch (points " + Tensor::shape_str(pv.shape()) +
        ", bank d=" + std::to_string(bank.d) +
        ", slicer d=" + std::to_string(s.d) + ")");
  }
  const std::size_t mi = pv.extent(0);
  const std::size_t M = bank.M, L = s.L, K = bank.K;

  Var sz{};
  try {
    sz = bs.forward(t, points);
    t.value(sz).check_finite();
  } catch (const numerical_error& e) {
    throw numerical_error(std::string("embed: non-finite slice values: ") +
                          e.what());
  }

  const double scale =
      std::pow(1.0 / static_cast<double>(M * L * K), 1.0 / p);
  Var scale_vec = t.broadcast(t.scalar(scale), {M});

  // Fixed interpolation stencil; depends on sizes only.
  std::vector<detail::InterpNode> stencil;
  const bool interp = force_interp || mi != M;
  if (interp) {
    stencil.reserve(M);
    for (std::size_t m = 0; m < M; ++m) {
      const double u =
          (static_cast<double>(m) + 0.5) / static_cast<double>(M);
      stencil.push_back(detail::quantile_stencil(mi, u));
    }
  }

  std::vector<Var> blocks;
  blocks.reserve(K * L);
  for (std::size_t k = 0; k < K; ++k) {
    Var sr{};
    try {
      sr = bs.forward(t, bb.refs[k]);
    } catch (const numerical_error& e) {
      throw numerical_error("embed: non-finite slice values on reference " +
                            std::to_string(k) + ": " + e.what());
    }
    for (std::size_t l = 0; l < L; ++l) {
      const auto perm_z = detail::argsort_column(t.value(sz), l);
      const auto perm_r = detail::argsort_column(t.value(sr), l);
      std::vector<std::size_t> ridx(M);
      for (std::size_t m = 0; m < M; ++m) ridx[m] = perm_r[m] * L + l;
      Var sorted_ref = t.gather(sr, ridx);
      Var mapped{};
      if (!interp) {
        std::vector<std::size_t> zidx(M);
        for (std::size_t m = 0; m < M; ++m) zidx[m] = perm_z[m] * L + l;
        mapped = t.gather(sz, zidx);
      } else {
        std::vector<std::size_t> lo(M), hi(M);
        std::vector<double> wlo(M), whi(M);
        for (std::size_t m = 0; m < M; ++m) {
          lo[m] = perm_z[stencil[m].lo] * L + l;
          hi[m] = perm_z[stencil[m].hi] * L + l;
          wlo[m] = 1.0 - stencil[m].w;
          whi[m] = stencil[m].w;
        }
        Var vlo = t.mul(t.gather(sz, lo), t.leaf(Tensor::vector(wlo)));
        Var vhi = t.mul(t.gather(sz, hi), t.leaf(Tensor::vector(whi)));
        mapped = t.add(vlo, vhi);
      }
      blocks.push_back(t.mul(mapped - sorted_ref, scale_vec));
    }
  }
  return blocks.size() == 1 ? blocks[0] : t.concat(blocks);
}

/// Frozen embedding of a point set (no backbone; see Model for the full
/// pipeline).
inline SetEmbedding embed(const PointSet& z, const Slicer& s,
                          const ReferenceBank& bank, double p = 2.0,
                          bool force_interp = false) {
  Tape t;
  auto bs = s.bind(t);
  auto bb = bind(t, bank);
  Var points = t.leaf(z.points);
  Var e = embed_on_tape(t, s, bs, bb, points, p, force_interp);
  SetEmbedding out;
  out.vec = t.value(e).data();
  out.K = bank.K;
  out.L = s.L;
  out.M = bank.M;
  out.p = p;
  out.bank_id = detail::bank_identity(bank);
  return out;
}

/// Plain l_p distance between two embeddings of identical layout.
inline double pairwise_embed_distance(const SetEmbedding& a,
                                      const SetEmbedding& b, double p) {
  if (a.K != b.K || a.L != b.L || a.M != b.M || a.p != b.p ||
      a.bank_id != b.bank_id || a.vec.size() != b.vec.size()) {
    throw std::invalid_argument(
        "pairwise_embed_distance: embedding layouts differ (K/L/M/p or "
        "reference bank mismatch)");
  }
  if (p != a.p) {
    throw std::invalid_argument(
        "pairwise_embed_distance: order p differs from the embeddings'");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.vec.size(); ++i) {
    acc += std::pow(std::abs(a.vec[i] - b.vec[i]), p);
  }
  return std::pow(acc, 1.0 / p);
}

}  // namespace gswe
