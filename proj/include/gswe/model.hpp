#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gswe/autodiff.hpp"
#include "gswe/embedding.hpp"
#include "gswe/gsw.hpp"
#include "gswe/pointset.hpp"
#include "gswe/slicers.hpp"

namespace gswe {

/// Full embedding pipeline: optional per-element backbone, slicer, and
/// reference bank. The backbone is applied to data sets only; references
/// are free parameters living directly in the backbone's output space.
struct Model {
  double p = 2.0;
  std::optional<Mlp> backbone;
  Slicer slicer;
  ReferenceBank bank;

  std::size_t input_dim() const {
    return backbone ? backbone->in : slicer.d;
  }

  std::size_t embedding_dim() const { return bank.K * slicer.L * bank.M; }

  /// Parameters in binding order: backbone, slicer, bank.
  std::vector<Tensor*> params() {
    std::vector<Tensor*> out;
    if (backbone) {
      auto bp = backbone->params();
      out.insert(out.end(), bp.begin(), bp.end());
    }
    auto sp = slicer.params();
    out.insert(out.end(), sp.begin(), sp.end());
    auto kp = bank.params();
    out.insert(out.end(), kp.begin(), kp.end());
    return out;
  }

  std::vector<const Tensor*> params() const {
    std::vector<const Tensor*> out;
    if (backbone) {
      auto bp = backbone->params();
      out.insert(out.end(), bp.begin(), bp.end());
    }
    auto sp = slicer.params();
    out.insert(out.end(), sp.begin(), sp.end());
    auto kp = bank.params();
    out.insert(out.end(), kp.begin(), kp.end());
    return out;
  }
};

struct BoundModel {
  const Model* model = nullptr;
  std::optional<Mlp::Bound> backbone;
  Slicer::Bound slicer;
  BoundBank bank;

  std::vector<Var> param_vars() const {
    std::vector<Var> out;
    if (backbone) {
      out.insert(out.end(), backbone->vars.begin(), backbone->vars.end());
    }
    out.insert(out.end(), slicer.vars.begin(), slicer.vars.end());
    out.insert(out.end(), bank.refs.begin(), bank.refs.end());
    return out;
  }

  /// Embedding of one set whose raw points are already on the tape.
  Var embed(Tape& t, Var raw_points) const {
    Var h = backbone ? backbone->forward(t, raw_points) : raw_points;
    return embed_on_tape(t, model->slicer, slicer, bank, h, model->p);
  }
};

inline BoundModel bind(Tape& t, const Model& m) {
  BoundModel b;
  b.model = &m;
  if (m.backbone) b.backbone = m.backbone->bind(t);
  b.slicer = m.slicer.bind(t);
  b.bank = bind(t, m.bank);
  return b;
}

/// Frozen embedding through the full pipeline.
inline SetEmbedding embed(const Model& m, const PointSet& z) {
  if (z.dim() != m.input_dim()) {
    throw std::invalid_argument("embed: set dimension " +
                                std::to_string(z.dim()) +
                                " does not match model input dimension " +
                                std::to_string(m.input_dim()));
  }
  Tape t;
  BoundModel b = bind(t, m);
  Var e = b.embed(t, t.leaf(z.points));
  SetEmbedding out;
  out.vec = t.value(e).data();
  out.K = m.bank.K;
  out.L = m.slicer.L;
  out.M = m.bank.M;
  out.p = m.p;
  out.bank_id = detail::bank_identity(m.bank);
  return out;
}

/// Sliced distance through the model's pipeline: the backbone composed with
/// the slicer acts as the effective slicing family.
inline double model_gsw(const Model& m, const PointSet& a, const PointSet& b,
                        const GswConfig& cfg) {
  if (!m.backbone) return gsw(a, b, m.slicer, cfg);
  auto through = [&](const PointSet& ps) {
    Tape t;
    auto nb = m.backbone->bind(t);
    return PointSet(t.value(nb.forward(t, t.leaf(ps.points))), ps.label);
  };
  return gsw(through(a), through(b), m.slicer, cfg);
}

/// Embeds every set of a dataset; returns embedding rows and labels
/// (-1 where missing).
inline std::pair<std::vector<std::vector<double>>, std::vector<int>>
embed_dataset(const Model& m, const SetDataset& ds) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  rows.reserve(ds.sets.size());
  for (const auto& ps : ds.sets) {
    rows.push_back(embed(m, ps).vec);
    labels.push_back(ps.label.value_or(-1));
  }
  return {std::move(rows), std::move(labels)};
}

}  // namespace gswe
