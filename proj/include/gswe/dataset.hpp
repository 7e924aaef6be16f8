#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gswe/errors.hpp"
#include "gswe/pointset.hpp"
#include "gswe/rng.hpp"

namespace gswe {

struct SetCirclesParams {
  std::size_t n_train = 400;
  std::size_t n_test = 200;
  double radius_inner = 1.0;
  double radius_outer = 1.3;
  double noise_sigma = 0.05;
  std::size_t size_min = 8;
  std::size_t size_max = 21;
  std::uint64_t seed = 0;

  void validate() const {
    if (radius_inner <= 0.0 || radius_outer <= 0.0) {
      throw std::invalid_argument("set-circles: radii must be positive");
    }
    if (radius_inner == radius_outer) {
      throw std::invalid_argument(
          "set-circles: the two class radii must be distinct");
    }
    if (size_min < 1 || size_min > size_max) {
      throw std::invalid_argument("set-circles: invalid size range [" +
                                  std::to_string(size_min) + ", " +
                                  std::to_string(size_max) + "]");
    }
    if (noise_sigma < 0.0) {
      throw std::invalid_argument("set-circles: noise sigma must be >= 0");
    }
    if (n_train + n_test == 0) {
      throw std::invalid_argument("set-circles: no sets requested");
    }
  }
};

/// Two-class 2-d dataset: each set is a random arc of a circle whose radius
/// identifies the class, sampled with isotropic Gaussian noise. Set
/// cardinality is uniform over [size_min, size_max].
inline SetDataset gen_set_circles(const SetCirclesParams& prm) {
  prm.validate();
  Rng rng(prm.seed);
  SetDataset ds;
  ds.d = 2;
  ds.n_classes = 2;
  const double two_pi = 6.283185307179586476925286766559;
  const double quarter_pi = 0.78539816339744830961566084581988;
  auto make_set = [&](Split split) {
    const int label = static_cast<int>(rng.below(2));
    const double radius = label == 0 ? prm.radius_inner : prm.radius_outer;
    const std::size_t m =
        prm.size_min + rng.below(prm.size_max - prm.size_min + 1);
    const double arc_start = rng.uniform(0.0, two_pi);
    const double arc_len = rng.uniform(quarter_pi, 4.0 * quarter_pi);
    Tensor pts({m, 2});
    for (std::size_t i = 0; i < m; ++i) {
      const double u = arc_start + rng.uniform(0.0, arc_len);
      pts.at(i, 0) = radius * std::cos(u) + rng.normal(0.0, prm.noise_sigma);
      pts.at(i, 1) = radius * std::sin(u) + rng.normal(0.0, prm.noise_sigma);
    }
    PointSet ps(std::move(pts), label);
    ps.split = split;
    ds.sets.push_back(std::move(ps));
  };
  for (std::size_t i = 0; i < prm.n_train; ++i) make_set(Split::train);
  for (std::size_t i = 0; i < prm.n_test; ++i) make_set(Split::test);
  ds.validate();
  return ds;
}

/// Writes a dataset as line-delimited JSON: a header record {d, n_classes}
/// followed by one {label, points} record per set. extra_header fields are
/// merged into the header (configuration echo).
inline void save_pointsets(const SetDataset& ds, const std::string& path,
                           const nlohmann::json& extra_header = {}) {
  ds.validate();
  std::ofstream out(path, std::ios::binary);  // binary: stable newlines
  if (!out) throw data_error("cannot open for writing: " + path);
  nlohmann::json header{{"d", ds.d}, {"n_classes", ds.n_classes}};
  if (extra_header.is_object()) {
    for (auto it = extra_header.begin(); it != extra_header.end(); ++it) {
      header[it.key()] = it.value();
    }
  }
  out << header.dump() << "\n";
  for (const auto& ps : ds.sets) {
    nlohmann::json rec;
    rec["label"] = ps.label ? nlohmann::json(*ps.label) : nlohmann::json();
    auto pts = nlohmann::json::array();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      auto row = nlohmann::json::array();
      for (std::size_t j = 0; j < ps.dim(); ++j) {
        row.push_back(ps.points.at(i, j));
      }
      pts.push_back(std::move(row));
    }
    rec["points"] = std::move(pts);
    if (ps.split) {
      rec["split"] = *ps.split == Split::train ? "train" : "test";
    }
    out << rec.dump() << "\n";
  }
  if (!out) throw data_error("write failed: " + path);
}

/// Loads a line-delimited JSON dataset, validating every record. Errors
/// carry the offending line number.
inline SetDataset load_pointsets(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open: " + path);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> data_error {
    return data_error(path + ":" + std::to_string(line_no) + ": " + what);
  };
  // Header.
  SetDataset ds;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json header;
    try {
      header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw fail(std::string("malformed header: ") + e.what());
    }
    if (!header.is_object() || !header.contains("d") ||
        !header.contains("n_classes")) {
      throw fail("header must carry d and n_classes");
    }
    ds.d = header["d"].get<std::size_t>();
    ds.n_classes = header["n_classes"].get<int>();
    if (ds.d < 1) throw fail("header d must be >= 1");
    break;
  }
  if (line_no == 0) throw data_error(path + ": empty file");
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw fail(std::string("malformed record: ") + e.what());
    }
    if (!rec.is_object() || !rec.contains("points") ||
        !rec["points"].is_array() || rec["points"].empty()) {
      throw fail("record needs a non-empty points array (set " +
                 std::to_string(ds.sets.size()) + ")");
    }
    const auto& pts = rec["points"];
    const std::size_t m = pts.size();
    Tensor mat({m, ds.d});
    for (std::size_t i = 0; i < m; ++i) {
      if (!pts[i].is_array() || pts[i].size() != ds.d) {
        throw fail("set " + std::to_string(ds.sets.size()) + " point " +
                   std::to_string(i) + " has dimension " +
                   std::to_string(pts[i].is_array() ? pts[i].size() : 0) +
                   ", expected " + std::to_string(ds.d));
      }
      for (std::size_t j = 0; j < ds.d; ++j) {
        if (!pts[i][j].is_number()) {
          throw fail("set " + std::to_string(ds.sets.size()) +
                     " has a non-numeric coordinate");
        }
        const double v = pts[i][j].get<double>();
        if (!std::isfinite(v)) {
          throw fail("set " + std::to_string(ds.sets.size()) +
                     " has a non-finite coordinate");
        }
        mat.at(i, j) = v;
      }
    }
    std::optional<int> label;
    if (rec.contains("label") && !rec["label"].is_null()) {
      if (!rec["label"].is_number_integer()) {
        throw fail("label must be an integer or null");
      }
      label = rec["label"].get<int>();
      if (*label < 0 || *label >= ds.n_classes) {
        throw fail("label " + std::to_string(*label) + " outside [0, " +
                   std::to_string(ds.n_classes) + ")");
      }
    }
    PointSet ps(std::move(mat), label);
    if (rec.contains("split") && !rec["split"].is_null()) {
      const std::string s = rec["split"].get<std::string>();
      if (s == "train") {
        ps.split = Split::train;
      } else if (s == "test") {
        ps.split = Split::test;
      } else {
        throw fail("unknown split tag: " + s);
      }
    }
    ds.sets.push_back(std::move(ps));
  }
  if (ds.sets.empty()) throw data_error(path + ": no set records");
  ds.validate();
  return ds;
}

}  // namespace gswe
