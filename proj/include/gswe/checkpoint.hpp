#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gswe/errors.hpp"
#include "gswe/model.hpp"

namespace gswe {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'G', 'S', 'W', 'E',
                                             'C', 'K', 'P', 'T'};

namespace detail {

// Little-endian I/O; raw memcpy on little-endian hosts, byte swap otherwise.
inline bool host_little_endian() {
  const std::uint16_t probe = 1;
  unsigned char b;
  std::memcpy(&b, &probe, 1);
  return b == 1;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if (!host_little_endian()) std::reverse(buf, buf + sizeof(T));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw data_error("checkpoint: truncated file");
  if (!host_little_endian()) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

inline nlohmann::json mlp_meta(const Mlp& net) {
  return {{"in", net.in}, {"hidden", net.hidden}, {"out", net.out}};
}

inline Mlp mlp_shell(const nlohmann::json& j) {
  Mlp net;
  net.in = j.at("in").get<std::size_t>();
  net.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  net.out = j.at("out").get<std::size_t>();
  std::size_t fan_in = net.in;
  auto widths = net.hidden;
  widths.push_back(net.out);
  for (std::size_t w : widths) {
    net.weights.emplace_back(std::vector<std::size_t>{fan_in, w});
    net.biases.emplace_back(std::vector<std::size_t>{w});
    fan_in = w;
  }
  return net;
}

}  // namespace detail

struct Checkpoint {
  Model model;
  std::uint64_t seed = 0;
  nlohmann::json config;  // effective configuration echo
};

/// Single binary container: magic, version, JSON manifest, then the raw
/// little-endian 64-bit parameter arrays back to back.
inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  const Model& m = ck.model;
  nlohmann::json manifest;
  manifest["seed"] = ck.seed;
  manifest["config"] = ck.config;
  manifest["model"]["p"] = m.p;
  manifest["model"]["backbone"] =
      m.backbone ? detail::mlp_meta(*m.backbone) : nlohmann::json();
  manifest["model"]["slicer"] = {{"kind", to_string(m.slicer.kind)},
                                 {"d", m.slicer.d},
                                 {"L", m.slicer.L},
                                 {"degree", m.slicer.degree},
                                 {"hidden", m.slicer.hidden}};
  manifest["model"]["bank"] = {
      {"K", m.bank.K}, {"M", m.bank.M}, {"d", m.bank.d}};

  auto params = m.params();
  auto arrays = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    arrays.push_back({{"shape", params[i]->shape()},
                      {"count", params[i]->size()},
                      {"offset", offset}});
    offset += params[i]->size();
  }
  manifest["arrays"] = arrays;
  const std::string mjson = manifest.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + tmp);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::write_le<std::uint32_t>(out, kCheckpointVersion);
    detail::write_le<std::uint64_t>(out, mjson.size());
    out.write(mjson.data(), static_cast<std::streamsize>(mjson.size()));
    for (auto* p : params) {
      for (double v : p->data()) detail::write_le<double>(out, v);
    }
    if (!out) throw data_error("write failed: " + tmp);
  }
  std::remove(path.c_str());
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw data_error("cannot move checkpoint into place: " + path);
  }
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open: " + path);
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw data_error("checkpoint: bad magic in " + path);
  }
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw data_error("checkpoint: version mismatch: file has " +
                     std::to_string(version) + ", this build reads " +
                     std::to_string(kCheckpointVersion));
  }
  const auto mlen = detail::read_le<std::uint64_t>(in);
  std::string mjson(mlen, '\0');
  in.read(mjson.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw data_error("checkpoint: truncated manifest in " + path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mjson);
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("checkpoint: malformed manifest: ") +
                     e.what());
  }

  Checkpoint ck;
  ck.seed = manifest.at("seed").get<std::uint64_t>();
  ck.config = manifest.at("config");
  const auto& mm = manifest.at("model");
  ck.model.p = mm.at("p").get<double>();
  if (!mm.at("backbone").is_null()) {
    ck.model.backbone = detail::mlp_shell(mm.at("backbone"));
  }
  const auto& sj = mm.at("slicer");
  Slicer& s = ck.model.slicer;
  s.kind = slicer_kind_from_string(sj.at("kind").get<std::string>());
  s.d = sj.at("d").get<std::size_t>();
  s.L = sj.at("L").get<std::size_t>();
  s.degree = sj.at("degree").get<int>();
  s.hidden = sj.at("hidden").get<std::vector<std::size_t>>();
  s.rerand = Rng::derive(ck.seed, 0x5eed);
  switch (s.kind) {
    case SlicerKind::linear:
      s.theta = Tensor({s.d, s.L});
      break;
    case SlicerKind::polynomial:
      s.theta = Tensor({Slicer::monomial_count(s.d, s.degree), s.L});
      break;
    case SlicerKind::mlp: {
      nlohmann::json nj{{"in", s.d}, {"hidden", s.hidden}, {"out", s.L}};
      s.net = detail::mlp_shell(nj);
      break;
    }
  }
  const auto& bj = mm.at("bank");
  ck.model.bank.K = bj.at("K").get<std::size_t>();
  ck.model.bank.M = bj.at("M").get<std::size_t>();
  ck.model.bank.d = bj.at("d").get<std::size_t>();
  for (std::size_t k = 0; k < ck.model.bank.K; ++k) {
    ck.model.bank.refs.emplace_back(
        std::vector<std::size_t>{ck.model.bank.M, ck.model.bank.d});
  }

  auto params = ck.model.params();
  const auto& arrays = manifest.at("arrays");
  if (arrays.size() != params.size()) {
    throw data_error("checkpoint: manifest lists " +
                     std::to_string(arrays.size()) + " arrays, model needs " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto shape = arrays[i].at("shape").get<std::vector<std::size_t>>();
    if (shape != params[i]->shape()) {
      throw data_error("checkpoint: array " + std::to_string(i) +
                       " has shape " + Tensor::shape_str(shape) +
                       ", expected " +
                       Tensor::shape_str(params[i]->shape()));
    }
    std::vector<double> data(params[i]->size());
    for (auto& v : data) v = detail::read_le<double>(in);
    *params[i] = Tensor(params[i]->shape(), std::move(data));
  }
  return ck;
}

}  // namespace gswe
