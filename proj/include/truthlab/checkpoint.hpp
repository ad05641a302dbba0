#pragma once

// Flat binary tensor container: magic "TLCK", u32 format version, u64
// manifest length, JSON manifest, then raw float64 payload in manifest
// order. All integers and floats little-endian; offsets are relative to the
// start of the payload and counted in doubles.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "truthlab/dense.hpp"
#include "truthlab/linalg.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace truthlab::ckpt {

using nlohmann::json;

constexpr char kMagic[4] = {'T', 'L', 'C', 'K'};
constexpr std::uint32_t kFormatVersion = 1;

struct TensorBlock {
  std::string name;
  std::vector<long long> shape;
  std::vector<double> values;
};

struct Checkpoint {
  json meta;  // config_hash, seed, version, plus payload-specific fields
  std::vector<TensorBlock> tensors;

  const TensorBlock& find(const std::string& name) const {
    for (const TensorBlock& t : tensors)
      if (t.name == name) return t;
    throw std::out_of_range("checkpoint: no tensor named " + name);
  }
};

inline void write_checkpoint(const std::string& path, const Checkpoint& ck) {
  json manifest;
  manifest["meta"] = ck.meta;
  manifest["tensors"] = json::array();
  std::uint64_t offset = 0;
  for (const TensorBlock& t : ck.tensors) {
    std::uint64_t count = 1;
    for (long long s : t.shape) count *= static_cast<std::uint64_t>(s);
    if (count != t.values.size())
      throw std::invalid_argument("write_checkpoint: shape/value mismatch for " + t.name);
    manifest["tensors"].push_back(
        json{{"name", t.name}, {"shape", t.shape}, {"dtype", "f64"}, {"offset", offset}, {"count", count}});
    offset += count;
  }
  std::string mbytes = manifest.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_checkpoint: cannot open " + path);
  out.write(kMagic, 4);
  std::uint32_t ver = kFormatVersion;
  out.write(reinterpret_cast<const char*>(&ver), sizeof ver);
  std::uint64_t mlen = mbytes.size();
  out.write(reinterpret_cast<const char*>(&mlen), sizeof mlen);
  out.write(mbytes.data(), static_cast<std::streamsize>(mbytes.size()));
  for (const TensorBlock& t : ck.tensors)
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write_checkpoint: write failed for " + path);
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("read_checkpoint: bad magic in " + path);
  std::uint32_t ver = 0;
  in.read(reinterpret_cast<char*>(&ver), sizeof ver);
  if (ver != kFormatVersion)
    throw std::runtime_error("read_checkpoint: unsupported format version " + std::to_string(ver));
  std::uint64_t mlen = 0;
  in.read(reinterpret_cast<char*>(&mlen), sizeof mlen);
  std::string mbytes(mlen, '\0');
  in.read(mbytes.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw std::runtime_error("read_checkpoint: truncated manifest in " + path);
  json manifest = json::parse(mbytes);
  Checkpoint ck;
  ck.meta = manifest.value("meta", json::object());
  for (const json& tj : manifest["tensors"]) {
    TensorBlock t;
    t.name = tj["name"].get<std::string>();
    t.shape = tj["shape"].get<std::vector<long long>>();
    std::uint64_t count = tj["count"].get<std::uint64_t>();
    t.values.resize(count);
    in.read(reinterpret_cast<char*>(t.values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("read_checkpoint: truncated payload in " + path);
    ck.tensors.push_back(std::move(t));
  }
  return ck;
}

// Dense model adapters: the manifest carries the full model config so a
// checkpoint is self-describing.
inline Checkpoint pack_dense(const dense::DenseParams& params, json meta) {
  meta["model"] = json{{"n_layers", params.cfg.n_layers},
                       {"d_model", params.cfg.d_model},
                       {"n_subjects", params.cfg.n_subjects},
                       {"n_attributes", params.cfg.n_attributes},
                       {"seq_len", params.cfg.seq_len},
                       {"norm_epsilon", params.cfg.norm_epsilon},
                       {"embeddings_trainable", params.cfg.embeddings_trainable}};
  Checkpoint ck;
  ck.meta = std::move(meta);
  dense::DenseTensors& t = const_cast<dense::DenseParams&>(params).t;
  for (dense::TensorRef& ref : t.tensors()) {
    TensorBlock block;
    block.name = ref.name;
    if (ref.name == "embed")
      block.shape = {params.cfg.vocab(), params.cfg.d_model};
    else if (ref.name == "pos")
      block.shape = {params.cfg.seq_len, params.cfg.d_model};
    else if (ref.name == "w_out")
      block.shape = {params.cfg.d_model, params.cfg.vocab()};
    else if (ref.name == "b_out")
      block.shape = {params.cfg.vocab()};
    else
      block.shape = {params.cfg.d_model, params.cfg.d_model};
    block.values.assign(ref.data, ref.data + ref.size);
    ck.tensors.push_back(std::move(block));
  }
  return ck;
}

inline dense::DenseParams unpack_dense(const Checkpoint& ck) {
  const json& m = ck.meta.at("model");
  dense::DenseConfig cfg;
  cfg.n_layers = m.at("n_layers").get<int>();
  cfg.d_model = m.at("d_model").get<int>();
  cfg.n_subjects = m.at("n_subjects").get<int>();
  cfg.n_attributes = m.at("n_attributes").get<int>();
  cfg.seq_len = m.at("seq_len").get<int>();
  cfg.norm_epsilon = m.at("norm_epsilon").get<double>();
  cfg.embeddings_trainable = m.at("embeddings_trainable").get<bool>();
  cfg.validate();
  dense::DenseParams params{cfg, dense::DenseTensors::shaped(cfg)};
  for (dense::TensorRef& ref : params.t.tensors()) {
    const TensorBlock& block = ck.find(ref.name);
    if (block.values.size() != ref.size)
      throw std::runtime_error("unpack_dense: size mismatch for " + ref.name);
    std::copy(block.values.begin(), block.values.end(), ref.data);
  }
  return params;
}

// Toy value-matrix adapters.
inline Checkpoint pack_matrix(const la::Mat& w, const std::string& name, json meta) {
  Checkpoint ck;
  ck.meta = std::move(meta);
  TensorBlock block;
  block.name = name;
  block.shape = {w.rows, w.cols};
  block.values = w.data;
  ck.tensors.push_back(std::move(block));
  return ck;
}

inline la::Mat unpack_matrix(const Checkpoint& ck, const std::string& name) {
  const TensorBlock& block = ck.find(name);
  if (block.shape.size() != 2) throw std::runtime_error("unpack_matrix: " + name + " is not 2-D");
  la::Mat w(static_cast<int>(block.shape[0]), static_cast<int>(block.shape[1]));
  w.data = block.values;
  return w;
}

}  // namespace truthlab::ckpt
