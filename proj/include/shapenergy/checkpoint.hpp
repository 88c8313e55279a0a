#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "shapenergy/dataset.hpp"
#include "shapenergy/errors.hpp"
#include "shapenergy/nn.hpp"

namespace shapenergy {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  nn::ModelState state;
  Normalizer normalizer;
  json extra = json::object();  // train config, dataset path, etc.
};

namespace nn {

inline void to_json(json& j, const LayerSpec& l) {
  j = {{"kind", to_string(l.kind)}, {"in", l.in}, {"out", l.out}, {"kernel", l.kernel}, {"pool", l.pool}};
}

inline void from_json(const json& j, LayerSpec& l) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "dense") l.kind = LayerKind::dense;
  else if (kind == "conv2d") l.kind = LayerKind::conv2d;
  else if (kind == "maxpool") l.kind = LayerKind::maxpool;
  else if (kind == "flatten") l.kind = LayerKind::flatten;
  else if (kind == "relu") l.kind = LayerKind::relu;
  else throw LoadError("unknown layer kind '" + kind + "'");
  j.at("in").get_to(l.in);
  j.at("out").get_to(l.out);
  j.at("kernel").get_to(l.kernel);
  j.at("pool").get_to(l.pool);
}

inline void to_json(json& j, const ModelSpec& s) {
  j = {{"family", s.family}, {"input_shape", s.input_shape}, {"layers", s.layers}};
}

inline void from_json(const json& j, ModelSpec& s) {
  j.at("family").get_to(s.family);
  j.at("input_shape").get_to(s.input_shape);
  j.at("layers").get_to(s.layers);
}

}  // namespace nn

// Little-endian IEEE-754 doubles.
inline std::string encode_params(std::span<const double> params) {
  std::string out(params.size() * 8, '\0');
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(params[i]);
    for (std::size_t b = 0; b < 8; ++b) {
      out[i * 8 + b] = static_cast<char>(bits & 0xFF);
      bits >>= 8;
    }
  }
  return out;
}

inline std::vector<double> decode_params(std::string_view data) {
  if (data.size() % 8 != 0) throw LoadError("params.bin length is not a multiple of 8");
  std::vector<double> out(data.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < 8; ++b) bits |= std::uint64_t{static_cast<unsigned char>(data[i * 8 + b])} << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string bin = encode_params(ck.state.params);
  write_file(dir / "params.bin", bin);
  const json meta = {{"format_version", kCheckpointFormatVersion},
                     {"family", ck.state.spec.family},
                     {"spec", ck.state.spec},
                     {"param_count", ck.state.params.size()},
                     {"init_seed", ck.state.seed},
                     {"normalizer", ck.normalizer},
                     {"params_fnv1a64", hex64(fnv1a64(bin))},
                     {"extra", ck.extra}};
  write_file(dir / "checkpoint.json", meta.dump(2) + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto meta_path = (dir / "checkpoint.json").string();
  json meta;
  try {
    meta = json::parse(read_file(dir / "checkpoint.json"));
  } catch (const json::exception& e) {
    throw LoadError(meta_path + ": " + e.what());
  }
  Checkpoint ck;
  try {
    if (meta.at("format_version") != kCheckpointFormatVersion) throw LoadError(meta_path + ": unsupported format_version");
    meta.at("spec").get_to(ck.state.spec);
    meta.at("init_seed").get_to(ck.state.seed);
    meta.at("normalizer").get_to(ck.normalizer);
    if (meta.contains("extra")) ck.extra = meta["extra"];
  } catch (const json::exception& e) {
    throw LoadError(meta_path + ": " + e.what());
  }
  try {
    nn::activation_shapes(ck.state.spec);
  } catch (const SpecError& e) {
    throw LoadError(meta_path + ": " + e.what());
  }
  const std::string bin = read_file(dir / "params.bin");
  if (meta.value("params_fnv1a64", std::string()) != hex64(fnv1a64(bin))) {
    throw LoadError((dir / "params.bin").string() + ": checksum mismatch");
  }
  ck.state.params = decode_params(bin);
  if (ck.state.params.size() != nn::param_count(ck.state.spec)) {
    throw LoadError((dir / "params.bin").string() + ": parameter count does not match the model spec");
  }
  ck.state.offsets = nn::param_offsets(ck.state.spec);
  return ck;
}

}  // namespace shapenergy
