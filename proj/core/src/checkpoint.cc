// Copyright 2026 The Otter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "otter/checkpoint.h"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "otter/heads.h"

namespace otter {
namespace {

using nlohmann::json;

constexpr const char* kMagic = "OTTERCKPT";

json config_to_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"d_model", c.d_model},
          {"d_inner", c.d_inner},       {"n_layers", c.n_layers},
          {"n_heads", c.n_heads},       {"head_dim", c.head_dim},
          {"max_seq_len", c.max_seq_len}, {"norm_eps", c.norm_eps},
          {"rope_base", c.rope_base}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.d_inner = j.at("d_inner").get<int>();
  c.n_layers = j.at("n_layers").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.head_dim = j.at("head_dim").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.norm_eps = j.at("norm_eps").get<double>();
  c.rope_base = j.at("rope_base").get<double>();
  return c;
}

json otter_to_json(const OtterConfig& o) {
  return {{"name", o.name},           {"d_ext", o.d_ext},
          {"d_inner_ext", o.d_inner_ext}, {"n_ext_heads", o.n_ext_heads},
          {"init", to_string(o.init)}, {"reg_lambda", o.reg_lambda}};
}

OtterConfig otter_from_json(const json& j) {
  OtterConfig o;
  o.name = j.at("name").get<std::string>();
  o.d_ext = j.at("d_ext").get<int>();
  o.d_inner_ext = j.at("d_inner_ext").get<int>();
  o.n_ext_heads = j.at("n_ext_heads").get<int>();
  o.init = parse_init_strategy(j.at("init").get<std::string>());
  o.reg_lambda = j.at("reg_lambda").get<double>();
  return o;
}

std::string encode_floats(const Tensor<float>& t) {
  std::string out(t.size() * 4, '\0');
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(t[i]);
    for (int b = 0; b < 4; ++b) out[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  return out;
}

void decode_floats(const char* src, Tensor<float>& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(src[i * 4 + b])) << (8 * b);
    }
    t[i] = std::bit_cast<float>(bits);
  }
}

std::uint32_t crc_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; tensors here are far below 4 GiB.
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n));
  return static_cast<std::uint32_t>(crc);
}

std::string head_kind_name(HeadKind k) {
  return k == HeadKind::kReward ? "reward" : "generation";
}

}  // namespace

std::string serialize_checkpoint(const OtterModel& model) {
  json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["model_config"] = config_to_json(model.config);
  json exts = json::array();
  for (const auto& e : model.extensions) exts.push_back(otter_to_json(e));
  manifest["extensions"] = exts;
  manifest["trainable_group"] = model.trainable_group;
  json heads = json::array();
  for (const auto& h : model.heads) {
    heads.push_back({{"name", h.name},
                     {"kind", head_kind_name(h.kind)},
                     {"extension", h.extension},
                     {"lookahead", h.lookahead}});
  }
  manifest["heads"] = heads;

  std::string payload;
  json tensors = json::array();
  model.for_each_parameter([&](const Parameter<float>& p) {
    const std::string bytes = encode_floats(p.value);
    json blocks = json::array();
    for (const Block& b : p.blocks) {
      const bool trainable = b.owner == model.trainable_group && !b.structural_zero;
      blocks.push_back({{"rows", {b.row_begin, b.row_end}},
                        {"cols", {b.col_begin, b.col_end}},
                        {"owner", b.owner},
                        {"frozen", !trainable},
                        {"structural_zero", b.structural_zero}});
    }
    tensors.push_back({{"name", p.name},
                       {"shape", p.value.shape()},
                       {"row_groups", p.row_groups},
                       {"col_groups", p.col_groups},
                       {"base_owner", p.base_owner},
                       {"offset", payload.size()},
                       {"bytes", bytes.size()},
                       {"crc32", crc_of(bytes.data(), bytes.size())},
                       {"blocks", blocks}});
    payload += bytes;
  });
  manifest["tensors"] = tensors;
  const std::string text = manifest.dump();
  return std::string(kMagic) + "\n" + std::to_string(text.size()) + "\n" + text + payload;
}

OtterModel deserialize_checkpoint(const std::string& bytes) {
  const std::string magic = std::string(kMagic) + "\n";
  if (bytes.compare(0, magic.size(), magic) != 0) {
    throw CorruptionError("not an otter checkpoint (bad magic)", "");
  }
  const std::size_t nl = bytes.find('\n', magic.size());
  if (nl == std::string::npos) throw CorruptionError("truncated manifest header", "");
  std::size_t len = 0;
  try {
    len = std::stoull(bytes.substr(magic.size(), nl - magic.size()));
  } catch (const std::exception&) {
    throw CorruptionError("bad manifest length", "");
  }
  const std::size_t body = nl + 1;
  if (bytes.size() < body + len) throw CorruptionError("truncated manifest", "");
  json manifest;
  try {
    manifest = json::parse(bytes.substr(body, len));
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("unreadable manifest: ") + e.what(), "");
  }
  const std::size_t payload = body + len;

  OtterModel model;
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw VersionError("checkpoint format version " + std::to_string(version) +
                         " is not supported (expected " +
                         std::to_string(kCheckpointVersion) + ")");
    }
    model = make_base_model<float>(config_from_json(manifest.at("model_config")), 0);
    for (const json& e : manifest.at("extensions")) {
      model.freeze();
      model = expand_model(model, otter_from_json(e));
    }
    for (const json& h : manifest.at("heads")) {
      const std::string kind = h.at("kind").get<std::string>();
      const int ext = h.at("extension").get<int>();
      const std::string name = h.at("name").get<std::string>();
      if (kind == "reward") {
        attach_reward_head(model, ext, name);
      } else if (kind == "generation") {
        attach_generation_heads(model, ext, 1, h.at("lookahead").get<int>(), name);
      } else {
        throw CorruptionError("unknown head kind '" + kind + "'", name);
      }
    }
    std::map<std::string, const json*> directory;
    for (const json& t : manifest.at("tensors")) {
      directory[t.at("name").get<std::string>()] = &t;
    }
    model.for_each_parameter([&](Parameter<float>& p) {
      auto it = directory.find(p.name);
      if (it == directory.end()) throw CorruptionError("tensor missing from manifest", p.name);
      const json& t = *it->second;
      if (t.at("shape").get<Shape>() != p.value.shape() ||
          t.at("row_groups").get<std::vector<std::size_t>>() != p.row_groups ||
          t.at("col_groups").get<std::vector<std::size_t>>() != p.col_groups) {
        throw CorruptionError("tensor layout disagrees with configuration", p.name);
      }
      const std::size_t off = t.at("offset").get<std::size_t>();
      const std::size_t n = t.at("bytes").get<std::size_t>();
      if (n != p.value.size() * 4) throw CorruptionError("tensor byte count mismatch", p.name);
      if (bytes.size() < payload + off + n) {
        throw CorruptionError("payload truncated inside tensor " + p.name, p.name);
      }
      const char* src = bytes.data() + payload + off;
      if (crc_of(src, n) != t.at("crc32").get<std::uint32_t>()) {
        throw CorruptionError("checksum mismatch in tensor " + p.name, p.name);
      }
      decode_floats(src, p.value);
      if (p.first_nonzero_structural() >= 0) {
        throw CorruptionError("structural zero region of " + p.name + " is nonzero", p.name);
      }
    });
    model.set_trainable_group(manifest.at("trainable_group").get<int>());
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("malformed manifest: ") + e.what(), "");
  }
  return model;
}

void save_checkpoint(const OtterModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint " + path);
  const std::string bytes = serialize_checkpoint(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed for checkpoint " + path);
}

OtterModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace otter
