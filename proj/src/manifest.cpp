/* Copyright 2026 The DeltaInfer Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "deltainfer/manifest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>

#include <json.hpp>

#include "deltainfer/error.hpp"

namespace deltainfer {

namespace fs = std::filesystem;
using json = nlohmann::json;

ActivationKind parse_activation(const std::string& name) {
  static const std::map<std::string, ActivationKind> kinds{
      {"relu", ActivationKind::kRelu},          {"relu6", ActivationKind::kRelu6},
      {"leaky_relu", ActivationKind::kLeakyRelu}, {"sigmoid", ActivationKind::kSigmoid},
      {"swish", ActivationKind::kSwish},        {"identity", ActivationKind::kIdentity}};
  auto it = kinds.find(name);
  if (it == kinds.end()) throw ParseError("unknown activation '" + name + "'");
  return it->second;
}

const char* activation_name(ActivationKind fn) {
  switch (fn) {
    case ActivationKind::kRelu:
      return "relu";
    case ActivationKind::kRelu6:
      return "relu6";
    case ActivationKind::kLeakyRelu:
      return "leaky_relu";
    case ActivationKind::kSigmoid:
      return "sigmoid";
    case ActivationKind::kSwish:
      return "swish";
    case ActivationKind::kIdentity:
      return "identity";
  }
  return "relu";
}

namespace {

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest: " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<float> read_blob(const fs::path& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw IoError("cannot open weight blob: " + path.string());
  const auto bytes = static_cast<std::size_t>(is.tellg());
  if (bytes % 4 != 0) throw ParseError(path.string() + ": blob size is not a multiple of 4 bytes");
  std::vector<float> data(bytes / 4);
  is.seekg(0);
  is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
  if (!is) throw IoError("failed reading weight blob: " + path.string());
  if constexpr (std::endian::native == std::endian::big) {
    for (float& f : data) {
      auto u = std::bit_cast<std::uint32_t>(f);
      u = ((u & 0xffu) << 24) | ((u & 0xff00u) << 8) | ((u >> 8) & 0xff00u) | (u >> 24);
      f = std::bit_cast<float>(u);
    }
  }
  return data;
}

// Hands out blob slices and rejects overlapping or out-of-range references.
class Blob {
 public:
  explicit Blob(std::vector<float> data) : data_(std::move(data)) {}

  std::vector<float> take(const json& ref, std::size_t expected, const std::string& what) {
    if (!ref.is_object() || !ref.contains("offset") || !ref.contains("length")) {
      throw ParseError(what + ": blob reference needs offset and length");
    }
    const auto offset = ref.at("offset").get<std::int64_t>();
    const auto length = ref.at("length").get<std::int64_t>();
    if (offset < 0 || length < 0) throw ParseError(what + ": negative blob offset or length");
    const auto off = static_cast<std::size_t>(offset);
    const auto len = static_cast<std::size_t>(length);
    if (off > data_.size() || len > data_.size() - off) {
      throw ParseError(what + ": blob range [" + std::to_string(off) + ", " +
                       std::to_string(off + len) + ") exceeds blob of " +
                       std::to_string(data_.size()) + " floats");
    }
    if (len != expected) {
      throw ShapeError(what + ": expected " + std::to_string(expected) + " floats, manifest says " +
                       std::to_string(len));
    }
    for (const auto& [b, e] : used_) {
      if (off < e && b < off + len) throw ParseError(what + ": blob range overlaps another tensor");
    }
    if (len > 0) used_.emplace_back(off, off + len);
    return {data_.begin() + static_cast<std::ptrdiff_t>(off),
            data_.begin() + static_cast<std::ptrdiff_t>(off + len)};
  }

 private:
  std::vector<float> data_;
  std::vector<std::pair<std::size_t, std::size_t>> used_;
};

std::size_t get_size(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = j.at(key).get<std::int64_t>();
  if (v < 0) throw ParseError(std::string("field '") + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

std::pair<std::size_t, std::size_t> get_pair(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return {fallback, fallback};
  const json& v = j.at(key);
  if (v.is_array()) {
    if (v.size() != 2) throw ParseError(std::string("field '") + key + "' must have two entries");
    return {v[0].get<std::size_t>(), v[1].get<std::size_t>()};
  }
  const std::size_t s = v.get<std::size_t>();
  return {s, s};
}

float get_epsilon(const json& j) {
  const float eps = j.value("epsilon", 0.0f);
  if (!std::isfinite(eps)) throw ParseError("epsilon must be finite");
  return eps;
}

Shape get_shape(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("shape must be [batch, height, width, channels]");
  return Shape{j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>(),
               j[3].get<std::size_t>()};
}

struct Entry {
  const json* spec;
  std::string name;
  std::string type;
  std::vector<std::string> inputs;
};

std::vector<Entry> collect_entries(const json& layers, const std::string& input_name) {
  std::vector<Entry> entries;
  std::string previous = input_name;
  std::size_t index = 0;
  for (const json& l : layers) {
    Entry e;
    e.spec = &l;
    e.type = l.at("type").get<std::string>();
    e.name = l.value("name", e.type + std::to_string(index));
    if (l.contains("inputs")) {
      e.inputs = l.at("inputs").get<std::vector<std::string>>();
    } else {
      e.inputs = {previous};
    }
    previous = e.name;
    entries.push_back(std::move(e));
    ++index;
  }
  return entries;
}

BatchNormParams read_bn(const json& l, std::size_t channels, Blob& blob, const std::string& name) {
  BatchNormParams bn;
  bn.gamma = blob.take(l.at("gamma"), channels, name + ".gamma");
  bn.beta = blob.take(l.at("beta"), channels, name + ".beta");
  bn.mean = blob.take(l.at("mean"), channels, name + ".mean");
  bn.var = blob.take(l.at("var"), channels, name + ".var");
  bn.eps = l.value("eps", 1e-5f);
  return bn;
}

}  // namespace

ModelGraph load_model(const fs::path& manifest_path, const LoadOptions& options) {
  const json doc = read_json(manifest_path);
  try {
    const json& in = doc.at("input");
    const Shape input_shape = get_shape(in.at("shape"));
    const std::string input_name = in.value("name", std::string("input"));
    GraphBuilder builder(doc.value("name", std::string("model")), input_shape, get_epsilon(in),
                         get_size(in, "dilation", 0));

    Blob blob(read_blob(manifest_path.parent_path() / doc.at("weights").get<std::string>()));
    const std::vector<Entry> entries = collect_entries(doc.at("layers"), input_name);

    std::map<std::string, std::size_t> consumers;
    std::map<std::string, std::string> type_of{{input_name, "input"}};
    for (const Entry& e : entries) {
      if (type_of.count(e.name)) throw ParseError("duplicate layer name '" + e.name + "'");
      type_of[e.name] = e.type;
      for (const auto& i : e.inputs) ++consumers[i];
    }
    // conv name -> batch-norm entry folded into it
    std::map<std::string, const Entry*> fold;
    if (options.fold_batchnorm) {
      for (const Entry& e : entries) {
        if (e.type != "batchnorm" || e.inputs.size() != 1) continue;
        auto t = type_of.find(e.inputs[0]);
        if (t != type_of.end() && t->second == "conv" && consumers[e.inputs[0]] == 1) {
          fold[e.inputs[0]] = &e;
        }
      }
    }

    std::map<std::string, std::size_t> index{{input_name, 0}};
    auto lookup = [&](const std::string& name, const std::string& user) {
      auto it = index.find(name);
      if (it == index.end()) {
        throw ParseError("layer '" + user + "' references unknown or later layer '" + name + "'");
      }
      return it->second;
    };
    auto single = [&](const Entry& e) {
      if (e.inputs.size() != 1) throw ParseError("layer '" + e.name + "' takes exactly one input");
      return lookup(e.inputs[0], e.name);
    };

    bool has_output = false;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const Entry& e = entries[k];
      const json& l = *e.spec;
      if (has_output) throw ParseError("output layer must be the last layer");
      std::size_t id = 0;
      if (e.type == "conv") {
        const std::size_t src = single(e);
        const Shape& s = builder.shape(src);
        ConvParams p;
        const auto [kh, kw] = get_pair(l, "kernel", 1);
        p.geometry = ConvGeometry{kh, kw, get_size(l, "stride", 1), get_size(l, "dilation", 1),
                                  get_size(l, "padding", 0)};
        p.groups = get_size(l, "groups", 1);
        p.in_channels = s.channels;
        p.out_channels = l.at("out_channels").get<std::size_t>();
        if (p.groups == 0 || p.in_channels % p.groups || p.out_channels % p.groups) {
          throw ParseError("conv '" + e.name + "': channels not divisible by groups");
        }
        p.weights = blob.take(l.at("weight"), p.out_channels * kh * kw * p.in_per_group(),
                              e.name + ".weight");
        if (l.contains("bias")) p.bias = blob.take(l.at("bias"), p.out_channels, e.name + ".bias");
        std::optional<TileSpec> tile;
        if (l.contains("tile")) {
          const auto [th, tw] = get_pair(l, "tile", 0);
          tile = TileSpec{th, tw};
        }
        auto f = fold.find(e.name);
        if (f != fold.end()) {
          fold_batchnorm(p, read_bn(*f->second->spec, p.out_channels, blob, f->second->name));
        }
        id = builder.conv(e.name, std::move(p), tile, src);
        if (f != fold.end()) index[f->second->name] = id;
      } else if (e.type == "batchnorm") {
        if (index.count(e.name)) continue;  // folded
        const std::size_t src = single(e);
        const AffineLayer a = batchnorm_as_affine(read_bn(l, builder.shape(src).channels, blob, e.name));
        id = builder.affine(e.name, a.scale, a.shift, src);
      } else if (e.type == "activation") {
        id = builder.activation(e.name, parse_activation(l.value("fn", std::string("relu"))),
                                get_epsilon(l), l.value("alpha", 0.01f), single(e));
      } else if (e.type == "maxpool" || e.type == "avgpool" || e.type == "global_avgpool") {
        PoolParams p;
        p.kind = e.type == "maxpool" ? PoolKind::kMax
                 : e.type == "avgpool" ? PoolKind::kAvg
                                       : PoolKind::kGlobalAvg;
        p.kernel = get_size(l, "kernel", 2);
        p.stride = get_size(l, "stride", p.kernel);
        p.padding = get_size(l, "padding", 0);
        id = builder.pool(e.name, p, single(e));
      } else if (e.type == "upsample") {
        const std::string mode = l.value("mode", std::string("nearest"));
        if (mode != "nearest" && mode != "bilinear") throw ParseError("unknown upsample mode '" + mode + "'");
        id = builder.upsample(e.name, get_size(l, "factor", 2),
                              mode == "nearest" ? UpsampleMode::kNearest : UpsampleMode::kBilinear,
                              single(e));
      } else if (e.type == "affine") {
        const std::size_t src = single(e);
        const std::size_t c = builder.shape(src).channels;
        auto scale = blob.take(l.at("scale"), c, e.name + ".scale");
        auto shift = blob.take(l.at("shift"), c, e.name + ".shift");
        id = builder.affine(e.name, std::move(scale), std::move(shift), src);
      } else if (e.type == "add") {
        if (e.inputs.size() != 2) throw ParseError("add '" + e.name + "' takes exactly two inputs");
        id = builder.add(e.name, lookup(e.inputs[0], e.name), lookup(e.inputs[1], e.name));
      } else if (e.type == "concat") {
        std::vector<std::size_t> ins;
        for (const auto& i : e.inputs) ins.push_back(lookup(i, e.name));
        id = builder.concat(e.name, std::move(ins));
      } else if (e.type == "output") {
        has_output = true;
        const std::size_t src = single(e);
        ModelGraph g = builder.finish(src, e.name);
        if (l.contains("shape") && get_shape(l.at("shape")) != g.output_shape()) {
          throw ShapeError("layer '" + e.name + "': declared shape " + to_string(get_shape(l.at("shape"))) +
                           " but inferred " + to_string(g.output_shape()));
        }
        return g;
      } else {
        throw ParseError("layer '" + e.name + "': unknown type '" + e.type + "'");
      }
      index[e.name] = id;
      if (l.contains("shape") && get_shape(l.at("shape")) != builder.shape(id)) {
        throw ShapeError("layer '" + e.name + "': declared shape " + to_string(get_shape(l.at("shape"))) +
                         " but inferred " + to_string(builder.shape(id)));
      }
    }
    return builder.finish();
  } catch (const json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
}

void save_model(const ModelGraph& graph, const fs::path& manifest_path, const fs::path& blob_path) {
  std::vector<float> blob;
  auto put = [&](const std::vector<float>& v) {
    json ref{{"offset", blob.size()}, {"length", v.size()}};
    blob.insert(blob.end(), v.begin(), v.end());
    return ref;
  };
  const auto& layers = graph.layers();
  const auto& input = std::get<InputLayer>(layers.front().params);
  const Shape& is = graph.input_shape();
  json doc;
  doc["name"] = graph.name();
  doc["input"] = {{"name", layers.front().name},
                  {"shape", {is.batch, is.height, is.width, is.channels}},
                  {"epsilon", input.epsilon},
                  {"dilation", input.dilation_radius}};
  json out = json::array();
  for (std::size_t i = 1; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    json j{{"name", l.name}};
    json ins = json::array();
    for (std::size_t k : l.inputs) ins.push_back(layers[k].name);
    j["inputs"] = ins;
    switch (l.kind) {
      case LayerKind::kConv: {
        const ConvPlan& plan = *std::get<ConvLayer>(l.params).plan;
        const ConvParams& p = plan.params();
        j["type"] = "conv";
        j["out_channels"] = p.out_channels;
        j["kernel"] = {p.geometry.kernel_h, p.geometry.kernel_w};
        j["stride"] = p.geometry.stride;
        j["dilation"] = p.geometry.dilation;
        j["padding"] = p.geometry.padding;
        j["groups"] = p.groups;
        j["tile"] = {plan.tile().tile_height, plan.tile().tile_width};
        j["weight"] = put(p.weights);
        if (!p.bias.empty()) j["bias"] = put(p.bias);
        break;
      }
      case LayerKind::kActivation: {
        const auto& a = std::get<ActivationLayer>(l.params);
        j["type"] = "activation";
        j["fn"] = activation_name(a.fn);
        j["alpha"] = a.alpha;
        j["epsilon"] = a.epsilon;
        break;
      }
      case LayerKind::kPool: {
        const auto& p = std::get<PoolLayer>(l.params).params;
        j["type"] = p.kind == PoolKind::kMax ? "maxpool" : p.kind == PoolKind::kAvg ? "avgpool" : "global_avgpool";
        if (p.kind != PoolKind::kGlobalAvg) {
          j["kernel"] = p.kernel;
          j["stride"] = p.stride;
          j["padding"] = p.padding;
        }
        break;
      }
      case LayerKind::kUpsample: {
        const auto& u = std::get<UpsampleLayer>(l.params);
        j["type"] = "upsample";
        j["factor"] = u.factor;
        j["mode"] = u.mode == UpsampleMode::kNearest ? "nearest" : "bilinear";
        break;
      }
      case LayerKind::kAffine: {
        const auto& a = std::get<AffineLayer>(l.params);
        j["type"] = "affine";
        j["scale"] = put(a.scale);
        j["shift"] = put(a.shift);
        break;
      }
      case LayerKind::kAdd:
        j["type"] = "add";
        break;
      case LayerKind::kConcat:
        j["type"] = "concat";
        break;
      case LayerKind::kOutput:
        j["type"] = "output";
        break;
      case LayerKind::kInput:
        throw ParamError("input layer must come first");
    }
    const Shape& s = l.out_shape;
    j["shape"] = {s.batch, s.height, s.width, s.channels};
    out.push_back(std::move(j));
  }
  doc["layers"] = std::move(out);
  doc["weights"] = fs::relative(fs::absolute(blob_path), fs::absolute(manifest_path).parent_path()).generic_string();

  std::ofstream bs(blob_path, std::ios::binary);
  if (!bs) throw IoError("cannot write weight blob: " + blob_path.string());
  bs.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size() * 4));
  std::ofstream ms(manifest_path);
  if (!ms) throw IoError("cannot write manifest: " + manifest_path.string());
  ms << doc.dump(2) << '\n';
  if (!bs || !ms) throw IoError("failed writing model files");
}

void write_tuned_manifest(const fs::path& source_manifest, const fs::path& out_manifest,
                          const ModelGraph& graph) {
  json doc = read_json(source_manifest);
  std::set<std::string> seen;
  for (json& l : doc.at("layers")) {
    if (l.value("type", std::string()) != "activation" || !l.contains("name")) continue;
    const std::string name = l.at("name").get<std::string>();
    auto id = graph.find(name);
    if (!id) throw ParamError("tuned graph has no layer '" + name + "'");
    l["epsilon"] = graph.epsilon(*id);
    seen.insert(name);
  }
  for (std::size_t i : graph.truncation_layers()) {
    if (!seen.count(graph.layer(i).name)) {
      throw ParamError("manifest has no named activation '" + graph.layer(i).name + "'");
    }
  }
  const fs::path blob = fs::absolute(source_manifest).parent_path() / doc.at("weights").get<std::string>();
  doc["weights"] = fs::relative(blob, fs::absolute(out_manifest).parent_path()).generic_string();
  std::ofstream os(out_manifest);
  if (!os) throw IoError("cannot write manifest: " + out_manifest.string());
  os << doc.dump(2) << '\n';
  if (!os) throw IoError("failed writing " + out_manifest.string());
}

}  // namespace deltainfer
