#include "fldplus/features/backbone.hpp"

#include <json.hpp>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "fldplus/binary_io.hpp"
#include "fldplus/error.hpp"
#include "fldplus/features/feature_map.hpp"
#include "fldplus/hash.hpp"

namespace fldplus::features {

using nlohmann::json;

// ---- toy ------------------------------------------------------------------

ToyBackbone::ToyBackbone(ToyBackboneConfig config) : config_(std::move(config)) {
  if (config_.channels.empty()) fail(ErrorCode::kInvalidArgument, "toy backbone needs layers");
  const std::size_t stride_total = std::size_t{1} << config_.channels.size();
  if (config_.input_size % stride_total != 0 || config_.input_size < stride_total) {
    fail(ErrorCode::kInvalidArgument,
         "toy backbone input size must be a multiple of 2^layers = " + std::to_string(stride_total));
  }
  std::mt19937_64 rng(derive_seed(config_.seed, "toy-backbone"));
  std::size_t in = 3;
  for (std::size_t i = 0; i < config_.channels.size(); ++i) {
    const std::size_t out = config_.channels[i];
    if (out == 0) fail(ErrorCode::kInvalidArgument, "toy backbone channel count must be positive");
    const bool last = i + 1 == config_.channels.size();
    const double fan_in = static_cast<double>(in * 9);
    std::normal_distribution<double> weight(0.0, std::sqrt((last ? 1.0 : 2.0) / fan_in));
    std::normal_distribution<double> bias(0.0, 0.05);
    ops::Conv2d conv;
    conv.weight = nn::Tensor<float>({out, in, 3, 3});
    for (auto& v : conv.weight.storage()) v = static_cast<float>(weight(rng));
    conv.bias.resize(out);
    for (auto& v : conv.bias) v = static_cast<float>(bias(rng));
    conv.stride = {2, 2};
    conv.padding = {1, 1};
    convs_.push_back(std::move(conv));
    in = out;
  }
}

std::string ToyBackbone::id() const {
  std::string ch;
  for (std::size_t i = 0; i < config_.channels.size(); ++i) {
    if (i) ch += "-";
    ch += std::to_string(config_.channels[i]);
  }
  return "toy(size=" + std::to_string(config_.input_size) + ",channels=" + ch +
         ",seed=" + std::to_string(config_.seed) + ")";
}

MapShape ToyBackbone::output_shape() const {
  const std::size_t s = config_.input_size >> config_.channels.size();
  return {s, s, config_.channels.back()};
}

nn::Tensor<float> ToyBackbone::forward(const nn::Tensor<float>& chw) const {
  if (chw.rank() != 3 || chw.dim(0) != 3 || chw.dim(1) != config_.input_size ||
      chw.dim(2) != config_.input_size) {
    fail(ErrorCode::kDimensionMismatch, "toy backbone expects 3 x " +
                                            std::to_string(config_.input_size) + " x " +
                                            std::to_string(config_.input_size) + ", got " +
                                            nn::shape_string(chw));
  }
  nn::Tensor<float> x = chw;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    x = ops::conv2d(x, convs_[i]);
    if (i + 1 < convs_.size()) ops::relu(x);
  }
  return chw_to_hwc(x);
}

// ---- portable graph -------------------------------------------------------

namespace {

constexpr std::string_view kGraphMagic = "FLGR";
constexpr std::uint16_t kGraphVersion = 1;

enum class OpKind {
  kConv2d, kBatchNorm, kRelu, kRelu6, kHardswish, kHardsigmoid, kSigmoid,
  kAdd, kMul, kMaxPool, kAvgPool, kGlobalAvgPool, kIdentity
};

OpKind parse_op(const std::string& op) {
  static const std::map<std::string, OpKind> table{
      {"conv2d", OpKind::kConv2d},       {"batch_norm", OpKind::kBatchNorm},
      {"relu", OpKind::kRelu},           {"relu6", OpKind::kRelu6},
      {"hardswish", OpKind::kHardswish}, {"hardsigmoid", OpKind::kHardsigmoid},
      {"sigmoid", OpKind::kSigmoid},     {"add", OpKind::kAdd},
      {"mul", OpKind::kMul},             {"max_pool2d", OpKind::kMaxPool},
      {"avg_pool2d", OpKind::kAvgPool},  {"global_avg_pool", OpKind::kGlobalAvgPool},
      {"identity", OpKind::kIdentity}};
  const auto it = table.find(op);
  if (it == table.end()) fail(ErrorCode::kFormat, "graph uses unsupported op '" + op + "'");
  return it->second;
}

std::array<std::size_t, 2> pair_attr(const json& attrs, const char* key,
                                     std::array<std::size_t, 2> fallback) {
  if (!attrs.contains(key)) return fallback;
  const auto& v = attrs.at(key);
  if (v.is_number()) return {v.get<std::size_t>(), v.get<std::size_t>()};
  return {v.at(0).get<std::size_t>(), v.at(1).get<std::size_t>()};
}

struct Node {
  OpKind kind;
  std::string name;
  std::vector<std::size_t> inputs;
  std::size_t output = 0;
  ops::Conv2d conv;
  std::vector<float> scale;
  std::vector<float> shift;
  std::array<std::size_t, 2> kernel{1, 1};
  std::array<std::size_t, 2> stride{1, 1};
  std::array<std::size_t, 2> padding{0, 0};
};

}  // namespace

struct GraphBackbone::Impl {
  std::string id;
  std::vector<Node> nodes;
  std::size_t input_value = 0;
  std::size_t output_value = 0;
  std::size_t value_count = 0;
  std::vector<std::size_t> last_use;  // per value: index of the last node reading it
  std::size_t input_h = 0;
  std::size_t input_w = 0;
  MapShape out_shape;
  ChannelNormalization norm;
};

GraphBackbone::GraphBackbone(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
GraphBackbone::~GraphBackbone() = default;

std::unique_ptr<GraphBackbone> GraphBackbone::load(const std::filesystem::path& graph_path) {
  auto impl = std::make_unique<Impl>();
  const std::filesystem::path sidecar_path = graph_path.string() + ".json";
  json sidecar;
  json graph;
  std::map<std::string, io::NamedTensor> tensors;
  try {
    sidecar = json::parse(io::read_file(sidecar_path));
    io::ByteReader in = io::ByteReader::from_file(graph_path);
    in.require(kGraphMagic.size(), "graph magic");
    if (in.bytes(kGraphMagic.size()) != kGraphMagic) {
      fail(ErrorCode::kFormat, graph_path.string() + ": not a graph file (bad magic)");
    }
    const auto version = in.u16();
    if (version != kGraphVersion) {
      fail(ErrorCode::kVersion, "unsupported graph version " + std::to_string(version));
    }
    const auto len = in.u32();
    in.require(len, "graph description");
    graph = json::parse(in.bytes(len));
    const auto count = graph.at("tensor_count").get<std::size_t>();
    for (std::size_t i = 0; i < count; ++i) {
      auto t = io::read_named_tensor(in, io::Precision::kFloat32);
      auto name = t.name;
      tensors.emplace(std::move(name), std::move(t));
    }
    if (!in.at_end()) fail(ErrorCode::kFormat, "trailing bytes in graph file");

    impl->id = sidecar.value("id", graph_path.filename().string());
    const auto& size = sidecar.at("input_size");
    impl->input_h = size.at(0).get<std::size_t>();
    impl->input_w = size.at(1).get<std::size_t>();
    const auto& os = sidecar.at("output_shape");
    impl->out_shape = {os.at(0).get<std::size_t>(), os.at(1).get<std::size_t>(),
                       os.at(2).get<std::size_t>()};
    if (sidecar.contains("normalization")) {
      const auto& n = sidecar.at("normalization");
      for (std::size_t c = 0; c < 3; ++c) {
        impl->norm.mean[c] = n.at("mean").at(c).get<float>();
        impl->norm.stddev[c] = n.at("std").at(c).get<float>();
      }
    }

    std::map<std::string, std::size_t> values;
    auto value_id = [&](const std::string& name, bool create) -> std::size_t {
      auto it = values.find(name);
      if (it != values.end()) return it->second;
      if (!create) fail(ErrorCode::kFormat, "graph reads undefined value '" + name + "'");
      const std::size_t id = values.size();
      values.emplace(name, id);
      return id;
    };
    impl->input_value = value_id(sidecar.at("input").get<std::string>(), true);

    auto param = [&](const json& node, const char* key) -> const io::NamedTensor* {
      if (!node.contains("params") || !node.at("params").contains(key)) return nullptr;
      const auto name = node.at("params").at(key).get<std::string>();
      const auto it = tensors.find(name);
      if (it == tensors.end()) fail(ErrorCode::kFormat, "graph is missing tensor '" + name + "'");
      return &it->second;
    };
    auto floats = [](const io::NamedTensor* t) {
      return std::vector<float>(t->values.begin(), t->values.end());
    };

    for (const auto& nj : graph.at("nodes")) {
      Node n;
      n.kind = parse_op(nj.at("op").get<std::string>());
      n.name = nj.value("name", "");
      for (const auto& in_name : nj.at("inputs")) {
        n.inputs.push_back(value_id(in_name.get<std::string>(), false));
      }
      const json attrs = nj.value("attrs", json::object());
      switch (n.kind) {
        case OpKind::kConv2d: {
          const auto* w = param(nj, "weight");
          if (!w || w->dims.size() != 4) fail(ErrorCode::kFormat, "conv2d needs a rank-4 weight");
          n.conv.weight = nn::Tensor<float>(std::vector<std::size_t>(w->dims.begin(), w->dims.end()),
                                            floats(w));
          if (const auto* b = param(nj, "bias")) n.conv.bias = floats(b);
          n.conv.stride = pair_attr(attrs, "stride", {1, 1});
          n.conv.padding = pair_attr(attrs, "padding", {0, 0});
          n.conv.dilation = pair_attr(attrs, "dilation", {1, 1});
          n.conv.groups = attrs.value("groups", std::size_t{1});
          break;
        }
        case OpKind::kBatchNorm: {
          const auto* s = param(nj, "scale");
          const auto* b = param(nj, "shift");
          if (!s || !b) fail(ErrorCode::kFormat, "batch_norm needs scale and shift");
          n.scale = floats(s);
          n.shift = floats(b);
          break;
        }
        case OpKind::kMaxPool:
        case OpKind::kAvgPool:
          n.kernel = pair_attr(attrs, "kernel", {2, 2});
          n.stride = pair_attr(attrs, "stride", n.kernel);
          n.padding = pair_attr(attrs, "padding", {0, 0});
          break;
        default:
          break;
      }
      const std::size_t arity =
          (n.kind == OpKind::kAdd || n.kind == OpKind::kMul) ? 2 : 1;
      if (n.inputs.size() != arity) {
        fail(ErrorCode::kFormat, "node '" + n.name + "' has the wrong number of inputs");
      }
      n.output = value_id(nj.at("output").get<std::string>(), true);
      impl->nodes.push_back(std::move(n));
    }
    impl->output_value = value_id(sidecar.at("output").get<std::string>(), false);
    impl->value_count = values.size();
    impl->last_use.assign(values.size(), 0);
    for (std::size_t i = 0; i < impl->nodes.size(); ++i) {
      for (auto v : impl->nodes[i].inputs) impl->last_use[v] = i;
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, "malformed graph description: " + std::string(e.what()));
  }
  return std::unique_ptr<GraphBackbone>(new GraphBackbone(std::move(impl)));
}

std::string GraphBackbone::id() const { return "graph(" + impl_->id + ")"; }
std::size_t GraphBackbone::input_height() const { return impl_->input_h; }
std::size_t GraphBackbone::input_width() const { return impl_->input_w; }
ChannelNormalization GraphBackbone::normalization() const { return impl_->norm; }
MapShape GraphBackbone::output_shape() const { return impl_->out_shape; }

nn::Tensor<float> GraphBackbone::run(const nn::Tensor<float>& chw) const {
  std::vector<nn::Tensor<float>> values(impl_->value_count);
  values[impl_->input_value] = chw;
  for (std::size_t i = 0; i < impl_->nodes.size(); ++i) {
    const Node& n = impl_->nodes[i];
    const auto& a = values[n.inputs[0]];
    if (a.empty()) fail(ErrorCode::kFormat, "node '" + n.name + "' reads an unset value");
    nn::Tensor<float> y;
    switch (n.kind) {
      case OpKind::kConv2d: y = ops::conv2d(a, n.conv); break;
      case OpKind::kBatchNorm: y = ops::channel_affine(a, n.scale, n.shift); break;
      case OpKind::kRelu: y = a; ops::relu(y); break;
      case OpKind::kRelu6: y = a; ops::relu6(y); break;
      case OpKind::kHardswish: y = a; ops::hardswish(y); break;
      case OpKind::kHardsigmoid: y = a; ops::hardsigmoid(y); break;
      case OpKind::kSigmoid: y = a; ops::sigmoid(y); break;
      case OpKind::kAdd: y = ops::add(a, values[n.inputs[1]]); break;
      case OpKind::kMul: y = ops::mul(a, values[n.inputs[1]]); break;
      case OpKind::kMaxPool: y = ops::max_pool2d(a, n.kernel, n.stride, n.padding); break;
      case OpKind::kAvgPool: y = ops::avg_pool2d(a, n.kernel, n.stride, n.padding); break;
      case OpKind::kGlobalAvgPool: y = ops::global_avg_pool(a); break;
      case OpKind::kIdentity: y = a; break;
    }
    values[n.output] = std::move(y);
    for (auto v : n.inputs) {
      if (impl_->last_use[v] == i && v != impl_->output_value) values[v] = {};
    }
  }
  return std::move(values[impl_->output_value]);
}

nn::Tensor<float> GraphBackbone::forward(const nn::Tensor<float>& chw) const {
  if (chw.rank() != 3 || chw.dim(0) != 3 || chw.dim(1) != impl_->input_h ||
      chw.dim(2) != impl_->input_w) {
    fail(ErrorCode::kDimensionMismatch, "graph backbone input shape mismatch: " + nn::shape_string(chw));
  }
  const auto out = run(chw);
  const auto& s = impl_->out_shape;
  if (out.rank() != 3 || out.dim(0) != s.channels || out.dim(1) != s.height || out.dim(2) != s.width) {
    fail(ErrorCode::kDimensionMismatch, "graph output " + nn::shape_string(out) +
                                            " does not match the declared " +
                                            std::to_string(s.height) + "x" + std::to_string(s.width) +
                                            "x" + std::to_string(s.channels));
  }
  return chw_to_hwc(out);
}

// ---- factory --------------------------------------------------------------

std::unique_ptr<Backbone> make_backbone(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "toy") {
    ToyBackboneConfig cfg;
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) fail(ErrorCode::kInvalidArgument, "bad toy option '" + item + "'");
      const std::string key = item.substr(0, eq);
      const std::string value = item.substr(eq + 1);
      try {
        if (key == "size") {
          cfg.input_size = std::stoul(value);
        } else if (key == "seed") {
          cfg.seed = std::stoull(value);
        } else if (key == "channels") {
          cfg.channels.clear();
          std::stringstream cs(value);
          std::string c;
          while (std::getline(cs, c, '-')) cfg.channels.push_back(std::stoul(c));
        } else {
          fail(ErrorCode::kInvalidArgument, "unknown toy option '" + key + "'");
        }
      } catch (const std::logic_error&) {
        fail(ErrorCode::kInvalidArgument, "bad value for toy option '" + key + "'");
      }
    }
    return std::make_unique<ToyBackbone>(cfg);
  }
  if (kind == "graph") {
    if (rest.empty()) fail(ErrorCode::kInvalidArgument, "graph adapter needs a path: graph:<file>");
    return GraphBackbone::load(rest);
  }
  fail(ErrorCode::kInvalidArgument, "unknown backbone adapter '" + spec + "'");
}

}  // namespace fldplus::features
