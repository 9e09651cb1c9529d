#include "fldplus/flow/checkpoint.hpp"

#include <json.hpp>

#include <string_view>

namespace fldplus::flow {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "FLPC";

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<std::uint32_t> dims32(const std::vector<std::size_t>& dims) {
  return {dims.begin(), dims.end()};
}

json range_json(const std::vector<std::uint32_t>& idx) {
  for (std::size_t i = 1; i < idx.size(); ++i) {
    if (idx[i] != idx[i - 1] + 1) fail(ErrorCode::kFormat, "coupling mask is not contiguous");
  }
  return json::array({idx.front(), idx.back() + 1});
}

std::vector<std::uint32_t> range_from_json(const json& j) {
  const auto begin = j.at(0).get<std::uint32_t>();
  const auto end = j.at(1).get<std::uint32_t>();
  if (end <= begin) fail(ErrorCode::kFormat, "empty coupling mask range");
  std::vector<std::uint32_t> out(end - begin);
  for (std::uint32_t i = begin; i < end; ++i) out[i - begin] = i;
  return out;
}

template <Real T>
std::vector<T> take_vector(io::NamedTensor t, const std::string& expected_name, std::size_t size) {
  if (t.name != expected_name) {
    fail(ErrorCode::kFormat, "expected tensor '" + expected_name + "', found '" + t.name + "'");
  }
  if (t.values.size() != size) {
    fail(ErrorCode::kDimensionMismatch, "tensor '" + t.name + "' has the wrong size");
  }
  return {t.values.begin(), t.values.end()};
}

}  // namespace

template <Real T>
std::string serialize_flow(const FlowModel<T>& model, const std::string& metadata_json) {
  const auto& cfg = model.config();
  json layers = json::array();
  std::size_t tensor_count = 0;
  for (const auto& l : model.layers()) {
    std::visit(Overloaded{[&](const ActNormLayer<T>&) {
                            layers.push_back({{"type", "actnorm"}});
                            tensor_count += 2;
                          },
                          [&](const PermutationLayer&) {
                            layers.push_back({{"type", "permutation"}});
                            tensor_count += 1;
                          },
                          [&](const CouplingLayer<T>& c) {
                            layers.push_back({{"type", "coupling"},
                                              {"identity", range_json(c.identity)},
                                              {"transform", range_json(c.transform)},
                                              {"depth", c.conditioner.depth()}});
                            tensor_count += 2 * c.conditioner.depth();
                          }},
               l);
  }
  json header = {
      {"input_dim", cfg.input_dim},
      {"coupling_layers", cfg.coupling_layers},
      {"bins", cfg.bins},
      {"tail_bound", cfg.tail_bound},
      {"hidden_features", cfg.hidden_features},
      {"hidden_layers", cfg.hidden_layers},
      {"activation", std::string(nn::to_string(cfg.activation))},
      {"seed", cfg.seed},
      {"floors",
       {{"min_bin_width", cfg.floors.min_bin_width},
        {"min_bin_height", cfg.floors.min_bin_height},
        {"min_derivative", cfg.floors.min_derivative}}},
      {"actnorm_initialized", model.actnorm_initialized()},
      {"layers", layers},
      {"tensor_count", tensor_count},
      {"metadata", metadata_json.empty() ? json::object() : json::parse(metadata_json)},
  };
  const std::string blob = header.dump();
  const auto precision = io::precision_of<T>();

  io::ByteWriter out;
  out.bytes(kMagic);
  out.u16(kCheckpointVersion);
  out.u8(static_cast<std::uint8_t>(precision));
  out.u32(static_cast<std::uint32_t>(blob.size()));
  out.bytes(blob);

  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const std::string prefix = "layers." + std::to_string(i) + ".";
    std::visit(
        Overloaded{
            [&](const ActNormLayer<T>& a) {
              const std::uint32_t d[] = {static_cast<std::uint32_t>(a.shift.size())};
              io::write_named_tensor(out, prefix + "shift", d, std::span<const T>(a.shift),
                                     precision);
              io::write_named_tensor(out, prefix + "log_scale", d,
                                     std::span<const T>(a.log_scale), precision);
            },
            [&](const PermutationLayer& p) {
              std::vector<T> v(p.forward.begin(), p.forward.end());
              const std::uint32_t d[] = {static_cast<std::uint32_t>(v.size())};
              io::write_named_tensor(out, prefix + "perm", d, std::span<const T>(v), precision);
            },
            [&](const CouplingLayer<T>& c) {
              const auto& dense = c.conditioner.layers();
              for (std::size_t li = 0; li < dense.size(); ++li) {
                const std::string base = prefix + "net." + std::to_string(li) + ".";
                io::write_named_tensor(out, base + "weight", dims32(dense[li].weight.dims()),
                                       dense[li].weight.values(), precision);
                io::write_named_tensor(out, base + "bias", dims32(dense[li].bias.dims()),
                                       dense[li].bias.values(), precision);
              }
            }},
        model.layers()[i]);
  }
  return out.buffer();
}

template <Real T>
void save_flow(const std::filesystem::path& path, const FlowModel<T>& model,
               const std::string& metadata_json) {
  io::write_file(path, serialize_flow(model, metadata_json));
}

namespace {

struct Header {
  io::Precision precision;
  json config;
};

Header read_header(io::ByteReader& in) {
  in.require(kMagic.size(), "checkpoint magic");
  if (in.bytes(kMagic.size()) != kMagic) {
    fail(ErrorCode::kFormat, "not a flow checkpoint (bad magic)");
  }
  const auto version = in.u16();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kVersion, "unsupported checkpoint version " + std::to_string(version));
  }
  Header h{io::precision_from_code(in.u8()), {}};
  const auto len = in.u32();
  in.require(len, "checkpoint config");
  try {
    h.config = json::parse(in.bytes(len));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  return h;
}

}  // namespace

template <Real T>
LoadedFlow<T> deserialize_flow(std::string bytes) {
  io::ByteReader in(std::move(bytes));
  const Header h = read_header(in);
  if (h.precision != io::precision_of<T>()) {
    fail(ErrorCode::kPrecisionMismatch,
         "checkpoint stores " + std::string(io::to_string(h.precision)) +
             " parameters but was loaded as " +
             std::string(io::to_string(io::precision_of<T>())));
  }
  const json& j = h.config;
  FlowConfig cfg;
  std::vector<FlowLayer<T>> layers;
  bool initialized = false;
  try {
    cfg.input_dim = j.at("input_dim").get<std::size_t>();
    cfg.coupling_layers = j.at("coupling_layers").get<std::size_t>();
    cfg.bins = j.at("bins").get<std::size_t>();
    cfg.tail_bound = j.at("tail_bound").get<double>();
    cfg.hidden_features = j.at("hidden_features").get<std::size_t>();
    cfg.hidden_layers = j.at("hidden_layers").get<std::size_t>();
    cfg.activation = nn::parse_activation(j.at("activation").get<std::string>());
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.floors.min_bin_width = j.at("floors").at("min_bin_width").get<double>();
    cfg.floors.min_bin_height = j.at("floors").at("min_bin_height").get<double>();
    cfg.floors.min_derivative = j.at("floors").at("min_derivative").get<double>();
    initialized = j.at("actnorm_initialized").get<bool>();
    const std::size_t d = cfg.input_dim;

    for (std::size_t i = 0; i < j.at("layers").size(); ++i) {
      const auto& lj = j.at("layers").at(i);
      const std::string prefix = "layers." + std::to_string(i) + ".";
      const auto type = lj.at("type").get<std::string>();
      if (type == "actnorm") {
        ActNormLayer<T> a;
        a.shift = take_vector<T>(io::read_named_tensor(in, h.precision), prefix + "shift", d);
        a.log_scale =
            take_vector<T>(io::read_named_tensor(in, h.precision), prefix + "log_scale", d);
        layers.emplace_back(std::move(a));
      } else if (type == "permutation") {
        const auto v = take_vector<double>(io::read_named_tensor(in, h.precision),
                                           prefix + "perm", d);
        std::vector<std::uint32_t> fwd;
        for (double x : v) {
          if (x < 0 || x != std::floor(x)) fail(ErrorCode::kFormat, "bad permutation index");
          fwd.push_back(static_cast<std::uint32_t>(x));
        }
        layers.emplace_back(PermutationLayer::from_forward(std::move(fwd)));
      } else if (type == "coupling") {
        CouplingLayer<T> c;
        c.identity = range_from_json(lj.at("identity"));
        c.transform = range_from_json(lj.at("transform"));
        const auto depth = lj.at("depth").get<std::size_t>();
        std::vector<nn::Dense<T>> dense;
        for (std::size_t li = 0; li < depth; ++li) {
          const std::string base = prefix + "net." + std::to_string(li) + ".";
          auto read = [&](const std::string& name) {
            auto t = io::read_named_tensor(in, h.precision);
            if (t.name != name) {
              fail(ErrorCode::kFormat, "expected tensor '" + name + "', found '" + t.name + "'");
            }
            std::vector<std::size_t> dims(t.dims.begin(), t.dims.end());
            return nn::Tensor<T>(std::move(dims), std::vector<T>(t.values.begin(), t.values.end()));
          };
          auto w = read(base + "weight");
          auto b = read(base + "bias");
          dense.push_back({std::move(w), std::move(b)});
        }
        c.conditioner = nn::Mlp<T>(std::move(dense), cfg.activation);
        layers.emplace_back(std::move(c));
      } else {
        fail(ErrorCode::kFormat, "unknown layer type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed checkpoint config: ") + e.what());
  }
  if (!in.at_end()) fail(ErrorCode::kFormat, "trailing bytes after checkpoint tensors");

  LoadedFlow<T> out{FlowModel<T>(cfg, std::move(layers), initialized), "{}"};
  if (j.contains("metadata")) out.metadata_json = j.at("metadata").dump();
  return out;
}

template <Real T>
LoadedFlow<T> load_flow(const std::filesystem::path& path) {
  return deserialize_flow<T>(io::read_file(path));
}

io::Precision checkpoint_precision(const std::filesystem::path& path) {
  io::ByteReader in = io::ByteReader::from_file(path);
  return read_header(in).precision;
}

template std::string serialize_flow(const FlowModel<float>&, const std::string&);
template std::string serialize_flow(const FlowModel<double>&, const std::string&);
template void save_flow(const std::filesystem::path&, const FlowModel<float>&, const std::string&);
template void save_flow(const std::filesystem::path&, const FlowModel<double>&,
                        const std::string&);
template LoadedFlow<float> deserialize_flow(std::string);
template LoadedFlow<double> deserialize_flow(std::string);
template LoadedFlow<float> load_flow(const std::filesystem::path&);
template LoadedFlow<double> load_flow(const std::filesystem::path&);

}  // namespace fldplus::flow
