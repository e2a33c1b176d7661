#include "whatif/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "whatif/codec.hpp"
#include "whatif/error.hpp"
#include "whatif/ops.hpp"

namespace whatif {

using nlohmann::json;

std::string_view to_string(OpKind op) {
    switch (op) {
    case OpKind::conv2d: return "conv2d";
    case OpKind::relu: return "relu";
    case OpKind::maxpool2d: return "maxpool2d";
    case OpKind::global_avg_pool: return "global_avg_pool";
    case OpKind::concat_channels: return "concat_channels";
    case OpKind::softmax: return "softmax";
    }
    return "unknown";
}

namespace {

std::optional<OpKind> parse_op(const std::string& s) {
    static const std::map<std::string, OpKind> kOps = {
        {"conv2d", OpKind::conv2d},
        {"relu", OpKind::relu},
        {"maxpool2d", OpKind::maxpool2d},
        {"global_avg_pool", OpKind::global_avg_pool},
        {"concat_channels", OpKind::concat_channels},
        {"softmax", OpKind::softmax},
    };
    auto it = kOps.find(s);
    if (it == kOps.end()) return std::nullopt;
    return it->second;
}

[[noreturn]] void graph_error(const std::string& layer, const std::string& what) {
    throw Error(Errc::graph, "layer '" + layer + "': " + what);
}

int int_field(const json& j, const char* key, int fallback, const std::string& layer) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) graph_error(layer, std::string("'") + key + "' must be an integer");
    return j[key].get<int>();
}

std::vector<float> floats_from_le(const std::vector<std::uint8_t>& bytes) {
    std::vector<float> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i]) |
                                   static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8 |
                                   static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16 |
                                   static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24;
        out[i] = std::bit_cast<float>(bits);
    }
    return out;
}

TensorF32 load_blob(const BlobSource& blobs, const json& ref, const Shape& shape, const std::string& layer) {
    if (!ref.is_string()) throw Error(Errc::weight, "layer '" + layer + "': weight reference must be a string");
    const std::string name = ref.get<std::string>();
    auto bytes = blobs(name);
    if (!bytes) throw Error(Errc::weight, "layer '" + layer + "': missing blob '" + name + "'");
    const std::size_t expected = element_count(shape) * 4;
    if (bytes->size() != expected) {
        throw Error(Errc::weight, "layer '" + layer + "': blob '" + name + "' has " + std::to_string(bytes->size()) +
                                      " bytes, shape " + to_string(shape) + " needs " + std::to_string(expected));
    }
    try {
        return TensorF32(shape, floats_from_le(*bytes));
    } catch (const Error& e) {
        throw Error(Errc::weight, "layer '" + layer + "': blob '" + name + "': " + e.what());
    }
}

std::vector<std::string> split_lines(const std::vector<std::uint8_t>& bytes) {
    std::vector<std::string> lines;
    std::string text(bytes.begin(), bytes.end());
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

} // namespace

class ModelBuilder {
  public:
    static ModelGraph build(std::string_view manifest, const BlobSource& blobs) {
        json doc;
        try {
            doc = json::parse(manifest);
        } catch (const json::parse_error& e) {
            throw Error(Errc::graph, std::string("manifest is not valid JSON: ") + e.what());
        }
        if (!doc.is_object()) throw Error(Errc::graph, "manifest must be a JSON object");
        if (doc.value("format", "") != "whatif-model" || doc.value("version", 0) != 1) {
            throw Error(Errc::graph, "manifest must declare format \"whatif-model\" version 1");
        }

        ModelGraph g;
        parse_input(doc, g.input_);

        std::map<std::string, int> producers{{g.input_.name, -1}};
        std::vector<Shape> shapes;
        const Shape input_shape{1, g.input_.channels, g.input_.height, g.input_.width};
        auto shape_of = [&](int id) -> const Shape& { return id < 0 ? input_shape : shapes[static_cast<std::size_t>(id)]; };

        const json& layers = doc.contains("layers") ? doc["layers"] : json::array();
        if (!layers.is_array()) throw Error(Errc::graph, "'layers' must be an array");
        for (const json& jl : layers) {
            Layer layer = parse_layer(jl, producers);
            std::vector<Shape> in_shapes;
            for (int id : layer.inputs) in_shapes.push_back(shape_of(id));
            layer.output_shape = infer(layer, in_shapes, jl, blobs);
            producers[layer.name] = static_cast<int>(g.layers_.size());
            shapes.push_back(layer.output_shape);
            g.layers_.push_back(std::move(layer));
        }

        check_cam_constraint(g);
        const int classes = g.layers_[static_cast<std::size_t>(g.output_layer_)].output_shape[1];
        parse_labels(doc, blobs, classes, g.labels_);
        return g;
    }

  private:
    static void parse_input(const json& doc, InputSpec& spec) {
        if (!doc.contains("input") || !doc["input"].is_object()) throw Error(Errc::graph, "manifest needs an 'input' object");
        const json& in = doc["input"];
        spec.name = in.value("name", std::string("data"));
        if (!in.contains("shape") || !in["shape"].is_array() || in["shape"].size() != 4) {
            throw Error(Errc::graph, "input shape must be [1, C, H, W]");
        }
        const auto shape = in["shape"].get<std::vector<int>>();
        if (shape[0] != 1) throw Error(Errc::graph, "input batch must be 1");
        if (shape[1] != 1 && shape[1] != 3) throw Error(Errc::graph, "input must have 1 or 3 channels");
        if (shape[2] < 1 || shape[3] < 1) throw Error(Errc::graph, "input height and width must be positive");
        spec.channels = shape[1];
        spec.height = shape[2];
        spec.width = shape[3];
        spec.mean = in.value("mean", std::vector<float>(static_cast<std::size_t>(spec.channels), 0.0f));
        spec.scale = in.value("scale", std::vector<float>(static_cast<std::size_t>(spec.channels), 1.0f));
        if (spec.mean.size() != static_cast<std::size_t>(spec.channels) ||
            spec.scale.size() != static_cast<std::size_t>(spec.channels)) {
            throw Error(Errc::graph, "input mean and scale need one value per channel");
        }
    }

    static Layer parse_layer(const json& jl, const std::map<std::string, int>& producers) {
        if (!jl.is_object()) throw Error(Errc::graph, "every layer must be a JSON object");
        Layer layer;
        layer.name = jl.value("name", std::string());
        if (layer.name.empty()) throw Error(Errc::graph, "layer without a name");
        if (producers.count(layer.name)) graph_error(layer.name, "duplicate name");
        const auto op = parse_op(jl.value("op", std::string()));
        if (!op) graph_error(layer.name, "unknown op '" + jl.value("op", std::string()) + "'");
        layer.op = *op;
        if (!jl.contains("inputs") || !jl["inputs"].is_array()) graph_error(layer.name, "missing 'inputs' array");
        layer.input_names = jl["inputs"].get<std::vector<std::string>>();
        for (const auto& in : layer.input_names) {
            auto it = producers.find(in);
            if (it == producers.end()) graph_error(layer.name, "input '" + in + "' is not produced by an earlier layer");
            layer.inputs.push_back(it->second);
        }
        const std::size_t arity = layer.inputs.size();
        if (layer.op == OpKind::concat_channels ? arity < 1 : arity != 1) {
            graph_error(layer.name, "wrong number of inputs for " + std::string(to_string(layer.op)));
        }
        layer.kernel = int_field(jl, "kernel", 1, layer.name);
        layer.stride = int_field(jl, "stride", 1, layer.name);
        layer.padding = int_field(jl, "padding", 0, layer.name);
        layer.ceil_mode = jl.value("ceil_mode", false);
        const std::string activation = jl.value("activation", std::string("none"));
        if (activation != "none" && activation != "relu") graph_error(layer.name, "unknown activation '" + activation + "'");
        layer.fused_relu = activation == "relu";
        if (layer.fused_relu && layer.op != OpKind::conv2d) graph_error(layer.name, "only conv2d takes a fused activation");
        if (layer.kernel < 1 || layer.stride < 1 || layer.padding < 0) {
            graph_error(layer.name, "kernel and stride must be >= 1 and padding >= 0");
        }
        return layer;
    }

    static Shape infer(Layer& layer, const std::vector<Shape>& in, const json& jl, const BlobSource& blobs) {
        const Shape& x = in.front();
        switch (layer.op) {
        case OpKind::conv2d: {
            const int cin = int_field(jl, "in_channels", -1, layer.name);
            const int cout = int_field(jl, "out_channels", -1, layer.name);
            if (cin < 1 || cout < 1) graph_error(layer.name, "conv2d needs positive in_channels and out_channels");
            if (cin != x[1]) {
                graph_error(layer.name, "declares " + std::to_string(cin) + " input channels but receives " +
                                            to_string(x));
            }
            const int oh = nn::window_output_size(x[2], layer.kernel, layer.stride, layer.padding);
            const int ow = nn::window_output_size(x[3], layer.kernel, layer.stride, layer.padding);
            if (oh < 1 || ow < 1) graph_error(layer.name, "kernel does not fit input " + to_string(x));
            if (!jl.contains("weight")) throw Error(Errc::weight, "layer '" + layer.name + "': missing weight reference");
            layer.weight = load_blob(blobs, jl["weight"], {cout, cin, layer.kernel, layer.kernel}, layer.name);
            if (jl.contains("bias")) layer.bias = load_blob(blobs, jl["bias"], {cout}, layer.name);
            return {x[0], cout, oh, ow};
        }
        case OpKind::relu:
            return x;
        case OpKind::maxpool2d: {
            if (2 * layer.padding > layer.kernel) graph_error(layer.name, "padding exceeds half the window");
            const int oh = nn::window_output_size(x[2], layer.kernel, layer.stride, layer.padding, layer.ceil_mode);
            const int ow = nn::window_output_size(x[3], layer.kernel, layer.stride, layer.padding, layer.ceil_mode);
            if (oh < 1 || ow < 1) graph_error(layer.name, "window does not fit input " + to_string(x));
            return {x[0], x[1], oh, ow};
        }
        case OpKind::global_avg_pool:
            return {x[0], x[1], 1, 1};
        case OpKind::concat_channels: {
            int channels = 0;
            for (const Shape& s : in) {
                if (s[0] != x[0] || s[2] != x[2] || s[3] != x[3]) {
                    graph_error(layer.name, "cannot concatenate " + to_string(x) + " with " + to_string(s));
                }
                channels += s[1];
            }
            return {x[0], channels, x[2], x[3]};
        }
        case OpKind::softmax:
            return x;
        }
        graph_error(layer.name, "unhandled op");
    }

    static void check_cam_constraint(ModelGraph& g) {
        int softmax_count = 0;
        for (std::size_t i = 0; i < g.layers_.size(); ++i) {
            if (g.layers_[i].op == OpKind::softmax) {
                ++softmax_count;
                g.output_layer_ = static_cast<int>(i);
            }
        }
        if (softmax_count == 0) throw Error(Errc::graph, "graph has no softmax output");
        if (softmax_count > 1) throw Error(Errc::graph, "graph has more than one softmax");
        if (g.output_layer_ + 1 != static_cast<int>(g.layers_.size())) {
            throw Error(Errc::graph, "softmax must be the last layer");
        }
        const Layer& sm = g.layers_[static_cast<std::size_t>(g.output_layer_)];
        const int gap = sm.inputs.front();
        if (gap < 0 || g.layers_[static_cast<std::size_t>(gap)].op != OpKind::global_avg_pool) {
            throw Error(Errc::cam_incompatible, "softmax '" + sm.name + "' must be fed by a global_avg_pool");
        }
        const int conv = g.layers_[static_cast<std::size_t>(gap)].inputs.front();
        if (conv < 0 || g.layers_[static_cast<std::size_t>(conv)].op != OpKind::conv2d) {
            throw Error(Errc::cam_incompatible,
                        "global_avg_pool '" + g.layers_[static_cast<std::size_t>(gap)].name + "' must be fed by a conv2d");
        }
        g.logit_layer_ = gap;
        g.feature_layer_ = conv;
    }

    static void parse_labels(const json& doc, const BlobSource& blobs, int classes, std::vector<std::string>& labels) {
        labels.clear();
        if (doc.contains("labels")) {
            const json& jl = doc["labels"];
            if (jl.is_array()) {
                labels = jl.get<std::vector<std::string>>();
            } else if (jl.is_string()) {
                auto bytes = blobs(jl.get<std::string>());
                if (!bytes) throw Error(Errc::weight, "missing labels file '" + jl.get<std::string>() + "'");
                labels = split_lines(*bytes);
            } else {
                throw Error(Errc::graph, "'labels' must be a file reference or an array of strings");
            }
            if (static_cast<int>(labels.size()) != classes) {
                throw Error(Errc::graph, "model has " + std::to_string(classes) + " classes but " +
                                             std::to_string(labels.size()) + " labels");
            }
            return;
        }
        for (int i = 0; i < classes; ++i) labels.push_back("class_" + std::to_string(i));
    }
};

ModelGraph load_model(std::string_view manifest, const BlobSource& blobs) {
    try {
        return ModelBuilder::build(manifest, blobs);
    } catch (const json::exception& e) {
        throw Error(Errc::graph, std::string("malformed manifest: ") + e.what());
    }
}

ModelGraph load_model_file(const std::filesystem::path& manifest_path) {
    const Bytes manifest = read_file(manifest_path);
    const auto dir = manifest_path.parent_path();
    BlobSource blobs = [dir](const std::string& ref) -> std::optional<std::vector<std::uint8_t>> {
        const std::filesystem::path rel(ref);
        if (rel.is_absolute() || ref.find("..") != std::string::npos) return std::nullopt;
        std::error_code ec;
        if (!std::filesystem::is_regular_file(dir / rel, ec)) return std::nullopt;
        return read_file(dir / rel);
    };
    return load_model(std::string_view(reinterpret_cast<const char*>(manifest.data()), manifest.size()), blobs);
}

ForwardResult forward(const ModelGraph& graph, const TensorF32& input) {
    const InputSpec& spec = graph.input();
    const Shape expected{1, spec.channels, spec.height, spec.width};
    if (input.shape() != expected) {
        throw Error(Errc::shape, "model expects input " + to_string(expected) + ", got " + to_string(input.shape()));
    }
    const auto& layers = graph.layers();
    std::vector<int> last_use(layers.size(), -1);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        for (int id : layers[i].inputs) {
            if (id >= 0) last_use[static_cast<std::size_t>(id)] = static_cast<int>(i);
        }
    }

    std::vector<TensorF32> acts(layers.size());
    ForwardResult result;
    auto get = [&](int id) -> const TensorF32& { return id < 0 ? input : acts[static_cast<std::size_t>(id)]; };
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        const TensorF32& x = get(l.inputs.front());
        switch (l.op) {
        case OpKind::conv2d: acts[i] = nn::conv2d(x, l.weight, l.bias, l.stride, l.padding, l.fused_relu); break;
        case OpKind::relu: acts[i] = nn::relu(x); break;
        case OpKind::maxpool2d: acts[i] = nn::maxpool2d(x, l.kernel, l.stride, l.padding, l.ceil_mode); break;
        case OpKind::global_avg_pool: acts[i] = nn::global_avg_pool(x); break;
        case OpKind::concat_channels: {
            std::vector<const TensorF32*> parts;
            for (int id : l.inputs) parts.push_back(&get(id));
            acts[i] = nn::concat_channels(parts);
            break;
        }
        case OpKind::softmax: acts[i] = nn::softmax(x); break;
        }
        for (int id : l.inputs) {
            if (id >= 0 && last_use[static_cast<std::size_t>(id)] == static_cast<int>(i) &&
                id != graph.feature_layer() && id != graph.logit_layer()) {
                acts[static_cast<std::size_t>(id)] = TensorF32();
            }
        }
    }
    const auto logits = acts[static_cast<std::size_t>(graph.logit_layer())].data();
    result.logits.assign(logits.begin(), logits.end());
    const auto probs = acts[static_cast<std::size_t>(graph.output_layer())].data();
    result.probabilities.assign(probs.begin(), probs.end());
    result.features = std::move(acts[static_cast<std::size_t>(graph.feature_layer())]);
    return result;
}

} // namespace whatif
