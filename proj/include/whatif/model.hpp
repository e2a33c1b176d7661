#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "whatif/tensor.hpp"

namespace whatif {

enum class OpKind { conv2d, relu, maxpool2d, global_avg_pool, concat_channels, softmax };

std::string_view to_string(OpKind op);

struct Layer {
    std::string name;
    OpKind op = OpKind::relu;
    std::vector<std::string> input_names;
    /// Producer indices into ModelGraph::layers; -1 is the graph input.
    std::vector<int> inputs;

    int kernel = 1;
    int stride = 1;
    int padding = 0;
    bool ceil_mode = false;  // maxpool2d only
    bool fused_relu = false; // conv2d only
    TensorF32 weight;        // conv2d: (Cout, Cin, K, K)
    TensorF32 bias;          // conv2d: (Cout)

    Shape output_shape;
};

/// Expected input tensor and its per-channel normalization:
/// x = (v - mean[c]) * scale[c] with v in [0, 1].
struct InputSpec {
    std::string name = "data";
    int channels = 3;
    int height = 0;
    int width = 0;
    std::vector<float> mean;
    std::vector<float> scale;
};

/// Immutable, validated network. The output is a softmax fed by a global
/// average pool fed by a conv2d, so the final conv's channel c spatially
/// averages to the logit of class c.
class ModelGraph {
  public:
    const InputSpec& input() const noexcept { return input_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    int num_classes() const noexcept { return static_cast<int>(labels_.size()); }

    int feature_layer() const noexcept { return feature_layer_; } // final conv2d
    int logit_layer() const noexcept { return logit_layer_; }     // global_avg_pool
    int output_layer() const noexcept { return output_layer_; }   // softmax

  private:
    friend class ModelBuilder;
    InputSpec input_;
    std::vector<Layer> layers_;
    std::vector<std::string> labels_;
    int feature_layer_ = -1;
    int logit_layer_ = -1;
    int output_layer_ = -1;
};

/// Returns the blob bytes stored under a manifest reference, or nullopt.
using BlobSource = std::function<std::optional<std::vector<std::uint8_t>>(const std::string&)>;

/// Parses and validates a JSON manifest (format documented in docs/model-format.md).
/// Throws Error(graph) for malformed manifests or failed shape inference,
/// Error(weight) for missing or mis-sized blobs, Error(cam_incompatible) when
/// the softmax is not fed by global_avg_pool <- conv2d.
ModelGraph load_model(std::string_view manifest, const BlobSource& blobs);

/// Loads `manifest_path`, resolving blob and label references relative to its directory.
ModelGraph load_model_file(const std::filesystem::path& manifest_path);

/// Activations retained from one forward pass.
struct ForwardResult {
    TensorF32 features;             // final conv output, (1, classes, H, W)
    std::vector<float> logits;      // global_avg_pool output
    std::vector<float> probabilities;
};

/// Runs the graph on an already-normalized (1, C, H, W) tensor.
ForwardResult forward(const ModelGraph& graph, const TensorF32& input);

} // namespace whatif
