#pragma once

#include <array>
#include <cstdint>

#include "whatif/image.hpp"
#include "whatif/model.hpp"

namespace whatif {

/// 256-entry RGB table (jet-style), indexed by round(255 * normalized).
extern const std::array<std::array<std::uint8_t, 3>, 256> kHeatColormap;

struct CamHeatmap {
    int class_id = 0;
    double logit = 0.0;     // pre-softmax score of class_id
    ScalarMap raw;          // final conv channel, feature resolution
    ScalarMap normalized;   // (v - min) / (max - min); zeros when flat
    ScalarMap upsampled;    // normalized, bilinearly resized to the image
};

/// Min-max scaling to [0, 1]; a flat map becomes all zeros.
ScalarMap normalize_minmax(const ScalarMap& map);

/// Builds the heatmap for `class_id` from an existing forward pass.
CamHeatmap cam_from_forward(const ForwardResult& fr, int class_id, int image_width, int image_height);

/// Runs the model on `img` and reads the final conv channel of `class_id`.
/// Throws Error(class_range) for an out-of-range class.
CamHeatmap compute_cam(const ModelGraph& graph, const ImageBuffer& img, int class_id);

/// Colormapped normalized heatmap as an RGB image at the upsampled resolution.
ImageBuffer colorize(const CamHeatmap& heatmap);

/// out = (1 - alpha) * img + alpha * colormap(upsampled). Gray images are
/// promoted to RGB. Throws Error(dims) when the heatmap was upsampled to a
/// different size than `img`.
ImageBuffer render_overlay(const CamHeatmap& heatmap, const ImageBuffer& img, float alpha = 0.5f);

} // namespace whatif
