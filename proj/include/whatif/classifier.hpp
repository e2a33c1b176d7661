#pragma once

#include <span>
#include <string>
#include <vector>

#include "whatif/image.hpp"
#include "whatif/model.hpp"

namespace whatif {

struct ClassScore {
    int class_id = 0;
    std::string label;
    double probability = 0.0;
};

struct ClassScores {
    std::vector<double> distribution;
    /// Descending probability, ascending class_id on ties.
    std::vector<ClassScore> topk;
};

/// Resizes to the model input size (half-pixel bilinear), adapts the channel
/// count (gray is replicated; RGB is reduced by Rec. 601 luma for gray models)
/// and applies the manifest normalization.
TensorF32 prepare_input(const ModelGraph& graph, const ImageBuffer& img);

/// Top-k table for a distribution; k is clamped to the class count.
ClassScores make_scores(const ModelGraph& graph, std::span<const float> probabilities, int k);

inline constexpr int kDefaultTopK = 5;

/// Throws Error(invalid_argument) when k < 1.
ClassScores classify(const ModelGraph& graph, const ImageBuffer& img, int k = kDefaultTopK);

} // namespace whatif
