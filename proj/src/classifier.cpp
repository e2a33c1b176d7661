#include "whatif/classifier.hpp"

#include <algorithm>
#include <numeric>

#include "whatif/error.hpp"

namespace whatif {

TensorF32 prepare_input(const ModelGraph& graph, const ImageBuffer& img) {
    const InputSpec& spec = graph.input();
    const ImageBuffer sized = (img.width() == spec.width && img.height() == spec.height)
                                  ? img
                                  : resize_bilinear(img, spec.width, spec.height);
    TensorF32 input({1, spec.channels, spec.height, spec.width});
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            for (int c = 0; c < spec.channels; ++c) {
                float v = 0.0f;
                if (sized.channels() == spec.channels) {
                    v = sized.at(x, y, c);
                } else if (sized.channels() == 1) {
                    v = sized.at(x, y, 0);
                } else {
                    v = 0.299f * sized.at(x, y, 0) + 0.587f * sized.at(x, y, 1) + 0.114f * sized.at(x, y, 2);
                }
                const auto ci = static_cast<std::size_t>(c);
                input.at(0, c, y, x) = (v - spec.mean[ci]) * spec.scale[ci];
            }
        }
    }
    return input;
}

ClassScores make_scores(const ModelGraph& graph, std::span<const float> probabilities, int k) {
    if (k < 1) throw Error(Errc::invalid_argument, "k must be at least 1");
    ClassScores scores;
    scores.distribution.assign(probabilities.begin(), probabilities.end());
    std::vector<int> order(scores.distribution.size());
    std::iota(order.begin(), order.end(), 0);
    const auto& p = scores.distribution;
    const std::size_t keep = std::min(order.size(), static_cast<std::size_t>(k));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](int a, int b) {
                          const double pa = p[static_cast<std::size_t>(a)];
                          const double pb = p[static_cast<std::size_t>(b)];
                          return pa != pb ? pa > pb : a < b;
                      });
    for (std::size_t i = 0; i < keep; ++i) {
        const int id = order[i];
        scores.topk.push_back({id, graph.labels()[static_cast<std::size_t>(id)], p[static_cast<std::size_t>(id)]});
    }
    return scores;
}

ClassScores classify(const ModelGraph& graph, const ImageBuffer& img, int k) {
    if (k < 1) throw Error(Errc::invalid_argument, "k must be at least 1");
    const ForwardResult fr = forward(graph, prepare_input(graph, img));
    return make_scores(graph, fr.probabilities, k);
}

} // namespace whatif
