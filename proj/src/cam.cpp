#include "whatif/cam.hpp"

#include <algorithm>
#include <string>

#include "whatif/classifier.hpp"
#include "whatif/codec.hpp"
#include "whatif/error.hpp"

namespace whatif {

ScalarMap normalize_minmax(const ScalarMap& map) {
    ScalarMap out(map.width, map.height, 0.0);
    if (map.values.empty()) return out;
    const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) return out;
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        out.values[i] = std::clamp((map.values[i] - *lo) / range, 0.0, 1.0);
    }
    return out;
}

CamHeatmap cam_from_forward(const ForwardResult& fr, int class_id, int image_width, int image_height) {
    const int classes = fr.features.dim(1);
    if (class_id < 0 || class_id >= classes) {
        throw Error(Errc::class_range,
                    "class " + std::to_string(class_id) + " outside [0, " + std::to_string(classes) + ")");
    }
    CamHeatmap cam;
    cam.class_id = class_id;
    cam.logit = fr.logits[static_cast<std::size_t>(class_id)];
    const int h = fr.features.dim(2);
    const int w = fr.features.dim(3);
    cam.raw = ScalarMap(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) cam.raw.at(x, y) = fr.features.at(0, class_id, y, x);
    }
    cam.normalized = normalize_minmax(cam.raw);
    cam.upsampled = resize_bilinear(cam.normalized, image_width, image_height);
    return cam;
}

CamHeatmap compute_cam(const ModelGraph& graph, const ImageBuffer& img, int class_id) {
    if (class_id < 0 || class_id >= graph.num_classes()) {
        throw Error(Errc::class_range, "class " + std::to_string(class_id) + " outside [0, " +
                                           std::to_string(graph.num_classes()) + ")");
    }
    return cam_from_forward(forward(graph, prepare_input(graph, img)), class_id, img.width(), img.height());
}

ImageBuffer colorize(const CamHeatmap& heatmap) {
    const ScalarMap& m = heatmap.upsampled;
    ImageBuffer out(m.width, m.height, 3);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            const auto& rgb = kHeatColormap[quantize(static_cast<float>(m.at(x, y)))];
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = rgb[static_cast<std::size_t>(c)] / 255.0f;
        }
    }
    return out;
}

ImageBuffer render_overlay(const CamHeatmap& heatmap, const ImageBuffer& img, float alpha) {
    if (heatmap.upsampled.width != img.width() || heatmap.upsampled.height != img.height()) {
        throw Error(Errc::dims, "heatmap is " + std::to_string(heatmap.upsampled.width) + "x" +
                                    std::to_string(heatmap.upsampled.height) + " but image is " +
                                    std::to_string(img.width()) + "x" + std::to_string(img.height()));
    }
    if (!(alpha >= 0.0f && alpha <= 1.0f)) throw Error(Errc::invalid_argument, "alpha must lie in [0, 1]");
    const ImageBuffer base = to_rgb(img);
    const ImageBuffer heat = colorize(heatmap);
    ImageBuffer out(img.width(), img.height(), 3);
    const auto b = base.data();
    const auto hm = heat.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = std::clamp((1.0f - alpha) * b[i] + alpha * hm[i], 0.0f, 1.0f);
    }
    return out;
}

} // namespace whatif
