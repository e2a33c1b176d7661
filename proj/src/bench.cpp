#include "whatif/bench.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>

#include <json.hpp>

#include "whatif/cam.hpp"
#include "whatif/classifier.hpp"
#include "whatif/codec.hpp"
#include "whatif/error.hpp"
#include "whatif/patchmatch.hpp"
#include "whatif/rng.hpp"
#include "whatif/telea.hpp"

namespace whatif {

using nlohmann::json;

namespace {

struct SyntheticNet {
    json layers = json::array();
    std::map<std::string, std::vector<std::uint8_t>> blobs;
    Xoshiro256 rng;

    explicit SyntheticNet(std::uint64_t seed) : rng(seed) {}

    void blob(const std::string& name, std::size_t count, double limit) {
        std::vector<std::uint8_t> bytes(count * 4);
        for (std::size_t i = 0; i < count; ++i) {
            const auto v = static_cast<float>((2.0 * rng.uniform01() - 1.0) * limit);
            const auto bits = std::bit_cast<std::uint32_t>(v);
            for (int b = 0; b < 4; ++b) bytes[4 * i + static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(bits >> (8 * b));
        }
        blobs[name] = std::move(bytes);
    }

    void conv(const std::string& name, const std::string& input, int cin, int cout, int k, int stride, int pad) {
        const double limit = std::sqrt(6.0 / (cin * k * k));
        blob(name + ".weight", static_cast<std::size_t>(cout * cin * k * k), limit);
        blob(name + ".bias", static_cast<std::size_t>(cout), 0.01);
        layers.push_back({{"name", name}, {"op", "conv2d"}, {"inputs", {input}}, {"in_channels", cin},
                          {"out_channels", cout}, {"kernel", k}, {"stride", stride}, {"padding", pad},
                          {"activation", "relu"}, {"weight", name + ".weight"}, {"bias", name + ".bias"}});
    }

    void pool(const std::string& name, const std::string& input) {
        layers.push_back({{"name", name}, {"op", "maxpool2d"}, {"inputs", {input}}, {"kernel", 3}, {"stride", 2},
                          {"ceil_mode", true}});
    }

    // Returns the output channel count.
    int fire(const std::string& name, const std::string& input, int cin, int squeeze, int expand) {
        conv(name + ".squeeze", input, cin, squeeze, 1, 1, 0);
        conv(name + ".expand1x1", name + ".squeeze", squeeze, expand, 1, 1, 0);
        conv(name + ".expand3x3", name + ".squeeze", squeeze, expand, 3, 1, 1);
        layers.push_back({{"name", name}, {"op", "concat_channels"},
                          {"inputs", {name + ".expand1x1", name + ".expand3x3"}}});
        return 2 * expand;
    }
};

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

} // namespace

ModelGraph synthetic_squeezenet(int num_classes, int input_size, std::uint64_t seed) {
    SyntheticNet net(seed);
    net.conv("conv1", "data", 3, 64, 3, 2, 0);
    net.pool("pool1", "conv1");
    int c = net.fire("fire2", "pool1", 64, 16, 64);
    c = net.fire("fire3", "fire2", c, 16, 64);
    net.pool("pool3", "fire3");
    c = net.fire("fire4", "pool3", c, 32, 128);
    c = net.fire("fire5", "fire4", c, 32, 128);
    net.pool("pool5", "fire5");
    c = net.fire("fire6", "pool5", c, 48, 192);
    c = net.fire("fire7", "fire6", c, 48, 192);
    c = net.fire("fire8", "fire7", c, 64, 256);
    c = net.fire("fire9", "fire8", c, 64, 256);
    net.conv("conv10", "fire9", c, num_classes, 1, 1, 0);
    net.layers.push_back({{"name", "gap"}, {"op", "global_avg_pool"}, {"inputs", {"conv10"}}});
    net.layers.push_back({{"name", "prob"}, {"op", "softmax"}, {"inputs", {"gap"}}});

    const json manifest = {{"format", "whatif-model"},
                           {"version", 1},
                           {"input",
                            {{"name", "data"},
                             {"shape", {1, 3, input_size, input_size}},
                             {"mean", {0.485, 0.456, 0.406}},
                             {"scale", {1.0 / 0.229, 1.0 / 0.224, 1.0 / 0.225}}}},
                           {"layers", net.layers}};
    const std::string text = manifest.dump();
    return load_model(text, [&](const std::string& ref) -> std::optional<std::vector<std::uint8_t>> {
        auto it = net.blobs.find(ref);
        if (it == net.blobs.end()) return std::nullopt;
        return it->second;
    });
}

ImageBuffer synthetic_scene(int width, int height, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    ImageBuffer img(width, height, 3);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double u = static_cast<double>(x) / width;
            const double v = static_cast<double>(y) / height;
            const double base[3] = {0.5 + 0.35 * std::sin(two_pi * 3.0 * u),
                                    0.5 + 0.35 * std::cos(two_pi * 2.0 * v),
                                    0.5 + 0.35 * std::sin(two_pi * (u + v) * 4.0)};
            for (int c = 0; c < 3; ++c) {
                const double noise = (rng.uniform01() - 0.5) * 0.1;
                img.at(x, y, c) = static_cast<float>(std::clamp(base[c] + noise, 0.0, 1.0));
            }
        }
    }
    return img;
}

Mask disk_mask(int width, int height, double fraction) {
    Mask mask(width, height);
    const double r = std::sqrt(fraction * width * height / std::numbers::pi);
    const double cx = (width - 1) / 2.0;
    const double cy = (height - 1) / 2.0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            mask.set(x, y, std::hypot(x - cx, y - cy) <= r);
        }
    }
    return mask;
}

BenchStat time_op(std::string op, std::string setting, int runs, const std::function<void()>& fn,
                  std::optional<double> budget_ms) {
    using clock = std::chrono::steady_clock;
    fn();
    std::vector<double> ms;
    for (int i = 0; i < runs; ++i) {
        const auto t0 = clock::now();
        fn();
        ms.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
    }
    return {std::move(op), std::move(setting), runs, percentile(ms, 0.5), percentile(ms, 0.95), budget_ms};
}

std::string BenchReport::to_json() const {
    json ops = json::array();
    for (const auto& s : stats) {
        json row = {{"op", s.op}, {"setting", s.setting}, {"runs", s.runs}, {"median_ms", s.median_ms},
                    {"p95_ms", s.p95_ms}};
        if (s.budget_ms) {
            row["budget_ms"] = *s.budget_ms;
            row["within_budget"] = s.within_budget();
        }
        ops.push_back(std::move(row));
    }
    return json{{"suite", suite}, {"ops", std::move(ops)}}.dump(2);
}

BenchReport run_bench(std::string_view suite, const ModelGraph* model) {
    const bool standard = suite == "standard";
    if (!standard && suite != "quick") {
        throw Error(Errc::invalid_argument, "unknown bench suite '" + std::string(suite) + "' (quick, standard)");
    }
    std::optional<ModelGraph> owned;
    if (!model) {
        owned = standard ? synthetic_squeezenet() : synthetic_squeezenet(10, 64);
        model = &*owned;
    }

    const int side = standard ? 512 : 96;
    const int runs = standard ? 5 : 3;
    const ImageBuffer scene = synthetic_scene(side, side, 1);
    const Mask mask = disk_mask(side, side, 0.10);
    const std::string size = std::to_string(side) + "x" + std::to_string(side);
    const std::string masked = size + ", 10% disk mask";
    const std::string model_size = std::to_string(model->input().width) + "x" + std::to_string(model->input().height);

    BenchReport report;
    report.suite = std::string(suite);
    const Bytes png = encode_image(scene);
    report.stats.push_back(time_op("decode_png", size, runs, [&] { (void)decode_image(png); }));
    report.stats.push_back(time_op("encode_png", size, runs, [&] { (void)encode_image(scene); }));
    report.stats.push_back(time_op("resize_bilinear", size + " -> " + model_size, runs,
                                   [&] { (void)resize_bilinear(scene, model->input().width, model->input().height); }));
    report.stats.push_back(time_op("classify", "model input " + model_size, runs,
                                   [&] { (void)classify(*model, scene); },
                                   standard ? std::optional(kClassifyBudgetMs) : std::nullopt));
    report.stats.push_back(time_op("compute_cam", "model input " + model_size, runs,
                                   [&] { (void)compute_cam(*model, scene, 0); }));
    report.stats.push_back(time_op("inpaint_telea", masked, runs, [&] { (void)inpaint_telea(scene, mask); },
                                   standard ? std::optional(kTeleaBudgetMs) : std::nullopt));
    report.stats.push_back(time_op("inpaint_patchmatch", masked, standard ? 3 : 1,
                                   [&] { (void)inpaint_patchmatch(scene, mask); },
                                   standard ? std::optional(kPatchMatchBudgetMs) : std::nullopt));
    return report;
}

} // namespace whatif
