#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "whatif/image.hpp"
#include "whatif/model.hpp"

namespace whatif {

/// SqueezeNet 1.1 layout (conv1, eight fire modules, conv10 -> GAP -> softmax)
/// with uniformly drawn He-scaled weights. Useful for timing and for
/// exercising the loader on a realistic graph; the scores are meaningless.
ModelGraph synthetic_squeezenet(int num_classes = 1000, int input_size = 227, std::uint64_t seed = 0);

/// Smooth color test card with mild deterministic noise.
ImageBuffer synthetic_scene(int width, int height, std::uint64_t seed = 0);

/// Centered disk covering about `fraction` of the image area.
Mask disk_mask(int width, int height, double fraction);

struct BenchStat {
    std::string op;
    std::string setting;
    int runs = 0;
    double median_ms = 0.0;
    double p95_ms = 0.0;
    std::optional<double> budget_ms;

    bool within_budget() const { return !budget_ms || median_ms <= *budget_ms; }
};

struct BenchReport {
    std::string suite;
    std::vector<BenchStat> stats;
    std::string to_json() const;
};

/// Times `fn` `runs` times after one warm-up call.
BenchStat time_op(std::string op, std::string setting, int runs, const std::function<void()>& fn,
                  std::optional<double> budget_ms = std::nullopt);

/// Suites:
///   "quick"    - small inputs, finishes in about a second
///   "standard" - latency-budget settings: classify at the model input size,
///                Telea and PatchMatch on 512x512 with a 10% mask
/// `model` defaults to synthetic_squeezenet(). Throws Error(invalid_argument)
/// for an unknown suite.
BenchReport run_bench(std::string_view suite, const ModelGraph* model = nullptr);

inline constexpr double kClassifyBudgetMs = 150.0;
inline constexpr double kTeleaBudgetMs = 200.0;
inline constexpr double kPatchMatchBudgetMs = 3000.0;

} // namespace whatif
