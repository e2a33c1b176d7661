#pragma once

// Brute-force reference implementations used by the unit and acceptance tests.
// They share no code with the library beyond the container types.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "whatif/image.hpp"
#include "whatif/model.hpp"
#include "whatif/rng.hpp"
#include "whatif/tensor.hpp"

namespace oracle {

struct Dense {
    std::vector<int> shape; // N, C, H, W
    std::vector<long double> values;
};

whatif::TensorF32 random_tensor(whatif::Xoshiro256& rng, const std::vector<int>& shape, double lo, double hi);

Dense conv2d(const whatif::TensorF32& x, const whatif::TensorF32& w, const whatif::TensorF32& b, int stride,
             int pad, bool relu);
Dense maxpool(const whatif::TensorF32& x, int k, int stride, int pad, bool ceil_mode);
Dense global_avg_pool(const whatif::TensorF32& x);
Dense softmax(const whatif::TensorF32& x);

/// |got - want| <= rel * |want| + 1e-9 for every element; returns the worst ratio seen.
bool matches(const whatif::TensorF32& got, const Dense& want, double rel, double* worst = nullptr);

/// Euclidean distance from every pixel to the nearest known pixel (0 for known ones).
std::vector<double> boundary_distance(const whatif::Mask& mask);

/// Weighted average for a pixel whose every 4-neighbour is known: the direction
/// factor is 1 and the level factor is constant, leaving 1/d^2 weights.
double isolated_pixel_fill(const whatif::ImageBuffer& img, int x, int y, int c, int radius);

/// Best SSD for every target over every valid source, visiting all candidates.
double exhaustive_nnf_cost(const whatif::ImageBuffer& img, const whatif::Mask& hole, int patch_size);

/// Random conv(k x k) -> [relu] -> conv(1x1, classes) -> GAP -> softmax network.
whatif::ModelGraph random_cam_model(std::uint64_t seed, int channels, int size, int classes);

whatif::ImageBuffer random_image(whatif::Xoshiro256& rng, int w, int h, int c);
whatif::ImageBuffer periodic_texture(int w, int h, int period);
whatif::Mask rect_mask(int w, int h, int x0, int y0, int rw, int rh);
whatif::Mask disk_mask(int w, int h, double cx, double cy, double r);

std::filesystem::path fixture(const std::string& rel);

enum class Golden { match, mismatch, missing, updated };

/// Compares `bytes` with fixtures/golden/<name>. With WHATIF_UPDATE_GOLDEN set the
/// file is rewritten instead.
Golden check_golden(const std::string& name, const std::string& bytes);

} // namespace oracle
