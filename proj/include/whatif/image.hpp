#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace whatif {

/// Row-major, channel-interleaved raster with intensities in [0,1].
/// Channel count is 1 (gray) or 3 (RGB).
class ImageBuffer {
  public:
    ImageBuffer() = default;
    /// Zero-filled image. Throws Error(dims) for empty sizes or unsupported channel counts.
    ImageBuffer(int width, int height, int channels);
    /// Validates size and that every value is finite and inside [0,1].
    ImageBuffer(int width, int height, int channels, std::vector<float> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    float at(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }
    float& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }

    std::size_t index(int x, int y, int c = 0) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)) *
                   static_cast<std::size_t>(channels_) +
               static_cast<std::size_t>(c);
    }

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

  private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

/// Per-pixel selection; true marks an unknown pixel that should be inpainted.
class Mask {
  public:
    Mask() = default;
    Mask(int width, int height, bool value = false);
    Mask(int width, int height, std::vector<std::uint8_t> bits);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return bits_.size(); }

    bool at(int x, int y) const noexcept {
        return bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                     static_cast<std::size_t>(x)] != 0;
    }
    void set(int x, int y, bool value) noexcept {
        bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
              static_cast<std::size_t>(x)] = value ? 1 : 0;
    }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    std::size_t count() const noexcept;
    bool none() const noexcept { return count() == 0; }
    bool all() const noexcept { return count() == bits_.size(); }

    friend bool operator==(const Mask&, const Mask&) = default;

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Dense real-valued map (arrival times, heatmaps).
struct ScalarMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    ScalarMap() = default;
    ScalarMap(int w, int h, double fill = 0.0)
        : width(w), height(h), values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    double at(int x, int y) const noexcept {
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
    double& at(int x, int y) noexcept {
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
};

/// Throws Error(dims) unless the image and mask share width and height.
void require_same_dims(const ImageBuffer& img, const Mask& mask);

/// Bilinear resampling with half-pixel centers: src = (i + 0.5) * in / out - 0.5,
/// clamped to the border. No prefiltering when shrinking.
ImageBuffer resize_bilinear(const ImageBuffer& img, int out_w, int out_h);

/// Same resampling rule applied to a scalar map.
ScalarMap resize_bilinear(const ScalarMap& map, int out_w, int out_h);

/// bit = intensity > threshold. The image must have one channel.
Mask mask_from_image(const ImageBuffer& img, float threshold = 0.5f);

/// Inverse of mask_from_image: true -> 1.0, false -> 0.0.
ImageBuffer mask_to_image(const Mask& mask);

/// Replicates gray to RGB; returns RGB input unchanged.
ImageBuffer to_rgb(const ImageBuffer& img);

} // namespace whatif
