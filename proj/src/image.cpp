#include "whatif/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "whatif/error.hpp"

namespace whatif {

namespace {

void check_dims(int width, int height, int channels) {
    if (width < 1 || height < 1) {
        throw Error(Errc::dims, "image dimensions must be positive, got " + std::to_string(width) +
                                    "x" + std::to_string(height));
    }
    if (channels != 1 && channels != 3) {
        throw Error(Errc::channel_count,
                    "image must have 1 or 3 channels, got " + std::to_string(channels));
    }
}

// Source sample position and blend weight for one output coordinate.
struct Tap {
    int lo;
    int hi;
    double frac;
};

std::vector<Tap> make_taps(int in, int out) {
    std::vector<Tap> taps(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (int i = 0; i < out; ++i) {
        double src = (i + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in - 1));
        const int lo = static_cast<int>(std::floor(src));
        const int hi = std::min(lo + 1, in - 1);
        taps[static_cast<std::size_t>(i)] = {lo, hi, src - lo};
    }
    return taps;
}

} // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels)
    : width_(width), height_(height), channels_(channels) {
    check_dims(width, height, channels);
    data_.assign(pixel_count() * static_cast<std::size_t>(channels), 0.0f);
}

ImageBuffer::ImageBuffer(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    check_dims(width, height, channels);
    if (data_.size() != pixel_count() * static_cast<std::size_t>(channels)) {
        throw Error(Errc::dims, "image data length " + std::to_string(data_.size()) +
                                    " does not match " + std::to_string(width) + "x" +
                                    std::to_string(height) + "x" + std::to_string(channels));
    }
    for (float v : data_) {
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
            throw Error(Errc::invalid_argument, "image intensity outside [0,1]");
        }
    }
}

Mask::Mask(int width, int height, bool value)
    : width_(width), height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)),
            value ? 1 : 0) {
    if (width < 1 || height < 1) throw Error(Errc::dims, "mask dimensions must be positive");
}

Mask::Mask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
    if (width < 1 || height < 1) throw Error(Errc::dims, "mask dimensions must be positive");
    if (bits_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(Errc::dims, "mask bit count does not match its dimensions");
    }
    for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t Mask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void require_same_dims(const ImageBuffer& img, const Mask& mask) {
    if (img.width() != mask.width() || img.height() != mask.height()) {
        throw Error(Errc::dims, "mask is " + std::to_string(mask.width()) + "x" +
                                    std::to_string(mask.height()) + " but image is " +
                                    std::to_string(img.width()) + "x" +
                                    std::to_string(img.height()));
    }
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw Error(Errc::dims, "resize target must be at least 1x1");
    const int channels = img.channels();
    const auto xs = make_taps(img.width(), out_w);
    const auto ys = make_taps(img.height(), out_h);

    ImageBuffer out(out_w, out_h, channels);
    for (int y = 0; y < out_h; ++y) {
        const Tap& ty = ys[static_cast<std::size_t>(y)];
        for (int x = 0; x < out_w; ++x) {
            const Tap& tx = xs[static_cast<std::size_t>(x)];
            for (int c = 0; c < channels; ++c) {
                const double top = img.at(tx.lo, ty.lo, c) +
                                   (img.at(tx.hi, ty.lo, c) - img.at(tx.lo, ty.lo, c)) * tx.frac;
                const double bottom = img.at(tx.lo, ty.hi, c) +
                                      (img.at(tx.hi, ty.hi, c) - img.at(tx.lo, ty.hi, c)) * tx.frac;
                const double v = top + (bottom - top) * ty.frac;
                out.at(x, y, c) = std::clamp(static_cast<float>(v), 0.0f, 1.0f);
            }
        }
    }
    return out;
}

ScalarMap resize_bilinear(const ScalarMap& map, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw Error(Errc::dims, "resize target must be at least 1x1");
    if (map.width < 1 || map.height < 1) throw Error(Errc::dims, "cannot resize an empty map");
    const auto xs = make_taps(map.width, out_w);
    const auto ys = make_taps(map.height, out_h);

    ScalarMap out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        const Tap& ty = ys[static_cast<std::size_t>(y)];
        for (int x = 0; x < out_w; ++x) {
            const Tap& tx = xs[static_cast<std::size_t>(x)];
            const double top = map.at(tx.lo, ty.lo) + (map.at(tx.hi, ty.lo) - map.at(tx.lo, ty.lo)) * tx.frac;
            const double bottom =
                map.at(tx.lo, ty.hi) + (map.at(tx.hi, ty.hi) - map.at(tx.lo, ty.hi)) * tx.frac;
            out.at(x, y) = top + (bottom - top) * ty.frac;
        }
    }
    return out;
}

Mask mask_from_image(const ImageBuffer& img, float threshold) {
    if (img.channels() != 1) {
        throw Error(Errc::channel_count,
                    "mask image must have 1 channel, got " + std::to_string(img.channels()));
    }
    std::vector<std::uint8_t> bits(img.pixel_count());
    const auto data = img.data();
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = data[i] > threshold ? 1 : 0;
    return Mask(img.width(), img.height(), std::move(bits));
}

ImageBuffer mask_to_image(const Mask& mask) {
    ImageBuffer out(mask.width(), mask.height(), 1);
    auto data = out.data();
    const auto bits = mask.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) data[i] = bits[i] ? 1.0f : 0.0f;
    return out;
}

ImageBuffer to_rgb(const ImageBuffer& img) {
    if (img.channels() == 3) return img;
    ImageBuffer out(img.width(), img.height(), 3);
    const auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
    }
    return out;
}

} // namespace whatif
