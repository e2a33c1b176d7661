#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "whatif/image.hpp"

namespace whatif {

enum class MarchFlag : std::uint8_t { known, band, unknown };

/// Fast-marching front state. Known pixels outside the mask start at T = 0;
/// the pixels of the initial band are the known pixels touching the mask.
struct MarchState {
    ScalarMap arrival;
    std::vector<MarchFlag> flags;

    int width() const noexcept { return arrival.width; }
    int height() const noexcept { return arrival.height; }
    bool known(int x, int y) const noexcept {
        return flags[static_cast<std::size_t>(y) * static_cast<std::size_t>(arrival.width) +
                     static_cast<std::size_t>(x)] == MarchFlag::known;
    }
};

/// Called once per masked pixel, in non-decreasing arrival order (ties by
/// row-major index), right before the pixel becomes known. At that point the
/// pixel's arrival time is final.
using FinalizeFn = std::function<void(int x, int y, const MarchState&)>;

/// Runs the fast-marching method outward from the mask boundary, solving
/// |grad T| = 1 with the first-order upwind quadratic update.
/// Throws Error(all_unknown) if the mask has no false pixel.
MarchState fast_march(const Mask& mask, const FinalizeFn& on_finalize = {});

/// Arrival-time map: 0 outside the mask, positive inside.
ScalarMap march_distance(const Mask& mask);

inline constexpr int kDefaultTeleaRadius = 5;

/// Fast-marching inpainting. Every masked pixel is filled, in arrival order, with
/// a normalized weighted average of the already-known pixels within Chebyshev
/// distance `radius`. The weight is the product of
///   direction  |<(p - q)/|p - q|, grad T(p)/|grad T(p)|>|  (1 when grad T vanishes)
///   distance   1 / |p - q|^2
///   level set  1 / (1 + |T(p) - T(q)|)
/// floored at 1e-6. Pixels outside the mask are copied bit-for-bit.
ImageBuffer inpaint_telea(const ImageBuffer& img, const Mask& mask, int radius = kDefaultTeleaRadius);

} // namespace whatif
