#include "whatif/telea.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <utility>

#include "whatif/error.hpp"

namespace whatif {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kWeightFloor = 1e-6;
constexpr int kDx[4] = {-1, 1, 0, 0};
constexpr int kDy[4] = {0, 0, -1, 1};

// Min-heap entry; ties resolve to the lower row-major index.
struct BandEntry {
    double t;
    std::size_t index;
    bool operator>(const BandEntry& other) const noexcept {
        return t != other.t ? t > other.t : index > other.index;
    }
};

using BandHeap = std::priority_queue<BandEntry, std::vector<BandEntry>, std::greater<>>;

// Upwind solution of |grad T| = 1 at (x, y) from its known 4-neighbors.
double solve_eikonal(const MarchState& s, int x, int y) {
    const int w = s.width();
    const int h = s.height();
    auto known_t = [&](int nx, int ny) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h || !s.known(nx, ny)) return kInf;
        return s.arrival.at(nx, ny);
    };
    const double a = std::min(known_t(x - 1, y), known_t(x + 1, y));
    const double b = std::min(known_t(x, y - 1), known_t(x, y + 1));
    if (a == kInf && b == kInf) return kInf;
    if (a == kInf || b == kInf || std::abs(a - b) >= 1.0) return std::min(a, b) + 1.0;
    const double d = a - b;
    return 0.5 * (a + b + std::sqrt(2.0 - d * d));
}

// One component of grad T from known neighbors: central, one-sided, or zero.
double arrival_slope(const MarchState& s, int x, int y, int dx, int dy) {
    const int w = s.width();
    const int h = s.height();
    auto known_at = [&](int nx, int ny) {
        return nx >= 0 && ny >= 0 && nx < w && ny < h && s.known(nx, ny);
    };
    const bool fwd = known_at(x + dx, y + dy);
    const bool bwd = known_at(x - dx, y - dy);
    const double t = s.arrival.at(x, y);
    if (fwd && bwd) return 0.5 * (s.arrival.at(x + dx, y + dy) - s.arrival.at(x - dx, y - dy));
    if (fwd) return s.arrival.at(x + dx, y + dy) - t;
    if (bwd) return t - s.arrival.at(x - dx, y - dy);
    return 0.0;
}

} // namespace

MarchState fast_march(const Mask& mask, const FinalizeFn& on_finalize) {
    const int w = mask.width();
    const int h = mask.height();
    if (mask.all()) throw Error(Errc::all_unknown, "mask covers the entire image; nothing to march from");

    MarchState s;
    s.arrival = ScalarMap(w, h, kInf);
    s.flags.assign(mask.pixel_count(), MarchFlag::unknown);
    const auto bits = mask.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (!bits[i]) {
            s.flags[i] = MarchFlag::known;
            s.arrival.values[i] = 0.0;
        }
    }

    BandHeap band;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (mask.at(x, y)) continue;
            bool touches_hole = false;
            for (int k = 0; k < 4 && !touches_hole; ++k) {
                const int nx = x + kDx[k];
                const int ny = y + kDy[k];
                touches_hole = nx >= 0 && ny >= 0 && nx < w && ny < h && mask.at(nx, ny);
            }
            if (touches_hole) {
                const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                      static_cast<std::size_t>(x);
                s.flags[i] = MarchFlag::band;
                band.push({0.0, i});
            }
        }
    }

    while (!band.empty()) {
        const BandEntry top = band.top();
        band.pop();
        if (s.flags[top.index] == MarchFlag::known || top.t != s.arrival.values[top.index]) continue;
        const int x = static_cast<int>(top.index % static_cast<std::size_t>(w));
        const int y = static_cast<int>(top.index / static_cast<std::size_t>(w));
        if (bits[top.index] && on_finalize) on_finalize(x, y, s);
        s.flags[top.index] = MarchFlag::known;

        for (int k = 0; k < 4; ++k) {
            const int nx = x + kDx[k];
            const int ny = y + kDy[k];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t ni = static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) +
                                   static_cast<std::size_t>(nx);
            if (s.flags[ni] == MarchFlag::known) continue;
            const double t = solve_eikonal(s, nx, ny);
            if (t < s.arrival.values[ni]) {
                s.arrival.values[ni] = t;
                s.flags[ni] = MarchFlag::band;
                band.push({t, ni});
            }
        }
    }
    return s;
}

ScalarMap march_distance(const Mask& mask) { return fast_march(mask).arrival; }

ImageBuffer inpaint_telea(const ImageBuffer& img, const Mask& mask, int radius) {
    require_same_dims(img, mask);
    if (radius < 1) throw Error(Errc::invalid_argument, "inpainting radius must be at least 1");
    if (mask.none()) return img;

    ImageBuffer out = img;
    const int w = img.width();
    const int h = img.height();
    const int channels = img.channels();

    auto fill = [&](int x, int y, const MarchState& s) {
        double gx = arrival_slope(s, x, y, 1, 0);
        double gy = arrival_slope(s, x, y, 0, 1);
        const double gnorm = std::hypot(gx, gy);
        if (gnorm > 0.0) {
            gx /= gnorm;
            gy /= gnorm;
        }
        const double tp = s.arrival.at(x, y);

        double acc[3] = {0.0, 0.0, 0.0};
        double lo[3] = {kInf, kInf, kInf};
        double hi[3] = {-kInf, -kInf, -kInf};
        double total = 0.0;
        const int y0 = std::max(0, y - radius);
        const int y1 = std::min(h - 1, y + radius);
        const int x0 = std::max(0, x - radius);
        const int x1 = std::min(w - 1, x + radius);
        for (int qy = y0; qy <= y1; ++qy) {
            for (int qx = x0; qx <= x1; ++qx) {
                if ((qx == x && qy == y) || !s.known(qx, qy)) continue;
                const double rx = x - qx;
                const double ry = y - qy;
                const double r2 = rx * rx + ry * ry;
                const double dir = gnorm > 0.0 ? std::abs(rx * gx + ry * gy) / std::sqrt(r2) : 1.0;
                const double lev = 1.0 / (1.0 + std::abs(tp - s.arrival.at(qx, qy)));
                const double weight = std::max(dir * lev / r2, kWeightFloor);
                total += weight;
                for (int c = 0; c < channels; ++c) {
                    const double v = out.at(qx, qy, c);
                    acc[c] += weight * v;
                    lo[c] = std::min(lo[c], v);
                    hi[c] = std::max(hi[c], v);
                }
            }
        }
        // A finalized pixel always has a known 4-neighbor, so total > 0.
        for (int c = 0; c < channels; ++c) {
            out.at(x, y, c) = static_cast<float>(std::clamp(acc[c] / total, lo[c], hi[c]));
        }
    };

    fast_march(mask, fill);
    return out;
}

} // namespace whatif
