#include "whatif/patchmatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "whatif/error.hpp"
#include "whatif/telea.hpp"

namespace whatif {

namespace {

constexpr double kUnset = std::numeric_limits<double>::infinity();

// Summed-area table of hole pixels for O(1) window queries.
class HoleCounter {
  public:
    explicit HoleCounter(const Mask& hole)
        : w_(hole.width()), h_(hole.height()),
          sums_(static_cast<std::size_t>(w_ + 1) * static_cast<std::size_t>(h_ + 1), 0) {
        for (int y = 0; y < h_; ++y) {
            int row = 0;
            for (int x = 0; x < w_; ++x) {
                row += hole.at(x, y) ? 1 : 0;
                sums_[at(x + 1, y + 1)] = sums_[at(x + 1, y)] + row;
            }
        }
    }

    // Hole pixels inside [x0, x1] x [y0, y1] after clipping to the image.
    int count(int x0, int y0, int x1, int y1) const {
        x0 = std::max(x0, 0);
        y0 = std::max(y0, 0);
        x1 = std::min(x1, w_ - 1);
        y1 = std::min(y1, h_ - 1);
        if (x0 > x1 || y0 > y1) return 0;
        return sums_[at(x1 + 1, y1 + 1)] - sums_[at(x0, y1 + 1)] - sums_[at(x1 + 1, y0)] + sums_[at(x0, y0)];
    }

  private:
    std::size_t at(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(w_ + 1) + static_cast<std::size_t>(x);
    }
    int w_;
    int h_;
    std::vector<int> sums_;
};

struct Level {
    ImageBuffer image;
    Mask hole;
};

// 2x box reduction. A coarse pixel is a hole if any of its children is.
Level downsample(const Level& fine) {
    const int fw = fine.image.width();
    const int fh = fine.image.height();
    const int cw = (fw + 1) / 2;
    const int ch = (fh + 1) / 2;
    const int channels = fine.image.channels();
    Level coarse{ImageBuffer(cw, ch, channels), Mask(cw, ch)};
    for (int y = 0; y < ch; ++y) {
        for (int x = 0; x < cw; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            int n = 0;
            bool hole = false;
            for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                    const int fx = 2 * x + dx;
                    const int fy = 2 * y + dy;
                    if (fx >= fw || fy >= fh) continue;
                    if (fine.hole.at(fx, fy)) {
                        hole = true;
                        continue;
                    }
                    for (int c = 0; c < channels; ++c) acc[c] += fine.image.at(fx, fy, c);
                    ++n;
                }
            }
            coarse.hole.set(x, y, hole);
            for (int c = 0; c < channels; ++c) {
                coarse.image.at(x, y, c) = hole || n == 0 ? 0.0f : static_cast<float>(acc[c] / n);
            }
        }
    }
    return coarse;
}

bool has_source(const Mask& hole, int patch_size) {
    const int r = patch_size / 2;
    const HoleCounter counter(hole);
    for (int y = r; y < hole.height() - r; ++y) {
        for (int x = r; x < hole.width() - r; ++x) {
            if (counter.count(x - r, y - r, x + r, y + r) == 0) return true;
        }
    }
    return false;
}

// Seeds a finer NNF from the coarse one by doubling offsets; falls back to a
// random source where the doubled offset is not a valid source.
void upsample_nnf(const NearestNeighborField& coarse, NearestNeighborField& fine, const ImageBuffer& img,
                  Xoshiro256& rng) {
    const auto& sources = fine.sources();
    const int w = fine.width();
    for (std::size_t t : fine.targets()) {
        const int x = static_cast<int>(t % static_cast<std::size_t>(w));
        const int y = static_cast<int>(t / static_cast<std::size_t>(w));
        const int cx = std::min(x / 2, coarse.width() - 1);
        const int cy = std::min(y / 2, coarse.height() - 1);
        Offset off{};
        bool found = false;
        if (coarse.is_target(cx, cy)) {
            const Offset c = coarse.offset(cx, cy);
            off = {2 * c.dx, 2 * c.dy};
            found = fine.is_source(x + off.dx, y + off.dy);
        }
        if (!found) {
            const std::size_t s = sources[rng.below(sources.size())];
            off = {static_cast<int>(s % static_cast<std::size_t>(w)) - x,
                   static_cast<int>(s / static_cast<std::size_t>(w)) - y};
        }
        fine.assign(x, y, off, patch_ssd(img, x, y, x + off.dx, y + off.dy, fine.radius()));
    }
}

} // namespace

void PatchMatchParams::validate() const {
    if (patch_size < 3 || patch_size % 2 == 0) {
        throw Error(Errc::invalid_argument, "patch_size must be odd and >= 3, got " + std::to_string(patch_size));
    }
    if (iterations < 1) throw Error(Errc::invalid_argument, "iterations must be >= 1");
    if (pyramid_min < 1) throw Error(Errc::invalid_argument, "pyramid_min must be >= 1");
    if (!(search_decay > 0.0 && search_decay < 1.0)) {
        throw Error(Errc::invalid_argument, "search_decay must lie in (0, 1)");
    }
}

NearestNeighborField::NearestNeighborField(const Mask& hole, int patch_size)
    : width_(hole.width()), height_(hole.height()), patch_size_(patch_size) {
    build(hole, nullptr);
}

NearestNeighborField::NearestNeighborField(const Mask& hole, const Mask& targets, int patch_size)
    : width_(hole.width()), height_(hole.height()), patch_size_(patch_size) {
    if (targets.width() != width_ || targets.height() != height_) {
        throw Error(Errc::dims, "target mask dimensions differ from the hole mask");
    }
    build(hole, &targets);
}

void NearestNeighborField::build(const Mask& hole, const Mask* targets) {
    if (patch_size_ < 3 || patch_size_ % 2 == 0) {
        throw Error(Errc::invalid_argument, "patch_size must be odd and >= 3");
    }
    const int r = radius();
    const std::size_t n = hole.pixel_count();
    is_target_.assign(n, 0);
    is_source_.assign(n, 0);
    offsets_.assign(n, Offset{});
    costs_.assign(n, kUnset);
    targets_.clear();
    sources_.clear();

    const HoleCounter counter(hole);
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            const std::size_t i = index(x, y);
            const int holes = counter.count(x - r, y - r, x + r, y + r);
            const bool inside = x >= r && y >= r && x < width_ - r && y < height_ - r;
            if (inside && holes == 0) {
                is_source_[i] = 1;
                sources_.push_back(i);
            }
            const bool target = targets ? targets->at(x, y) : holes > 0;
            if (target) {
                is_target_[i] = 1;
                targets_.push_back(i);
            }
        }
    }
}

double NearestNeighborField::total_cost() const noexcept {
    double total = 0.0;
    for (std::size_t t : targets_) total += costs_[t];
    return total;
}

double patch_ssd(const ImageBuffer& img, int tx, int ty, int sx, int sy, int radius, double limit) {
    const int w = img.width();
    const int h = img.height();
    const int channels = img.channels();
    const int y0 = std::max(-radius, -ty);
    const int y1 = std::min(radius, h - 1 - ty);
    const int x0 = std::max(-radius, -tx);
    const int x1 = std::min(radius, w - 1 - tx);
    const auto data = img.data();
    const std::size_t run = static_cast<std::size_t>(x1 - x0 + 1) * static_cast<std::size_t>(channels);
    double sum = 0.0;
    for (int dy = y0; dy <= y1; ++dy) {
        const float* t = data.data() + img.index(tx + x0, ty + dy);
        const float* s = data.data() + img.index(sx + x0, sy + dy);
        double row = 0.0;
        for (std::size_t k = 0; k < run; ++k) {
            const double d = static_cast<double>(t[k]) - static_cast<double>(s[k]);
            row += d * d;
        }
        sum += row;
        if (sum >= limit) return sum;
    }
    return sum;
}

void randomize_nnf(NearestNeighborField& nnf, const ImageBuffer& img, Xoshiro256& rng) {
    const auto& sources = nnf.sources();
    if (sources.empty()) throw Error(Errc::no_source, "no hole-free patch fits inside the image");
    const int w = nnf.width();
    for (std::size_t t : nnf.targets()) {
        const int x = static_cast<int>(t % static_cast<std::size_t>(w));
        const int y = static_cast<int>(t / static_cast<std::size_t>(w));
        const std::size_t s = sources[rng.below(sources.size())];
        const int sx = static_cast<int>(s % static_cast<std::size_t>(w));
        const int sy = static_cast<int>(s / static_cast<std::size_t>(w));
        nnf.assign(x, y, {sx - x, sy - y}, patch_ssd(img, x, y, sx, sy, nnf.radius()));
    }
}

void refresh_costs(NearestNeighborField& nnf, const ImageBuffer& img) {
    const int w = nnf.width();
    for (std::size_t t : nnf.targets()) {
        const int x = static_cast<int>(t % static_cast<std::size_t>(w));
        const int y = static_cast<int>(t / static_cast<std::size_t>(w));
        const Offset off = nnf.offset(x, y);
        nnf.assign(x, y, off, patch_ssd(img, x, y, x + off.dx, y + off.dy, nnf.radius()));
    }
}

NearestNeighborField nnf_iterate(NearestNeighborField nnf, const ImageBuffer& img, int iteration,
                                 Xoshiro256& rng, double search_decay) {
    if (img.width() != nnf.width() || img.height() != nnf.height()) {
        throw Error(Errc::dims, "image and nearest-neighbor field dimensions differ");
    }
    const int w = nnf.width();
    const int h = nnf.height();
    const int r = nnf.radius();
    const bool forward = iteration % 2 == 0;
    const int step = forward ? -1 : 1;

    auto consider = [&](int x, int y, Offset cand) {
        const int sx = x + cand.dx;
        const int sy = y + cand.dy;
        if (!nnf.is_source(sx, sy)) return;
        const double current = nnf.cost(x, y);
        const double c = patch_ssd(img, x, y, sx, sy, r, current);
        if (c < current) nnf.assign(x, y, cand, c);
    };

    const auto& targets = nnf.targets();
    const std::size_t n = targets.size();
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t t = targets[forward ? k : n - 1 - k];
        const int x = static_cast<int>(t % static_cast<std::size_t>(w));
        const int y = static_cast<int>(t / static_cast<std::size_t>(w));

        const int px = x + step;
        if (px >= 0 && px < w && nnf.is_target(px, y)) consider(x, y, nnf.offset(px, y));
        const int py = y + step;
        if (py >= 0 && py < h && nnf.is_target(x, py)) consider(x, y, nnf.offset(x, py));

        for (double radius = std::max(w, h); radius >= 1.0; radius *= search_decay) {
            const int span = static_cast<int>(radius);
            const Offset best = nnf.offset(x, y);
            consider(x, y, {best.dx + rng.uniform_int(-span, span), best.dy + rng.uniform_int(-span, span)});
        }
    }
    return nnf;
}

ImageBuffer vote(const NearestNeighborField& nnf, const ImageBuffer& img, const Mask& hole) {
    require_same_dims(img, hole);
    if (img.width() != nnf.width() || img.height() != nnf.height()) {
        throw Error(Errc::dims, "image and nearest-neighbor field dimensions differ");
    }
    const int w = img.width();
    const int h = img.height();
    const int channels = img.channels();
    const int r = nnf.radius();
    std::vector<double> acc(img.data().size(), 0.0);
    std::vector<int> votes(img.pixel_count(), 0);

    for (std::size_t t : nnf.targets()) {
        const int x = static_cast<int>(t % static_cast<std::size_t>(w));
        const int y = static_cast<int>(t / static_cast<std::size_t>(w));
        const Offset off = nnf.offset(x, y);
        for (int dy = -r; dy <= r; ++dy) {
            const int hy = y + dy;
            if (hy < 0 || hy >= h) continue;
            for (int dx = -r; dx <= r; ++dx) {
                const int hx = x + dx;
                if (hx < 0 || hx >= w || !hole.at(hx, hy)) continue;
                const std::size_t dst = img.index(hx, hy);
                const std::size_t src = img.index(hx + off.dx, hy + off.dy);
                for (int c = 0; c < channels; ++c) acc[dst + static_cast<std::size_t>(c)] += img.data()[src + static_cast<std::size_t>(c)];
                ++votes[static_cast<std::size_t>(hy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(hx)];
            }
        }
    }

    ImageBuffer out = img;
    auto data = out.data();
    for (std::size_t i = 0; i < votes.size(); ++i) {
        if (votes[i] == 0) continue;
        for (int c = 0; c < channels; ++c) {
            const std::size_t k = i * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c);
            data[k] = std::clamp(static_cast<float>(acc[k] / votes[i]), 0.0f, 1.0f);
        }
    }
    return out;
}

ImageBuffer inpaint_patchmatch(const ImageBuffer& img, const Mask& mask, const PatchMatchParams& params) {
    require_same_dims(img, mask);
    params.validate();
    if (mask.all()) throw Error(Errc::all_unknown, "mask covers the entire image; no source region");
    if (mask.none()) return img;
    if (!has_source(mask, params.patch_size)) {
        throw Error(Errc::no_source, "hole leaves no " + std::to_string(params.patch_size) + "x" +
                                         std::to_string(params.patch_size) + " source patch");
    }

    std::vector<Level> pyramid{{img, mask}};
    for (;;) {
        const Level& top = pyramid.back();
        const int cw = (top.image.width() + 1) / 2;
        const int ch = (top.image.height() + 1) / 2;
        if (std::min(cw, ch) < params.pyramid_min) break;
        Level next = downsample(top);
        if (!has_source(next.hole, params.patch_size)) break;
        pyramid.push_back(std::move(next));
    }

    Xoshiro256 rng(params.rng_seed);
    ImageBuffer current;
    NearestNeighborField previous;
    for (std::size_t li = pyramid.size(); li-- > 0;) {
        const Level& level = pyramid[li];
        if (li + 1 == pyramid.size()) {
            current = inpaint_telea(level.image, level.hole);
        } else {
            const ImageBuffer seed = resize_bilinear(current, level.image.width(), level.image.height());
            current = level.image;
            auto dst = current.data();
            const auto src = seed.data();
            const auto bits = level.hole.bits();
            const auto channels = static_cast<std::size_t>(current.channels());
            for (std::size_t i = 0; i < bits.size(); ++i) {
                if (!bits[i]) continue;
                for (std::size_t c = 0; c < channels; ++c) dst[i * channels + c] = src[i * channels + c];
            }
        }

        NearestNeighborField nnf(level.hole, params.patch_size);
        if (li + 1 == pyramid.size()) {
            randomize_nnf(nnf, current, rng);
        } else {
            upsample_nnf(previous, nnf, current, rng);
        }

        for (int it = 0; it < params.iterations; ++it) {
            const double before = nnf.total_cost();
            nnf = nnf_iterate(std::move(nnf), current, it, rng, params.search_decay);
            if (nnf.total_cost() > before) throw std::logic_error("NNF cost increased during an iteration");
            current = vote(nnf, current, level.hole);
            refresh_costs(nnf, current);
        }
        previous = std::move(nnf);
    }

    // Outside the hole the pyramid base is the input itself; copy it exactly.
    ImageBuffer out = img;
    auto dst = out.data();
    const auto src = current.data();
    const auto bits = mask.bits();
    const auto channels = static_cast<std::size_t>(img.channels());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (!bits[i]) continue;
        for (std::size_t c = 0; c < channels; ++c) dst[i * channels + c] = src[i * channels + c];
    }
    return out;
}

} // namespace whatif
