#pragma once

#include <cstdint>
#include <vector>

#include "whatif/image.hpp"
#include "whatif/rng.hpp"

namespace whatif {

struct PatchMatchParams {
    int patch_size = 7;
    int iterations = 5;
    int pyramid_min = 32;
    double search_decay = 0.5;
    std::uint64_t rng_seed = 0;

    /// Throws Error(invalid_argument) unless patch_size is odd and >= 3,
    /// iterations >= 1, pyramid_min >= 1 and search_decay is in (0, 1).
    void validate() const;
};

struct Offset {
    int dx = 0;
    int dy = 0;
    friend bool operator==(const Offset&, const Offset&) = default;
};

/// Patch correspondences for every target pixel of one pyramid level.
///
/// A target is a pixel whose (image-clipped) patch window touches the hole; a
/// source is a patch center whose full window lies inside the image and
/// contains no hole pixel. Offsets are stored for every pixel but are only
/// meaningful for targets.
class NearestNeighborField {
  public:
    NearestNeighborField() = default;

    /// Targets are derived from the hole.
    NearestNeighborField(const Mask& hole, int patch_size);
    /// Explicit target set; sources still exclude any patch touching `hole`.
    NearestNeighborField(const Mask& hole, const Mask& targets, int patch_size);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int patch_size() const noexcept { return patch_size_; }
    int radius() const noexcept { return patch_size_ / 2; }

    const std::vector<std::size_t>& targets() const noexcept { return targets_; }
    bool is_target(int x, int y) const noexcept { return is_target_[index(x, y)] != 0; }
    bool is_source(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_ && is_source_[index(x, y)] != 0;
    }
    const std::vector<std::size_t>& sources() const noexcept { return sources_; }

    Offset offset(int x, int y) const noexcept { return offsets_[index(x, y)]; }
    double cost(int x, int y) const noexcept { return costs_[index(x, y)]; }
    void assign(int x, int y, Offset off, double cost) noexcept {
        offsets_[index(x, y)] = off;
        costs_[index(x, y)] = cost;
    }

    /// Sum of costs over all targets.
    double total_cost() const noexcept;

    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

  private:
    void build(const Mask& hole, const Mask* targets);

    int width_ = 0;
    int height_ = 0;
    int patch_size_ = 0;
    std::vector<std::uint8_t> is_target_;
    std::vector<std::uint8_t> is_source_;
    std::vector<std::size_t> targets_;
    std::vector<std::size_t> sources_;
    std::vector<Offset> offsets_;
    std::vector<double> costs_;
};

/// Sum of squared differences between the patch at `target` (clipped to the
/// image) and the patch at `source`, over all channels. Stops accumulating once
/// the sum reaches `limit`, returning a value >= limit.
double patch_ssd(const ImageBuffer& img, int tx, int ty, int sx, int sy, int radius,
                 double limit = 1e300);

/// Gives every target a uniformly random valid source.
/// Throws Error(no_source) when no valid source patch exists.
void randomize_nnf(NearestNeighborField& nnf, const ImageBuffer& img, Xoshiro256& rng);

/// Recomputes every target cost against `img` without changing offsets.
void refresh_costs(NearestNeighborField& nnf, const ImageBuffer& img);

/// One propagation + random-search sweep. Even iterations scan top-left to
/// bottom-right and take candidates from the left and upper neighbors; odd
/// iterations scan in reverse with the right and lower neighbors. Random
/// candidates are drawn around the current best offset with radius
/// max(w, h) * search_decay^k while that radius is >= 1. A candidate is kept
/// only if its cost is strictly lower, so the total cost never increases.
NearestNeighborField nnf_iterate(NearestNeighborField nnf, const ImageBuffer& img, int iteration,
                                 Xoshiro256& rng, double search_decay = 0.5);

/// Replaces every hole pixel with the uniform average of the values that all
/// overlapping matched source patches assign to it.
ImageBuffer vote(const NearestNeighborField& nnf, const ImageBuffer& img, const Mask& hole);

/// Coarse-to-fine hole filling: Telea-initialized coarsest level, then
/// `iterations` rounds of NNF improvement and voting per level, upsampling the
/// fill into the next level. Pixels outside the mask are copied bit-for-bit.
ImageBuffer inpaint_patchmatch(const ImageBuffer& img, const Mask& mask,
                               const PatchMatchParams& params = {});

} // namespace whatif
