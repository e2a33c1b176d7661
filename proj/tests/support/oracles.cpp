#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>

#include <json.hpp>

namespace oracle {

using whatif::ImageBuffer;
using whatif::Mask;
using whatif::TensorF32;
using whatif::Xoshiro256;

namespace {

long double get(const TensorF32& t, int n, int c, int y, int x) {
    const auto& s = t.shape();
    const std::size_t i = ((static_cast<std::size_t>(n) * s[1] + c) * s[2] + y) * s[3] + x;
    return t.data()[i];
}

Dense make(int n, int c, int h, int w) {
    Dense d;
    d.shape = {n, c, h, w};
    d.values.assign(static_cast<std::size_t>(n) * c * h * w, 0.0L);
    return d;
}

long double& put(Dense& d, int n, int c, int y, int x) {
    const auto& s = d.shape;
    return d.values[((static_cast<std::size_t>(n) * s[1] + c) * s[2] + y) * s[3] + x];
}

} // namespace

TensorF32 random_tensor(Xoshiro256& rng, const std::vector<int>& shape, double lo, double hi) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(lo + (hi - lo) * rng.uniform01());
    return TensorF32(shape, std::move(v));
}

Dense conv2d(const TensorF32& x, const TensorF32& w, const TensorF32& b, int stride, int pad, bool relu) {
    const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    const int F = w.shape()[0], K = w.shape()[2];
    const int OH = (H + 2 * pad - K) / stride + 1;
    const int OW = (W + 2 * pad - K) / stride + 1;
    Dense out = make(N, F, OH, OW);
    for (int n = 0; n < N; ++n)
        for (int f = 0; f < F; ++f)
            for (int oy = 0; oy < OH; ++oy)
                for (int ox = 0; ox < OW; ++ox) {
                    long double acc = b.data().empty() ? 0.0L : b.data()[static_cast<std::size_t>(f)];
                    for (int c = 0; c < C; ++c)
                        for (int ky = 0; ky < K; ++ky)
                            for (int kx = 0; kx < K; ++kx) {
                                const int iy = oy * stride + ky - pad;
                                const int ix = ox * stride + kx - pad;
                                if (iy < 0 || ix < 0 || iy >= H || ix >= W) continue;
                                acc += get(x, n, c, iy, ix) * get(w, f, c, ky, kx);
                            }
                    if (relu && acc < 0) acc = 0;
                    put(out, n, f, oy, ox) = acc;
                }
    return out;
}

Dense maxpool(const TensorF32& x, int k, int stride, int pad, bool ceil_mode) {
    const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    auto out_size = [&](int in) {
        // PyTorch rule: ceil mode drops a last window that starts in the right padding
        const int span = in + 2 * pad - k;
        int n = (ceil_mode ? (span + stride - 1) / stride : span / stride) + 1;
        if (ceil_mode && (n - 1) * stride >= in + pad) --n;
        return n;
    };
    const int OH = out_size(H), OW = out_size(W);
    Dense out = make(N, C, OH, OW);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int oy = 0; oy < OH; ++oy)
                for (int ox = 0; ox < OW; ++ox) {
                    long double best = -std::numeric_limits<long double>::infinity();
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = oy * stride + ky - pad;
                            const int ix = ox * stride + kx - pad;
                            if (iy < 0 || ix < 0 || iy >= H || ix >= W) continue;
                            best = std::max(best, get(x, n, c, iy, ix));
                        }
                    put(out, n, c, oy, ox) = best;
                }
    return out;
}

Dense global_avg_pool(const TensorF32& x) {
    const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    Dense out = make(N, C, 1, 1);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            long double s = 0;
            for (int y = 0; y < H; ++y)
                for (int xx = 0; xx < W; ++xx) s += get(x, n, c, y, xx);
            put(out, n, c, 0, 0) = s / (static_cast<long double>(H) * W);
        }
    return out;
}

Dense softmax(const TensorF32& x) {
    const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    Dense out = make(N, C, H, W);
    for (int n = 0; n < N; ++n)
        for (int y = 0; y < H; ++y)
            for (int xx = 0; xx < W; ++xx) {
                long double z = 0;
                for (int c = 0; c < C; ++c) z += std::exp(get(x, n, c, y, xx));
                for (int c = 0; c < C; ++c) put(out, n, c, y, xx) = std::exp(get(x, n, c, y, xx)) / z;
            }
    return out;
}

bool matches(const TensorF32& got, const Dense& want, double rel, double* worst) {
    if (got.shape() != want.shape) return false;
    double w = 0;
    bool ok = true;
    for (std::size_t i = 0; i < want.values.size(); ++i) {
        const long double diff = std::fabs(static_cast<long double>(got.data()[i]) - want.values[i]);
        const long double bound = rel * std::fabs(want.values[i]) + 1e-9L;
        if (diff > bound) ok = false;
        if (std::fabs(want.values[i]) > 0) w = std::max(w, static_cast<double>(diff / std::fabs(want.values[i])));
    }
    if (worst) *worst = w;
    return ok;
}

std::vector<double> boundary_distance(const Mask& mask) {
    const int w = mask.width(), h = mask.height();
    std::vector<double> d(static_cast<std::size_t>(w) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            double best = std::numeric_limits<double>::infinity();
            for (int qy = 0; qy < h; ++qy)
                for (int qx = 0; qx < w; ++qx)
                    if (!mask.at(qx, qy)) best = std::min(best, std::hypot(qx - x, qy - y));
            d[static_cast<std::size_t>(y) * w + x] = best;
        }
    return d;
}

double isolated_pixel_fill(const ImageBuffer& img, int x, int y, int c, int radius) {
    double num = 0, den = 0;
    for (int qy = y - radius; qy <= y + radius; ++qy)
        for (int qx = x - radius; qx <= x + radius; ++qx) {
            if (qx < 0 || qy < 0 || qx >= img.width() || qy >= img.height()) continue;
            if (qx == x && qy == y) continue;
            const double wgt = 1.0 / ((qx - x) * (qx - x) + (qy - y) * (qy - y));
            num += wgt * img.at(qx, qy, c);
            den += wgt;
        }
    return num / den;
}

double exhaustive_nnf_cost(const ImageBuffer& img, const Mask& hole, int patch_size) {
    const int r = patch_size / 2, w = img.width(), h = img.height(), ch = img.channels();
    auto touches_hole = [&](int cx, int cy) {
        for (int y = cy - r; y <= cy + r; ++y)
            for (int x = cx - r; x <= cx + r; ++x)
                if (x >= 0 && y >= 0 && x < w && y < h && hole.at(x, y)) return true;
        return false;
    };
    std::vector<std::pair<int, int>> sources;
    for (int y = r; y + r < h; ++y)
        for (int x = r; x + r < w; ++x)
            if (!touches_hole(x, y)) sources.emplace_back(x, y);
    double total = 0;
    for (int ty = 0; ty < h; ++ty)
        for (int tx = 0; tx < w; ++tx) {
            if (!touches_hole(tx, ty)) continue;
            double best = std::numeric_limits<double>::infinity();
            for (auto [sx, sy] : sources) {
                double ssd = 0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const int px = tx + dx, py = ty + dy;
                        if (px < 0 || py < 0 || px >= w || py >= h) continue;
                        for (int c = 0; c < ch; ++c) {
                            const double diff = img.at(px, py, c) - img.at(sx + dx, sy + dy, c);
                            ssd += diff * diff;
                        }
                    }
                best = std::min(best, ssd);
            }
            total += best;
        }
    return total;
}

whatif::ModelGraph random_cam_model(std::uint64_t seed, int channels, int size, int classes) {
    Xoshiro256 rng(seed);
    const int hidden = 4 + static_cast<int>(rng.below(5));
    const int k = rng.below(2) ? 3 : 1;
    std::map<std::string, std::vector<std::uint8_t>> blobs;
    auto blob = [&](const std::string& name, std::size_t n) {
        std::vector<std::uint8_t> bytes(n * 4);
        for (std::size_t i = 0; i < n; ++i) {
            const float v = static_cast<float>(rng.uniform01() * 2.0 - 1.0);
            std::memcpy(bytes.data() + i * 4, &v, 4); // little-endian host
        }
        blobs[name] = std::move(bytes);
    };
    blob("c1.w", static_cast<std::size_t>(hidden * channels * k * k));
    blob("c1.b", static_cast<std::size_t>(hidden));
    blob("c2.w", static_cast<std::size_t>(classes * hidden));
    blob("c2.b", static_cast<std::size_t>(classes));
    nlohmann::json m = {
        {"format", "whatif-model"},
        {"version", 1},
        {"input", {{"name", "data"}, {"shape", {1, channels, size, size}}}},
        {"layers",
         {
             {{"name", "c1"}, {"op", "conv2d"}, {"inputs", {"data"}}, {"in_channels", channels},
              {"out_channels", hidden}, {"kernel", k}, {"padding", k / 2}, {"weight", "c1.w"}, {"bias", "c1.b"}},
             {{"name", "r1"}, {"op", "relu"}, {"inputs", {"c1"}}},
             {{"name", "c2"}, {"op", "conv2d"}, {"inputs", {"r1"}}, {"in_channels", hidden},
              {"out_channels", classes}, {"kernel", 1}, {"weight", "c2.w"}, {"bias", "c2.b"}},
             {{"name", "gap"}, {"op", "global_avg_pool"}, {"inputs", {"c2"}}},
             {{"name", "prob"}, {"op", "softmax"}, {"inputs", {"gap"}}},
         }},
    };
    return whatif::load_model(m.dump(), [&](const std::string& name) -> std::optional<std::vector<std::uint8_t>> {
        auto it = blobs.find(name);
        if (it == blobs.end()) return std::nullopt;
        return it->second;
    });
}

ImageBuffer random_image(Xoshiro256& rng, int w, int h, int c) {
    std::vector<float> v(static_cast<std::size_t>(w) * h * c);
    for (auto& x : v) x = static_cast<float>(rng.uniform01());
    return ImageBuffer(w, h, c, std::move(v));
}

ImageBuffer periodic_texture(int w, int h, int period) {
    ImageBuffer img(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double u = 2.0 * M_PI * (x % period) / period;
            const double v = 2.0 * M_PI * (y % period) / period;
            img.at(x, y, 0) = static_cast<float>(0.5 + 0.4 * std::sin(u));
            img.at(x, y, 1) = static_cast<float>(0.5 + 0.4 * std::cos(v));
            img.at(x, y, 2) = static_cast<float>(0.5 + 0.2 * std::sin(u + v));
        }
    return img;
}

Mask rect_mask(int w, int h, int x0, int y0, int rw, int rh) {
    Mask m(w, h);
    for (int y = y0; y < y0 + rh; ++y)
        for (int x = x0; x < x0 + rw; ++x) m.set(x, y, true);
    return m;
}

Mask disk_mask(int w, int h, double cx, double cy, double r) {
    Mask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (std::hypot(x - cx, y - cy) <= r) m.set(x, y, true);
    return m;
}

std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(WHATIF_FIXTURES) / rel; }

Golden check_golden(const std::string& name, const std::string& bytes) {
    const auto path = fixture("golden/" + name);
    if (std::getenv("WHATIF_UPDATE_GOLDEN")) {
        std::filesystem::create_directories(path.parent_path());
        std::ofstream(path, std::ios::binary) << bytes;
        return Golden::updated;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) return Golden::missing;
    const std::string want((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return want == bytes ? Golden::match : Golden::mismatch;
}

} // namespace oracle
