#include "whatif/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "whatif/error.hpp"

namespace whatif::nn {

namespace {

void require_rank4(const TensorF32& t, const char* what) {
    if (t.rank() != 4) {
        throw Error(Errc::shape, std::string(what) + " must be rank 4 (NCHW), got " + to_string(t.shape()));
    }
}

// Smallest o with o * stride + k - pad >= 0 and largest with o * stride + k - pad < in.
void valid_range(int in, int out, int k, int stride, int pad, int& lo, int& hi) {
    const int first = pad - k;
    lo = first <= 0 ? 0 : (first + stride - 1) / stride;
    const int last = in - 1 + pad - k;
    hi = last < 0 ? -1 : std::min(out - 1, last / stride);
}

constexpr int kBlock = 4;

// dst[o][ox] += sum_i w[o][i] * row_i[ox * stride + shift] for ox in [ox0, ox1].
void accumulate_rows(double* dst, std::size_t plane, const float* const (&planes)[kBlock], std::size_t row,
                     int shift, const double (&w)[kBlock][kBlock], int ox0, int ox1, int stride) {
    const float* r0 = planes[0] + row;
    const float* r1 = planes[1] + row;
    const float* r2 = planes[2] + row;
    const float* r3 = planes[3] + row;
    double* d0 = dst;
    double* d1 = dst + plane;
    double* d2 = dst + 2 * plane;
    double* d3 = dst + 3 * plane;
    auto body = [&](int ox, std::ptrdiff_t at) {
        const double s0 = r0[at], s1 = r1[at], s2 = r2[at], s3 = r3[at];
        d0[ox] += w[0][0] * s0 + w[0][1] * s1 + w[0][2] * s2 + w[0][3] * s3;
        d1[ox] += w[1][0] * s0 + w[1][1] * s1 + w[1][2] * s2 + w[1][3] * s3;
        d2[ox] += w[2][0] * s0 + w[2][1] * s1 + w[2][2] * s2 + w[2][3] * s3;
        d3[ox] += w[3][0] * s0 + w[3][1] * s1 + w[3][2] * s2 + w[3][3] * s3;
    };
    if (stride == 1) {
        for (int ox = ox0; ox <= ox1; ++ox) body(ox, ox + shift);
    } else {
        for (int ox = ox0; ox <= ox1; ++ox) body(ox, static_cast<std::ptrdiff_t>(ox) * stride + shift);
    }
}

} // namespace

int window_output_size(int in, int kernel, int stride, int padding, bool ceil_mode) {
    const int span = in + 2 * padding - kernel;
    if (span < 0 || stride < 1) return 0;
    int out = (ceil_mode ? (span + stride - 1) / stride : span / stride) + 1;
    if (ceil_mode && (out - 1) * stride >= in + padding) --out;
    return out;
}

TensorF32 conv2d(const TensorF32& input, const TensorF32& weights, const TensorF32& bias, int stride,
                 int padding, bool fused_relu) {
    require_rank4(input, "conv2d input");
    require_rank4(weights, "conv2d weights");
    if (stride < 1 || padding < 0) throw Error(Errc::shape, "conv2d stride must be >= 1 and padding >= 0");
    const int n = input.dim(0);
    const int cin = input.dim(1);
    const int ih = input.dim(2);
    const int iw = input.dim(3);
    const int cout = weights.dim(0);
    const int kh = weights.dim(2);
    const int kw = weights.dim(3);
    if (weights.dim(1) != cin) {
        throw Error(Errc::shape, "conv2d expects " + std::to_string(weights.dim(1)) + " input channels, got " +
                                     std::to_string(cin));
    }
    if (bias.size() != 0 && bias.size() != static_cast<std::size_t>(cout)) {
        throw Error(Errc::shape, "conv2d bias has " + std::to_string(bias.size()) + " values for " +
                                     std::to_string(cout) + " output channels");
    }
    const int oh = window_output_size(ih, kh, stride, padding);
    const int ow = window_output_size(iw, kw, stride, padding);
    if (oh < 1 || ow < 1) throw Error(Errc::shape, "conv2d kernel larger than padded input");

    TensorF32 out({n, cout, oh, ow});
    const std::size_t plane_size = static_cast<std::size_t>(oh) * static_cast<std::size_t>(ow);
    // Four output channels share every input row load and four input channels
    // share every accumulator update. Missing channels in a block get zero weights.
    std::vector<double> acc(kBlock * plane_size);
    const auto in = input.data();
    const auto wt = weights.data();

    for (int b = 0; b < n; ++b) {
        for (int oc0 = 0; oc0 < cout; oc0 += kBlock) {
            const int ocn = std::min(kBlock, cout - oc0);
            for (int o = 0; o < kBlock; ++o) {
                const double init = o < ocn && bias.size() ? static_cast<double>(bias.data()[static_cast<std::size_t>(oc0 + o)]) : 0.0;
                std::fill_n(acc.begin() + static_cast<std::ptrdiff_t>(o * plane_size), plane_size, init);
            }
            for (int ic0 = 0; ic0 < cin; ic0 += kBlock) {
                const int icn = std::min(kBlock, cin - ic0);
                const float* planes[kBlock];
                for (int i = 0; i < kBlock; ++i) planes[i] = in.data() + input.offset(b, ic0 + std::min(i, icn - 1), 0, 0);
                for (int ky = 0; ky < kh; ++ky) {
                    int oy0 = 0;
                    int oy1 = 0;
                    valid_range(ih, oh, ky, stride, padding, oy0, oy1);
                    for (int kx = 0; kx < kw; ++kx) {
                        int ox0 = 0;
                        int ox1 = 0;
                        valid_range(iw, ow, kx, stride, padding, ox0, ox1);
                        if (ox0 > ox1) continue;
                        double w[kBlock][kBlock] = {};
                        for (int o = 0; o < ocn; ++o)
                            for (int i = 0; i < icn; ++i) w[o][i] = wt[weights.offset(oc0 + o, ic0 + i, ky, kx)];
                        for (int oy = oy0; oy <= oy1; ++oy) {
                            const std::size_t row_off = static_cast<std::size_t>(oy * stride + ky - padding) *
                                                        static_cast<std::size_t>(iw);
                            const std::size_t dst_off = static_cast<std::size_t>(oy) * static_cast<std::size_t>(ow);
                            accumulate_rows(acc.data() + dst_off, plane_size, planes, row_off, kx - padding, w, ox0, ox1,
                                            stride);
                        }
                    }
                }
            }
            for (int o = 0; o < ocn; ++o) {
                float* dst = out.data().data() + out.offset(b, oc0 + o, 0, 0);
                const double* src = acc.data() + static_cast<std::size_t>(o) * plane_size;
                for (std::size_t i = 0; i < plane_size; ++i) {
                    const double v = fused_relu ? std::max(src[i], 0.0) : src[i];
                    dst[i] = static_cast<float>(v);
                }
            }
        }
    }
    return out;
}

TensorF32 relu(const TensorF32& input) {
    TensorF32 out = input;
    for (float& v : out.data()) v = std::max(v, 0.0f);
    return out;
}

TensorF32 maxpool2d(const TensorF32& input, int kernel, int stride, int padding, bool ceil_mode) {
    require_rank4(input, "maxpool2d input");
    if (kernel < 1 || stride < 1 || padding < 0) {
        throw Error(Errc::shape, "maxpool2d kernel and stride must be >= 1, padding >= 0");
    }
    if (2 * padding > kernel) throw Error(Errc::shape, "maxpool2d padding must be at most half the kernel");
    const int n = input.dim(0);
    const int c = input.dim(1);
    const int ih = input.dim(2);
    const int iw = input.dim(3);
    const int oh = window_output_size(ih, kernel, stride, padding, ceil_mode);
    const int ow = window_output_size(iw, kernel, stride, padding, ceil_mode);
    if (oh < 1 || ow < 1) throw Error(Errc::shape, "maxpool2d window larger than padded input");

    TensorF32 out({n, c, oh, ow});
    for (int b = 0; b < n; ++b) {
        for (int ch = 0; ch < c; ++ch) {
            for (int oy = 0; oy < oh; ++oy) {
                const int y0 = std::max(oy * stride - padding, 0);
                const int y1 = std::min(oy * stride - padding + kernel, ih);
                for (int ox = 0; ox < ow; ++ox) {
                    const int x0 = std::max(ox * stride - padding, 0);
                    const int x1 = std::min(ox * stride - padding + kernel, iw);
                    float best = -std::numeric_limits<float>::infinity();
                    for (int y = y0; y < y1; ++y) {
                        for (int x = x0; x < x1; ++x) best = std::max(best, input.at(b, ch, y, x));
                    }
                    out.at(b, ch, oy, ox) = best;
                }
            }
        }
    }
    return out;
}

TensorF32 global_avg_pool(const TensorF32& input) {
    require_rank4(input, "global_avg_pool input");
    const int n = input.dim(0);
    const int c = input.dim(1);
    const std::size_t plane = static_cast<std::size_t>(input.dim(2)) * static_cast<std::size_t>(input.dim(3));
    if (plane == 0) throw Error(Errc::shape, "global_avg_pool over an empty plane");
    TensorF32 out({n, c, 1, 1});
    for (int b = 0; b < n; ++b) {
        for (int ch = 0; ch < c; ++ch) {
            const float* src = input.data().data() + input.offset(b, ch, 0, 0);
            double sum = 0.0;
            for (std::size_t i = 0; i < plane; ++i) sum += src[i];
            out.at(b, ch, 0, 0) = static_cast<float>(sum / static_cast<double>(plane));
        }
    }
    return out;
}

TensorF32 concat_channels(std::span<const TensorF32* const> inputs) {
    if (inputs.empty()) throw Error(Errc::shape, "concat_channels needs at least one input");
    for (const TensorF32* t : inputs) require_rank4(*t, "concat_channels input");
    const Shape& first = inputs.front()->shape();
    int channels = 0;
    for (const TensorF32* t : inputs) {
        if (t->dim(0) != first[0] || t->dim(2) != first[2] || t->dim(3) != first[3]) {
            throw Error(Errc::shape, "concat_channels inputs disagree: " + to_string(first) + " vs " +
                                         to_string(t->shape()));
        }
        channels += t->dim(1);
    }
    TensorF32 out({first[0], channels, first[2], first[3]});
    const std::size_t plane = static_cast<std::size_t>(first[2]) * static_cast<std::size_t>(first[3]);
    for (int b = 0; b < first[0]; ++b) {
        float* dst = out.data().data() + out.offset(b, 0, 0, 0);
        for (const TensorF32* t : inputs) {
            const std::size_t len = static_cast<std::size_t>(t->dim(1)) * plane;
            const float* src = t->data().data() + t->offset(b, 0, 0, 0);
            std::copy(src, src + len, dst);
            dst += len;
        }
    }
    return out;
}

TensorF32 softmax(const TensorF32& input) {
    require_rank4(input, "softmax input");
    const int n = input.dim(0);
    const int c = input.dim(1);
    const int h = input.dim(2);
    const int w = input.dim(3);
    if (c < 1) throw Error(Errc::shape, "softmax over zero channels");
    TensorF32 out(input.shape());
    std::vector<double> e(static_cast<std::size_t>(c));
    for (int b = 0; b < n; ++b) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double peak = -std::numeric_limits<double>::infinity();
                for (int ch = 0; ch < c; ++ch) peak = std::max(peak, static_cast<double>(input.at(b, ch, y, x)));
                double sum = 0.0;
                for (int ch = 0; ch < c; ++ch) {
                    e[static_cast<std::size_t>(ch)] = std::exp(static_cast<double>(input.at(b, ch, y, x)) - peak);
                    sum += e[static_cast<std::size_t>(ch)];
                }
                for (int ch = 0; ch < c; ++ch) {
                    out.at(b, ch, y, x) = static_cast<float>(e[static_cast<std::size_t>(ch)] / sum);
                }
            }
        }
    }
    return out;
}

} // namespace whatif::nn
