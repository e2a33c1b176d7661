#pragma once

#include <span>

#include "whatif/tensor.hpp"

/// Reference CPU operators for NCHW float tensors. Reductions accumulate in double.
namespace whatif::nn {

/// Output spatial size for a sliding window: floor((in + 2 pad - k) / stride) + 1,
/// or the ceiling variant. Returns 0 when the window does not fit.
int window_output_size(int in, int kernel, int stride, int padding, bool ceil_mode = false);

/// Direct cross-correlation (no kernel flip) with zero padding.
/// weights are (Cout, Cin, Kh, Kw); bias is (Cout) or empty.
/// `fused_relu` clamps the output at zero.
TensorF32 conv2d(const TensorF32& input, const TensorF32& weights, const TensorF32& bias, int stride,
                 int padding, bool fused_relu = false);

TensorF32 relu(const TensorF32& input);

/// Square max window. Padded cells never win. With ceil_mode the last window may
/// run past the input edge as long as it starts inside the input or left padding.
TensorF32 maxpool2d(const TensorF32& input, int kernel, int stride, int padding = 0, bool ceil_mode = false);

/// (N, C, H, W) -> (N, C, 1, 1) spatial mean.
TensorF32 global_avg_pool(const TensorF32& input);

/// Stacks inputs along C; N, H and W must agree.
TensorF32 concat_channels(std::span<const TensorF32* const> inputs);

/// Softmax over the channel axis at every (n, y, x), with max subtraction.
TensorF32 softmax(const TensorF32& input);

} // namespace whatif::nn
