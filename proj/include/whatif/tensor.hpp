#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace whatif {

using Shape = std::vector<int>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major float tensor. Activations use NCHW, conv weights OIHW.
class TensorF32 {
  public:
    TensorF32() = default;
    explicit TensorF32(Shape shape, float fill = 0.0f);
    /// Throws Error(shape) when the data length does not match or a value is not finite.
    TensorF32(Shape shape, std::vector<float> data);

    const Shape& shape() const noexcept { return shape_; }
    int rank() const noexcept { return static_cast<int>(shape_.size()); }
    int dim(int i) const noexcept { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    /// NCHW element access; valid for rank-4 tensors only.
    float at(int n, int c, int y, int x) const noexcept { return data_[offset(n, c, y, x)]; }
    float& at(int n, int c, int y, int x) noexcept { return data_[offset(n, c, y, x)]; }

    std::size_t offset(int n, int c, int y, int x) const noexcept {
        return ((static_cast<std::size_t>(n) * static_cast<std::size_t>(shape_[1]) + static_cast<std::size_t>(c)) *
                    static_cast<std::size_t>(shape_[2]) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(shape_[3]) +
               static_cast<std::size_t>(x);
    }

    friend bool operator==(const TensorF32&, const TensorF32&) = default;

  private:
    Shape shape_;
    std::vector<float> data_;
};

} // namespace whatif
