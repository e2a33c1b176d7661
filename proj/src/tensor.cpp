#include "whatif/tensor.hpp"

#include <cmath>

#include "whatif/error.hpp"

namespace whatif {

std::size_t element_count(const Shape& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw Error(Errc::shape, "negative dimension in shape " + to_string(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string to_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

TensorF32::TensorF32(Shape shape, float fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

TensorF32::TensorF32(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
        throw Error(Errc::shape, "tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                                     to_string(shape_));
    }
    for (float v : data_) {
        if (!std::isfinite(v)) throw Error(Errc::shape, "tensor contains a non-finite value");
    }
}

} // namespace whatif
