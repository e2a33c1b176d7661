#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace whatif {

enum class Errc {
    decode,
    unsupported_format,
    dims,
    channel_count,
    all_unknown,
    no_source,
    graph,
    weight,
    cam_incompatible,
    shape,
    class_range,
    invalid_argument,
    io,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what);
    Error(Errc code, const std::string& what, std::size_t byte_offset);

    Errc code() const noexcept { return code_; }

    /// Set only for decode errors.
    std::optional<std::size_t> byte_offset() const noexcept { return offset_; }

  private:
    Errc code_;
    std::optional<std::size_t> offset_;
};

} // namespace whatif
