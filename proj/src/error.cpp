#include "whatif/error.hpp"

namespace whatif {

std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::decode: return "decode";
    case Errc::unsupported_format: return "unsupported_format";
    case Errc::dims: return "dims";
    case Errc::channel_count: return "channel_count";
    case Errc::all_unknown: return "all_unknown";
    case Errc::no_source: return "no_source";
    case Errc::graph: return "graph";
    case Errc::weight: return "weight";
    case Errc::cam_incompatible: return "cam_incompatible";
    case Errc::shape: return "shape";
    case Errc::class_range: return "class_range";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::io: return "io";
    }
    return "unknown";
}

Error::Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

Error::Error(Errc code, const std::string& what, std::size_t byte_offset)
    : std::runtime_error(what + " (at byte " + std::to_string(byte_offset) + ")"), code_(code),
      offset_(byte_offset) {}

} // namespace whatif
