#include "whatif/encoding.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include "whatif/error.hpp"

namespace whatif {

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.starts_with("data:")) {
        const auto comma = text.find(',');
        if (comma == std::string_view::npos) throw Error(Errc::decode, "data URL without payload", 0);
        text.remove_prefix(comma + 1);
    }
    std::string clean;
    clean.reserve(text.size() + 3);
    for (char c : text) {
        if (c == '\n' || c == '\r' || c == ' ' || c == '\t') continue;
        clean.push_back(c);
    }
    while (clean.size() % 4 != 0) clean.push_back('=');
    std::size_t padding = 0;
    for (auto it = clean.rbegin(); it != clean.rend() && *it == '=' && padding < 2; ++it) ++padding;

    std::vector<std::uint8_t> out(3 * (clean.size() / 4));
    if (clean.empty()) return out;
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                  static_cast<int>(clean.size()));
    if (n < 0) throw Error(Errc::decode, "malformed base64 payload", 0);
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

std::string random_token(std::size_t bytes) {
    std::vector<std::uint8_t> raw(bytes);
    if (RAND_bytes(raw.data(), static_cast<int>(raw.size())) != 1) {
        throw Error(Errc::io, "system random generator unavailable");
    }
    std::string token = base64_encode(raw);
    while (!token.empty() && token.back() == '=') token.pop_back();
    for (char& c : token) {
        if (c == '+') c = '-';
        if (c == '/') c = '_';
    }
    return token;
}

} // namespace whatif
