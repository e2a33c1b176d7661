#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <png.h>

#include "oracles.hpp"
#include "whatif/codec.hpp"
#include "whatif/error.hpp"
#include "whatif/image.hpp"

using namespace whatif;

namespace {

// Minimal PNG writer through libpng directly, so decode tests do not depend on encode_image.
Bytes raw_png(int w, int h, int color_type, int depth, const std::vector<std::uint8_t>& rows) {
    Bytes out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    png_set_write_fn(
        png, &out,
        [](png_structp p, png_bytep data, png_size_t n) {
            auto* o = static_cast<Bytes*>(png_get_io_ptr(p));
            o->insert(o->end(), data, data + n);
        },
        nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = rows.size() / static_cast<std::size_t>(h);
    for (int y = 0; y < h; ++y) png_write_row(png, rows.data() + stride * static_cast<std::size_t>(y));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

} // namespace

TEST_CASE("decode: white RGB pixel maps to ones") {
    const ImageBuffer img = decode_image(raw_png(1, 1, PNG_COLOR_TYPE_RGB, 8, {255, 255, 255}));
    CHECK(img == ImageBuffer(1, 1, 3, {1, 1, 1}));
}

TEST_CASE("decode: gray PNG keeps one channel and maps v/255") {
    const ImageBuffer img = decode_image(raw_png(2, 1, PNG_COLOR_TYPE_GRAY, 8, {0, 128}));
    REQUIRE(img.channels() == 1);
    CHECK(img.at(0, 0) == 0.0f);
    CHECK(img.at(1, 0) == doctest::Approx(128.0 / 255.0).epsilon(1e-7));
}

TEST_CASE("decode: alpha is composited over white") {
    const ImageBuffer img = decode_image(raw_png(1, 1, PNG_COLOR_TYPE_RGBA, 8, {0, 0, 0, 0}));
    CHECK(img == ImageBuffer(1, 1, 3, {1, 1, 1}));
    const ImageBuffer half = decode_image(raw_png(1, 1, PNG_COLOR_TYPE_GRAY_ALPHA, 8, {0, 255}));
    CHECK(half.channels() == 1);
    CHECK(half.at(0, 0) == 0.0f);
}

TEST_CASE("decode: 16-bit PNG is unsupported") {
    const Bytes png = raw_png(1, 1, PNG_COLOR_TYPE_GRAY, 16, {0x12, 0x34});
    try {
        decode_image(png);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unsupported_format);
    }
}

TEST_CASE("decode: corrupt streams report decode errors with an offset") {
    const Bytes junk{'n', 'o', 't', ' ', 'a', 'n', ' ', 'i', 'm', 'a', 'g', 'e'};
    try {
        decode_image(junk);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::decode);
        CHECK(e.byte_offset().has_value());
    }
    Bytes truncated = encode_image(ImageBuffer(8, 8, 3));
    truncated.resize(truncated.size() / 2);
    try {
        decode_image(truncated);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::decode);
    }
    const Bytes jpeg_head{0xFF, 0xD8, 0xFF, 0xE0, 0x00, 0x10};
    CHECK_THROWS_AS(decode_image(jpeg_head), Error);
}

TEST_CASE("encode: black round trip and half quantizes up") {
    CHECK(decode_image(encode_image(ImageBuffer(1, 1, 3, {0, 0, 0}))) == ImageBuffer(1, 1, 3, {0, 0, 0}));
    const ImageBuffer gray = decode_image(encode_image(ImageBuffer(1, 1, 1, {0.5f})));
    CHECK(quantize(gray.at(0, 0)) == 128);
    CHECK(quantize(0.5f) == 128);
}

TEST_CASE("encode: 256x256 random image decodes to its direct quantization") {
    Xoshiro256 rng(11);
    const ImageBuffer src = oracle::random_image(rng, 256, 256, 3);
    const ImageBuffer back = decode_image(encode_image(src));
    REQUIRE(back.channels() == 3);
    bool same = true;
    for (std::size_t i = 0; i < src.data().size(); ++i) {
        const double v = src.data()[i];
        const long q = std::clamp(static_cast<long>(std::floor(v * 255.0 + 0.5)), 0L, 255L);
        if (back.data()[i] != static_cast<float>(q) / 255.0f) same = false;
    }
    CHECK(same);
    // decode . encode . decode is idempotent after the first quantization
    CHECK(decode_image(encode_image(back)) == back);
    CHECK(encode_image(back) == encode_image(back));
}

TEST_CASE("jpeg: colour and gray fixtures decode close to the lossless source") {
    const ImageBuffer png = decode_image(read_file(oracle::fixture("toy/image.png")));
    const ImageBuffer jpg = decode_image(read_file(oracle::fixture("toy/image.jpg")));
    REQUIRE(jpg.width() == png.width());
    REQUIRE(jpg.height() == png.height());
    REQUIRE(jpg.channels() == 3);
    double err = 0;
    for (std::size_t i = 0; i < png.data().size(); ++i) err += std::fabs(png.data()[i] - jpg.data()[i]);
    CHECK(err / static_cast<double>(png.data().size()) < 0.03);
    const ImageBuffer gray = decode_image(read_file(oracle::fixture("toy/gray.jpg")));
    CHECK(gray.channels() == 1);
    CHECK(gray.width() == png.width());
}

TEST_CASE("resize: identity, hand example, constants and range") {
    Xoshiro256 rng(3);
    const ImageBuffer img = oracle::random_image(rng, 13, 7, 3);
    const ImageBuffer same = resize_bilinear(img, 13, 7);
    for (std::size_t i = 0; i < img.data().size(); ++i) CHECK(std::fabs(same.data()[i] - img.data()[i]) <= 1e-6);

    const ImageBuffer up = resize_bilinear(ImageBuffer(2, 1, 1, {0, 1}), 4, 1);
    CHECK(up.at(0, 0) == doctest::Approx(0.0));
    CHECK(up.at(1, 0) == doctest::Approx(0.25));
    CHECK(up.at(2, 0) == doctest::Approx(0.75));
    CHECK(up.at(3, 0) == doctest::Approx(1.0));

    const ImageBuffer flat(5, 5, 1, std::vector<float>(25, 0.3f));
    const ImageBuffer stretched = resize_bilinear(flat, 17, 3);
    for (float v : stretched.data()) CHECK(v == doctest::Approx(0.3f).epsilon(1e-6));

    for (int trial = 0; trial < 20; ++trial) {
        const int w = 1 + static_cast<int>(rng.below(20)), h = 1 + static_cast<int>(rng.below(20));
        const ImageBuffer src = oracle::random_image(rng, w, h, 1);
        const auto [lo, hi] = std::minmax_element(src.data().begin(), src.data().end());
        const ImageBuffer out =
            resize_bilinear(src, 1 + static_cast<int>(rng.below(30)), 1 + static_cast<int>(rng.below(30)));
        for (float v : out.data()) {
            CHECK(v >= *lo);
            CHECK(v <= *hi);
        }
    }
}

TEST_CASE("mask_from_image: threshold is strict and needs one channel") {
    CHECK(mask_from_image(ImageBuffer(3, 2, 1)).none());
    CHECK(mask_from_image(ImageBuffer(3, 2, 1, std::vector<float>(6, 1.0f))).all());
    const Mask m = mask_from_image(ImageBuffer(2, 1, 1, {0.2f, 0.8f}), 0.5f);
    CHECK_FALSE(m.at(0, 0));
    CHECK(m.at(1, 0));
    CHECK_FALSE(mask_from_image(ImageBuffer(1, 1, 1, {0.5f})).at(0, 0));
    try {
        mask_from_image(ImageBuffer(2, 2, 3));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::channel_count);
    }
    CHECK(mask_from_image(mask_to_image(m)) == m);
}

TEST_CASE("image invariants are enforced") {
    CHECK_THROWS_AS(ImageBuffer(0, 3, 1), Error);
    CHECK_THROWS_AS(ImageBuffer(2, 2, 2), Error);
    CHECK_THROWS_AS(ImageBuffer(1, 1, 1, {1.5f}), Error);
    CHECK_THROWS_AS(ImageBuffer(1, 1, 1, {std::nanf("")}), Error);
    CHECK_THROWS_AS(ImageBuffer(2, 1, 1, {0.5f}), Error);
    CHECK_THROWS_AS(require_same_dims(ImageBuffer(2, 2, 1), Mask(2, 3)), Error);
}
