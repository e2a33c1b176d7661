#include "whatif/codec.hpp"

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "whatif/error.hpp"

namespace whatif {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

// Pixels decoded to 8-bit, 1..4 interleaved channels (G, GA, RGB, RGBA).
struct RawPixels {
    int width = 0;
    int height = 0;
    int channels = 0;
    Bytes samples;
};

ImageBuffer to_image(const RawPixels& raw) {
    const bool has_alpha = raw.channels == 2 || raw.channels == 4;
    const int color = has_alpha ? raw.channels - 1 : raw.channels;
    ImageBuffer img(raw.width, raw.height, color);
    auto out = img.data();
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* px = raw.samples.data() + i * static_cast<std::size_t>(raw.channels);
        const float alpha = has_alpha ? px[color] / 255.0f : 1.0f;
        for (int c = 0; c < color; ++c) {
            float v = px[c] / 255.0f;
            if (has_alpha) v = v * alpha + (1.0f - alpha);
            out[i * static_cast<std::size_t>(color) + static_cast<std::size_t>(c)] = std::min(v, 1.0f);
        }
    }
    return img;
}

// ---- PNG ----------------------------------------------------------------
// The setjmp frames below hold only trivially destructible locals.

struct PngReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
    char message[192];
};

void png_read_bytes(png_structp png, png_bytep out, png_size_t n) {
    auto* r = static_cast<PngReader*>(png_get_io_ptr(png));
    if (n > r->size - r->pos) png_error(png, "unexpected end of stream");
    std::memcpy(out, r->data + r->pos, n);
    r->pos += n;
}

void png_on_error(png_structp png, png_const_charp msg) {
    auto* r = static_cast<PngReader*>(png_get_error_ptr(png));
    std::snprintf(r->message, sizeof(r->message), "%s", msg);
    png_longjmp(png, 1);
}

void png_on_warning(png_structp, png_const_charp) {}

struct PngHeader {
    png_uint_32 width;
    png_uint_32 height;
    int bit_depth;
    int color_type;
    int channels;
};

bool png_read_header(png_structp png, png_infop info, PngHeader* h) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_read_info(png, info);
    png_get_IHDR(png, info, &h->width, &h->height, &h->bit_depth, &h->color_type, nullptr, nullptr,
                 nullptr);
    if (h->bit_depth == 16) return true;
    if (h->color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (h->color_type == PNG_COLOR_TYPE_GRAY && h->bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    h->channels = png_get_channels(png, info);
    return true;
}

bool png_read_rows(png_structp png, png_bytepp rows) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_read_image(png, rows);
    png_read_end(png, nullptr);
    return true;
}

RawPixels decode_png(std::span<const std::uint8_t> bytes) {
    PngReader reader{bytes.data(), bytes.size(), 0, {0}};
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, &reader, png_on_error, png_on_warning);
    if (!png) throw Error(Errc::decode, "cannot allocate PNG decoder");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error(Errc::decode, "cannot allocate PNG decoder");
    }
    png_set_read_fn(png, &reader, png_read_bytes);
    // Large uploads are bounded by the service; keep libpng's own limits generous.
    png_set_user_limits(png, 1u << 15, 1u << 15);

    PngHeader header{};
    if (!png_read_header(png, info, &header)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(Errc::decode, std::string("malformed PNG: ") + reader.message, reader.pos);
    }
    if (header.bit_depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(Errc::unsupported_format, "16-bit PNG samples are not supported");
    }

    RawPixels raw;
    raw.width = static_cast<int>(header.width);
    raw.height = static_cast<int>(header.height);
    raw.channels = header.channels;
    const std::size_t stride = static_cast<std::size_t>(raw.width) * static_cast<std::size_t>(raw.channels);
    raw.samples.resize(stride * static_cast<std::size_t>(raw.height));
    std::vector<png_bytep> rows(static_cast<std::size_t>(raw.height));
    for (std::size_t y = 0; y < rows.size(); ++y) rows[y] = raw.samples.data() + y * stride;

    const bool ok = png_read_rows(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    if (!ok) throw Error(Errc::decode, std::string("malformed PNG: ") + reader.message, reader.pos);
    return raw;
}

struct PngWriter {
    Bytes* out;
    char message[192];
};

void png_write_bytes(png_structp png, png_bytep data, png_size_t n) {
    auto* w = static_cast<PngWriter*>(png_get_io_ptr(png));
    w->out->insert(w->out->end(), data, data + n);
}

void png_flush_noop(png_structp) {}

void png_on_write_error(png_structp png, png_const_charp msg) {
    auto* w = static_cast<PngWriter*>(png_get_error_ptr(png));
    std::snprintf(w->message, sizeof(w->message), "%s", msg);
    png_longjmp(png, 1);
}

bool png_write_all(png_structp png, png_infop info, int width, int height, int color_type,
                   png_bytepp rows) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    png_write_image(png, rows);
    png_write_end(png, nullptr);
    return true;
}

// ---- JPEG ---------------------------------------------------------------

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_on_error(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

// Corrupt-data warnings are treated as hard errors.
void jpeg_on_message(j_common_ptr cinfo, int level) {
    if (level < 0) jpeg_on_error(cinfo);
}

struct JpegHeader {
    int width;
    int height;
    int channels;
    bool cmyk;
    int precision;
};

bool jpeg_read_header_info(jpeg_decompress_struct* cinfo, JpegErrorManager* err, JpegHeader* h) {
    if (setjmp(err->jump)) return false;
    jpeg_read_header(cinfo, TRUE);
    h->cmyk = cinfo->jpeg_color_space == JCS_CMYK || cinfo->jpeg_color_space == JCS_YCCK;
    h->precision = cinfo->data_precision;
    if (h->cmyk || h->precision != 8) return true;
    cinfo->out_color_space = cinfo->num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(cinfo);
    h->width = static_cast<int>(cinfo->output_width);
    h->height = static_cast<int>(cinfo->output_height);
    h->channels = cinfo->output_components;
    return true;
}

bool jpeg_read_rows(jpeg_decompress_struct* cinfo, JpegErrorManager* err, std::uint8_t* out,
                    std::size_t stride) {
    if (setjmp(err->jump)) return false;
    while (cinfo->output_scanline < cinfo->output_height) {
        JSAMPROW row = out + static_cast<std::size_t>(cinfo->output_scanline) * stride;
        jpeg_read_scanlines(cinfo, &row, 1);
    }
    jpeg_finish_decompress(cinfo);
    return true;
}

std::size_t jpeg_offset(const jpeg_decompress_struct& cinfo, std::span<const std::uint8_t> bytes) {
    if (!cinfo.src) return 0;
    return static_cast<std::size_t>(cinfo.src->next_input_byte - bytes.data());
}

RawPixels decode_jpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_on_error;
    err.base.emit_message = jpeg_on_message;
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));

    JpegHeader header{};
    if (!jpeg_read_header_info(&cinfo, &err, &header)) {
        const std::size_t offset = jpeg_offset(cinfo, bytes);
        jpeg_destroy_decompress(&cinfo);
        throw Error(Errc::decode, std::string("malformed JPEG: ") + err.message, offset);
    }
    if (header.cmyk || header.precision != 8) {
        jpeg_destroy_decompress(&cinfo);
        throw Error(Errc::unsupported_format,
                    header.cmyk ? "CMYK JPEG is not supported" : "JPEG sample precision must be 8 bits");
    }

    RawPixels raw;
    raw.width = header.width;
    raw.height = header.height;
    raw.channels = header.channels;
    const std::size_t stride = static_cast<std::size_t>(raw.width) * static_cast<std::size_t>(raw.channels);
    raw.samples.resize(stride * static_cast<std::size_t>(raw.height));
    if (!jpeg_read_rows(&cinfo, &err, raw.samples.data(), stride)) {
        const std::size_t offset = jpeg_offset(cinfo, bytes);
        jpeg_destroy_decompress(&cinfo);
        throw Error(Errc::decode, std::string("malformed JPEG: ") + err.message, offset);
    }
    jpeg_destroy_decompress(&cinfo);
    return raw;
}

} // namespace

ImageBuffer decode_image(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
        return to_image(decode_png(bytes));
    }
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
        return to_image(decode_jpeg(bytes));
    }
    throw Error(Errc::decode, "unrecognized image signature (expected PNG or JPEG)", 0);
}

Bytes encode_image(const ImageBuffer& img) {
    if (img.empty()) throw Error(Errc::dims, "cannot encode an empty image");
    const int channels = img.channels();
    const std::size_t stride = static_cast<std::size_t>(img.width()) * static_cast<std::size_t>(channels);
    Bytes samples(stride * static_cast<std::size_t>(img.height()));
    const auto src = img.data();
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = quantize(src[i]);
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
    for (std::size_t y = 0; y < rows.size(); ++y) rows[y] = samples.data() + y * stride;

    Bytes out;
    PngWriter writer{&out, {0}};
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &writer, png_on_write_error, png_on_warning);
    if (!png) throw Error(Errc::io, "cannot allocate PNG encoder");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error(Errc::io, "cannot allocate PNG encoder");
    }
    png_set_write_fn(png, &writer, png_write_bytes, png_flush_noop);
    const bool ok = png_write_all(png, info, img.width(), img.height(),
                                  channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, rows.data());
    png_destroy_write_struct(&png, &info);
    if (!ok) throw Error(Errc::io, std::string("PNG encoding failed: ") + writer.message);
    return out;
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io, "short write to " + path.string());
}

} // namespace whatif
