#include "citysplat/io/png.hpp"

#include "citysplat/core/errors.hpp"
#include "citysplat/io/atomic_file.hpp"

#include <fmt/format.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace citysplat::io {

namespace {

struct ReadCursor {
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;
};

void on_write(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void on_flush(png_structp) {}

void on_read(png_structp png, png_bytep data, png_size_t len) {
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->pos + len > cur->data.size()) {
        png_error(png, "PNG stream truncated");
    }
    std::memcpy(data, cur->data.data() + cur->pos, len);
    cur->pos += len;
}

[[noreturn]] void on_error(png_structp, png_const_charp msg) { throw DataError(fmt::format("libpng: {}", msg)); }

void on_warning(png_structp, png_const_charp) {}

} // namespace

std::uint8_t quantize_channel(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

std::vector<std::uint8_t> encode_png(const Image& image) {
    if (image.width <= 0 || image.height <= 0) {
        throw InvalidParameter("cannot encode an empty image");
    }
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_error, on_warning);
    if (png == nullptr) {
        throw DataError("png_create_write_struct failed");
    }
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> row(3 * static_cast<std::size_t>(image.width));
    try {
        png_set_write_fn(png, &out, on_write, on_flush);
        png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_set_compression_level(png, 6);
        png_write_info(png, info);
        for (int y = 0; y < image.height; ++y) {
            const float* src = image.at(0, y);
            for (std::size_t i = 0; i < row.size(); ++i) {
                row[i] = quantize_channel(src[i]);
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

void write_png(const std::filesystem::path& path, const Image& image) { write_file_atomic(path, encode_png(image)); }

Image decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw DataError("not a PNG stream");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_error, on_warning);
    if (png == nullptr) {
        throw DataError("png_create_read_struct failed");
    }
    png_infop info = png_create_info_struct(png);
    ReadCursor cursor{bytes, 0};
    Image image;
    try {
        png_set_read_fn(png, &cursor, on_read);
        png_read_info(png, info);
        const int color = png_get_color_type(png, info);
        const int depth = png_get_bit_depth(png, info);
        if (color == PNG_COLOR_TYPE_PALETTE) {
            png_set_palette_to_rgb(png);
        }
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
            if (depth < 8) {
                png_set_expand_gray_1_2_4_to_8(png);
            }
            png_set_gray_to_rgb(png);
        }
        if (depth == 16) {
            png_set_strip_16(png);
        }
        png_set_strip_alpha(png);
        png_read_update_info(png, info);

        image.width = static_cast<int>(png_get_image_width(png, info));
        image.height = static_cast<int>(png_get_image_height(png, info));
        image.pixels.resize(3 * image.pixel_count());
        std::vector<std::uint8_t> row(png_get_rowbytes(png, info));
        for (int y = 0; y < image.height; ++y) {
            png_read_row(png, row.data(), nullptr);
            float* dst = image.at(0, y);
            for (int i = 0; i < 3 * image.width; ++i) {
                dst[i] = static_cast<float>(row[i]) / 255.0f;
            }
        }
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

Image read_png(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_png(bytes);
    } catch (const DataError& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

} // namespace citysplat::io
