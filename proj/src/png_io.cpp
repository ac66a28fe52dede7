#include "prism/png_io.hpp"

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>

#include "prism/errors.hpp"

namespace prism {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

std::vector<Grid> read_png_channels(const std::filesystem::path& path) {
    FilePtr file(std::fopen(path.string().c_str(), "rb"));
    if (!file) throw IoError("cannot open: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) throw IoError("libpng read struct allocation failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng info struct allocation failed");
    }

    std::vector<png_byte> pixels;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng failed to decode " + path.string());
    }

    png_init_io(png, file.get());
    png_read_info(png, info);

    png_uint_32 width = png_get_image_width(png, info);
    png_uint_32 height = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    // Normalize every input to 8- or 16-bit gray or RGB without alpha.
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    if (bit_depth == 16) png_set_swap(png); // payload little-endian for direct reads
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    color_type = png_get_color_type(png, info);
    int channels = png_get_channels(png, info);
    size_t rowbytes = png_get_rowbytes(png, info);

    pixels.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = pixels.data() + r * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    double scale = bit_depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    std::vector<Grid> out(static_cast<size_t>(channels),
                          Grid(static_cast<int>(height), static_cast<int>(width)));
    for (png_uint_32 r = 0; r < height; ++r) {
        const png_byte* row = pixels.data() + r * rowbytes;
        for (png_uint_32 c = 0; c < width; ++c) {
            for (int ch = 0; ch < channels; ++ch) {
                size_t idx = (static_cast<size_t>(c) * channels + ch);
                double v;
                if (bit_depth == 16) {
                    const png_byte* p = row + 2 * idx;
                    v = (static_cast<unsigned>(p[0]) | (static_cast<unsigned>(p[1]) << 8)) * scale;
                } else {
                    v = row[idx] * scale;
                }
                out[static_cast<size_t>(ch)](static_cast<int>(r), static_cast<int>(c)) = v;
            }
        }
    }
    return out;
}

Grid read_png_gray(const std::filesystem::path& path) {
    std::vector<Grid> channels = read_png_channels(path);
    if (channels.size() == 1) return std::move(channels[0]);
    if (channels.size() != 3) {
        throw IoError("unexpected channel count in " + path.string());
    }
    Grid gray(channels[0].height(), channels[0].width());
    for (int i = 0; i < gray.size(); ++i) {
        gray.data()[i] = 0.2126 * channels[0].data()[i] + 0.7152 * channels[1].data()[i] +
                         0.0722 * channels[2].data()[i];
    }
    return gray;
}

void write_png_gray(const std::filesystem::path& path, const Grid& g, bool autoscale) {
    double lo = 0.0, hi = 1.0;
    if (autoscale) {
        lo = g.data()[0];
        hi = g.data()[0];
        for (double v : g.data()) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo < 1e-30) {
            lo = 0.0;
            hi = 1.0;
        }
    }
    std::vector<png_byte> pixels(static_cast<size_t>(g.size()));
    for (int i = 0; i < g.size(); ++i) {
        double v = (g.data()[i] - lo) / (hi - lo);
        v = std::min(1.0, std::max(0.0, v));
        pixels[static_cast<size_t>(i)] = static_cast<png_byte>(std::lround(v * 255.0));
    }

    FilePtr file(std::fopen(path.string().c_str(), "wb"));
    if (!file) throw IoError("cannot open for writing: " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) throw IoError("libpng write struct allocation failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng info struct allocation failed");
    }
    std::vector<png_bytep> rows(static_cast<size_t>(g.height()));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng failed to encode " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(g.width()),
                 static_cast<png_uint_32>(g.height()), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    for (int r = 0; r < g.height(); ++r) {
        rows[static_cast<size_t>(r)] = pixels.data() + static_cast<size_t>(r) * g.width();
    }
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace prism
