#include "cwan/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include <png.h>

#include "cwan/errors.hpp"

namespace cwan {

namespace {

uint8_t to_byte(float v) {
    const int i = static_cast<int>(std::lround(static_cast<double>(v) * 255.0));
    return static_cast<uint8_t>(std::clamp(i, 0, 255));
}

bool ends_with(const std::string& s, const char* suffix) {
    const std::size_t n = std::strlen(suffix);
    if (s.size() < n) return false;
    std::string tail = s.substr(s.size() - n);
    std::transform(tail.begin(), tail.end(), tail.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return tail == suffix;
}

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

} // namespace

SrgbImage read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DataError("read_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("read_png: libpng init failed");
    }
    std::vector<uint8_t> raw;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("read_png: decode failed for " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);

    // Normalize everything to 8-bit RGB.
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_strip_alpha(png);
    png_read_update_info(png, info);

    raw.resize(static_cast<std::size_t>(h) * w * 3);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    SrgbImage img(static_cast<int>(h), static_cast<int>(w));
    for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = static_cast<float>(raw[i]) / 255.f;
    return img;
}

void write_png(const std::string& path, const SrgbImage& img) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DataError("write_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw DataError("write_png: libpng init failed");
    }
    std::vector<uint8_t> raw(img.pixel_count() * 3);
    std::vector<png_bytep> rows(img.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("write_png: encode failed for " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = to_byte(img.pixels[i]);
    for (int y = 0; y < img.height; ++y)
        rows[y] = raw.data() + static_cast<std::size_t>(y) * img.width * 3;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

SrgbImage read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("read_ppm: cannot open " + path);

    std::string magic;
    f >> magic;
    if (magic != "P6") throw DataError("read_ppm: not a binary PPM: " + path);

    const auto next_int = [&]() {
        // Skips whitespace and '#' comment lines between header fields.
        for (;;) {
            int c = f.peek();
            if (c == '#') {
                std::string line;
                std::getline(f, line);
            } else if (std::isspace(c)) {
                f.get();
            } else {
                break;
            }
        }
        long v = -1;
        f >> v;
        if (!f || v <= 0) throw DataError("read_ppm: bad header in " + path);
        return v;
    };

    const long w = next_int();
    const long h = next_int();
    const long maxval = next_int();
    if (maxval != 255) throw DataError("read_ppm: only maxval 255 supported: " + path);
    f.get(); // single whitespace after maxval

    std::vector<uint8_t> raw(static_cast<std::size_t>(w) * h * 3);
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!f) throw DataError("read_ppm: truncated pixel data in " + path);

    SrgbImage img(static_cast<int>(h), static_cast<int>(w));
    for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = static_cast<float>(raw[i]) / 255.f;
    return img;
}

void write_ppm(const std::string& path, const SrgbImage& img) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("write_ppm: cannot open " + path);
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> raw(img.pixel_count() * 3);
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = to_byte(img.pixels[i]);
    f.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!f) throw DataError("write_ppm: write failed: " + path);
}

SrgbImage read_image(const std::string& path) {
    if (ends_with(path, ".png")) return read_png(path);
    if (ends_with(path, ".ppm")) return read_ppm(path);
    throw DataError("read_image: unsupported extension (want .png or .ppm): " + path);
}

void write_image(const std::string& path, const SrgbImage& img) {
    if (ends_with(path, ".png")) return write_png(path, img);
    if (ends_with(path, ".ppm")) return write_ppm(path, img);
    throw DataError("write_image: unsupported extension (want .png or .ppm): " + path);
}

void write_gray_png(const std::string& path, const float* plane, int height, int width) {
    SrgbImage img(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const float v = plane[static_cast<std::size_t>(y) * width + x];
            img.at(y, x, 0) = img.at(y, x, 1) = img.at(y, x, 2) = v;
        }
    write_png(path, img);
}

} // namespace cwan
