#include "factgs/image.hpp"

#include "factgs/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace factgs {

double srgb_encode(double linear) {
    if (linear <= 0.0031308) return 12.92 * linear;
    return 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

double srgb_decode(double encoded) {
    if (encoded <= 0.04045) return encoded / 12.92;
    return std::pow((encoded + 0.055) / 1.055, 2.4);
}

std::uint8_t quantize_channel(double value, bool srgb) {
    double v = std::clamp(value, 0.0, 1.0);
    if (srgb) v = srgb_encode(v);
    // round half up, matching the documented byte mapping
    return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

namespace {

std::vector<std::uint8_t> quantize(const Image& image, bool srgb) {
    std::vector<std::uint8_t> bytes(image.pixels.size());
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        bytes[i] = quantize_channel(image.pixels[i], srgb);
    }
    return bytes;
}

void write_ppm(const Image& image, const std::string& path, bool srgb) {
    if (image.channels != 3) throw IoError("write_image: PPM requires 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_image: cannot open " + path);
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    auto bytes = quantize(image, srgb);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write_image: write failed for " + path);
}

void write_png(const Image& image, const std::string& path, bool srgb) {
    if (image.channels != 3 && image.channels != 1) {
        throw IoError("write_image: PNG supports 1 or 3 channels");
    }
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw IoError("write_image: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("write_image: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("write_image: libpng write failed for " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8,
                 image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    auto bytes = quantize(image, srgb);
    std::size_t row_bytes = static_cast<std::size_t>(image.width) * image.channels;
    for (int y = 0; y < image.height; ++y) {
        png_write_row(png, bytes.data() + static_cast<std::size_t>(y) * row_bytes);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Skips PNM whitespace and '#' comments between header tokens.
int next_pnm_token(std::istream& in) {
    int c = in.get();
    while (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '#') {
        if (c == '#') {
            while (c != '\n' && c != EOF) c = in.get();
        }
        c = in.get();
    }
    int value = 0;
    bool any = false;
    while (c >= '0' && c <= '9') {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw IoError("read_image: malformed PNM header");
    return value;
}

Image read_pnm(std::ifstream& in, const std::string& path, int channels, bool srgb) {
    int width = next_pnm_token(in);
    int height = next_pnm_token(in);
    int maxval = next_pnm_token(in);
    if (width <= 0 || height <= 0 || maxval != 255) {
        throw IoError("read_image: unsupported PNM dimensions or maxval in " + path);
    }
    std::size_t n = static_cast<std::size_t>(width) * height * channels;
    std::vector<std::uint8_t> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw IoError("read_image: truncated PNM payload in " + path);
    }
    Image image(width, height, channels);
    for (std::size_t i = 0; i < n; ++i) {
        double v = bytes[i] / 255.0;
        image.pixels[i] = srgb ? srgb_decode(v) : v;
    }
    return image;
}

Image read_png_file(const std::string& path, bool srgb) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!fp) throw IoError("read_image: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("read_image: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("read_image: libpng read failed for " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int width = static_cast<int>(png_get_image_width(png, info));
    int height = static_cast<int>(png_get_image_height(png, info));
    int channels = static_cast<int>(png_get_channels(png, info));
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("read_image: unsupported PNG channel count in " + path);
    }

    std::size_t row_bytes = png_get_rowbytes(png, info);
    std::vector<std::uint8_t> bytes(row_bytes * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = bytes.data() + static_cast<std::size_t>(y) * row_bytes;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);

    Image image(width, height, channels);
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        double v = bytes[i] / 255.0;
        image.pixels[i] = srgb ? srgb_decode(v) : v;
    }
    return image;
}

} // namespace

void write_image(const Image& image, const std::string& path, ImageFormat format, bool srgb) {
    if (format == ImageFormat::Ppm) {
        write_ppm(image, path, srgb);
    } else {
        write_png(image, path, srgb);
    }
}

void write_pgm(const Image& image, const std::string& path) {
    if (image.channels != 1) throw IoError("write_pgm: single channel required");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_pgm: cannot open " + path);
    out << "P5\n" << image.width << " " << image.height << "\n255\n";
    auto bytes = quantize(image, false);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write_pgm: write failed for " + path);
}

Image read_image(const std::string& path, bool srgb) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_image: cannot open " + path);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (in.gcount() != 2) throw IoError("read_image: empty file " + path);
    if (magic[0] == 'P' && magic[1] == '6') return read_pnm(in, path, 3, srgb);
    if (magic[0] == 'P' && magic[1] == '5') return read_pnm(in, path, 1, srgb);
    in.close();
    if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') {
        return read_png_file(path, srgb);
    }
    throw IoError("read_image: unrecognized format in " + path);
}

} // namespace factgs
