#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace factgs {

/// Row-major H x W x C image of linear values, normally in [0,1].
struct Image {
    int width = 0, height = 0, channels = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          pixels(static_cast<std::size_t>(w) * h * c, fill) {}

    double& at(int y, int x, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t size() const { return pixels.size(); }
};

enum class ImageFormat { Ppm, Png };

/// Linear [0,1] -> sRGB transfer (the piecewise IEC 61966-2-1 curve).
double srgb_encode(double linear);
double srgb_decode(double encoded);

/// round(v*255) after optional sRGB encoding; byte-exact across platforms.
std::uint8_t quantize_channel(double value, bool srgb);

/// Writes 8-bit output. PPM is binary P6 (3-channel input required);
/// PNG mirrors the same byte values. Values outside [0,1] are a caller bug
/// and are clamped defensively at the 8-bit boundary.
void write_image(const Image& image, const std::string& path, ImageFormat format, bool srgb);

/// Writes a single-channel image as binary PGM (P5).
void write_pgm(const Image& image, const std::string& path);

/// Reads P6 PPM, P5 PGM, or 8/16-bit PNG into [0,1] doubles. When srgb is
/// set, bytes are decoded through the inverse sRGB transfer to linear.
Image read_image(const std::string& path, bool srgb = false);

} // namespace factgs
