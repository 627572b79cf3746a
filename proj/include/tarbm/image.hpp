#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace tarbm {

// 8-bit grayscale raster, row-major.
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(std::size_t w, std::size_t h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(w * h, fill) {}

    std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
    std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }

    friend bool operator==(const Image&, const Image&) = default;
};

void write_pgm(std::ostream& out, const Image& image);
Image read_pgm(std::istream& in);
Image read_pgm(const std::filesystem::path& path);
// Grayscale, 8-bit, non-interlaced, zlib level 9.
void write_png(std::ostream& out, const Image& image);

// Format follows the extension: ".png" → PNG, anything else → PGM.
void save_image(const Image& image, const std::filesystem::path& path);

}  // namespace tarbm
