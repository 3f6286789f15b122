#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace roadsim {

using Color = std::array<uint8_t, 3>;

struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgb; // row-major, 3 bytes per pixel

    Image() = default;
    Image(int w, int h, Color background);

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    void set(int x, int y, Color c);
    Color get(int x, int y) const;
};

void draw_segment(Image& img, int x0, int y0, int x1, int y1, Color c);

/// 8-bit RGB PNG with uncompressed deflate blocks. Output is byte-identical
/// for identical images.
std::vector<uint8_t> encode_png(const Image& img);
void write_png(const Image& img, const std::string& path);

} // namespace roadsim
