#include "roadsim/image.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace roadsim {

Image::Image(int w, int h, Color background) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("Image: resolution must be positive");
    rgb.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) set(x, y, background);
    }
}

void Image::set(int x, int y, Color c) {
    if (!in_bounds(x, y)) return;
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                               static_cast<std::size_t>(x));
    rgb[i] = c[0];
    rgb[i + 1] = c[1];
    rgb[i + 2] = c[2];
}

Color Image::get(int x, int y) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                               static_cast<std::size_t>(x));
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

void draw_segment(Image& img, int x0, int y0, int x1, int y1, Color c) {
    // Bresenham.
    const int dx = std::abs(x1 - x0);
    const int dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1;
    const int sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        img.set(x0, y0, c);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

namespace {

uint32_t crc32(const uint8_t* data, std::size_t len, uint32_t crc = 0xffffffffu) {
    static uint32_t table[256];
    static bool init = false;
    if (!init) {
        for (uint32_t n = 0; n < 256; ++n) {
            uint32_t c = n;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            table[n] = c;
        }
        init = true;
    }
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
    return crc;
}

uint32_t adler32(const uint8_t* data, std::size_t len) {
    uint32_t a = 1, b = 0;
    for (std::size_t i = 0; i < len; ++i) {
        a = (a + data[i]) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

void push_u32(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x >> 24));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x));
}

void push_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& body) {
    push_u32(out, static_cast<uint32_t>(body.size()));
    std::vector<uint8_t> typed;
    typed.reserve(4 + body.size());
    typed.insert(typed.end(), type, type + 4);
    typed.insert(typed.end(), body.begin(), body.end());
    out.insert(out.end(), typed.begin(), typed.end());
    push_u32(out, crc32(typed.data(), typed.size()) ^ 0xffffffffu);
}

} // namespace

std::vector<uint8_t> encode_png(const Image& img) {
    if (img.width <= 0 || img.height <= 0) throw std::invalid_argument("encode_png: empty image");

    // Raw scanlines, each prefixed with filter byte 0.
    std::vector<uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(img.height) *
                (1 + 3 * static_cast<std::size_t>(img.width)));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);
        const std::size_t row = 3 * static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width);
        raw.insert(raw.end(), img.rgb.begin() + static_cast<std::ptrdiff_t>(row),
                   img.rgb.begin() + static_cast<std::ptrdiff_t>(row) +
                       3 * static_cast<std::ptrdiff_t>(img.width));
    }

    // zlib stream with stored deflate blocks.
    std::vector<uint8_t> idat;
    idat.push_back(0x78);
    idat.push_back(0x01);
    std::size_t offset = 0;
    while (offset < raw.size()) {
        const std::size_t n = std::min<std::size_t>(65535, raw.size() - offset);
        const bool last = offset + n == raw.size();
        idat.push_back(last ? 1 : 0);
        idat.push_back(static_cast<uint8_t>(n & 0xff));
        idat.push_back(static_cast<uint8_t>(n >> 8));
        idat.push_back(static_cast<uint8_t>(~n & 0xff));
        idat.push_back(static_cast<uint8_t>((~n >> 8) & 0xff));
        idat.insert(idat.end(), raw.begin() + static_cast<std::ptrdiff_t>(offset),
                    raw.begin() + static_cast<std::ptrdiff_t>(offset + n));
        offset += n;
    }
    push_u32(idat, adler32(raw.data(), raw.size()));

    std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    std::vector<uint8_t> ihdr;
    push_u32(ihdr, static_cast<uint32_t>(img.width));
    push_u32(ihdr, static_cast<uint32_t>(img.height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(2); // color type: RGB
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    push_chunk(out, "IHDR", ihdr);
    push_chunk(out, "IDAT", idat);
    push_chunk(out, "IEND", {});
    return out;
}

void write_png(const Image& img, const std::string& path) {
    const std::vector<uint8_t> bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::ptrdiff_t>(bytes.size()));
}

} // namespace roadsim
