#ifndef STREAMLABEL_IMAGE_HPP
#define STREAMLABEL_IMAGE_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "streamlabel/errors.hpp"

namespace streamlabel {

inline constexpr std::uint32_t kMaxImageDim = 65535;  // 16-bit message fields

struct GrayImage {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, top-left origin

    std::size_t size() const { return pixels.size(); }
    std::uint8_t at(std::uint32_t x, std::uint32_t y) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
};

// Pixels are exactly 0 (black) or 255 (white).
struct BinaryImage {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(std::uint32_t x, std::uint32_t y) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
};

// Per-pixel label numbers, 0 = background.
struct LabelImage {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint32_t> labels;

    std::uint32_t at(std::uint32_t x, std::uint32_t y) const {
        return labels[static_cast<std::size_t>(y) * width + x];
    }
    bool operator==(const LabelImage& other) const {
        return width == other.width && height == other.height && labels == other.labels;
    }
};

namespace detail {

inline void check_dims(std::uint64_t w, std::uint64_t h, const char* what) {
    if (w < 1 || h < 1 || w > kMaxImageDim || h > kMaxImageDim)
        throw DataError(std::string(what) + ": dimensions out of range");
}

// PNM whitespace skipping, including '#' comments.
inline std::size_t pnm_skip(const std::vector<std::uint8_t>& b, std::size_t i) {
    while (i < b.size()) {
        if (b[i] == '#') {
            while (i < b.size() && b[i] != '\n') ++i;
        } else if (b[i] == ' ' || b[i] == '\t' || b[i] == '\r' || b[i] == '\n') {
            ++i;
        } else {
            break;
        }
    }
    return i;
}

inline std::size_t pnm_uint(const std::vector<std::uint8_t>& b, std::size_t i,
                            std::uint64_t& out) {
    if (i >= b.size() || b[i] < '0' || b[i] > '9')
        throw DataError("PGM: malformed header (expected integer)");
    out = 0;
    while (i < b.size() && b[i] >= '0' && b[i] <= '9') {
        out = out * 10 + (b[i] - '0');
        if (out > 0xFFFFFFFFull) throw DataError("PGM: header value too large");
        ++i;
    }
    return i;
}

inline std::uint32_t le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t le16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace detail

// Binary portable graymap ("P5"), maxval <= 255.
inline GrayImage load_pgm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P')
        throw DataError("PGM: unsupported magic");
    if (bytes[1] != '5')
        throw DataError("PGM: unsupported magic");
    std::size_t i = 2;
    std::uint64_t w = 0, h = 0, maxval = 0;
    i = detail::pnm_skip(bytes, i);
    i = detail::pnm_uint(bytes, i, w);
    i = detail::pnm_skip(bytes, i);
    i = detail::pnm_uint(bytes, i, h);
    i = detail::pnm_skip(bytes, i);
    i = detail::pnm_uint(bytes, i, maxval);
    if (maxval == 0 || maxval > 255)
        throw DataError("PGM: unsupported maxval (must be 1..255)");
    detail::check_dims(w, h, "PGM");
    if (i >= bytes.size()) throw DataError("PGM: truncated payload");
    ++i;  // single whitespace byte after maxval
    const std::size_t need = static_cast<std::size_t>(w) * h;
    if (bytes.size() - i < need) throw DataError("PGM: truncated payload");
    GrayImage img;
    img.width = static_cast<std::uint32_t>(w);
    img.height = static_cast<std::uint32_t>(h);
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(i),
                      bytes.begin() + static_cast<std::ptrdiff_t>(i + need));
    return img;
}

// Uncompressed BMP: 8-bit palette or 24-bit. 24-bit converted with
// integer luma (77R + 150G + 29B) >> 8. Bottom-up rows are flipped so the
// result is always top-left origin.
inline GrayImage load_bmp(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 54 || bytes[0] != 'B' || bytes[1] != 'M')
        throw DataError("BMP: unsupported magic");
    const std::uint32_t data_offset = detail::le32(&bytes[10]);
    const std::uint32_t header_size = detail::le32(&bytes[14]);
    if (header_size < 40) throw DataError("BMP: unsupported BMP variant (header)");
    const std::int32_t w = static_cast<std::int32_t>(detail::le32(&bytes[18]));
    const std::int32_t h_raw = static_cast<std::int32_t>(detail::le32(&bytes[22]));
    const std::uint16_t bpp = detail::le16(&bytes[28]);
    const std::uint32_t compression = detail::le32(&bytes[30]);
    if (compression != 0) throw DataError("BMP: unsupported BMP variant (compressed)");
    if (bpp != 8 && bpp != 24) throw DataError("BMP: unsupported BMP variant (bit depth)");
    const bool top_down = h_raw < 0;
    const std::int64_t h = top_down ? -static_cast<std::int64_t>(h_raw) : h_raw;
    detail::check_dims(static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(h), "BMP");

    // 8-bit palette lookup, converted to gray per entry.
    std::vector<std::uint8_t> palette_gray;
    if (bpp == 8) {
        std::uint32_t colors = detail::le32(&bytes[46]);
        if (colors == 0) colors = 256;
        const std::size_t pal_off = 14 + header_size;
        if (bytes.size() < pal_off + colors * 4ull) throw DataError("BMP: truncated palette");
        palette_gray.resize(colors);
        for (std::uint32_t c = 0; c < colors; ++c) {
            const std::uint8_t b = bytes[pal_off + c * 4 + 0];
            const std::uint8_t g = bytes[pal_off + c * 4 + 1];
            const std::uint8_t r = bytes[pal_off + c * 4 + 2];
            palette_gray[c] = static_cast<std::uint8_t>((77 * r + 150 * g + 29 * b) >> 8);
        }
    }

    const std::size_t bytes_per_px = bpp / 8;
    const std::size_t stride = (static_cast<std::size_t>(w) * bytes_per_px + 3) & ~std::size_t{3};
    const std::size_t need = stride * static_cast<std::size_t>(h);
    if (bytes.size() < data_offset || bytes.size() - data_offset < need)
        throw DataError("BMP: truncated payload");

    GrayImage img;
    img.width = static_cast<std::uint32_t>(w);
    img.height = static_cast<std::uint32_t>(h);
    img.pixels.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (std::int64_t y = 0; y < h; ++y) {
        const std::int64_t src_row = top_down ? y : (h - 1 - y);
        const std::uint8_t* row = &bytes[data_offset + static_cast<std::size_t>(src_row) * stride];
        for (std::int32_t x = 0; x < w; ++x) {
            std::uint8_t v;
            if (bpp == 8) {
                const std::uint8_t idx = row[x];
                if (idx >= palette_gray.size()) throw DataError("BMP: palette index out of range");
                v = palette_gray[idx];
            } else {
                const std::uint8_t b = row[x * 3 + 0];
                const std::uint8_t g = row[x * 3 + 1];
                const std::uint8_t r = row[x * 3 + 2];
                v = static_cast<std::uint8_t>((77 * r + 150 * g + 29 * b) >> 8);
            }
            img.pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + x] = v;
        }
    }
    return img;
}

// Sniffs PGM vs BMP by magic.
inline GrayImage load_image(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M') return load_bmp(bytes);
    return load_pgm(bytes);
}

inline BinaryImage binarize(const GrayImage& img, std::uint8_t threshold) {
    BinaryImage out;
    out.width = img.width;
    out.height = img.height;
    out.pixels.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        out.pixels[i] = img.pixels[i] >= threshold ? 255 : 0;
    return out;
}

namespace detail {

// splitmix64, used to derive a stable color per label.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace detail

// Deterministic color per label; label 0 is black. Channels are kept away
// from pure black so nonzero labels are always visible.
inline void label_color(std::uint32_t label, std::uint8_t rgb[3]) {
    if (label == 0) {
        rgb[0] = rgb[1] = rgb[2] = 0;
        return;
    }
    const std::uint64_t h = detail::mix64(label);
    rgb[0] = static_cast<std::uint8_t>(64 + (h & 0xBF));
    rgb[1] = static_cast<std::uint8_t>(64 + ((h >> 8) & 0xBF));
    rgb[2] = static_cast<std::uint8_t>(64 + ((h >> 16) & 0xBF));
}

// Binary PPM ("P6") with one stable color per label.
inline std::vector<std::uint8_t> render_labels(const LabelImage& lbl) {
    std::string header = "P6\n" + std::to_string(lbl.width) + " " + std::to_string(lbl.height) +
                         "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + lbl.labels.size() * 3);
    std::uint8_t rgb[3];
    for (std::uint32_t label : lbl.labels) {
        label_color(label, rgb);
        out.push_back(rgb[0]);
        out.push_back(rgb[1]);
        out.push_back(rgb[2]);
    }
    return out;
}

inline std::vector<std::uint8_t> write_pgm(const GrayImage& img) {
    std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                         "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write file: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace streamlabel

#endif
