#ifndef STREAMLABEL_MESSAGE_HPP
#define STREAMLABEL_MESSAGE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "streamlabel/errors.hpp"

namespace streamlabel {

// The frame message: frame_id | width | height | pixels.
// Width and height are 16-bit unsigned; pixels are 32-bit signed words.
struct FrameMessage {
    std::int32_t frame_id = 0;
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    std::vector<std::int32_t> pixels;

    bool valid() const {
        return pixels.size() == static_cast<std::size_t>(width) * height;
    }
    bool operator==(const FrameMessage&) const = default;
};

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

inline std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline constexpr std::size_t kMessageHeaderBytes = 12;

// Wire layout, all little-endian:
//   frame_id (4) | width (2) | height (2) | pixel_count (4) | pixels (4 each)
inline std::vector<std::uint8_t> encode_message(const FrameMessage& msg) {
    if (!msg.valid()) throw DataError("encode: pixels length does not equal width*height");
    std::vector<std::uint8_t> out;
    out.reserve(kMessageHeaderBytes + msg.pixels.size() * 4);
    detail::put_u32(out, static_cast<std::uint32_t>(msg.frame_id));
    detail::put_u16(out, msg.width);
    detail::put_u16(out, msg.height);
    detail::put_u32(out, static_cast<std::uint32_t>(msg.pixels.size()));
    for (std::int32_t px : msg.pixels) detail::put_u32(out, static_cast<std::uint32_t>(px));
    return out;
}

inline FrameMessage decode_message(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kMessageHeaderBytes) throw DataError("decode: truncated header");
    FrameMessage msg;
    msg.frame_id = static_cast<std::int32_t>(detail::get_u32(&bytes[0]));
    msg.width = detail::get_u16(&bytes[4]);
    msg.height = detail::get_u16(&bytes[6]);
    const std::uint32_t count = detail::get_u32(&bytes[8]);
    if (count != static_cast<std::uint32_t>(msg.width) * msg.height)
        throw DataError("decode: pixel_count does not equal width*height");
    const std::size_t need = kMessageHeaderBytes + static_cast<std::size_t>(count) * 4;
    if (bytes.size() < need) throw DataError("decode: truncated payload");
    if (bytes.size() > need) throw DataError("decode: trailing bytes");
    msg.pixels.resize(count);
    for (std::uint32_t i = 0; i < count; ++i)
        msg.pixels[i] =
            static_cast<std::int32_t>(detail::get_u32(&bytes[kMessageHeaderBytes + i * 4]));
    return msg;
}

// Topic names: nonempty, [a-z0-9_/], no leading or trailing '/'.
inline bool is_valid_topic(const std::string& name) {
    if (name.empty()) return false;
    if (name.front() == '/' || name.back() == '/') return false;
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '/';
        if (!ok) return false;
    }
    return true;
}

inline void validate_topic(const std::string& name) {
    if (!is_valid_topic(name)) throw DataError("invalid topic name: '" + name + "'");
}

}  // namespace streamlabel

#endif
