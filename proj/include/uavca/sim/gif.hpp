// SPDX-License-Identifier: Apache-2.0
//
// Minimal animated GIF89a writer. Frames are quantized to a fixed 6x7x6 RGB
// cube (252 colors) so output depends only on the input pixels.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "uavca/core.hpp"
#include "uavca/errors.hpp"

namespace uavca::sim {

namespace gif_detail {

inline constexpr int kRedLevels = 6;
inline constexpr int kGreenLevels = 7;
inline constexpr int kBlueLevels = 6;

inline std::uint8_t level_index(std::uint8_t v, int levels) {
    return static_cast<std::uint8_t>((static_cast<int>(v) * (levels - 1) + 127) / 255);
}

inline std::uint8_t level_value(int i, int levels) {
    return static_cast<std::uint8_t>((i * 255 + (levels - 1) / 2) / (levels - 1));
}

inline std::array<Rgb, 256> palette() {
    std::array<Rgb, 256> p{};
    for (int r = 0; r < kRedLevels; ++r) {
        for (int g = 0; g < kGreenLevels; ++g) {
            for (int b = 0; b < kBlueLevels; ++b) {
                p[static_cast<std::size_t>((r * kGreenLevels + g) * kBlueLevels + b)] = {
                    level_value(r, kRedLevels), level_value(g, kGreenLevels), level_value(b, kBlueLevels)};
            }
        }
    }
    return p;
}

inline std::uint8_t quantize(Rgb c) {
    return static_cast<std::uint8_t>(
        (level_index(c.r, kRedLevels) * kGreenLevels + level_index(c.g, kGreenLevels)) * kBlueLevels +
        level_index(c.b, kBlueLevels));
}

class BitWriter {
public:
    void put(unsigned code, int width) {
        acc_ |= static_cast<std::uint32_t>(code) << bits_;
        bits_ += width;
        while (bits_ >= 8) {
            bytes_.push_back(static_cast<std::uint8_t>(acc_ & 0xFFU));
            acc_ >>= 8;
            bits_ -= 8;
        }
    }
    std::vector<std::uint8_t> finish() {
        if (bits_ > 0) bytes_.push_back(static_cast<std::uint8_t>(acc_ & 0xFFU));
        acc_ = 0;
        bits_ = 0;
        return std::move(bytes_);
    }

private:
    std::vector<std::uint8_t> bytes_;
    std::uint32_t acc_ = 0;
    int bits_ = 0;
};

/// Variable-width LZW over 8-bit indices, as specified for GIF image data.
inline std::vector<std::uint8_t> lzw_encode(const std::vector<std::uint8_t>& indices) {
    constexpr unsigned kClear = 256;
    constexpr unsigned kEnd = 257;
    constexpr unsigned kMaxCode = 4096;

    BitWriter out;
    std::unordered_map<std::uint32_t, std::uint16_t> dict;
    dict.reserve(kMaxCode);
    unsigned next = 258;
    int width = 9;
    out.put(kClear, width);
    if (indices.empty()) {
        out.put(kEnd, width);
        return out.finish();
    }

    unsigned prefix = indices[0];
    for (std::size_t i = 1; i < indices.size(); ++i) {
        const unsigned k = indices[i];
        const std::uint32_t key = (prefix << 8) | k;
        if (const auto it = dict.find(key); it != dict.end()) {
            prefix = it->second;
            continue;
        }
        out.put(prefix, width);
        dict.emplace(key, static_cast<std::uint16_t>(next++));
        if (next > (1U << width) && width < 12) ++width;
        prefix = k;
        if (next == kMaxCode) {
            out.put(kClear, width);
            dict.clear();
            next = 258;
            width = 9;
        }
    }
    out.put(prefix, width);
    // The decoder adds one more entry before it reads the end code.
    if (next == (1U << width) && width < 12) ++width;
    out.put(kEnd, width);
    return out.finish();
}

inline void put_u16(std::vector<std::uint8_t>& out, unsigned v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFFU));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFFU));
}

}  // namespace gif_detail

/// Encodes equally sized frames as a looping animation at `frame_rate` fps.
inline std::vector<std::uint8_t> encode_gif(const std::vector<SceneImage>& frames, double frame_rate) {
    using namespace gif_detail;
    if (frames.empty()) throw PreconditionViolation("encode_gif needs at least one frame");
    if (!(frame_rate > 0.0)) throw PreconditionViolation("frame rate must be positive");
    const int w = frames.front().width();
    const int h = frames.front().height();
    if (w > 0xFFFF || h > 0xFFFF) throw PreconditionViolation("GIF frames are limited to 65535 px per side");
    for (const auto& f : frames) {
        if (f.width() != w || f.height() != h) throw PreconditionViolation("GIF frames must share one size");
    }
    const auto delay_cs = static_cast<unsigned>(std::max(1L, std::lround(100.0 / frame_rate)));

    std::vector<std::uint8_t> out;
    for (const char c : std::string("GIF89a")) out.push_back(static_cast<std::uint8_t>(c));
    put_u16(out, static_cast<unsigned>(w));
    put_u16(out, static_cast<unsigned>(h));
    out.push_back(0xF7);  // global table, 8-bit color resolution, 256 entries
    out.push_back(0);     // background index
    out.push_back(0);     // aspect ratio
    for (const auto& c : palette()) {
        out.push_back(c.r);
        out.push_back(c.g);
        out.push_back(c.b);
    }
    // NETSCAPE2.0 application extension: loop forever.
    const std::uint8_t loop[] = {0x21, 0xFF, 0x0B, 'N', 'E', 'T', 'S', 'C', 'A', 'P', 'E', '2', '.', '0', 0x03, 0x01, 0x00, 0x00, 0x00};
    out.insert(out.end(), std::begin(loop), std::end(loop));

    std::vector<std::uint8_t> indices(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (const auto& f : frames) {
        out.insert(out.end(), {0x21, 0xF9, 0x04, 0x04});  // graphic control, disposal: keep
        put_u16(out, delay_cs);
        out.push_back(0);
        out.push_back(0);

        out.push_back(0x2C);  // image descriptor
        put_u16(out, 0);
        put_u16(out, 0);
        put_u16(out, static_cast<unsigned>(w));
        put_u16(out, static_cast<unsigned>(h));
        out.push_back(0);

        const auto px = f.pixels();
        for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = quantize({px[3 * i], px[3 * i + 1], px[3 * i + 2]});
        const auto data = lzw_encode(indices);
        out.push_back(8);  // minimum code size
        for (std::size_t off = 0; off < data.size(); off += 255) {
            const auto n = std::min<std::size_t>(255, data.size() - off);
            out.push_back(static_cast<std::uint8_t>(n));
            out.insert(out.end(), data.begin() + static_cast<std::ptrdiff_t>(off),
                       data.begin() + static_cast<std::ptrdiff_t>(off + n));
        }
        out.push_back(0);
    }
    out.push_back(0x3B);
    return out;
}

}  // namespace uavca::sim
