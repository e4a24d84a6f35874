// SPDX-License-Identifier: Apache-2.0
//
// Shared domain types for the mission pipeline. All types validate their
// invariants on construction and are immutable afterwards.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uavca/errors.hpp"

namespace uavca {

/// Image-space location. Origin top-left, x rightward, y downward.
struct PixelPoint {
    double x = 0.0;
    double y = 0.0;

    PixelPoint() = default;
    PixelPoint(double x_, double y_) : x(x_), y(y_) {
        if (!std::isfinite(x) || !std::isfinite(y)) {
            throw InvariantViolation("PixelPoint coordinates must be finite");
        }
    }

    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

inline double euclidean_distance(const PixelPoint& a, const PixelPoint& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

struct BoundingBox {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    BoundingBox() = default;
    BoundingBox(double x1_, double y1_, double x2_, double y2_) : x1(x1_), y1(y1_), x2(x2_), y2(y2_) {
        if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) || !std::isfinite(y2)) {
            throw InvariantViolation("BoundingBox corners must be finite");
        }
        if (x1 > x2 || y1 > y2) {
            throw InvariantViolation("BoundingBox requires x1 <= x2 and y1 <= y2");
        }
    }

    bool contains(const PixelPoint& p) const noexcept {
        return p.x >= x1 && p.x <= x2 && p.y >= y1 && p.y <= y2;
    }
    PixelPoint center() const { return {(x1 + x2) / 2.0, (y1 + y2) / 2.0}; }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit RGB raster with an identity. Pixel storage is shared between copies
/// and never mutated; drawing operations produce new images.
class SceneImage {
public:
    SceneImage(std::string id, int width, int height, std::vector<std::uint8_t> rgb,
               std::optional<std::filesystem::path> source_path = std::nullopt)
        : id_(std::move(id)), width_(width), height_(height), source_path_(std::move(source_path)) {
        if (id_.empty()) throw InvariantViolation("SceneImage id must be non-empty");
        if (width_ < 1 || height_ < 1) throw InvariantViolation("SceneImage dimensions must be >= 1");
        if (rgb.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_) * 3U) {
            throw InvariantViolation("SceneImage pixel buffer does not match width*height*3");
        }
        pixels_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(rgb));
    }

    static SceneImage filled(std::string id, int width, int height, Rgb color) {
        if (width < 1 || height < 1) throw InvariantViolation("SceneImage dimensions must be >= 1");
        std::vector<std::uint8_t> buf(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3U);
        for (std::size_t i = 0; i < buf.size(); i += 3) {
            buf[i] = color.r;
            buf[i + 1] = color.g;
            buf[i + 2] = color.b;
        }
        return SceneImage(std::move(id), width, height, std::move(buf));
    }

    const std::string& id() const noexcept { return id_; }
    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    const std::optional<std::filesystem::path>& source_path() const noexcept { return source_path_; }
    std::span<const std::uint8_t> pixels() const noexcept { return *pixels_; }

    Rgb at(int x, int y) const {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) throw PreconditionViolation("pixel access out of bounds");
        const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3U;
        const auto& p = *pixels_;
        return {p[i], p[i + 1], p[i + 2]};
    }

    bool contains(const PixelPoint& p) const noexcept {
        return p.x >= 0.0 && p.y >= 0.0 && p.x < width_ && p.y < height_;
    }

    /// Same raster, new identity.
    SceneImage with_id(std::string id) const {
        SceneImage copy = *this;
        if (id.empty()) throw InvariantViolation("SceneImage id must be non-empty");
        copy.id_ = std::move(id);
        return copy;
    }

    /// Pixel-level equality; identity and source path are ignored.
    bool same_pixels(const SceneImage& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ &&
               (pixels_ == other.pixels_ || *pixels_ == *other.pixels_);
    }

private:
    std::string id_;
    int width_;
    int height_;
    std::shared_ptr<const std::vector<std::uint8_t>> pixels_;
    std::optional<std::filesystem::path> source_path_;
};

/// A named pixel location, optionally boxed and scored for fire likelihood.
class LabeledKeypoint {
public:
    LabeledKeypoint(std::string label, PixelPoint point, std::optional<BoundingBox> bbox = std::nullopt,
                    std::optional<double> fire_probability = std::nullopt)
        : label_(std::move(label)), point_(point), bbox_(bbox), fire_probability_(fire_probability) {
        if (label_.empty()) throw InvariantViolation("LabeledKeypoint label must be non-empty");
        if (bbox_ && !bbox_->contains(point_)) throw InvariantViolation("LabeledKeypoint point lies outside its bbox");
        if (fire_probability_ && !(*fire_probability_ >= 0.0 && *fire_probability_ <= 1.0)) {
            throw InvariantViolation("fire_probability must lie in [0,1]");
        }
    }

    const std::string& label() const noexcept { return label_; }
    const PixelPoint& point() const noexcept { return point_; }
    const std::optional<BoundingBox>& bbox() const noexcept { return bbox_; }
    const std::optional<double>& fire_probability() const noexcept { return fire_probability_; }

    friend bool operator==(const LabeledKeypoint&, const LabeledKeypoint&) = default;

private:
    std::string label_;
    PixelPoint point_;
    std::optional<BoundingBox> bbox_;
    std::optional<double> fire_probability_;
};

inline constexpr const char* kDefaultMissionQuery = "I've heard there are fires in our area.";

struct MissionQuery {
    std::string text;
    std::string sample_id;

    MissionQuery(std::string text_, std::string sample_id_ = {})
        : text(std::move(text_)), sample_id(std::move(sample_id_)) {
        if (text.empty()) throw InvariantViolation("MissionQuery text must be non-empty");
    }
};

struct MissionPlan {
    std::vector<LabeledKeypoint> ordered_waypoints;
    std::string rationale;
};

}  // namespace uavca
