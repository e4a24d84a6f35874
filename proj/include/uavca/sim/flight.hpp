// SPDX-License-Identifier: Apache-2.0
//
// Lightweight 2D flight simulation over a scene image: linear interpolation
// between labeled waypoints, a camera crop at every position, a label strip
// on each crop and an animated GIF of the whole flight.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <opencv2/imgproc.hpp>

#include "uavca/core.hpp"
#include "uavca/errors.hpp"
#include "uavca/image_io.hpp"
#include "uavca/render.hpp"
#include "uavca/sim/gif.hpp"

namespace uavca::sim {

struct SimConfig {
    /// Exactly one of these two is set.
    std::optional<int> steps_per_segment;
    std::optional<double> step_length = 25.0;
    int crop_size = 128;
    int output_size = 256;
    double frame_rate = 5.0;
    RenderStyle style;

    static SimConfig with_steps(int steps) {
        SimConfig c;
        c.steps_per_segment = steps;
        c.step_length.reset();
        return c;
    }
    static SimConfig with_step_length(double length) {
        SimConfig c;
        c.step_length = length;
        return c;
    }

    void validate() const {
        if (steps_per_segment.has_value() == step_length.has_value()) {
            throw InvariantViolation("SimConfig needs exactly one of steps_per_segment / step_length");
        }
        if (steps_per_segment && *steps_per_segment < 1) throw InvariantViolation("steps_per_segment must be positive");
        if (step_length && !(*step_length > 0.0 && std::isfinite(*step_length))) {
            throw InvariantViolation("step_length must be positive");
        }
        if (crop_size < 1 || output_size < 1) throw InvariantViolation("crop and output sizes must be positive");
        if (!(frame_rate > 0.0)) throw InvariantViolation("frame rate must be positive");
    }

    /// Interpolation steps for a segment of the given length.
    int segment_steps(double length) const {
        if (steps_per_segment) return *steps_per_segment;
        return std::max(1, static_cast<int>(std::ceil(length / *step_length)));
    }
};

struct PathPosition {
    PixelPoint point;
    std::string label;
};

/// The first waypoint, then for each segment (a, b) the points a + (k/n)(b - a)
/// for k = 1..n, each labeled with the segment's destination. The last point
/// of every segment is the destination waypoint exactly.
inline std::vector<PathPosition> interpolate_path(const std::vector<LabeledKeypoint>& waypoints,
                                                  const SimConfig& config) {
    config.validate();
    if (waypoints.empty()) throw EmptyPath("cannot interpolate an empty waypoint list");
    std::vector<PathPosition> out{{waypoints.front().point(), waypoints.front().label()}};
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        const auto& a = waypoints[i - 1].point();
        const auto& b = waypoints[i].point();
        const int n = config.segment_steps(euclidean_distance(a, b));
        for (int k = 1; k < n; ++k) {
            const double t = static_cast<double>(k) / n;
            out.push_back({{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)}, waypoints[i].label()});
        }
        out.push_back({b, waypoints[i].label()});
    }
    return out;
}

/// Scene-space window a crop was taken from.
struct CropWindow {
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;
    int output_size = 0;

    PixelPoint to_scene(const PixelPoint& in_crop) const {
        return {x0 + in_crop.x * width / output_size, y0 + in_crop.y * height / output_size};
    }
    PixelPoint to_crop(const PixelPoint& scene) const {
        return {(scene.x - x0) * output_size / width, (scene.y - y0) * output_size / height};
    }
};

/// Window of side crop_size centered on round(center), shifted inward at the
/// scene borders. Scenes smaller than the crop yield the whole scene.
inline CropWindow crop_window(const SceneImage& scene, const PixelPoint& center, const SimConfig& config) {
    if (!scene.contains(center)) throw PreconditionViolation("crop center lies outside the scene");
    const int w = std::min(config.crop_size, scene.width());
    const int h = std::min(config.crop_size, scene.height());
    const auto cx = static_cast<int>(std::lround(center.x));
    const auto cy = static_cast<int>(std::lround(center.y));
    const int x0 = std::clamp(cx - w / 2, 0, scene.width() - w);
    const int y0 = std::clamp(cy - h / 2, 0, scene.height() - h);
    return {x0, y0, w, h, config.output_size};
}

inline SceneImage crop_view(const SceneImage& scene, const PixelPoint& center, const SimConfig& config,
                            std::string id = {}) {
    config.validate();
    const auto win = crop_window(scene, center, config);
    const cv::Mat src = to_mat(scene);
    cv::Mat resized;
    cv::resize(src(cv::Rect(win.x0, win.y0, win.width, win.height)), resized,
               cv::Size(config.output_size, config.output_size), 0, 0, cv::INTER_LINEAR);
    if (id.empty()) id = scene.id() + "@" + std::to_string(win.x0) + "," + std::to_string(win.y0);
    return from_mat(std::move(id), resized);
}

/// Copy of `crop` with `label` on a contrasting strip in the top-left corner.
inline SceneImage annotate_frame(const SceneImage& crop, const std::string& label, const RenderStyle& style = {}) {
    if (label.empty()) throw PreconditionViolation("annotate_frame needs a non-empty label");
    cv::Mat canvas = to_mat(crop);
    draw_label_strip(canvas, label, {0, 0}, style);
    return from_mat(crop.id(), canvas);
}

struct FrameRecord {
    std::string frame_id;
    SceneImage crop;
    PixelPoint center;
    std::string label;
    CropWindow window;
};

using FrameMap = std::map<std::string, FrameRecord>;

struct SimulationResult {
    FrameMap frames;
    std::vector<std::uint8_t> animation;  // GIF bytes
};

inline std::string frame_id(std::size_t index, std::size_t total) {
    std::size_t digits = 4;
    for (std::size_t n = total > 0 ? total - 1 : 0; n >= 10000; n /= 10) ++digits;
    std::string s = std::to_string(index);
    return std::string(digits > s.size() ? digits - s.size() : 0, '0') + s;
}

/// Flies the waypoints over `scene`: one annotated frame per interpolated
/// position, keyed by zero-padded sequence number, plus the animation.
inline SimulationResult uav_simulation(const SceneImage& scene, const std::vector<LabeledKeypoint>& labeled_points,
                                       const SimConfig& config) {
    config.validate();
    const auto path = interpolate_path(labeled_points, config);
    SimulationResult result;
    std::vector<SceneImage> sequence;
    sequence.reserve(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) {
        const auto id = frame_id(i, path.size());
        const auto& pos = path[i];
        auto crop = annotate_frame(crop_view(scene, pos.point, config, scene.id() + "/frame-" + id), pos.label,
                                   config.style);
        sequence.push_back(crop);
        result.frames.emplace(id, FrameRecord{id, std::move(crop), pos.point, pos.label,
                                              crop_window(scene, pos.point, config)});
    }
    result.animation = encode_gif(sequence, config.frame_rate);
    return result;
}

inline nlohmann::json frame_index_json(const FrameMap& frames) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [id, f] : frames) {
        out.push_back({{"frame_id", id},
                       {"center", {f.center.x, f.center.y}},
                       {"label", f.label},
                       {"window", {f.window.x0, f.window.y0, f.window.width, f.window.height}}});
    }
    return out;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// Writes <frame_id>.png for every frame plus frames.json with centers and labels.
inline void export_frames(const FrameMap& frames, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [id, f] : frames) save_png(f.crop, dir / (id + ".png"));
    std::ofstream index(dir / "frames.json");
    index << frame_index_json(frames).dump(2) << '\n';
}

}  // namespace uavca::sim
