// SPDX-License-Identifier: Apache-2.0
//
// Vision-model backed tools: scene description, pixel-pointing, per-frame
// fire detection, and keypoint rendering.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <future>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <opencv2/imgproc.hpp>

#include "uavca/core.hpp"
#include "uavca/errors.hpp"
#include "uavca/gateway/json_repair.hpp"
#include "uavca/gateway/keypoints.hpp"
#include "uavca/gateway/model.hpp"
#include "uavca/image_io.hpp"
#include "uavca/render.hpp"
#include "uavca/sim/flight.hpp"

namespace uavca::tools {

using Json = nlohmann::json;
using gateway::Gateway;
using gateway::ImageRef;
using gateway::ModelMessage;
using gateway::Role;

inline ModelMessage image_prompt(const std::string& text, const SceneImage& image) {
    return ModelMessage{Role::user, {text, ImageRef{image}}};
}

inline std::string describe_prompt() {
    return "Describe this satellite image in detail. Cover land use, buildings and industrial structures, "
           "vegetation, roads, water bodies, vehicles, and any sign of fire or smoke, stating where in the "
           "image each element is. Be thorough; a long description is expected.";
}

/// Long-form caption of `image` from the vision model.
inline std::string describe_satellite_image(const SceneImage& image, const Gateway& gateway) {
    return gateway.complete({image_prompt(describe_prompt(), image)}).text;
}

inline std::string pixelpoint_prompt(const std::string& objects, const SceneImage& image) {
    return "Locate every instance of the following in this satellite image: " + objects + ".\nThe image is " +
           std::to_string(image.width()) + "x" + std::to_string(image.height()) +
           " pixels, origin at the top-left. Answer with a JSON list, one element per instance:\n"
           "[{\"label\": \"<name>\", \"point\": [x, y], \"probability\": <0..1 likelihood that it is on fire>}]\n"
           "You may add \"bbox_2d\": [x1, y1, x2, y2]. Answer [] when nothing matches.";
}

namespace detail {

/// Grounding answers sometimes wrap the list in an object or return a single
/// element; bring them to the list shape parse_keypoints expects.
inline Json as_keypoint_list(const Json& value) {
    if (value.is_array()) return value;
    if (value.is_object()) {
        if (value.contains("label")) return Json::array({value});
        for (const auto& [key, member] : value.items()) {
            if (member.is_array()) return member;
        }
    }
    return Json::array();
}

}  // namespace detail

/// Grounds `objects_query` on `image`. Malformed JSON is repaired; throws
/// EmptyResult when the answer holds no usable keypoint.
inline std::vector<LabeledKeypoint> pixelpoint_objects(const SceneImage& image, const std::string& objects_query,
                                                       const Gateway& gateway) {
    if (objects_query.empty()) throw PreconditionViolation("pixelpoint_objects needs a non-empty object query");
    const auto response = gateway.complete({image_prompt(pixelpoint_prompt(objects_query, image), image)});
    Json value;
    try {
        value = gateway::extract_structured(response.text).value;
    } catch (const Unparseable&) {
        throw EmptyResult("grounding answer contained no JSON: \"" + response.text.substr(0, 120) + "\"");
    } catch (const PreconditionViolation&) {
        throw EmptyResult("grounding answer was empty");
    }
    return gateway::parse_keypoints(detail::as_keypoint_list(value), image).keypoints;
}

/// Copy of `image` with a marker per keypoint, its bbox outline when present,
/// and its label beside the marker.
inline SceneImage visualize_keypoints(const SceneImage& image, const std::vector<LabeledKeypoint>& keypoints,
                                      const RenderStyle& style = {}) {
    cv::Mat canvas = to_mat(image);
    for (const auto& kp : keypoints) {
        if (kp.bbox()) {
            const auto& b = *kp.bbox();
            cv::rectangle(canvas, cv::Point(static_cast<int>(std::lround(b.x1)), static_cast<int>(std::lround(b.y1))),
                          cv::Point(static_cast<int>(std::lround(b.x2)), static_cast<int>(std::lround(b.y2))),
                          to_scalar(style.box_color), style.box_thickness, cv::LINE_8);
        }
    }
    for (const auto& kp : keypoints) {
        const cv::Point p(static_cast<int>(std::lround(kp.point().x)), static_cast<int>(std::lround(kp.point().y)));
        cv::circle(canvas, p, style.marker_radius, to_scalar(style.marker_color), cv::FILLED, cv::LINE_8);
        const auto strip = label_strip_size(kp.label(), style);
        draw_label_strip(canvas, kp.label(), {p.x + style.marker_radius + 2, p.y - strip.height / 2}, style);
    }
    return from_mat(image.id() + "/keypoints", canvas, image.source_path());
}

struct DetectionResult {
    std::string frame_id;
    bool fire_detected = false;
    double confidence = 0.0;
    std::optional<PixelPoint> location;  // scene coordinates
    std::string label;
    std::optional<std::string> error;
};

inline Json detection_to_json(const DetectionResult& d) {
    Json j = {{"frame_id", d.frame_id},
              {"fire_detected", d.fire_detected},
              {"confidence", d.confidence},
              {"label", d.label}};
    j["location"] = d.location ? Json{d.location->x, d.location->y} : Json(nullptr);
    if (d.error) j["error"] = *d.error;
    return j;
}

inline Json detections_to_json(const std::vector<DetectionResult>& ds) {
    Json out = Json::array();
    for (const auto& d : ds) out.push_back(detection_to_json(d));
    return out;
}

inline std::string detect_prompt(const sim::FrameRecord& frame) {
    return "This is frame " + frame.frame_id + " of a UAV camera feed, flying toward \"" + frame.label +
           "\". Is there fire or smoke in this image?\nAnswer with JSON only: "
           "{\"fire\": true|false, \"confidence\": <0..1>, \"point\": [x, y]} where point is the fire location "
           "in this image's pixel coordinates (" +
           std::to_string(frame.window.output_size) + "x" + std::to_string(frame.window.output_size) +
           "). Omit point when there is no fire.";
}

/// Fire verdict in crop coordinates, as read from one model answer.
struct FrameVerdict {
    bool fire = false;
    double confidence = 0.0;
    std::optional<PixelPoint> point;
};

inline std::optional<bool> truthy(const Json& v) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number()) return v.get<double>() != 0.0;
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        if (s == "yes" || s == "true" || s == "fire") return true;
        if (s == "no" || s == "false" || s == "none") return false;
    }
    return std::nullopt;
}

/// Accepts {"fire", "confidence", "point"} (aliases: fire_detected/detected,
/// location), a bare boolean, or plain yes/no text.
inline FrameVerdict parse_frame_verdict(const std::string& text) {
    std::optional<Json> value;
    try {
        value = gateway::extract_structured(text).value;
    } catch (const Error&) {
    }
    if (value && value->is_array() && !value->empty()) value = value->front();
    FrameVerdict v;
    if (value && value->is_object()) {
        std::optional<bool> fire;
        for (const char* key : {"fire", "fire_detected", "detected"}) {
            if (value->contains(key)) {
                fire = truthy((*value)[key]);
                break;
            }
        }
        if (!fire) throw Error("detection answer lacks a fire verdict");
        v.fire = *fire;
        v.confidence = v.fire ? 1.0 : 0.0;
        if (const auto c = value->find("confidence"); c != value->end() && c->is_number()) {
            v.confidence = std::clamp(c->get<double>(), 0.0, 1.0);
        }
        for (const char* key : {"point", "location"}) {
            if (const auto p = value->find(key); v.fire && p != value->end() && p->is_array() && p->size() == 2 &&
                                                 (*p)[0].is_number() && (*p)[1].is_number()) {
                v.point = PixelPoint((*p)[0].get<double>(), (*p)[1].get<double>());
                break;
            }
        }
        return v;
    }
    if (value) {
        if (const auto b = truthy(*value)) {
            v.fire = *b;
            v.confidence = v.fire ? 1.0 : 0.0;
            return v;
        }
    }
    std::string lower = text;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto body = gateway::repair::trim(lower);
    if (body.rfind("no", 0) == 0 || lower.find("no fire") != std::string::npos) return v;
    if (body.rfind("yes", 0) == 0 || lower.find("fire") != std::string::npos) {
        v.fire = true;
        v.confidence = 1.0;
        return v;
    }
    throw Error("cannot read a fire verdict from: \"" + text.substr(0, 80) + "\"");
}

/// Scene coordinates of a point given in the frame's crop coordinates.
inline PixelPoint crop_to_scene(const sim::FrameRecord& frame, const PixelPoint& in_crop) {
    const double hi = static_cast<double>(frame.window.output_size);
    const PixelPoint clamped(std::clamp(in_crop.x, 0.0, hi), std::clamp(in_crop.y, 0.0, hi));
    return frame.window.to_scene(clamped);
}

inline DetectionResult detect_frame(const sim::FrameRecord& frame, const Gateway& gateway) {
    DetectionResult r{frame.frame_id, false, 0.0, std::nullopt, frame.label, std::nullopt};
    try {
        const auto response = gateway.complete({image_prompt(detect_prompt(frame), frame.crop)});
        const auto verdict = parse_frame_verdict(response.text);
        r.fire_detected = verdict.fire;
        r.confidence = verdict.confidence;
        if (verdict.fire) r.location = verdict.point ? crop_to_scene(frame, *verdict.point) : frame.center;
    } catch (const std::exception& e) {
        r = DetectionResult{frame.frame_id, false, 0.0, std::nullopt, frame.label, std::string(e.what())};
    }
    return r;
}

/// One result per frame, in frame-id order. Frames are queried with up to
/// `parallelism` requests in flight; a failed frame reports no fire with an
/// error note.
inline std::vector<DetectionResult> detect_and_display(const sim::FrameMap& frames, const Gateway& gateway,
                                                       int parallelism = 4) {
    if (frames.empty()) throw PreconditionViolation("detect_and_display needs at least one frame");
    std::vector<const sim::FrameRecord*> ordered;
    ordered.reserve(frames.size());
    for (const auto& [id, f] : frames) ordered.push_back(&f);

    std::vector<DetectionResult> results(ordered.size());
    const auto batch = static_cast<std::size_t>(std::max(1, parallelism));
    for (std::size_t start = 0; start < ordered.size(); start += batch) {
        const auto stop = std::min(ordered.size(), start + batch);
        if (stop - start == 1) {
            results[start] = detect_frame(*ordered[start], gateway);
            continue;
        }
        std::vector<std::future<DetectionResult>> pending;
        for (std::size_t i = start; i < stop; ++i) {
            pending.push_back(std::async(std::launch::async, [&, i] { return detect_frame(*ordered[i], gateway); }));
        }
        for (std::size_t i = start; i < stop; ++i) results[i] = pending[i - start].get();
    }
    return results;
}

}  // namespace uavca::tools
