// SPDX-License-Identifier: Apache-2.0
//
// Mapping of grounding-model answers onto LabeledKeypoints.
//
// Accepted element shapes:
//   {"label": s, "point":    [x, y]}
//   {"label": s, "point_2d": [x, y]}
//   {"label": s, "bbox_2d":  [x1, y1, x2, y2]}      point = bbox center
// each optionally carrying "probability" or "fire_probability".
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uavca/core.hpp"
#include "uavca/errors.hpp"

namespace uavca::gateway {

using Json = nlohmann::json;

struct ParsedKeypoints {
    std::vector<LabeledKeypoint> keypoints;
    std::size_t dropped = 0;
};

namespace detail {

inline std::optional<std::vector<double>> numbers(const Json& j, std::size_t count) {
    if (!j.is_array() || j.size() != count) return std::nullopt;
    std::vector<double> out;
    out.reserve(count);
    for (const auto& v : j) {
        if (!v.is_number()) return std::nullopt;
        const double d = v.get<double>();
        if (!std::isfinite(d)) return std::nullopt;
        out.push_back(d);
    }
    return out;
}

inline double clamp_axis(double v, int extent) {
    return std::clamp(v, 0.0, static_cast<double>(extent - 1));
}

inline std::optional<LabeledKeypoint> to_keypoint(const Json& el, const SceneImage& image) {
    if (!el.is_object()) return std::nullopt;
    const auto label = el.find("label");
    if (label == el.end() || !label->is_string() || label->get<std::string>().empty()) return std::nullopt;

    std::optional<BoundingBox> bbox;
    if (const auto b = el.find("bbox_2d"); b != el.end()) {
        const auto v = numbers(*b, 4);
        if (!v) return std::nullopt;
        const auto [x1, x2] = std::minmax((*v)[0], (*v)[2]);
        const auto [y1, y2] = std::minmax((*v)[1], (*v)[3]);
        bbox = BoundingBox(clamp_axis(x1, image.width()), clamp_axis(y1, image.height()),
                           clamp_axis(x2, image.width()), clamp_axis(y2, image.height()));
    }

    std::optional<PixelPoint> point;
    for (const char* key : {"point", "point_2d"}) {
        if (const auto p = el.find(key); p != el.end()) {
            const auto v = numbers(*p, 2);
            if (!v) return std::nullopt;
            point = PixelPoint(clamp_axis((*v)[0], image.width()), clamp_axis((*v)[1], image.height()));
            break;
        }
    }
    if (!point) {
        if (!bbox) return std::nullopt;
        point = bbox->center();
    }
    // An explicit point outside its own box: keep the point, drop the box.
    if (bbox && !bbox->contains(*point)) bbox.reset();

    std::optional<double> probability;
    for (const char* key : {"fire_probability", "probability"}) {
        if (const auto p = el.find(key); p != el.end()) {
            if (!p->is_number() || !std::isfinite(p->get<double>())) return std::nullopt;
            probability = std::clamp(p->get<double>(), 0.0, 1.0);
            break;
        }
    }
    return LabeledKeypoint(label->get<std::string>(), *point, bbox, probability);
}

}  // namespace detail

/// Maps each list element onto a keypoint clamped into `image`. Elements with
/// no accepted shape are dropped and counted. Throws EmptyResult when nothing
/// survives.
inline ParsedKeypoints parse_keypoints(const Json& value, const SceneImage& image) {
    if (!value.is_array()) throw PreconditionViolation("parse_keypoints expects a JSON list");
    ParsedKeypoints out;
    for (const auto& el : value) {
        if (auto kp = detail::to_keypoint(el, image)) {
            out.keypoints.push_back(std::move(*kp));
        } else {
            ++out.dropped;
        }
    }
    if (out.keypoints.empty()) {
        throw EmptyResult("grounding answer contained no usable keypoints (" + std::to_string(out.dropped) +
                          " element(s) dropped)");
    }
    return out;
}

/// Serializes keypoints in the canonical {label, point, bbox_2d?, probability?} shape.
inline Json keypoints_to_json(const std::vector<LabeledKeypoint>& keypoints) {
    Json out = Json::array();
    for (const auto& kp : keypoints) {
        Json el = {{"label", kp.label()}, {"point", {kp.point().x, kp.point().y}}};
        if (kp.bbox()) el["bbox_2d"] = {kp.bbox()->x1, kp.bbox()->y1, kp.bbox()->x2, kp.bbox()->y2};
        if (kp.fire_probability()) el["probability"] = *kp.fire_probability();
        out.push_back(std::move(el));
    }
    return out;
}

}  // namespace uavca::gateway
