// SPDX-License-Identifier: Apache-2.0
//
// Drawing primitives shared by keypoint visualization and frame annotation.
// All drawing is aliased (LINE_8) so output is bit-reproducible.
#pragma once

#include <algorithm>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "uavca/core.hpp"

namespace uavca {

struct RenderStyle {
    int marker_radius = 4;
    int box_thickness = 2;
    double font_scale = 0.45;
    int font_thickness = 1;
    int text_padding = 3;
    Rgb marker_color{255, 40, 40};
    Rgb box_color{255, 220, 0};
    Rgb text_color{255, 255, 255};
    Rgb strip_color{0, 0, 0};
};

inline cv::Scalar to_scalar(Rgb c) { return {static_cast<double>(c.r), static_cast<double>(c.g), static_cast<double>(c.b)}; }

/// Size of the label strip (text plus padding) for `text`.
inline cv::Size label_strip_size(const std::string& text, const RenderStyle& style) {
    int baseline = 0;
    const auto ts = cv::getTextSize(text, cv::FONT_HERSHEY_SIMPLEX, style.font_scale, style.font_thickness, &baseline);
    return {ts.width + 2 * style.text_padding, ts.height + baseline + 2 * style.text_padding};
}

/// Draws `text` on a filled strip whose top-left corner is `origin`. The
/// strip is clipped to the image and nothing is drawn outside it. Returns the
/// clipped strip rectangle.
inline cv::Rect draw_label_strip(cv::Mat& canvas, const std::string& text, cv::Point origin, const RenderStyle& style) {
    const auto size = label_strip_size(text, style);
    const cv::Rect strip = cv::Rect(origin, size) & cv::Rect(0, 0, canvas.cols, canvas.rows);
    if (strip.empty()) return strip;
    cv::Mat roi = canvas(strip);
    roi.setTo(to_scalar(style.strip_color));
    int baseline = 0;
    const auto ts = cv::getTextSize(text, cv::FONT_HERSHEY_SIMPLEX, style.font_scale, style.font_thickness, &baseline);
    // Text coordinates are relative to the unclipped strip.
    const cv::Point text_org(origin.x - strip.x + style.text_padding, origin.y - strip.y + style.text_padding + ts.height);
    cv::putText(roi, text, text_org, cv::FONT_HERSHEY_SIMPLEX, style.font_scale, to_scalar(style.text_color),
                style.font_thickness, cv::LINE_8);
    return strip;
}

}  // namespace uavca
