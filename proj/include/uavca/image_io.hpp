// SPDX-License-Identifier: Apache-2.0
//
// Raster I/O and the bridge between SceneImage and OpenCV matrices.
// SceneImage stores RGB; matrices handed to OpenCV drawing keep that order,
// so colors passed to cv:: calls are given as (r, g, b).
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "uavca/core.hpp"
#include "uavca/errors.hpp"

namespace uavca {

/// Deep copy into a mutable CV_8UC3 matrix in RGB order.
inline cv::Mat to_mat(const SceneImage& image) {
    cv::Mat m(image.height(), image.width(), CV_8UC3);
    const auto px = image.pixels();
    std::copy(px.begin(), px.end(), m.data);
    return m;
}

inline SceneImage from_mat(std::string id, const cv::Mat& rgb,
                           std::optional<std::filesystem::path> source = std::nullopt) {
    if (rgb.type() != CV_8UC3) throw PreconditionViolation("from_mat expects an 8-bit 3-channel matrix");
    cv::Mat contiguous = rgb.isContinuous() ? rgb : rgb.clone();
    std::vector<std::uint8_t> buf(contiguous.data, contiguous.data + contiguous.total() * 3U);
    return SceneImage(std::move(id), rgb.cols, rgb.rows, std::move(buf), std::move(source));
}

/// Loads any format OpenCV can decode and converts it to 8-bit RGB.
inline SceneImage load_image(const std::filesystem::path& path, std::string id) {
    cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (raw.empty()) throw Error("cannot read image: " + path.string());
    if (raw.depth() != CV_8U) {
        double scale = raw.depth() == CV_16U ? 1.0 / 257.0 : 1.0;
        raw.convertTo(raw, CV_8U, scale);
    }
    cv::Mat rgb;
    switch (raw.channels()) {
    case 1: cv::cvtColor(raw, rgb, cv::COLOR_GRAY2RGB); break;
    case 3: cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB); break;
    case 4: cv::cvtColor(raw, rgb, cv::COLOR_BGRA2RGB); break;
    default: throw Error("unsupported channel count in " + path.string());
    }
    return from_mat(std::move(id), rgb, path);
}

inline std::vector<std::uint8_t> encode_png(const SceneImage& image) {
    cv::Mat bgr;
    cv::cvtColor(to_mat(image), bgr, cv::COLOR_RGB2BGR);
    std::vector<std::uint8_t> out;
    if (!cv::imencode(".png", bgr, out)) throw Error("PNG encoding failed for image " + image.id());
    return out;
}

inline void save_png(const SceneImage& image, const std::filesystem::path& path) {
    cv::Mat bgr;
    cv::cvtColor(to_mat(image), bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite(path.string(), bgr)) throw Error("cannot write image: " + path.string());
}

}  // namespace uavca
