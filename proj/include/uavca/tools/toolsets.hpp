// SPDX-License-Identifier: Apache-2.0
//
// Tool registries for the two agents. Images, routes and frame sets live in
// a per-agent workspace and are passed between tool calls by handle (the
// image id, or the frame-set id returned by uav_simulation).
#pragma once

#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uavca/agents/tools.hpp"
#include "uavca/core.hpp"
#include "uavca/errors.hpp"
#include "uavca/gateway/keypoints.hpp"
#include "uavca/gateway/model.hpp"
#include "uavca/render.hpp"
#include "uavca/sim/flight.hpp"
#include "uavca/tools/image_store.hpp"
#include "uavca/tools/perception.hpp"

namespace uavca::tools {

using agents::ArgSpec;
using agents::Phase;
using agents::ToolOutput;
using agents::ToolRegistry;
using agents::ToolSpec;

namespace detail {

inline long long index_arg(const Json& args, const char* key) {
    const auto& v = args.at(key);
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_string()) return std::stoll(v.get<std::string>());
    throw PreconditionViolation(std::string("argument '") + key + "' must be an integer");
}

inline std::string handle_arg(const Json& args, const char* key) {
    const auto& v = args.at(key);
    if (!v.is_string()) throw PreconditionViolation(std::string("argument '") + key + "' must be a handle string");
    return v.get<std::string>();
}

inline std::string fmt_point(const PixelPoint& p) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "(%.1f, %.1f)", p.x, p.y);
    return buf;
}

inline std::string summarize_keypoints(const std::vector<LabeledKeypoint>& kps) {
    std::ostringstream os;
    os << kps.size() << " object(s):";
    for (const auto& kp : kps) {
        os << ' ' << kp.label() << ' ' << fmt_point(kp.point());
        if (kp.fire_probability()) os << " p=" << *kp.fire_probability();
        os << ';';
    }
    return os.str();
}

inline Json image_info(const SceneImage& im) {
    return {{"image", im.id()}, {"width", im.width()}, {"height", im.height()}};
}

}  // namespace detail

/// State shared by the Airspace Manager's tools during one run.
struct AmaWorkspace {
    AmaWorkspace(ImageStore store_, gateway::Gateway vision_, RenderStyle style_ = {})
        : store(std::move(store_)), vision(std::move(vision_)), style(style_) {}

    ImageStore store;
    gateway::Gateway vision;
    RenderStyle style;
    std::map<std::string, SceneImage> images;
    std::optional<std::string> last_image_id;
    std::vector<LabeledKeypoint> last_keypoints;
    std::optional<SceneImage> last_visualization;

    const SceneImage& image(const std::string& handle) const {
        const auto it = images.find(handle);
        if (it == images.end()) throw PreconditionViolation("unknown image handle '" + handle + "'; call read_image first");
        return it->second;
    }
};

/// State shared by the UAV agent's tools during one run.
struct UavWorkspace {
    UavWorkspace(ImageStore store_, gateway::Gateway vision_, sim::SimConfig sim_ = {})
        : store(std::move(store_)), vision(std::move(vision_)), sim(std::move(sim_)) {}

    ImageStore store;
    gateway::Gateway vision;
    sim::SimConfig sim;
    int parallelism = 4;
    std::vector<LabeledKeypoint> assigned_route;
    std::map<std::string, SceneImage> images;
    std::map<std::string, sim::SimulationResult> simulations;
    std::optional<std::string> last_simulation;
    std::optional<std::string> last_scene_id;
    std::optional<PixelPoint> position;
    std::vector<DetectionResult> detections;
    /// Called after every detect_and_display with that call's results.
    std::function<void(const std::vector<DetectionResult>&)> on_detections;

    const SceneImage& image(const std::string& handle) const {
        const auto it = images.find(handle);
        if (it == images.end()) {
            throw PreconditionViolation("unknown image handle '" + handle + "'; call read_image_for_simulation first");
        }
        return it->second;
    }
};

inline std::vector<LabeledKeypoint> keypoints_arg(const Json& args, const char* key, const SceneImage& image,
                                                  const std::vector<LabeledKeypoint>& fallback) {
    if (!args.is_object() || !args.contains(key) || args[key].is_null() || args[key].is_string()) return fallback;
    return gateway::parse_keypoints(detail::as_keypoint_list(args[key]), image).keypoints;
}

/// read_image, describe_satellite_image, pixelpoint_objects,
/// visualize_keypoints, final_answer.
inline ToolRegistry make_ama_registry(std::shared_ptr<AmaWorkspace> ws) {
    ToolRegistry reg;
    reg.register_tool({"read_image", "Loads the satellite image with index i for airspace analysis; returns its handle.",
                       {{"i", "integer", true}},
                       [ws](const Json& args) {
                           auto im = read_image(detail::index_arg(args, "i"), ws->store);
                           ws->images.insert_or_assign(im.id(), im);
                           ws->last_image_id = im.id();
                           return ToolOutput{detail::image_info(im),
                                             "image '" + im.id() + "' loaded (" + std::to_string(im.width()) + "x" +
                                                 std::to_string(im.height()) + ")"};
                       },
                       Phase::observe});
    reg.register_tool({"describe_satellite_image",
                       "Produces a detailed description of a satellite image with the vision-language model.",
                       {{"image", "image handle", true}},
                       [ws](const Json& args) {
                           const auto& im = ws->image(detail::handle_arg(args, "image"));
                           auto caption = describe_satellite_image(im, ws->vision);
                           return ToolOutput{caption, caption};
                       },
                       Phase::describe});
    reg.register_tool({"pixelpoint_objects",
                       "Finds pixel coordinates of the named objects in an image with the vision-language model "
                       "(malformed JSON answers are repaired).",
                       {{"image", "image handle", true}, {"objects", "string", true}},
                       [ws](const Json& args) {
                           const auto& im = ws->image(detail::handle_arg(args, "image"));
                           const auto& q = args.at("objects");
                           const std::string query = q.is_string() ? q.get<std::string>() : q.dump();
                           auto kps = pixelpoint_objects(im, query, ws->vision);
                           ws->last_keypoints = kps;
                           return ToolOutput{gateway::keypoints_to_json(kps), detail::summarize_keypoints(kps)};
                       },
                       Phase::decide});
    reg.register_tool({"visualize_keypoints",
                       "Renders labeled keypoints and their bounding boxes on an image; keypoints default to the "
                       "last pixelpoint_objects result.",
                       {{"image", "image handle", true}, {"keypoints", "list", false}},
                       [ws](const Json& args) {
                           const auto& im = ws->image(detail::handle_arg(args, "image"));
                           const auto kps = keypoints_arg(args, "keypoints", im, ws->last_keypoints);
                           auto out = visualize_keypoints(im, kps, ws->style);
                           ws->last_visualization = out;
                           return ToolOutput{{{"image", out.id()}, {"keypoints", kps.size()}},
                                             "rendered " + std::to_string(kps.size()) + " keypoint(s) as '" + out.id() +
                                                 "'"};
                       },
                       std::nullopt});
    reg.register_tool(agents::final_answer_tool());
    return reg;
}

/// read_image_for_simulation, uav_simulation, detect_and_display, final_answer.
inline ToolRegistry make_uav_registry(std::shared_ptr<UavWorkspace> ws) {
    ToolRegistry reg;
    reg.register_tool({"read_image_for_simulation", "Loads the scene image with index i for the flight simulation.",
                       {{"i", "integer", true}},
                       [ws](const Json& args) {
                           auto im = read_image_for_simulation(detail::index_arg(args, "i"), ws->store);
                           ws->images.insert_or_assign(im.id(), im);
                           return ToolOutput{detail::image_info(im),
                                             "image '" + im.id() + "' loaded (" + std::to_string(im.width()) + "x" +
                                                 std::to_string(im.height()) + ")"};
                       },
                       Phase::observe});
    reg.register_tool({"uav_simulation",
                       "Flies the UAV over the image along the labeled points (default: the assigned route) and "
                       "captures camera frames; returns a frame-set handle.",
                       {{"image", "image handle", true}, {"labeled_points", "list", false}},
                       [ws](const Json& args) {
                           const auto& im = ws->image(detail::handle_arg(args, "image"));
                           const auto route = keypoints_arg(args, "labeled_points", im, ws->assigned_route);
                           if (route.empty()) throw EmptyPath("no route assigned and no labeled_points given");
                           auto result = sim::uav_simulation(im, route, ws->sim);
                           const std::string handle = "frames-" + std::to_string(ws->simulations.size() + 1);
                           const auto count = result.frames.size();
                           ws->position = route.back().point();
                           ws->last_scene_id = im.id();
                           ws->simulations.insert_or_assign(handle, std::move(result));
                           ws->last_simulation = handle;
                           return ToolOutput{{{"frames_dict", handle}, {"frames", count}},
                                             "simulated " + std::to_string(route.size()) + " waypoint(s), " +
                                                 std::to_string(count) + " frames in '" + handle + "'"};
                       },
                       Phase::decide});
    reg.register_tool({"detect_and_display", "Checks every frame of a frame set for fire; returns fire locations.",
                       {{"frames_dict", "frame-set handle", false}},
                       [ws](const Json& args) {
                           std::string handle = ws->last_simulation.value_or("");
                           if (args.is_object() && args.contains("frames_dict") && args["frames_dict"].is_string()) {
                               handle = args["frames_dict"].get<std::string>();
                           }
                           const auto it = ws->simulations.find(handle);
                           if (it == ws->simulations.end()) {
                               throw PreconditionViolation("unknown frame set '" + handle + "'; run uav_simulation first");
                           }
                           auto results = detect_and_display(it->second.frames, ws->vision, ws->parallelism);
                           ws->detections.insert(ws->detections.end(), results.begin(), results.end());
                           if (ws->on_detections) ws->on_detections(results);

                           std::ostringstream os;
                           int fires = 0;
                           for (const auto& d : results) {
                               if (!d.fire_detected) continue;
                               ++fires;
                               os << " frame " << d.frame_id << " at " << detail::fmt_point(*d.location)
                                  << " (confidence " << d.confidence << ");";
                           }
                           std::string summary = std::to_string(results.size()) + " frame(s) checked, " +
                                                 std::to_string(fires) + " with fire" + (fires ? ":" : ".") + os.str();
                           return ToolOutput{detections_to_json(results), summary};
                       },
                       std::nullopt});
    reg.register_tool(agents::final_answer_tool());
    return reg;
}

}  // namespace uavca::tools
