// SPDX-License-Identifier: Apache-2.0
//
// End-to-end mission: the Airspace Manager grounds targets on the satellite
// image, its keypoints are ordered into a route and assigned to the UAV agent
// over the message bus, and the UAV agent simulates the flight and checks
// every frame for fire. Detections travel back to the manager as
// observation messages.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uavca/agents/bus.hpp"
#include "uavca/agents/react.hpp"
#include "uavca/clock.hpp"
#include "uavca/core.hpp"
#include "uavca/gateway/keypoints.hpp"
#include "uavca/gateway/model.hpp"
#include "uavca/render.hpp"
#include "uavca/sim/flight.hpp"
#include "uavca/tools/ordering.hpp"
#include "uavca/tools/perception.hpp"
#include "uavca/tools/toolsets.hpp"

namespace uavca {

inline constexpr const char* kManagerId = "ama";
inline constexpr const char* kUavId = "uav";

inline constexpr const char* kManagerRole =
    "You are the Airspace Manager Agent. You interpret the mission request, analyse the satellite image, and "
    "locate the places the UAV must inspect, estimating for each how likely it is to be on fire. Finish with "
    "final_answer carrying the located targets as a list of {\"label\", \"point\", \"probability\"} objects.";

inline constexpr const char* kUavRole =
    "You are the UAV Agent. You fly the route assigned by the Airspace Manager over the scene image, capture "
    "frames, and check them for fire. Finish with final_answer summarising what was found.";

struct PipelineConfig {
    PipelineConfig(gateway::Gateway agent_, gateway::Gateway vision_)
        : agent(std::move(agent_)), vision(std::move(vision_)) {}

    /// Model for agent reasoning.
    gateway::Gateway agent;
    /// Model for perception tools; may share the agent's backend.
    gateway::Gateway vision;
    agents::ReactLimits limits;
    sim::SimConfig sim;
    RenderStyle style;
    /// UAV start position; defaults to the scene center.
    std::optional<PixelPoint> start;
    double report_period = 1.0;
    int parallelism = 4;
};

enum class MissionStatus { completed, budget_exhausted, tool_failure, failed };

inline const char* to_string(MissionStatus s) noexcept {
    switch (s) {
    case MissionStatus::completed: return "completed";
    case MissionStatus::budget_exhausted: return "budget_exhausted";
    case MissionStatus::tool_failure: return "tool_failure";
    case MissionStatus::failed: return "failed";
    }
    return "failed";
}

struct AgentRun {
    std::string agent_id;
    std::optional<nlohmann::json> final_answer;
    agents::Trace trace;
    std::optional<std::string> error;
};

struct MissionOutcome {
    MissionStatus status = MissionStatus::failed;
    MissionQuery query{kDefaultMissionQuery};
    std::string image_id;
    AgentRun manager;
    std::optional<AgentRun> uav;
    MissionPlan plan;
    std::optional<SceneImage> annotated;
    std::optional<sim::SimulationResult> simulation;
    std::vector<tools::DetectionResult> detections;
    std::vector<agents::AgentMessage> messages;
    double t_query = 0.0;
    std::optional<double> t_detect;
    double elapsed = 0.0;
    std::optional<std::string> error;

    std::vector<PixelPoint> reported_fires() const {
        std::vector<PixelPoint> out;
        for (const auto& d : detections) {
            if (d.fire_detected && d.location) out.push_back(*d.location);
        }
        return out;
    }
};

namespace pipeline_detail {

/// Targets from the manager's answer when it carries keypoints; otherwise
/// the last grounding result.
inline std::vector<LabeledKeypoint> targets_from_answer(const nlohmann::json& answer, const SceneImage& scene,
                                                        const std::vector<LabeledKeypoint>& fallback) {
    try {
        auto list = tools::detail::as_keypoint_list(answer);
        if (!list.empty()) return gateway::parse_keypoints(list, scene).keypoints;
    } catch (const Error&) {
    }
    return fallback;
}

template <typename Fn>
AgentRun run_agent(const std::string& id, Fn&& fn, MissionStatus& status) {
    AgentRun run{id, std::nullopt, {}, std::nullopt};
    try {
        auto result = fn();
        run.final_answer = std::move(result.final_answer);
        run.trace = std::move(result.trace);
    } catch (const agents::StepBudgetExhausted& e) {
        run.trace = e.trace();
        run.error = e.what();
        status = MissionStatus::budget_exhausted;
    } catch (const agents::ToolFailure& e) {
        run.trace = e.trace();
        run.error = e.what();
        status = MissionStatus::tool_failure;
    }
    return run;
}

}  // namespace pipeline_detail

/// Runs one mission on image `image_index` of `store`. `matches_truth`
/// decides whether a detected location counts as a real fire for t_detect;
/// without it any detection stops the clock.
inline MissionOutcome run_mission(const tools::ImageStore& store, long long image_index, const MissionQuery& query,
                                  const PipelineConfig& config,
                                  std::function<bool(const PixelPoint&)> matches_truth = {}) {
    const auto clock = config.agent.clock();
    MissionOutcome out;
    out.query = query;
    out.t_query = clock->now();
    out.status = MissionStatus::completed;

    agents::MessageBus bus;
    bus.register_agent(kManagerId);
    bus.register_agent(kUavId);

    const auto scene = store.read(image_index);
    out.image_id = scene.id();

    // Airspace Manager.
    auto ama = std::make_shared<tools::AmaWorkspace>(store, config.vision, config.style);
    const auto ama_tools = tools::make_ama_registry(ama);
    agents::ReactOptions ama_opts;
    ama_opts.role = kManagerRole;
    ama_opts.context = "Satellite image index: " + std::to_string(image_index) + " (id '" + scene.id() + "').";
    out.manager = pipeline_detail::run_agent(
        kManagerId, [&] { return agents::run_react(kManagerId, query, ama_tools, config.agent, config.limits, ama_opts); },
        out.status);
    if (!out.manager.final_answer) {
        out.messages = bus.history();
        out.elapsed = clock->now() - out.t_query;
        return out;
    }

    const auto targets = pipeline_detail::targets_from_answer(*out.manager.final_answer, scene, ama->last_keypoints);
    const PixelPoint start = config.start.value_or(PixelPoint(scene.width() / 2.0, scene.height() / 2.0));
    out.plan = tools::order_waypoints(targets, start);
    out.annotated = tools::visualize_keypoints(scene, out.plan.ordered_waypoints, config.style);

    if (out.plan.ordered_waypoints.empty()) {
        out.messages = bus.history();
        out.elapsed = clock->now() - out.t_query;
        return out;
    }

    const auto route_json = gateway::keypoints_to_json(out.plan.ordered_waypoints);
    bus.send({kManagerId, kUavId, agents::MessageKind::task_assignment,
              {{"image_index", image_index}, {"waypoints", route_json}, {"rationale", out.plan.rationale}},
              clock->now()});

    // UAV agent.
    const auto task = bus.try_receive(kUavId);
    auto uav = std::make_shared<tools::UavWorkspace>(store, config.vision, config.sim);
    uav->parallelism = config.parallelism;
    uav->assigned_route = out.plan.ordered_waypoints;
    uav->on_detections = [&](const std::vector<tools::DetectionResult>& results) {
        if (out.t_detect) return;
        for (const auto& d : results) {
            if (d.fire_detected && d.location && (!matches_truth || matches_truth(*d.location))) {
                out.t_detect = clock->now();
                return;
            }
        }
    };
    const auto uav_tools = tools::make_uav_registry(uav);

    agents::StateReporter reporter(
        bus, kManagerId,
        [&] {
            agents::AgentState s;
            s.agent_id = kUavId;
            s.position = uav->position;
            s.last_image_id = uav->last_scene_id;
            return s;
        },
        config.report_period);
    reporter.tick(clock->now());

    agents::ReactOptions uav_opts;
    uav_opts.role = kUavRole;
    uav_opts.context = "Simulation image index: " + std::to_string(image_index) + " (id '" + scene.id() +
                       "').\nAssigned route (" + out.plan.rationale + "): " + task->payload.at("waypoints").dump();
    uav_opts.on_step = [&](const agents::ReactStep&) { reporter.tick(clock->now()); };

    out.uav = pipeline_detail::run_agent(
        kUavId, [&] { return agents::run_react(kUavId, query, uav_tools, config.agent, config.limits, uav_opts); },
        out.status);
    reporter.stop();

    out.detections = uav->detections;
    if (uav->last_simulation) out.simulation = uav->simulations.at(*uav->last_simulation);
    if (!out.detections.empty()) {
        bus.send({kUavId, kManagerId, agents::MessageKind::observation,
                  {{"detections", tools::detections_to_json(out.detections)}}, clock->now()});
    }
    if (out.uav->final_answer) {
        bus.send({kUavId, kManagerId, agents::MessageKind::final_answer, *out.uav->final_answer, clock->now()});
    }
    while (bus.try_receive(kManagerId)) {
    }
    out.messages = bus.history();
    out.elapsed = clock->now() - out.t_query;
    return out;
}

inline nlohmann::json agent_run_to_json(const AgentRun& run) {
    nlohmann::json j = {{"agent_id", run.agent_id}, {"steps", agents::trace_to_json(run.trace)}};
    j["final_answer"] = run.final_answer ? *run.final_answer : nlohmann::json(nullptr);
    if (run.error) j["error"] = *run.error;
    return j;
}

/// Trace export: one document per mission run.
inline nlohmann::json mission_to_json(const MissionOutcome& m) {
    using nlohmann::json;
    json agents_json = json::array({agent_run_to_json(m.manager)});
    if (m.uav) agents_json.push_back(agent_run_to_json(*m.uav));
    json messages = json::array();
    for (const auto& msg : m.messages) messages.push_back(agents::message_to_json(msg));
    json j = {{"query", {{"text", m.query.text}, {"sample_id", m.query.sample_id}}},
              {"image_id", m.image_id},
              {"status", to_string(m.status)},
              {"agents", std::move(agents_json)},
              {"plan", {{"waypoints", gateway::keypoints_to_json(m.plan.ordered_waypoints)}, {"rationale", m.plan.rationale}}},
              {"detections", tools::detections_to_json(m.detections)},
              {"messages", std::move(messages)},
              {"timings", {{"t_query", m.t_query}, {"elapsed", m.elapsed}}}};
    j["timings"]["t_detect"] = m.t_detect ? json(*m.t_detect) : json(nullptr);
    if (m.error) j["error"] = *m.error;
    return j;
}

}  // namespace uavca
