// SPDX-License-Identifier: Apache-2.0
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "uavca/clock.hpp"
#include "uavca/gateway/scripted.hpp"
#include "uavca/image_io.hpp"
#include "uavca/tools/image_store.hpp"
#include "uavca/tools/ordering.hpp"
#include "uavca/tools/perception.hpp"
#include "uavca/tools/toolsets.hpp"

using namespace uavca;
using namespace uavca::tools;
using nlohmann::json;
using testsupport::make_scene;
using testsupport::scenario;

namespace {

gateway::Gateway scripted(const json& entries) {
    return gateway::Gateway(std::make_shared<gateway::ScriptedBackend>(scenario(entries)),
                            std::make_shared<VirtualClock>(), "vision");
}

/// Records every request and answers with a fixed text.
class RecordingBackend final : public gateway::Backend {
public:
    explicit RecordingBackend(std::string reply) : reply_(std::move(reply)) {}
    gateway::ModelResponse complete(const gateway::ModelRequest& r) override {
        requests.push_back(r);
        return {reply_, 0.0, "rec"};
    }
    std::string id() const override { return "rec"; }
    std::shared_ptr<Backend> session() override { return std::make_shared<RecordingBackend>(reply_); }
    std::vector<gateway::ModelRequest> requests;

private:
    std::string reply_;
};

}  // namespace

// ---- image store ------------------------------------------------------------

TEST(ImageStore, ManifestReadAndBounds) {
    testsupport::TempDir dir("store");
    json manifest = {{"images", json::array()}};
    for (int i = 0; i < 6; ++i) {
        const auto im = make_scene("img" + std::to_string(i), 40 + i, 30 + 2 * i);
        save_png(im, dir.path() / (im.id() + ".png"));
        manifest["images"].push_back({{"id", im.id()}, {"path", im.id() + ".png"}});
    }
    testsupport::write_file(dir.path() / "images.json", manifest.dump());
    const auto store = ImageStore::load_manifest(dir.path() / "images.json");
    EXPECT_EQ(store.size(), 6U);
    EXPECT_EQ(read_image(0, store).id(), "img0");
    const auto five = read_image(5, store);
    EXPECT_EQ(five.width(), 45);
    EXPECT_EQ(five.height(), 40);
    EXPECT_TRUE(five.same_pixels(make_scene("x", 45, 40)));
    EXPECT_THROW(read_image(6, store), IndexOutOfRange);
    EXPECT_THROW(read_image_for_simulation(-1, store), IndexOutOfRange);
    EXPECT_EQ(read_image_for_simulation(0, store).id(), read_image_for_simulation(0, store).id());
    EXPECT_THROW(ImageStore({{"a", "x.png"}, {"a", "y.png"}}), InvariantViolation);
}

TEST(ImageIo, ConvertsGrayAndAlphaToRgb) {
    testsupport::TempDir dir("io");
    cv::Mat gray(5, 7, CV_8UC1, cv::Scalar(99));
    cv::imwrite((dir.path() / "g.png").string(), gray);
    const auto g = load_image(dir.path() / "g.png", "g");
    EXPECT_EQ(g.at(3, 2), (Rgb{99, 99, 99}));
    cv::Mat bgra(5, 7, CV_8UC4, cv::Scalar(10, 20, 30, 255));
    cv::imwrite((dir.path() / "a.png").string(), bgra);
    EXPECT_EQ(load_image(dir.path() / "a.png", "a").at(0, 0), (Rgb{30, 20, 10}));
    EXPECT_THROW(load_image(dir.path() / "missing.png", "m"), Error);
}

// ---- describe / pixelpoint --------------------------------------------------

TEST(Describe, VerbatimAndRequestShape) {
    auto backend = std::make_shared<RecordingBackend>("industrial area with smoke plume");
    gateway::Gateway g(backend, std::make_shared<VirtualClock>(), "vision");
    const auto im = make_scene("sat-3", 32, 32);
    EXPECT_EQ(describe_satellite_image(im, g), "industrial area with smoke plume");
    ASSERT_EQ(backend->requests.size(), 1U);
    int images = 0;
    for (const auto& m : backend->requests[0].messages) {
        for (const auto& p : m.parts) {
            if (const auto* ref = std::get_if<gateway::ImageRef>(&p)) {
                ++images;
                EXPECT_EQ(ref->image.id(), "sat-3");
            }
        }
    }
    EXPECT_EQ(images, 1);
}

TEST(Pixelpoint, PassThroughRepairAndEmpty) {
    const auto im = make_scene("sat", 256, 256);
    auto a = pixelpoint_objects(im, "warehouse",
                                scripted(json::array({{{"match", 1}, {"response", R"([{"label":"warehouse","point":[120,88],"probability":0.7}])"}}})));
    ASSERT_EQ(a.size(), 1U);
    EXPECT_EQ(a[0].point(), PixelPoint(120, 88));
    EXPECT_EQ(*a[0].fire_probability(), 0.7);

    auto b = pixelpoint_objects(im, "barn", scripted(json::array({{{"match", 1}, {"response", R"([{"label":"barn","point":[5,9],},])"}}})));
    ASSERT_EQ(b.size(), 1U);
    EXPECT_EQ(b[0].point(), PixelPoint(5, 9));

    EXPECT_THROW(pixelpoint_objects(im, "fires", scripted(json::array({{{"match", 1}, {"response", "I see nothing relevant"}}}))),
                 EmptyResult);
    EXPECT_THROW(pixelpoint_objects(im, "", scripted(json::array({{{"match", 1}, {"response", "[]"}}}))), PreconditionViolation);
}

TEST(Pixelpoint, EmptyResultSurfacesAsObservation) {
    const auto store = ImageStore::from_images({make_scene("sat", 64, 64)});
    auto ws = std::make_shared<AmaWorkspace>(store, scripted(json::array({{{"match", 1}, {"response", "nothing here"}}})));
    auto reg = make_ama_registry(ws);
    reg.invoke("read_image", {{"i", 0}});
    EXPECT_THROW(reg.invoke("pixelpoint_objects", {{"image", "sat"}, {"objects", "fire"}}), EmptyResult);
}

// ---- visualize --------------------------------------------------------------

TEST(Visualize, EmptyIsIdentityAndInputUntouched) {
    const auto im = make_scene("v", 120, 90);
    const auto before = make_scene("v", 120, 90);
    const auto out = visualize_keypoints(im, {});
    EXPECT_TRUE(out.same_pixels(im));
    visualize_keypoints(im, {LabeledKeypoint("x", {60, 45})});
    EXPECT_TRUE(im.same_pixels(before));
}

TEST(Visualize, ChangesStayNearKeypoint) {
    const auto im = make_scene("v", 200, 200);
    const RenderStyle style;
    const auto out = visualize_keypoints(im, {LabeledKeypoint("pond", {10, 10})}, style);
    EXPECT_EQ(out.width(), 200);
    EXPECT_FALSE(out.same_pixels(im));
    const auto strip = label_strip_size("pond", style);
    const int reach_x = 10 + style.marker_radius + 2 + strip.width;
    const int reach_y = 10 + strip.height;
    for (int y = 0; y < 200; ++y) {
        for (int x = 0; x < 200; ++x) {
            if (x <= reach_x && y <= reach_y) continue;
            ASSERT_EQ(out.at(x, y), im.at(x, y)) << x << "," << y;
        }
    }
}

TEST(Visualize, BboxEdgesDrawn) {
    const auto im = SceneImage::filled("v", 100, 100, {0, 0, 0});
    const RenderStyle style;
    const auto out = visualize_keypoints(im, {LabeledKeypoint("b", {70, 70}, BoundingBox(20, 30, 80, 90))}, style);
    for (int x = 25; x <= 60; ++x) {
        EXPECT_EQ(out.at(x, 30), style.box_color);
        EXPECT_EQ(out.at(x, 90), style.box_color);
    }
    for (int y = 35; y <= 55; ++y) {
        EXPECT_EQ(out.at(20, y), style.box_color);
        EXPECT_EQ(out.at(80, y), style.box_color);
    }
}

// ---- ordering ---------------------------------------------------------------

TEST(Ordering, SpecExamples) {
    std::vector<LabeledKeypoint> k = {LabeledKeypoint("a", {0, 0}, std::nullopt, 0.2),
                                      LabeledKeypoint("b", {1, 1}, std::nullopt, 0.9),
                                      LabeledKeypoint("c", {2, 2}, std::nullopt, 0.5)};
    const auto plan = order_waypoints(k, {0, 0});
    ASSERT_EQ(plan.ordered_waypoints.size(), 3U);
    EXPECT_EQ(plan.ordered_waypoints[0], k[1]);
    EXPECT_EQ(plan.ordered_waypoints[1], k[2]);
    EXPECT_EQ(plan.ordered_waypoints[2], k[0]);
    EXPECT_FALSE(plan.rationale.empty());

    EXPECT_TRUE(order_waypoints({}, {0, 0}).ordered_waypoints.empty());

    std::vector<LabeledKeypoint> eq = {LabeledKeypoint("p0", {0, 0}), LabeledKeypoint("p1", {10, 0}),
                                       LabeledKeypoint("p2", {5, 0})};
    const auto e = order_waypoints(eq, {0, 0});
    EXPECT_EQ(e.ordered_waypoints[0].point(), PixelPoint(0, 0));
    EXPECT_EQ(e.ordered_waypoints[1].point(), PixelPoint(5, 0));
    EXPECT_EQ(e.ordered_waypoints[2].point(), PixelPoint(10, 0));
}

TEST(Ordering, MissingProbabilitySortsLast) {
    std::vector<LabeledKeypoint> k = {LabeledKeypoint("none", {0, 0}), LabeledKeypoint("low", {50, 50}, std::nullopt, 0.01)};
    const auto plan = order_waypoints(k, {0, 0});
    EXPECT_EQ(plan.ordered_waypoints[0].label(), "low");
}

// ---- detection --------------------------------------------------------------

TEST(Detect, VerdictParsing) {
    auto v = parse_frame_verdict(R"({"fire": true, "confidence": 0.8, "point": [10, 12]})");
    EXPECT_TRUE(v.fire);
    EXPECT_EQ(v.confidence, 0.8);
    EXPECT_EQ(*v.point, PixelPoint(10, 12));
    EXPECT_FALSE(parse_frame_verdict(R"({"fire_detected": "no"})").fire);
    EXPECT_TRUE(parse_frame_verdict("Yes, there is a fire.").fire);
    EXPECT_FALSE(parse_frame_verdict("No fire visible.").fire);
    EXPECT_FALSE(parse_frame_verdict("false").fire);
    EXPECT_FALSE(parse_frame_verdict(R"({"fire": false, "point": [3, 3]})").point.has_value());
    EXPECT_THROW(parse_frame_verdict("The weather is pleasant."), Error);
}

TEST(Detect, FiveFramesFireOnThird) {
    const auto scene = make_scene("scene", 256, 256);
    auto config = sim::SimConfig::with_steps(4);
    const auto sim = sim::uav_simulation(scene, {LabeledKeypoint("a", {20, 20}), LabeledKeypoint("b", {220, 220})}, config);
    ASSERT_EQ(sim.frames.size(), 5U);
    const auto g = scripted(json::array({
        {{"match", "scene/frame-0002"}, {"response", R"({"fire": true, "confidence": 0.9, "point": [128, 128]})"}},
        {{"match", "scene/frame-"}, {"response", R"({"fire": false, "confidence": 0.95})"}, {"reusable", true}},
    }));
    for (const int par : {1, 2, 4}) {
        const auto g2 = scripted(json::array({
            {{"match", "scene/frame-0002"}, {"response", R"({"fire": true, "confidence": 0.9, "point": [128, 128]})"}},
            {{"match", "scene/frame-"}, {"response", R"({"fire": false, "confidence": 0.95})"}, {"reusable", true}},
        }));
        const auto res = detect_and_display(sim.frames, g2, par);
        ASSERT_EQ(res.size(), 5U);
        int fires = 0;
        for (std::size_t i = 0; i < res.size(); ++i) {
            EXPECT_EQ(res[i].frame_id, sim::frame_id(i, 5));
            if (res[i].fire_detected) {
                ++fires;
                EXPECT_EQ(res[i].frame_id, "0002");
                EXPECT_NEAR(res[i].location->x, sim.frames.at("0002").center.x, 0.5);
            } else {
                EXPECT_FALSE(res[i].location.has_value());
            }
        }
        EXPECT_EQ(fires, 1);
    }
    EXPECT_THROW(detect_and_display({}, g), PreconditionViolation);
}

TEST(Detect, CropToSceneCenterOffset) {
    const auto scene = make_scene("scene", 400, 400);
    sim::SimConfig config = sim::SimConfig::with_steps(1);
    config.crop_size = 64;
    config.output_size = 64;
    const auto sim = sim::uav_simulation(scene, {LabeledKeypoint("t", {100, 200})}, config);
    const auto& frame = sim.frames.at("0000");
    const auto p = crop_to_scene(frame, {32, 32});
    EXPECT_EQ(p, PixelPoint(100, 200));
}

TEST(Detect, FrameFailureBecomesNote) {
    const auto scene = make_scene("scene", 128, 128);
    const auto sim = sim::uav_simulation(scene, {LabeledKeypoint("t", {64, 64})}, sim::SimConfig{});
    const auto res = detect_and_display(sim.frames, scripted(json::array({{{"match", "nothing matches this"}, {"response", "x"}}})));
    ASSERT_EQ(res.size(), 1U);
    EXPECT_FALSE(res[0].fire_detected);
    EXPECT_EQ(res[0].confidence, 0.0);
    ASSERT_TRUE(res[0].error.has_value());
}

// ---- final_answer -----------------------------------------------------------

TEST(FinalAnswer, StructuredAndScalar) {
    const auto tool = agents::final_answer_tool();
    const json fires = {{"fires", {{{"x", 50}, {"y", 60}}}}};
    auto out = tool.handler({{"answer", fires}});
    EXPECT_TRUE(out.terminal);
    EXPECT_EQ(out.result, fires);
    EXPECT_EQ(tool.handler({{"answer", "no fire found"}}).result, "no fire found");
}
