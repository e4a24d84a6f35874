// SPDX-License-Identifier: Apache-2.0
//
// uavca: mission, benchmark, grounding and simulate commands.
//
// Exit codes: 0 success, 1 configuration or input error, 2 step budget
// exhausted. The endpoint credential is read only from the environment
// variable named by --credential-env.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uavca/eval/benchmark.hpp"
#include "uavca/gateway/http.hpp"
#include "uavca/gateway/scripted.hpp"
#include "uavca/image_io.hpp"
#include "uavca/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace uavca;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kBudgetExhausted = 2;

struct RunConfig {
    std::string backend = "scripted";
    std::string api_base;
    std::string credential_env = "UAVCA_API_KEY";
    std::string scenario_path;
    std::string model_name = "qwen2.5-vl";
    std::string vision_model;
    double temperature = 0.5;
    int max_steps = 8;
    double step_length = 25.0;
    int crop_size = 128;
    int output_size = 256;
    double fps = 5.0;
    double match_radius = 50.0;
    std::string out_dir = "out";
    int parallelism = 4;

    void validate() const {
        if (backend == "http" && api_base.empty()) throw Error("--backend http needs --api-base");
        if (backend == "scripted" && scenario_path.empty()) throw Error("--backend scripted needs --scenario");
        if (max_steps < 1) throw Error("--max-steps must be positive");
        if (parallelism < 1) throw Error("--parallelism must be positive");
        if (!(temperature >= 0.0)) throw Error("--temperature must be non-negative");
        if (!(match_radius > 0.0)) throw Error("--match-radius must be positive");
    }

    bool scripted() const { return backend == "scripted"; }

    sim::SimConfig sim() const {
        auto c = sim::SimConfig::with_step_length(step_length);
        c.crop_size = crop_size;
        c.output_size = output_size;
        c.frame_rate = fps;
        c.validate();
        return c;
    }

    std::shared_ptr<gateway::Backend> make_backend() const {
        if (scripted()) {
            return std::make_shared<gateway::ScriptedBackend>(gateway::ScriptedScenario::load(scenario_path));
        }
        gateway::HttpConfig http;
        http.api_base = api_base;
        http.credential_env = credential_env;
        return std::make_shared<gateway::HttpBackend>(http);
    }

    /// Scripted runs charge scripted latency to a virtual clock so reruns
    /// reproduce timings exactly.
    std::shared_ptr<RunClock> make_clock() const {
        if (scripted()) return std::make_shared<VirtualClock>();
        return std::make_shared<WallClock>();
    }
};

void add_backend_flags(CLI::App& cmd, RunConfig& rc) {
    cmd.add_option("--backend", rc.backend, "Model backend")->check(CLI::IsMember({"http", "scripted"}));
    cmd.add_option("--api-base", rc.api_base, "OpenAI-compatible endpoint base URL");
    cmd.add_option("--credential-env", rc.credential_env, "Environment variable holding the API key");
    cmd.add_option("--scenario", rc.scenario_path, "Scripted scenario JSON");
    cmd.add_option("--model", rc.model_name, "Agent model name");
    cmd.add_option("--vision-model", rc.vision_model, "Perception model name (defaults to --model)");
    cmd.add_option("--temperature", rc.temperature, "Sampling temperature");
    cmd.add_option("--max-steps", rc.max_steps, "ReAct step budget per agent");
    cmd.add_option("--parallelism", rc.parallelism, "Concurrent frames or samples");
}

void add_sim_flags(CLI::App& cmd, RunConfig& rc) {
    cmd.add_option("--step-length", rc.step_length, "Pixels between simulated frames");
    cmd.add_option("--crop-size", rc.crop_size, "Side of the square crop around each position");
    cmd.add_option("--output-size", rc.output_size, "Side of each rendered frame");
    cmd.add_option("--fps", rc.fps, "GIF frame rate");
}

fs::path prepare_out_dir(const RunConfig& rc) {
    const fs::path dir = rc.out_dir;
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

json read_json(const fs::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw Error(std::string("cannot open ") + what + ": " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(std::string("invalid ") + what + " " + path.string() + ": " + e.what());
    }
}

SceneImage require_image(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw Error("image not found: " + path.string());
    return load_image(path, path.stem().string());
}

int cmd_mission(const RunConfig& rc, const fs::path& image_path, const std::string& query, bool export_frames) {
    rc.validate();
    const auto scene = require_image(image_path);
    const auto store = tools::ImageStore::from_images({scene});
    const auto clock = rc.make_clock();
    gateway::Gateway agent(rc.make_backend(), clock, rc.model_name, rc.temperature);
    PipelineConfig pc(agent, agent.with_model(rc.vision_model.empty() ? rc.model_name : rc.vision_model));
    pc.limits.max_steps = rc.max_steps;
    pc.limits.temperature = rc.temperature;
    pc.sim = rc.sim();
    pc.parallelism = rc.parallelism;

    const auto out = run_mission(store, 0, MissionQuery(query, scene.id()), pc);
    const auto dir = prepare_out_dir(rc);
    write_text(dir / "trace.json", mission_to_json(out).dump(2) + "\n");
    save_png(out.annotated ? *out.annotated : scene, dir / "keypoints.png");
    write_text(dir / "detections.json", tools::detections_to_json(out.detections).dump(2) + "\n");
    if (out.simulation) {
        sim::write_bytes(dir / "flight.gif", out.simulation->animation);
        if (export_frames) sim::export_frames(out.simulation->frames, dir / "frames");
    }

    std::cout << "status: " << to_string(out.status) << "\n";
    std::cout << "waypoints: " << out.plan.ordered_waypoints.size() << "\n";
    for (const auto& p : out.reported_fires()) std::cout << "fire at (" << p.x << ", " << p.y << ")\n";
    std::cout << "elapsed: " << eval::fixed2(out.elapsed) << " s\n";

    switch (out.status) {
    case MissionStatus::completed: return kOk;
    case MissionStatus::budget_exhausted:
        std::cerr << "step budget exhausted: "
                  << (out.uav && out.uav->error ? *out.uav->error : out.manager.error.value_or("")) << "\n";
        return kBudgetExhausted;
    default:
        std::cerr << "mission failed: " << (out.uav && out.uav->error ? *out.uav->error : out.manager.error.value_or(""))
                  << "\n";
        return kInputError;
    }
}

std::vector<double> parse_temperatures(const std::string& list) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error("bad temperature in --temperatures: '" + item + "'");
        }
    }
    if (out.empty()) throw Error("--temperatures lists no values");
    return out;
}

int cmd_benchmark(const RunConfig& rc, const fs::path& manifest_path, const std::string& temperatures) {
    rc.validate();
    const auto manifest = eval::load_manifest(manifest_path);
    eval::BenchmarkConfig bc;
    bc.backend = rc.make_backend();
    bc.model_name = rc.model_name;
    if (!rc.vision_model.empty()) bc.vision_model = rc.vision_model;
    bc.temperature = rc.temperature;
    bc.limits.max_steps = rc.max_steps;
    bc.sim = rc.sim();
    bc.match_radius = rc.match_radius;
    bc.parallelism = rc.parallelism;
    bc.virtual_clock = rc.scripted();

    const auto temps = temperatures.empty() ? std::vector<double>{rc.temperature} : parse_temperatures(temperatures);
    const auto runs = eval::temperature_sweep(manifest, temps, bc);
    const auto dir = prepare_out_dir(rc);
    write_text(dir / "summary.json", eval::summaries_to_json(runs).dump(2) + "\n");
    std::ostringstream csv;
    eval::write_records_csv(csv, runs);
    write_text(dir / "records.csv", csv.str());

    std::cout << eval::sweep_table(runs);
    for (const auto& r : runs) {
        if (!r.summary.failed_ids.empty()) {
            std::cout << "T=" << eval::format_number(r.summary.temperature) << " failed samples:";
            for (const auto& id : r.summary.failed_ids) std::cout << ' ' << id;
            std::cout << "\n";
        }
    }
    return kOk;
}

int cmd_grounding(const RunConfig& rc, const fs::path& records_path) {
    const auto records = eval::parse_grounding_records(read_json(records_path, "grounding records"));
    const auto metrics = eval::grounding_metrics(records);
    const auto dir = prepare_out_dir(rc);
    std::ostringstream csv;
    eval::write_grounding_csv(csv, metrics);
    write_text(dir / "grounding.csv", csv.str());
    std::cout << eval::grounding_table(metrics);
    return kOk;
}

int cmd_simulate(const RunConfig& rc, const fs::path& image_path, const fs::path& waypoints_path, bool export_frames) {
    const auto scene = require_image(image_path);
    const auto parsed = gateway::parse_keypoints(read_json(waypoints_path, "waypoints"), scene);
    if (parsed.keypoints.empty()) throw Error("waypoints file holds no usable keypoints");
    const auto result = sim::uav_simulation(scene, parsed.keypoints, rc.sim());
    const auto dir = prepare_out_dir(rc);
    sim::write_bytes(dir / "flight.gif", result.animation);
    if (export_frames) sim::export_frames(result.frames, dir / "frames");
    std::cout << "frames: " << result.frames.size() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"UAV mission planning with vision-language agents"};
    app.require_subcommand(1);
    RunConfig rc;

    std::string image, query = kDefaultMissionQuery, manifest, temperatures, records, waypoints;
    bool export_frames = false;

    auto* mission = app.add_subcommand("mission", "Run the manager and UAV agents on one satellite image");
    add_backend_flags(*mission, rc);
    add_sim_flags(*mission, rc);
    mission->add_option("--image", image, "Satellite image")->required();
    mission->add_option("--query", query, "Mission request");
    mission->add_option("--out-dir", rc.out_dir, "Output directory");
    mission->add_flag("--export-frames", export_frames, "Also write every frame as PNG");

    auto* bench = app.add_subcommand("benchmark", "Run a benchmark manifest, optionally over several temperatures");
    add_backend_flags(*bench, rc);
    add_sim_flags(*bench, rc);
    bench->add_option("--manifest", manifest, "Benchmark manifest JSON")->required();
    bench->add_option("--temperatures", temperatures, "Comma-separated sweep, e.g. 0.5,0.7");
    bench->add_option("--match-radius", rc.match_radius, "Pixels within which a report matches a truth fire");
    bench->add_option("--out-dir", rc.out_dir, "Output directory");

    auto* grounding = app.add_subcommand("grounding", "Per-category grounding distance and coverage");
    grounding->add_option("--records", records, "Grounding records JSON")->required();
    grounding->add_option("--out-dir", rc.out_dir, "Output directory");

    auto* simulate = app.add_subcommand("simulate", "Fly a waypoint list over an image and write the GIF");
    add_sim_flags(*simulate, rc);
    simulate->add_option("--image", image, "Scene image")->required();
    simulate->add_option("--waypoints", waypoints, "Keypoint list JSON")->required();
    simulate->add_option("--out-dir", rc.out_dir, "Output directory");
    simulate->add_flag("--export-frames", export_frames, "Also write every frame as PNG");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kInputError;
    }

    try {
        if (mission->parsed()) return cmd_mission(rc, image, query, export_frames);
        if (bench->parsed()) return cmd_benchmark(rc, manifest, temperatures);
        if (grounding->parsed()) return cmd_grounding(rc, records);
        if (simulate->parsed()) return cmd_simulate(rc, image, waypoints, export_frames);
    } catch (const agents::StepBudgetExhausted& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBudgetExhausted;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
    return kInputError;
}
