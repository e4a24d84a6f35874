// SPDX-License-Identifier: Apache-2.0
//
// Test helpers: synthetic scenes, scripted scenarios, temp dirs, and an
// independent GIF decoder used to check the encoder.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <utility>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavca/core.hpp"
#include "uavca/gateway/scripted.hpp"

namespace testsupport {

using nlohmann::json;

/// Deterministic textured scene: smooth gradients plus a dark grid so crops
/// at different positions differ.
inline uavca::SceneImage make_scene(const std::string& id, int w, int h) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto i = (static_cast<std::size_t>(y) * w + x) * 3;
            const bool grid = (x % 32 == 0) || (y % 32 == 0);
            px[i] = static_cast<std::uint8_t>(grid ? 20 : (x * 255) / std::max(1, w - 1));
            px[i + 1] = static_cast<std::uint8_t>(grid ? 20 : (y * 255) / std::max(1, h - 1));
            px[i + 2] = static_cast<std::uint8_t>(grid ? 20 : ((x + y) * 7) % 256);
        }
    }
    return uavca::SceneImage(id, w, h, std::move(px));
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("uavca-" + tag + "-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

/// {"thought", "tool", "args"} action text as a model would emit it.
inline std::string action(const std::string& tool, const json& args, const std::string& thought = "next step") {
    return json{{"thought", thought}, {"tool", tool}, {"args", args}}.dump();
}

inline uavca::gateway::ScriptedScenario scenario(const json& entries) {
    return uavca::gateway::ScriptedScenario::from_json(json{{"entries", entries}});
}

// ---- scripted mission scenarios ---------------------------------------------

struct MissionScript {
    std::string image_id;
    long long image_index = 0;
    std::string sample_id;
    /// Grounding answer; empty means the model finds nothing.
    json keypoints = json::array();
    /// Frame id and in-crop point of the one frame reported as burning.
    std::optional<std::pair<std::string, std::pair<double, double>>> fire;
    double agent_latency = 2.0;
    double vision_latency = 3.0;
    double detect_latency = 0.5;
};

/// Entries scripting one complete mission: the manager reads, describes,
/// grounds, visualizes and answers; the UAV reads, simulates, detects and
/// answers.
inline json mission_entries(const MissionScript& m) {
    const std::string ama = "Agent: ama | Sample: " + m.sample_id + "\n";
    const std::string uav = "Agent: uav | Sample: " + m.sample_id + "\n";
    const std::string img = "[image:" + m.image_id + "]";
    json e = json::array();
    auto add = [&](const std::string& match, const std::string& response, double latency, bool reusable = false) {
        json entry = {{"match", match}, {"response", response}, {"latency", latency}};
        if (reusable) entry["reusable"] = true;
        e.push_back(entry);
    };
    add(ama, action("read_image", {{"i", m.image_index}}, "Load the satellite image first."), m.agent_latency);
    add(ama, action("describe_satellite_image", {{"image", m.image_id}}, "Describe the scene."), m.agent_latency);
    add("expected.\n" + img, "Farmland with a warehouse complex and a smoke plume near the north-east.", m.vision_latency);
    add(ama, action("pixelpoint_objects", {{"image", m.image_id}, {"objects", "fire, smoke, buildings"}}, "Locate candidates."),
        m.agent_latency);
    add("Answer [] when nothing matches.\n" + img, m.keypoints.empty() ? std::string("I see nothing relevant") : m.keypoints.dump(),
        m.vision_latency);
    if (m.keypoints.empty()) {
        add(ama, action("final_answer", {{"answer", "no fires found"}}, "Nothing to inspect."), m.agent_latency);
        return e;
    }
    add(ama, action("visualize_keypoints", {{"image", m.image_id}}, "Render the targets."), m.agent_latency);
    add(ama, action("final_answer", {{"answer", m.keypoints}}, "Targets ready."), m.agent_latency);

    add(uav, action("read_image_for_simulation", {{"i", m.image_index}}, "Load the scene."), m.agent_latency);
    add(uav, action("uav_simulation", {{"image", m.image_id}}, "Fly the assigned route."), m.agent_latency);
    add(uav, action("detect_and_display", json::object(), "Check the frames."), m.agent_latency);
    add(uav, action("final_answer", {{"answer", "inspection complete"}}, "Report back."), m.agent_latency);

    if (m.fire) {
        const auto& [frame, pt] = *m.fire;
        add("[image:" + m.image_id + "/frame-" + frame + "]",
            json{{"fire", true}, {"confidence", 0.92}, {"point", {pt.first, pt.second}}}.dump(), m.detect_latency);
    }
    add("[image:" + m.image_id + "/frame-", R"({"fire": false, "confidence": 0.97})", m.detect_latency, true);
    return e;
}

/// The default single-image mission used by the end-to-end checks: a fire
/// at (180, 70), a warehouse at (60, 190), fire reported in frame 0000 at
/// crop point (140, 120).
inline MissionScript default_mission(const std::string& image_id, const std::string& sample_id) {
    MissionScript m;
    m.image_id = image_id;
    m.sample_id = sample_id;
    m.keypoints = json::parse(R"([{"label": "smoke plume", "point": [180, 70], "probability": 0.9},
                                  {"label": "warehouse", "point": [60, 190], "probability": 0.4}])");
    m.fire = std::make_pair(std::string("0000"), std::make_pair(140.0, 120.0));
    return m;
}

// ---- benchmark fixture -----------------------------------------------------

struct BenchmarkFixture {
    std::filesystem::path manifest;
    std::filesystem::path scenario;
    /// Designed outcome: s1, s2, s5 find the fire, s3 correctly finds
    /// nothing, s4 reports a fire far from the truth.
    static constexpr int kSuccesses = 4;
    static constexpr int kSamples = 5;
};

/// Writes five scene PNGs, a manifest and a matching scripted scenario into
/// `dir`. Truth fires sit at (180, 70) except for s4, whose fire is at
/// (40, 40) while the script still reports one near (186, 66).
inline BenchmarkFixture write_benchmark_fixture(const std::filesystem::path& dir, double latency_scale = 1.0);

}  // namespace testsupport

#include "uavca/image_io.hpp"

namespace testsupport {

inline BenchmarkFixture write_benchmark_fixture(const std::filesystem::path& dir, double latency_scale) {
    struct Row {
        const char* id;
        const char* category;
        json fires;
        bool finds;
    };
    const json hot = json::array({{{"point", {180, 70}}}});
    const std::vector<Row> rows = {
        {"s1", "urban", hot, true},
        {"s2", "industrial", hot, true},
        {"s3", "none", json::array(), false},
        {"s4", "wildland", json::array({{{"point", {40, 40}}}}), true},
        {"s5", "composite", json::array({{{"point", {170, 80}}, {"bbox", {150, 50, 200, 90}}}}), true},
    };
    json samples = json::array();
    json entries = json::array();
    long long index = 0;
    for (const auto& r : rows) {
        uavca::save_png(make_scene(r.id, 256, 256), dir / (std::string(r.id) + ".png"));
        samples.push_back({{"id", r.id}, {"image", std::string(r.id) + ".png"}, {"category", r.category}, {"fires", r.fires}});
        MissionScript m = r.finds ? default_mission(r.id, r.id) : MissionScript{};
        m.image_id = r.id;
        m.sample_id = r.id;
        m.image_index = index++;
        m.agent_latency *= latency_scale;
        m.vision_latency *= latency_scale;
        m.detect_latency *= latency_scale;
        for (auto& e : mission_entries(m)) entries.push_back(e);
    }
    BenchmarkFixture f{dir / "manifest.json", dir / "scenario.json"};
    write_file(f.manifest, json{{"query", uavca::kDefaultMissionQuery}, {"samples", samples}}.dump(2));
    write_file(f.scenario, json{{"entries", entries}}.dump(2));
    return f;
}

// ---- GIF decoding ----------------------------------------------------------

struct DecodedGif {
    int width = 0;
    int height = 0;
    bool loops = false;
    std::vector<std::uint8_t> palette;  // rgb triples
    std::vector<int> delays_cs;
    std::vector<std::vector<std::uint8_t>> frames;  // palette indices
};

namespace gifdec {

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
    std::uint8_t u8() {
        if (pos_ >= b_.size()) throw std::runtime_error("gif: truncated");
        return b_[pos_++];
    }
    int u16() {
        const int lo = u8();
        return lo | (u8() << 8);
    }
    std::vector<std::uint8_t> sub_blocks() {
        std::vector<std::uint8_t> out;
        for (int n = u8(); n != 0; n = u8()) {
            for (int i = 0; i < n; ++i) out.push_back(u8());
        }
        return out;
    }
    bool done() const { return pos_ >= b_.size(); }

private:
    const std::vector<std::uint8_t>& b_;
    std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> lzw_decode(const std::vector<std::uint8_t>& data, int min_code, std::size_t expect) {
    const int clear = 1 << min_code;
    const int end = clear + 1;
    std::vector<std::vector<std::uint8_t>> table;
    auto reset = [&] {
        table.assign(static_cast<std::size_t>(end + 1), {});
        for (int i = 0; i < clear; ++i) table[static_cast<std::size_t>(i)] = {static_cast<std::uint8_t>(i)};
    };
    reset();
    int width = min_code + 1;
    std::size_t bitpos = 0;
    auto read = [&]() -> int {
        int v = 0;
        for (int i = 0; i < width; ++i, ++bitpos) {
            const std::size_t byte = bitpos / 8;
            if (byte >= data.size()) throw std::runtime_error("gif: lzw data ran out");
            v |= ((data[byte] >> (bitpos % 8)) & 1) << i;
        }
        return v;
    };
    std::vector<std::uint8_t> out;
    int prev = -1;
    for (;;) {
        const int code = read();
        if (code == clear) {
            reset();
            width = min_code + 1;
            prev = -1;
            continue;
        }
        if (code == end) break;
        std::vector<std::uint8_t> entry;
        if (code < static_cast<int>(table.size()) && !table[static_cast<std::size_t>(code)].empty()) {
            entry = table[static_cast<std::size_t>(code)];
        } else if (code == static_cast<int>(table.size()) && prev >= 0) {
            entry = table[static_cast<std::size_t>(prev)];
            entry.push_back(entry.front());
        } else {
            throw std::runtime_error("gif: bad lzw code " + std::to_string(code));
        }
        out.insert(out.end(), entry.begin(), entry.end());
        if (prev >= 0 && table.size() < 4096) {
            auto added = table[static_cast<std::size_t>(prev)];
            added.push_back(entry.front());
            table.push_back(std::move(added));
            if (static_cast<int>(table.size()) == (1 << width) && width < 12) ++width;
        }
        prev = code;
    }
    if (out.size() != expect) throw std::runtime_error("gif: frame pixel count mismatch");
    return out;
}

}  // namespace gifdec

inline DecodedGif decode_gif(const std::vector<std::uint8_t>& bytes) {
    gifdec::Reader r(bytes);
    DecodedGif g;
    std::string sig;
    for (int i = 0; i < 6; ++i) sig += static_cast<char>(r.u8());
    if (sig != "GIF89a") throw std::runtime_error("gif: bad signature");
    g.width = r.u16();
    g.height = r.u16();
    const int flags = r.u8();
    r.u8();
    r.u8();
    if (flags & 0x80) {
        const int n = 1 << ((flags & 7) + 1);
        for (int i = 0; i < 3 * n; ++i) g.palette.push_back(r.u8());
    }
    int pending_delay = 0;
    for (;;) {
        const int tag = r.u8();
        if (tag == 0x3B) break;
        if (tag == 0x21) {
            const int label = r.u8();
            const auto body = r.sub_blocks();
            if (label == 0xF9 && body.size() >= 3) pending_delay = body[1] | (body[2] << 8);
            if (label == 0xFF && body.size() >= 11 && std::string(body.begin(), body.begin() + 11) == "NETSCAPE2.0") {
                g.loops = true;
            }
            continue;
        }
        if (tag != 0x2C) throw std::runtime_error("gif: unexpected block");
        r.u16();
        r.u16();
        const int w = r.u16();
        const int h = r.u16();
        const int f = r.u8();
        if (f & 0x80) throw std::runtime_error("gif: local palettes not expected");
        const int min_code = r.u8();
        const auto data = r.sub_blocks();
        g.frames.push_back(gifdec::lzw_decode(data, min_code, static_cast<std::size_t>(w) * h));
        g.delays_cs.push_back(pending_delay);
    }
    return g;
}

}  // namespace testsupport
