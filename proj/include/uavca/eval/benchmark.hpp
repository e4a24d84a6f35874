// SPDX-License-Identifier: Apache-2.0
//
// Benchmark runs: one mission per manifest sample, outcome classification,
// summary, temperature sweeps, and the CSV/JSON reports.
#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uavca/clock.hpp"
#include "uavca/core.hpp"
#include "uavca/errors.hpp"
#include "uavca/eval/metrics.hpp"
#include "uavca/gateway/model.hpp"
#include "uavca/pipeline.hpp"
#include "uavca/tools/image_store.hpp"

namespace uavca::eval {

using Json = nlohmann::json;

inline const std::vector<std::string>& categories() {
    static const std::vector<std::string> c = {"urban", "industrial", "wildland", "composite", "vehicle", "none"};
    return c;
}

struct BenchmarkSample {
    std::string sample_id;
    std::string image_id;
    std::filesystem::path image_path;
    std::string category;
    std::vector<TruthFire> ground_truth_fires;

    void validate() const {
        if (sample_id.empty()) throw InvariantViolation("sample id must be non-empty");
        const auto& c = categories();
        if (std::find(c.begin(), c.end(), category) == c.end()) {
            throw InvariantViolation("sample " + sample_id + ": unknown category '" + category + "'");
        }
        if (category == "none" && !ground_truth_fires.empty()) {
            throw InvariantViolation("sample " + sample_id + ": category none cannot carry fires");
        }
    }
};

struct BenchmarkManifest {
    std::string query = kDefaultMissionQuery;
    std::vector<BenchmarkSample> samples;
};

namespace detail {

inline PixelPoint point_from(const Json& j) {
    if (!j.is_array() || j.size() != 2) throw Error("expected a point [x, y], got " + j.dump());
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

/// {"query", "samples": [{"id", "image", "category", "fires": [{"point", "bbox"?}]}]}.
/// Image paths resolve against `base_dir`. The image id of a sample is its
/// sample id.
inline BenchmarkManifest parse_manifest(const Json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object() || !doc.contains("samples") || !doc["samples"].is_array()) {
        throw Error("benchmark manifest must be an object with a \"samples\" list");
    }
    BenchmarkManifest m;
    if (doc.contains("query")) m.query = doc["query"].get<std::string>();
    if (m.query.empty()) throw Error("benchmark manifest query must be non-empty");
    try {
        for (const auto& s : doc["samples"]) {
            BenchmarkSample sample;
            sample.sample_id = s.at("id").is_string() ? s.at("id").get<std::string>() : s.at("id").dump();
            sample.image_id = sample.sample_id;
            std::filesystem::path p = s.at("image").get<std::string>();
            sample.image_path = p.is_relative() ? base_dir / p : p;
            sample.category = s.value("category", std::string("none"));
            for (const auto& f : s.value("fires", Json::array())) {
                TruthFire fire{detail::point_from(f.at("point")), std::nullopt};
                if (f.contains("bbox") && !f["bbox"].is_null()) {
                    const auto& b = f["bbox"];
                    if (!b.is_array() || b.size() != 4) throw Error("bbox must be [x1, y1, x2, y2]");
                    fire.bbox = BoundingBox(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                            b[3].get<double>());
                }
                sample.ground_truth_fires.push_back(fire);
            }
            sample.validate();
            m.samples.push_back(std::move(sample));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("invalid benchmark manifest: ") + e.what());
    }
    if (m.samples.empty()) throw Error("benchmark manifest lists no samples");
    std::map<std::string, int> seen;
    for (const auto& s : m.samples) {
        if (++seen[s.sample_id] > 1) throw Error("duplicate sample id: " + s.sample_id);
    }
    return m;
}

inline BenchmarkManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open benchmark manifest: " + path.string());
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid benchmark manifest " + path.string() + ": " + e.what());
    }
    return parse_manifest(doc, path.parent_path());
}

inline tools::ImageStore manifest_store(const BenchmarkManifest& m) {
    std::vector<tools::ImageEntry> entries;
    for (const auto& s : m.samples) entries.push_back({s.image_id, s.image_path});
    return tools::ImageStore(std::move(entries));
}

struct BenchmarkConfig {
    std::shared_ptr<gateway::Backend> backend;
    std::string model_name = "qwen2.5-vl";
    /// Perception model; the agent model when unset.
    std::optional<std::string> vision_model;
    double temperature = 0.5;
    agents::ReactLimits limits;
    sim::SimConfig sim;
    RenderStyle style;
    double match_radius = 50.0;
    int parallelism = 4;
    /// Charge scripted latencies to a per-sample virtual clock instead of
    /// reading wall time.
    bool virtual_clock = false;
};

struct BenchmarkSummary {
    double temperature = 0.5;
    std::optional<double> ttd;
    SuccessRate success;
    double mean_elapsed = 0.0;
    std::vector<std::string> failed_ids;
    std::vector<std::string> notes;
};

struct BenchmarkRun {
    std::vector<RunRecord> records;
    BenchmarkSummary summary;
};

inline BenchmarkSummary summarize(const std::vector<RunRecord>& records, double temperature) {
    BenchmarkSummary s;
    s.temperature = temperature;
    s.ttd = compute_ttd(records);
    s.success = success_rate(records);
    double total = 0.0;
    for (const auto& r : records) {
        total += r.elapsed;
        if (r.outcome == Outcome::false_positive || r.outcome == Outcome::false_negative) {
            s.failed_ids.push_back(r.sample_id);
        }
        if (!r.note.empty()) s.notes.push_back(r.sample_id + ": " + r.note);
    }
    s.mean_elapsed = total / static_cast<double>(records.size());
    return s;
}

/// One mission for one sample, on its own backend session and clock.
inline RunRecord run_sample(const BenchmarkSample& sample, long long index, const tools::ImageStore& store,
                            const std::string& query_text, const BenchmarkConfig& config) {
    std::shared_ptr<RunClock> clock;
    if (config.virtual_clock) {
        clock = std::make_shared<VirtualClock>();
    } else {
        clock = std::make_shared<WallClock>();
    }
    const auto session = config.backend->session();
    gateway::Gateway agent(session, clock, config.model_name, config.temperature);
    PipelineConfig pc(agent, agent.with_model(config.vision_model.value_or(config.model_name)));
    pc.limits = config.limits;
    pc.sim = config.sim;
    pc.style = config.style;
    pc.limits.temperature = config.temperature;
    pc.parallelism = config.parallelism;

    RunRecord r;
    r.sample_id = sample.sample_id;
    r.temperature = config.temperature;
    r.t_query = clock->now();
    const auto& truth = sample.ground_truth_fires;
    const double radius = config.match_radius;
    try {
        const auto outcome = run_mission(store, index, MissionQuery(query_text, sample.sample_id), pc,
                                         [&](const PixelPoint& p) {
                                             return classify_outcome({p}, truth, radius) == Outcome::true_positive;
                                         });
        r.t_query = outcome.t_query;
        r.t_detect = outcome.t_detect;
        r.reported_fires = outcome.reported_fires();
        r.outcome = classify_outcome(r.reported_fires, truth, radius);
        r.elapsed = outcome.elapsed;
        if (outcome.status != MissionStatus::completed) {
            r.note = to_string(outcome.status);
            const auto& failed = outcome.uav && outcome.uav->error ? outcome.uav->error : outcome.manager.error;
            if (failed) r.note += ": " + *failed;
        }
    } catch (const std::exception& e) {
        r.outcome = Outcome::false_negative;
        r.reported_fires.clear();
        r.t_detect.reset();
        r.elapsed = clock->now() - r.t_query;
        r.note = std::string("error: ") + e.what();
    }
    if (r.outcome != Outcome::true_positive) r.t_detect.reset();
    return r;
}

/// Runs every sample, up to `config.parallelism` at a time. Records come back
/// sorted by sample id.
inline BenchmarkRun run_benchmark(const BenchmarkManifest& manifest, const BenchmarkConfig& config) {
    if (manifest.samples.empty()) throw PreconditionViolation("benchmark needs at least one sample");
    if (!config.backend) throw PreconditionViolation("benchmark needs a backend");
    if (!(config.match_radius > 0.0)) throw PreconditionViolation("match_radius must be positive");
    const auto store = manifest_store(manifest);

    std::vector<RunRecord> records(manifest.samples.size());
    const auto batch = static_cast<std::size_t>(std::max(1, config.parallelism));
    for (std::size_t start = 0; start < records.size(); start += batch) {
        const auto stop = std::min(records.size(), start + batch);
        std::vector<std::future<RunRecord>> pending;
        for (std::size_t i = start; i < stop; ++i) {
            pending.push_back(std::async(std::launch::async, [&, i] {
                return run_sample(manifest.samples[i], static_cast<long long>(i), store, manifest.query, config);
            }));
        }
        for (std::size_t i = start; i < stop; ++i) records[i] = pending[i - start].get();
    }
    std::sort(records.begin(), records.end(),
              [](const RunRecord& a, const RunRecord& b) { return a.sample_id < b.sample_id; });
    BenchmarkRun run;
    run.summary = summarize(records, config.temperature);
    run.records = std::move(records);
    return run;
}

/// One benchmark run per temperature, same manifest and settings otherwise.
inline std::vector<BenchmarkRun> temperature_sweep(const BenchmarkManifest& manifest,
                                                   const std::vector<double>& temperatures, BenchmarkConfig config) {
    if (temperatures.empty()) throw PreconditionViolation("temperature sweep needs at least one temperature");
    std::vector<BenchmarkRun> runs;
    for (const double t : temperatures) {
        config.temperature = t;
        runs.push_back(run_benchmark(manifest, config));
    }
    return runs;
}

// ---- reports ---------------------------------------------------------------

/// Shortest decimal that round-trips to `v`.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

/// Text table with one row per run: temperature, mean elapsed, successful
/// samples.
inline std::string sweep_table(const std::vector<BenchmarkRun>& runs) {
    const std::vector<std::string> head = {"Sampling Temperature (T)", "Avg. Elapsed Time (s)", "Successful samples"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : runs) {
        rows.push_back({format_number(r.summary.temperature), fixed2(r.summary.mean_elapsed),
                        std::to_string(r.summary.success.successes)});
    }
    std::vector<std::size_t> w(head.size());
    for (std::size_t c = 0; c < head.size(); ++c) {
        w[c] = head[c].size();
        for (const auto& row : rows) w[c] = std::max(w[c], row[c].size());
    }
    const auto line = [&](const std::vector<std::string>& cells) {
        std::string s = "|";
        for (std::size_t c = 0; c < cells.size(); ++c) {
            s += ' ' + cells[c] + std::string(w[c] - cells[c].size(), ' ') + " |";
        }
        return s + '\n';
    };
    std::string sep = "|";
    for (const auto n : w) sep += std::string(n + 2, '-') + '|';
    sep += '\n';
    std::string out = line(head) + sep;
    for (const auto& row : rows) out += line(row);
    return out;
}

inline Json summary_to_json(const BenchmarkSummary& s) {
    Json j = {{"temperature", s.temperature},
              {"samples", s.success.total},
              {"successes", s.success.successes},
              {"success_rate", s.success.rounded()},
              {"mean_elapsed", s.mean_elapsed},
              {"failed_ids", s.failed_ids},
              {"notes", s.notes}};
    j["ttd"] = s.ttd ? Json(*s.ttd) : Json(nullptr);
    return j;
}

/// {"runs": [summary, ...]}; a single run still produces a one-element list.
inline Json summaries_to_json(const std::vector<BenchmarkRun>& runs) {
    Json list = Json::array();
    for (const auto& r : runs) list.push_back(summary_to_json(r.summary));
    return {{"runs", list}};
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline void write_records_csv(std::ostream& os, const std::vector<BenchmarkRun>& runs) {
    os << "temperature,sample_id,outcome,t_query,t_detect,elapsed,reported_fires,note\n";
    for (const auto& run : runs) {
        for (const auto& r : run.records) {
            std::string fires;
            for (const auto& p : r.reported_fires) {
                if (!fires.empty()) fires += ';';
                fires += format_number(p.x) + ' ' + format_number(p.y);
            }
            os << format_number(r.temperature) << ',' << csv_field(r.sample_id) << ',' << to_string(r.outcome) << ','
               << format_number(r.t_query) << ',' << (r.t_detect ? format_number(*r.t_detect) : "") << ','
               << format_number(r.elapsed) << ',' << csv_field(fires) << ',' << csv_field(r.note) << '\n';
        }
    }
}

/// Grounding input: {"records": [{"image", "category", "predictions": [[x,y]...], "truth": [[x,y]...]}]}.
inline std::vector<GroundingRecord> parse_grounding_records(const Json& doc) {
    if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array()) {
        throw Error("grounding input must be an object with a \"records\" list");
    }
    std::vector<GroundingRecord> out;
    try {
        for (const auto& r : doc["records"]) {
            GroundingRecord g;
            g.image_id = r.value("image", std::string());
            g.category = r.at("category").get<std::string>();
            for (const auto& p : r.value("predictions", Json::array())) g.predictions.push_back(detail::point_from(p));
            for (const auto& p : r.value("truth", Json::array())) g.ground_truth.push_back(detail::point_from(p));
            out.push_back(std::move(g));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("invalid grounding records: ") + e.what());
    }
    return out;
}

/// category,mean_distance,mean_coverage; rows by mean distance descending,
/// empty distance when the category has no predictions.
inline void write_grounding_csv(std::ostream& os, std::vector<CategoryMetrics> metrics) {
    sort_by_distance_desc(metrics);
    os << "category,mean_distance,mean_coverage\n";
    for (const auto& m : metrics) {
        os << csv_field(m.category) << ',' << (m.mean_distance ? format_number(*m.mean_distance) : "") << ','
           << format_number(m.mean_coverage) << '\n';
    }
}

/// Text table of the grounding metrics, two decimals.
inline std::string grounding_table(std::vector<CategoryMetrics> metrics) {
    sort_by_distance_desc(metrics);
    std::size_t w = std::string("Category").size();
    for (const auto& m : metrics) w = std::max(w, m.category.size());
    std::ostringstream os;
    os << "| " << std::string("Category") << std::string(w - 8, ' ') << " | Mean Distance | Mean Coverage |\n";
    os << '|' << std::string(w + 2, '-') << "|---------------|---------------|\n";
    for (const auto& m : metrics) {
        const std::string d = m.mean_distance ? fixed2(*m.mean_distance) : "-";
        const std::string c = fixed2(m.mean_coverage);
        os << "| " << m.category << std::string(w - m.category.size(), ' ') << " | " << std::string(13 - std::min<std::size_t>(13, d.size()), ' ')
           << d << " | " << std::string(13 - std::min<std::size_t>(13, c.size()), ' ') << c << " |\n";
    }
    return os.str();
}

}  // namespace uavca::eval
