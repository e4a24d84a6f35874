// SPDX-License-Identifier: Apache-2.0
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"
#include "uavca/eval/benchmark.hpp"

using namespace uavca;
using namespace uavca::eval;
using testsupport::json;

namespace {

RunRecord rec(const std::string& id, Outcome o, double t_query, std::optional<double> t_detect, double elapsed = 0) {
    RunRecord r;
    r.sample_id = id;
    r.outcome = o;
    r.t_query = t_query;
    r.t_detect = t_detect;
    r.elapsed = elapsed;
    return r;
}

std::vector<RunRecord> with_successes(int successes, int total) {
    std::vector<RunRecord> out;
    for (int i = 0; i < total; ++i) {
        out.push_back(rec(std::to_string(i), i < successes ? Outcome::true_positive : Outcome::false_negative, 0, 1));
    }
    return out;
}

BenchmarkConfig scripted_config(const testsupport::BenchmarkFixture& f) {
    BenchmarkConfig c;
    c.backend = std::make_shared<gateway::ScriptedBackend>(gateway::ScriptedScenario::load(f.scenario));
    c.virtual_clock = true;
    return c;
}

}  // namespace

TEST(Classify, Examples) {
    EXPECT_EQ(classify_outcome({{50, 50}}, {{{52, 48}, std::nullopt}}, 10), Outcome::true_positive);
    EXPECT_EQ(classify_outcome({}, {}, 10), Outcome::true_negative);
    EXPECT_EQ(classify_outcome({{5, 5}}, {}, 10), Outcome::false_positive);
    EXPECT_EQ(classify_outcome({}, {{{5, 5}, std::nullopt}}, 10), Outcome::false_negative);
    EXPECT_EQ(classify_outcome({{100, 100}}, {{{5, 5}, std::nullopt}}, 10), Outcome::false_negative);
    EXPECT_EQ(classify_outcome({{100, 100}}, {{{5, 5}, BoundingBox(90, 90, 110, 110)}}, 10), Outcome::true_positive);
    EXPECT_THROW(classify_outcome({}, {}, 0), PreconditionViolation);
}

TEST(Classify, MonotoneInRadius) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0, 200);
    for (int i = 0; i < 300; ++i) {
        const std::vector<PixelPoint> reports = {{u(rng), u(rng)}};
        const std::vector<TruthFire> truth = {{{u(rng), u(rng)}, std::nullopt}};
        const double r = 1 + u(rng) / 4;
        if (classify_outcome(reports, truth, r) == Outcome::true_positive) {
            EXPECT_EQ(classify_outcome(reports, truth, r * 1.5), Outcome::true_positive);
        }
    }
}

TEST(Ttd, Examples) {
    EXPECT_DOUBLE_EQ(*compute_ttd({rec("a", Outcome::true_positive, 10, 14)}), 4.0);
    EXPECT_DOUBLE_EQ(*compute_ttd({rec("a", Outcome::true_positive, 0, 4), rec("b", Outcome::true_positive, 10, 15),
                                   rec("c", Outcome::true_positive, 1, 4)}),
                     4.0);
    EXPECT_FALSE(compute_ttd({rec("a", Outcome::false_positive, 0, 3), rec("b", Outcome::false_positive, 0, 2)}));
    EXPECT_FALSE(compute_ttd({}));
    // Non-TP outcomes never contribute, even with a stamped detection time.
    EXPECT_DOUBLE_EQ(*compute_ttd({rec("a", Outcome::true_positive, 0, 2), rec("b", Outcome::false_negative, 0, 100)}),
                     2.0);
}

TEST(SuccessRate, Examples) {
    EXPECT_DOUBLE_EQ(success_rate(with_successes(28, 30)).rounded(), 0.93);
    EXPECT_DOUBLE_EQ(success_rate(with_successes(26, 30)).rounded(), 0.87);
    EXPECT_DOUBLE_EQ(success_rate(with_successes(0, 1)).rounded(), 0.0);
    const auto s = success_rate({rec("a", Outcome::true_negative, 0, {}), rec("b", Outcome::false_positive, 0, {})});
    EXPECT_EQ(s.successes, 1);
    EXPECT_EQ(s.total, 2);
    EXPECT_THROW(success_rate({}), PreconditionViolation);
}

TEST(Summary, MeanElapsedAndFailedIds) {
    const auto s = summarize({rec("a", Outcome::true_positive, 0, 1, 90), rec("b", Outcome::false_negative, 0, {}, 100),
                              rec("c", Outcome::true_negative, 0, {}, 110)},
                             0.7);
    EXPECT_DOUBLE_EQ(s.mean_elapsed, 100.0);
    EXPECT_EQ(s.failed_ids, std::vector<std::string>{"b"});
    EXPECT_DOUBLE_EQ(s.temperature, 0.7);
}

TEST(Grounding, Examples) {
    auto m = grounding_metrics({{"i", "urban", {{0, 0}}, {{3, 4}, {30, 40}}}});
    ASSERT_EQ(m.size(), 1U);
    EXPECT_DOUBLE_EQ(*m[0].mean_distance, 5.0);
    EXPECT_DOUBLE_EQ(m[0].mean_coverage, 1.0);

    m = grounding_metrics({{"a", "x", {{0, 0}, {1, 1}}, {{0, 0}}}, {"b", "x", {{0, 0}, {0, 0}, {0, 0}, {0, 0}}, {{0, 0}}}});
    EXPECT_DOUBLE_EQ(m[0].mean_coverage, 3.0);

    m = grounding_metrics({{"a", "x", {}, {{0, 0}}}, {"b", "x", {{6, 8}}, {{0, 0}}}, {"c", "y", {}, {}}});
    ASSERT_EQ(m.size(), 2U);
    EXPECT_DOUBLE_EQ(m[0].mean_coverage, 0.5);
    EXPECT_DOUBLE_EQ(*m[0].mean_distance, 10.0);
    EXPECT_FALSE(m[1].mean_distance);
    EXPECT_DOUBLE_EQ(m[1].mean_coverage, 0.0);

    EXPECT_THROW(grounding_metrics({{"a", "x", {{0, 0}}, {}}}), PreconditionViolation);
}

TEST(Grounding, CsvShapeAndOrder) {
    const auto records = parse_grounding_records(json::parse(R"({"records": [
        {"image": "1", "category": "urban", "predictions": [[0, 0]], "truth": [[3, 4]]},
        {"image": "2", "category": "vehicle", "predictions": [[0, 0]], "truth": [[30, 40]]},
        {"image": "3", "category": "none", "predictions": [], "truth": []}]})"));
    std::ostringstream os;
    write_grounding_csv(os, grounding_metrics(records));
    EXPECT_EQ(os.str(), "category,mean_distance,mean_coverage\nvehicle,50,1\nurban,5,1\nnone,,0\n");
    EXPECT_THROW(parse_grounding_records(json::parse(R"({"rows": []})")), Error);
    const auto table = grounding_table(grounding_metrics(records));
    EXPECT_NE(table.find("vehicle"), std::string::npos);
    EXPECT_NE(table.find("50.00"), std::string::npos);
}

TEST(Manifest, ParseAndErrors) {
    testsupport::TempDir dir("manifest");
    const auto m = parse_manifest(json::parse(R"({"samples": [
        {"id": "a", "image": "a.png", "category": "urban", "fires": [{"point": [1, 2], "bbox": [0, 0, 5, 5]}]},
        {"id": 7, "image": "/abs/b.png"}]})"),
                                  dir.path());
    EXPECT_EQ(m.query, kDefaultMissionQuery);
    ASSERT_EQ(m.samples.size(), 2U);
    EXPECT_EQ(m.samples[0].image_path, dir.path() / "a.png");
    EXPECT_TRUE(m.samples[0].ground_truth_fires[0].bbox);
    EXPECT_EQ(m.samples[1].sample_id, "7");
    EXPECT_EQ(m.samples[1].category, "none");
    EXPECT_THROW(parse_manifest(json::parse(R"({"samples": []})"), dir.path()), Error);
    EXPECT_THROW(parse_manifest(json::parse(R"({"samples": [{"id": "a", "image": "x"}, {"id": "a", "image": "y"}]})"),
                                dir.path()),
                 Error);
    EXPECT_THROW(parse_manifest(json::parse(R"({"samples": [{"id": "a", "image": "x", "category": "none",
                                                              "fires": [{"point": [1, 1]}]}]})"),
                                dir.path()),
                 Error);
    EXPECT_THROW(parse_manifest(json::parse(R"({"samples": [{"id": "a", "image": "x", "category": "lava"}]})"),
                                dir.path()),
                 Error);
}

TEST(Benchmark, ThreeCorrectSamples) {
    testsupport::TempDir dir("bench3");
    const auto f = testsupport::write_benchmark_fixture(dir.path());
    auto manifest = load_manifest(f.manifest);
    manifest.samples = {manifest.samples[0], manifest.samples[1], manifest.samples[2]};
    const auto run = run_benchmark(manifest, scripted_config(f));
    ASSERT_EQ(run.records.size(), 3U);
    EXPECT_EQ(run.records[0].outcome, Outcome::true_positive);
    EXPECT_EQ(run.records[1].outcome, Outcome::true_positive);
    EXPECT_EQ(run.records[2].outcome, Outcome::true_negative);
    EXPECT_DOUBLE_EQ(run.summary.success.rounded(), 1.0);
    EXPECT_TRUE(run.summary.failed_ids.empty());
    EXPECT_DOUBLE_EQ(*run.summary.ttd, 26.0);
}

TEST(Benchmark, DesignedFixtureOutcome) {
    testsupport::TempDir dir("bench5");
    const auto f = testsupport::write_benchmark_fixture(dir.path());
    auto config = scripted_config(f);
    config.parallelism = 2;
    const auto run = run_benchmark(load_manifest(f.manifest), config);
    ASSERT_EQ(run.records.size(), 5U);
    EXPECT_EQ(run.summary.success.successes, testsupport::BenchmarkFixture::kSuccesses);
    EXPECT_EQ(run.summary.failed_ids, std::vector<std::string>{"s4"});
    EXPECT_EQ(run.records[3].outcome, Outcome::false_negative);
    EXPECT_FALSE(run.records[3].t_detect);
    // Four full missions at 28 s, one manager-only run at 14 s.
    EXPECT_DOUBLE_EQ(run.summary.mean_elapsed, (4 * 28.0 + 14.0) / 5);
    for (std::size_t i = 1; i < run.records.size(); ++i) EXPECT_LT(run.records[i - 1].sample_id, run.records[i].sample_id);
}

TEST(Benchmark, SampleErrorsBecomeFalseNegatives) {
    testsupport::TempDir dir("bench-err");
    const auto f = testsupport::write_benchmark_fixture(dir.path());
    BenchmarkConfig config;
    config.backend = std::make_shared<gateway::ScriptedBackend>(testsupport::scenario(json::array({{{"match", "never matches"}, {"response", "x"}}})));
    config.virtual_clock = true;
    const auto run = run_benchmark(load_manifest(f.manifest), config);
    ASSERT_EQ(run.records.size(), 5U);
    for (const auto& r : run.records) {
        EXPECT_EQ(r.outcome, Outcome::false_negative);
        EXPECT_NE(r.note.find("error"), std::string::npos) << r.note;
    }
}

TEST(Sweep, TwoRowsIdenticalExceptTemperature) {
    testsupport::TempDir dir("sweep");
    const auto f = testsupport::write_benchmark_fixture(dir.path());
    const auto runs = temperature_sweep(load_manifest(f.manifest), {0.5, 0.7}, scripted_config(f));
    ASSERT_EQ(runs.size(), 2U);
    auto a = summary_to_json(runs[0].summary);
    auto b = summary_to_json(runs[1].summary);
    EXPECT_EQ(a["temperature"], 0.5);
    EXPECT_EQ(b["temperature"], 0.7);
    a.erase("temperature");
    b.erase("temperature");
    EXPECT_EQ(a, b);

    const auto table = sweep_table(runs);
    std::istringstream lines(table);
    std::string header, sep, row1, row2, extra;
    std::getline(lines, header);
    std::getline(lines, sep);
    std::getline(lines, row1);
    std::getline(lines, row2);
    EXPECT_FALSE(std::getline(lines, extra));
    EXPECT_NE(header.find("Sampling Temperature (T)"), std::string::npos);
    EXPECT_NE(header.find("Avg. Elapsed Time (s)"), std::string::npos);
    EXPECT_NE(header.find("Successful samples"), std::string::npos);
    EXPECT_NE(row1.find("| 0.5 "), std::string::npos);
    EXPECT_NE(row1.find("25.20"), std::string::npos);
    EXPECT_NE(row2.find("| 0.7 "), std::string::npos);
    EXPECT_THROW(temperature_sweep(load_manifest(f.manifest), {}, scripted_config(f)), PreconditionViolation);
}

TEST(Reports, SummaryJsonDeterministicAndCsvColumns) {
    testsupport::TempDir dir("reports");
    const auto f = testsupport::write_benchmark_fixture(dir.path());
    const auto manifest = load_manifest(f.manifest);
    const auto one = summaries_to_json(temperature_sweep(manifest, {0.5}, scripted_config(f))).dump(2);
    const auto two = summaries_to_json(temperature_sweep(manifest, {0.5}, scripted_config(f))).dump(2);
    EXPECT_EQ(one, two);
    const auto doc = json::parse(one);
    ASSERT_EQ(doc["runs"].size(), 1U);
    EXPECT_EQ(doc["runs"][0]["success_rate"], 0.8);
    EXPECT_EQ(doc["runs"][0]["failed_ids"], json::array({"s4"}));

    std::ostringstream os;
    write_records_csv(os, temperature_sweep(manifest, {0.5}, scripted_config(f)));
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "temperature,sample_id,outcome,t_query,t_detect,elapsed,reported_fires,note");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 5);
    EXPECT_NE(os.str().find("0.5,s1,true_positive,0,26,28,186 66,"), std::string::npos) << os.str();
}

TEST(Reports, NumberFormatting) {
    EXPECT_EQ(format_number(0.5), "0.5");
    EXPECT_EQ(format_number(26), "26");
    EXPECT_EQ(fixed2(96.955), "96.95");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
}
