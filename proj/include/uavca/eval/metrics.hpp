// SPDX-License-Identifier: Apache-2.0
//
// Detection outcome classification, time-to-detection, success rate and
// per-category grounding metrics.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uavca/core.hpp"
#include "uavca/errors.hpp"

namespace uavca::eval {

enum class Outcome { true_positive, true_negative, false_positive, false_negative };

inline const char* to_string(Outcome o) noexcept {
    switch (o) {
    case Outcome::true_positive: return "true_positive";
    case Outcome::true_negative: return "true_negative";
    case Outcome::false_positive: return "false_positive";
    case Outcome::false_negative: return "false_negative";
    }
    return "false_negative";
}

struct TruthFire {
    PixelPoint point;
    std::optional<BoundingBox> bbox;
};

/// True positive when some report lies within `match_radius` of a truth fire
/// or inside its bbox.
inline Outcome classify_outcome(const std::vector<PixelPoint>& reports, const std::vector<TruthFire>& truth,
                                double match_radius) {
    if (!(match_radius > 0.0)) throw PreconditionViolation("match_radius must be positive");
    if (truth.empty()) return reports.empty() ? Outcome::true_negative : Outcome::false_positive;
    for (const auto& r : reports) {
        for (const auto& t : truth) {
            if (euclidean_distance(r, t.point) <= match_radius || (t.bbox && t.bbox->contains(r))) {
                return Outcome::true_positive;
            }
        }
    }
    return Outcome::false_negative;
}

struct RunRecord {
    std::string sample_id;
    double t_query = 0.0;
    std::optional<double> t_detect;
    std::vector<PixelPoint> reported_fires;
    Outcome outcome = Outcome::false_negative;
    double elapsed = 0.0;
    double temperature = 0.5;
    std::string note;
};

/// Mean (t_detect - t_query) over true-positive records carrying a
/// detection time; nullopt when none qualifies.
inline std::optional<double> compute_ttd(const std::vector<RunRecord>& records) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : records) {
        if (r.outcome != Outcome::true_positive || !r.t_detect) continue;
        sum += *r.t_detect - r.t_query;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

struct SuccessRate {
    int successes = 0;
    int total = 0;
    double rate = 0.0;

    /// Rate rounded to two decimals, as reported.
    double rounded() const { return std::round(rate * 100.0) / 100.0; }
};

/// Success is a true positive or a true negative.
inline SuccessRate success_rate(const std::vector<RunRecord>& records) {
    if (records.empty()) throw PreconditionViolation("success_rate needs at least one record");
    SuccessRate s;
    s.total = static_cast<int>(records.size());
    for (const auto& r : records) {
        s.successes += (r.outcome == Outcome::true_positive || r.outcome == Outcome::true_negative) ? 1 : 0;
    }
    s.rate = static_cast<double>(s.successes) / s.total;
    return s;
}

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

struct GroundingRecord {
    std::string image_id;
    std::string category;
    std::vector<PixelPoint> predictions;
    std::vector<PixelPoint> ground_truth;
};

struct CategoryMetrics {
    std::string category;
    std::optional<double> mean_distance;  // absent when the category has no predictions
    double mean_coverage = 0.0;
    int records = 0;
    int predictions = 0;
};

/// Per category: mean over all predictions of the distance to the nearest
/// ground-truth point of the same record, and mean prediction count per
/// record. Result is keyed by category name.
inline std::vector<CategoryMetrics> grounding_metrics(const std::vector<GroundingRecord>& records) {
    struct Acc {
        double distance_sum = 0.0;
        int distance_n = 0;
        int predictions = 0;
        int records = 0;
    };
    std::map<std::string, Acc> acc;
    for (const auto& r : records) {
        if (r.category.empty()) throw InvariantViolation("grounding record category must be non-empty");
        auto& a = acc[r.category];
        ++a.records;
        a.predictions += static_cast<int>(r.predictions.size());
        if (r.predictions.empty()) continue;
        if (r.ground_truth.empty()) {
            throw PreconditionViolation("record " + r.image_id + " has predictions but no ground truth");
        }
        for (const auto& p : r.predictions) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& t : r.ground_truth) best = std::min(best, euclidean_distance(p, t));
            a.distance_sum += best;
            ++a.distance_n;
        }
    }
    std::vector<CategoryMetrics> out;
    for (const auto& [cat, a] : acc) {
        CategoryMetrics m{cat, std::nullopt, static_cast<double>(a.predictions) / a.records, a.records, a.predictions};
        if (a.distance_n > 0) m.mean_distance = a.distance_sum / a.distance_n;
        out.push_back(std::move(m));
    }
    return out;
}

/// Report order: mean distance descending; categories without a distance last.
inline void sort_by_distance_desc(std::vector<CategoryMetrics>& metrics) {
    std::stable_sort(metrics.begin(), metrics.end(), [](const CategoryMetrics& a, const CategoryMetrics& b) {
        if (a.mean_distance.has_value() != b.mean_distance.has_value()) return a.mean_distance.has_value();
        if (!a.mean_distance) return a.category < b.category;
        if (*a.mean_distance != *b.mean_distance) return *a.mean_distance > *b.mean_distance;
        return a.category < b.category;
    });
}

}  // namespace uavca::eval
