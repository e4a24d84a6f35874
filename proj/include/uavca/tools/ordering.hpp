// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "uavca/core.hpp"

namespace uavca::tools {

/// Visit order: fire probability descending (missing counts as 0). Within a
/// group of equal probability, greedily take the keypoint nearest to the
/// previously visited point (the start point for the first group); distance
/// ties go to the earlier input position.
inline MissionPlan order_waypoints(const std::vector<LabeledKeypoint>& keypoints, const PixelPoint& start) {
    const auto prob = [&](std::size_t i) { return keypoints[i].fire_probability().value_or(0.0); };

    std::vector<std::size_t> by_prob(keypoints.size());
    std::iota(by_prob.begin(), by_prob.end(), std::size_t{0});
    std::stable_sort(by_prob.begin(), by_prob.end(), [&](std::size_t a, std::size_t b) { return prob(a) > prob(b); });

    MissionPlan plan;
    plan.ordered_waypoints.reserve(keypoints.size());
    PixelPoint prev = start;
    for (std::size_t g = 0; g < by_prob.size();) {
        std::size_t end = g;
        while (end < by_prob.size() && prob(by_prob[end]) == prob(by_prob[g])) ++end;
        std::vector<std::size_t> group(by_prob.begin() + static_cast<std::ptrdiff_t>(g),
                                       by_prob.begin() + static_cast<std::ptrdiff_t>(end));
        std::sort(group.begin(), group.end());
        while (!group.empty()) {
            auto best = group.begin();
            double best_d = std::numeric_limits<double>::infinity();
            for (auto it = group.begin(); it != group.end(); ++it) {
                const double d = euclidean_distance(prev, keypoints[*it].point());
                if (d < best_d) {
                    best_d = d;
                    best = it;
                }
            }
            plan.ordered_waypoints.push_back(keypoints[*best]);
            prev = keypoints[*best].point();
            group.erase(best);
        }
        g = end;
    }

    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "%zu waypoint(s) ordered by fire probability, highest first; nearest-first among equal "
                  "probabilities, starting from (%.1f, %.1f)",
                  keypoints.size(), start.x, start.y);
    plan.rationale = buf;
    return plan;
}

}  // namespace uavca::tools
