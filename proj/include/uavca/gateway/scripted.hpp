// SPDX-License-Identifier: Apache-2.0
//
// Deterministic replay backend.
//
// Scenario file:
//   {"entries": [{"match": <string|integer>, "response": <string>,
//                 "latency": <seconds, optional>, "reusable": <bool, optional>}]}
//
// On each call the first not-yet-consumed entry that matches is answered and
// consumed. An integer matcher N matches the N-th call (1-based) of the
// session; a string matcher matches when it occurs in the request text
// (image parts render as "[image:<id>]"). Reusable entries are never consumed.
#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "uavca/errors.hpp"
#include "uavca/gateway/model.hpp"

namespace uavca::gateway {

struct ScriptedEntry {
    std::variant<std::string, long long> match;
    std::string response;
    double latency = 0.0;
    bool reusable = false;
};

class ScriptedScenario {
public:
    explicit ScriptedScenario(std::vector<ScriptedEntry> entries) : entries_(std::move(entries)) {
        if (entries_.empty()) throw InvariantViolation("scripted scenario needs at least one entry");
        long long last = 0;
        for (const auto& e : entries_) {
            if (const auto* n = std::get_if<long long>(&e.match)) {
                if (*n <= last) throw InvariantViolation("ordinal matchers must be positive and strictly increasing");
                last = *n;
            }
            if (e.latency < 0.0) throw InvariantViolation("scripted latency must be non-negative");
        }
    }

    static ScriptedScenario from_json(const nlohmann::json& doc) {
        if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
            throw Error("scenario document must be an object with an \"entries\" list");
        }
        std::vector<ScriptedEntry> entries;
        for (const auto& e : doc["entries"]) {
            ScriptedEntry entry;
            const auto& m = e.at("match");
            if (m.is_string()) {
                entry.match = m.get<std::string>();
            } else if (m.is_number_integer()) {
                entry.match = m.get<long long>();
            } else {
                throw Error("scenario \"match\" must be a string or an integer");
            }
            entry.response = e.at("response").get<std::string>();
            entry.latency = e.value("latency", 0.0);
            entry.reusable = e.value("reusable", false);
            entries.push_back(std::move(entry));
        }
        return ScriptedScenario(std::move(entries));
    }

    static ScriptedScenario load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open scenario file: " + path.string());
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw Error("invalid scenario file " + path.string() + ": " + e.what());
        }
    }

    const std::vector<ScriptedEntry>& entries() const noexcept { return entries_; }

private:
    std::vector<ScriptedEntry> entries_;
};

class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(std::shared_ptr<const ScriptedScenario> scenario, std::string id = "scripted")
        : scenario_(std::move(scenario)), id_(std::move(id)), consumed_(scenario_->entries().size(), false) {}

    explicit ScriptedBackend(ScriptedScenario scenario, std::string id = "scripted")
        : ScriptedBackend(std::make_shared<const ScriptedScenario>(std::move(scenario)), std::move(id)) {}

    ModelResponse complete(const ModelRequest& request) override {
        const std::string text = request.flattened_text();
        std::lock_guard lock(mutex_);
        const long long call = ++calls_;
        const auto& entries = scenario_->entries();
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (consumed_[i]) continue;
            const auto& e = entries[i];
            const bool hit = std::visit(
                [&](const auto& m) {
                    if constexpr (std::is_same_v<std::decay_t<decltype(m)>, long long>) {
                        return m == call;
                    } else {
                        return text.find(m) != std::string::npos;
                    }
                },
                e.match);
            if (!hit) continue;
            if (!e.reusable) consumed_[i] = true;
            return {e.response, e.latency, id_};
        }
        throw ScenarioExhausted("scripted scenario has no entry for call " + std::to_string(call), request.request_id);
    }

    std::string id() const override { return id_; }

    std::shared_ptr<Backend> session() override { return std::make_shared<ScriptedBackend>(scenario_, id_); }

    long long calls() const {
        std::lock_guard lock(mutex_);
        return calls_;
    }

private:
    std::shared_ptr<const ScriptedScenario> scenario_;
    std::string id_;
    mutable std::mutex mutex_;
    std::vector<bool> consumed_;
    long long calls_ = 0;
};

}  // namespace uavca::gateway
