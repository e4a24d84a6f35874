// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uavca/errors.hpp"

namespace uavca::agents {

using Json = nlohmann::json;

/// ReAct phases used to annotate traces.
enum class Phase { observe, describe, reason, decide, act };

inline const char* to_string(Phase p) noexcept {
    switch (p) {
    case Phase::observe: return "observe";
    case Phase::describe: return "describe";
    case Phase::reason: return "reason";
    case Phase::decide: return "decide";
    case Phase::act: return "act";
    }
    return "act";
}

struct ArgSpec {
    std::string name;
    std::string type;  // semantic type shown to the model: integer, string, image, list, dict, any
    bool required = true;
};

struct ToolOutput {
    Json result;
    /// Observation text fed back to the model.
    std::string summary;
    /// Set only by final_answer: the run ends and `result` is the answer.
    bool terminal = false;
};

using ToolHandler = std::function<ToolOutput(const Json& args)>;

struct ToolSpec {
    std::string name;
    std::string description;
    std::vector<ArgSpec> args;
    ToolHandler handler;
    /// Phase annotation emitted before the act step; nullopt for none.
    std::optional<Phase> phase;

    void validate() const {
        if (name.empty()) throw InvariantViolation("tool name must be non-empty");
        if (!handler) throw InvariantViolation("tool " + name + " has no handler");
        std::set<std::string> seen;
        for (const auto& a : args) {
            if (a.name.empty()) throw InvariantViolation("tool " + name + " has an unnamed argument");
            if (!seen.insert(a.name).second) throw InvariantViolation("tool " + name + " repeats argument " + a.name);
        }
    }
};

class ToolRegistry {
public:
    /// Throws DuplicateTool when `spec.name` is already registered.
    ToolRegistry& register_tool(ToolSpec spec) {
        spec.validate();
        if (index_.count(spec.name) != 0) throw DuplicateTool("tool already registered: " + spec.name);
        index_.emplace(spec.name, tools_.size());
        tools_.push_back(std::move(spec));
        return *this;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    const ToolSpec& at(const std::string& name) const {
        const auto it = index_.find(name);
        if (it == index_.end()) throw UnknownTool("no such tool: " + name);
        return tools_[it->second];
    }

    /// Registration order.
    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(tools_.size());
        for (const auto& t : tools_) out.push_back(t.name);
        return out;
    }

    const std::vector<ToolSpec>& tools() const noexcept { return tools_; }

    /// Checks required arguments, then runs the handler.
    ToolOutput invoke(const std::string& name, const Json& args) const {
        const auto& spec = at(name);
        for (const auto& a : spec.args) {
            if (a.required && !(args.is_object() && args.contains(a.name))) {
                throw PreconditionViolation("tool " + name + " requires argument '" + a.name + "'");
            }
        }
        return spec.handler(args);
    }

private:
    std::vector<ToolSpec> tools_;
    std::map<std::string, std::size_t> index_;
};

/// The terminal tool every agent registry must carry.
inline ToolSpec final_answer_tool() {
    return ToolSpec{
        "final_answer",
        "Delivers the final result of the task and ends the run.",
        {{"answer", "any", true}},
        [](const Json& args) {
            return ToolOutput{args.at("answer"), "final answer recorded", true};
        },
        std::nullopt,
    };
}

}  // namespace uavca::agents
