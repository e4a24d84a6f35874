// SPDX-License-Identifier: Apache-2.0
//
// ReAct executor: prompt the model, parse one action object, run the tool,
// feed the observation back, repeat until final_answer or the step budget.
//
// The model answers with a JSON action (or a list of them):
//   {"thought": "...", "tool": "<name>", "args": {...}}
// "name"/"action" and "arguments"/"action_input" are accepted as aliases.
#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uavca/agents/tools.hpp"
#include "uavca/core.hpp"
#include "uavca/errors.hpp"
#include "uavca/gateway/json_repair.hpp"
#include "uavca/gateway/model.hpp"

namespace uavca::agents {

struct ToolCall {
    std::string name;
    Json args;
};

struct ReactStep {
    Phase phase = Phase::reason;
    std::string content;
    std::optional<ToolCall> tool_call;
    std::optional<std::string> tool_result;
    std::size_t step_index = 0;
};

using Trace = std::vector<ReactStep>;

inline std::size_t count_act_steps(const Trace& trace) {
    std::size_t n = 0;
    for (const auto& s : trace) n += s.phase == Phase::act ? 1U : 0U;
    return n;
}

/// A run that ended without a final answer. The partial trace is kept.
class RunAborted : public Error {
public:
    RunAborted(const std::string& what, Trace trace) : Error(what), trace_(std::move(trace)) {}
    const Trace& trace() const noexcept { return trace_; }

private:
    Trace trace_;
};

class StepBudgetExhausted : public RunAborted {
public:
    using RunAborted::RunAborted;
};

/// A tool failed again after its one retry.
class ToolFailure : public RunAborted {
public:
    using RunAborted::RunAborted;
};

struct ReactLimits {
    int max_steps = 8;
    double temperature = 0.5;
};

struct ReactOptions {
    /// Role description placed at the top of the system prompt.
    std::string role;
    /// Extra task context appended to the first user message.
    std::string context;
    /// Called after every appended step.
    std::function<void(const ReactStep&)> on_step;
};

struct ReactResult {
    Json final_answer;
    Trace trace;
};

namespace detail {

inline std::string describe_tools(const ToolRegistry& registry) {
    std::ostringstream os;
    for (const auto& t : registry.tools()) {
        os << "- " << t.name << ": " << t.description;
        if (!t.args.empty()) {
            os << " Arguments:";
            for (std::size_t i = 0; i < t.args.size(); ++i) {
                const auto& a = t.args[i];
                os << (i == 0 ? " " : ", ") << a.name << " (" << a.type << (a.required ? "" : ", optional") << ")";
            }
        }
        os << '\n';
    }
    return os.str();
}

inline std::string system_prompt(const ToolRegistry& registry, const ReactOptions& options) {
    std::ostringstream os;
    if (!options.role.empty()) os << options.role << "\n\n";
    os << "You solve the task step by step. In every turn, think about the latest observation, then choose "
          "exactly one tool.\nAvailable tools:\n"
       << describe_tools(registry)
       << "\nReply with a single JSON object and nothing else:\n"
          "{\"thought\": \"<your reasoning>\", \"tool\": \"<tool name>\", \"args\": {<arguments>}}\n"
          "When the task is complete, call final_answer with {\"answer\": <result>}.";
    return os.str();
}

inline std::string first_user_message(const std::string& agent_id, const MissionQuery& query,
                                      const ReactOptions& options) {
    std::ostringstream os;
    os << "Agent: " << agent_id << " | Sample: " << query.sample_id << '\n' << "Task: " << query.text;
    if (!options.context.empty()) os << '\n' << options.context;
    return os.str();
}

struct ParsedAction {
    std::string thought;
    std::vector<ToolCall> calls;
};

inline std::optional<ToolCall> to_call(const Json& obj) {
    if (!obj.is_object()) return std::nullopt;
    std::string name;
    for (const char* key : {"tool", "name", "action"}) {
        if (const auto it = obj.find(key); it != obj.end() && it->is_string()) {
            name = it->get<std::string>();
            break;
        }
    }
    if (name.empty()) return std::nullopt;
    Json args = Json::object();
    for (const char* key : {"args", "arguments", "action_input"}) {
        if (const auto it = obj.find(key); it != obj.end()) {
            args = *it;
            break;
        }
    }
    if (args.is_string() && name != "final_answer") {
        // Some models double-encode the argument object.
        try {
            args = gateway::extract_structured(args.get<std::string>()).value;
        } catch (const Error&) {
        }
    }
    if (name == "final_answer" && !(args.is_object() && args.contains("answer"))) args = Json{{"answer", args}};
    return ToolCall{std::move(name), std::move(args)};
}

inline ParsedAction parse_action(const std::string& text) {
    const auto extracted = gateway::extract_structured(text);
    ParsedAction out;
    const auto& v = extracted.value;
    const auto take = [&](const Json& obj) {
        if (obj.is_object() && obj.contains("thought") && obj["thought"].is_string() && out.thought.empty()) {
            out.thought = obj["thought"].get<std::string>();
        }
        if (auto call = to_call(obj)) out.calls.push_back(std::move(*call));
    };
    if (v.is_array()) {
        for (const auto& el : v) take(el);
    } else {
        take(v);
    }
    return out;
}

}  // namespace detail

/// Runs one agent until final_answer or `limits.max_steps` model turns.
/// Tool errors come back to the model as observations; a second failure of
/// the same tool aborts with ToolFailure.
inline ReactResult run_react(const std::string& agent_id, const MissionQuery& query, const ToolRegistry& registry,
                             const gateway::Gateway& gateway, const ReactLimits& limits,
                             const ReactOptions& options = {}) {
    if (!registry.contains("final_answer")) throw PreconditionViolation("registry must contain final_answer");
    if (limits.max_steps < 1) throw PreconditionViolation("max_steps must be >= 1");

    using gateway::ModelMessage;
    using gateway::Role;

    Trace trace;
    const auto push = [&](ReactStep step) {
        step.step_index = trace.size();
        trace.push_back(std::move(step));
        if (options.on_step) options.on_step(trace.back());
    };

    std::vector<ModelMessage> transcript{
        ModelMessage::text(Role::system, detail::system_prompt(registry, options)),
        ModelMessage::text(Role::user, detail::first_user_message(agent_id, query, options)),
    };
    std::map<std::string, int> failures;
    std::size_t acts = 0;

    for (int turn = 0; turn < limits.max_steps; ++turn) {
        gateway::ModelRequest request{transcript, limits.temperature, gateway.max_tokens(), gateway.model_name(), {}};
        const auto response = gateway.complete(std::move(request));
        transcript.push_back(ModelMessage::text(Role::assistant, response.text));

        detail::ParsedAction action;
        try {
            action = detail::parse_action(response.text);
        } catch (const Error& e) {
            push({Phase::reason, response.text, std::nullopt, std::nullopt, 0});
            transcript.push_back(ModelMessage::text(
                Role::user, std::string("Observation: could not parse an action (") + e.what() +
                                "). Reply with one JSON action object."));
            continue;
        }
        if (action.calls.empty()) {
            push({Phase::reason, action.thought.empty() ? response.text : action.thought, std::nullopt, std::nullopt, 0});
            transcript.push_back(ModelMessage::text(
                Role::user, "Observation: no tool was named. Reply with one JSON action object naming a tool."));
            continue;
        }
        if (!action.thought.empty()) push({Phase::reason, action.thought, std::nullopt, std::nullopt, 0});

        std::string observations;
        std::optional<Json> answer;
        for (auto& call : action.calls) {
            if (answer) {
                push({Phase::reason, "rejected call to " + call.name + ": the run already delivered its final answer",
                      std::nullopt, std::nullopt, 0});
                continue;
            }
            if (acts >= static_cast<std::size_t>(limits.max_steps)) break;
            if (!registry.contains(call.name)) {
                const std::string msg = "unknown tool '" + call.name + "'";
                push({Phase::reason, msg, std::nullopt, std::nullopt, 0});
                if (++failures[call.name] > 1) throw ToolFailure(msg + " requested twice", std::move(trace));
                observations += "Observation: error: " + msg + ".\n";
                continue;
            }
            const auto& spec = registry.at(call.name);
            if (spec.phase) push({*spec.phase, "calling " + call.name, std::nullopt, std::nullopt, 0});
            try {
                auto out = registry.invoke(call.name, call.args);
                ++acts;
                push({Phase::act, call.name, call, out.summary, 0});
                observations += "Observation from " + call.name + ": " + out.summary + '\n';
                if (out.terminal) answer = std::move(out.result);
            } catch (const std::exception& e) {
                ++acts;
                const std::string msg = std::string("error: ") + e.what();
                push({Phase::act, call.name, call, msg, 0});
                if (++failures[call.name] > 1) {
                    throw ToolFailure("tool " + call.name + " failed after retry: " + e.what(), std::move(trace));
                }
                observations += "Observation from " + call.name + ": " + msg + "\n";
            }
        }
        if (answer) return {std::move(*answer), std::move(trace)};
        transcript.push_back(ModelMessage::text(Role::user, observations.empty() ? "Observation: none" : observations));
        if (acts >= static_cast<std::size_t>(limits.max_steps)) break;
    }
    throw StepBudgetExhausted(agent_id + ": no final answer within " + std::to_string(limits.max_steps) + " steps",
                              std::move(trace));
}

inline Json step_to_json(const ReactStep& s) {
    Json j = {{"index", s.step_index}, {"phase", to_string(s.phase)}, {"content", s.content}};
    if (s.tool_call) j["tool_call"] = {{"name", s.tool_call->name}, {"args", s.tool_call->args}};
    if (s.tool_result) j["tool_result"] = *s.tool_result;
    return j;
}

inline Json trace_to_json(const Trace& trace) {
    Json out = Json::array();
    for (const auto& s : trace) out.push_back(step_to_json(s));
    return out;
}

}  // namespace uavca::agents
