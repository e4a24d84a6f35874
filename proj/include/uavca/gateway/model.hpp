// SPDX-License-Identifier: Apache-2.0
//
// Model request/response types, the backend interface and the Gateway
// handle that tools and agents use to talk to models.
#pragma once

#include <atomic>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "uavca/clock.hpp"
#include "uavca/core.hpp"
#include "uavca/errors.hpp"

namespace uavca::gateway {

enum class Role { system, user, assistant, tool };

inline const char* to_string(Role r) noexcept {
    switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
    }
    return "user";
}

/// Image attached to a message. The id is what prompts and scenarios refer
/// to; the pixels travel along so HTTP backends can inline them.
struct ImageRef {
    SceneImage image;
};

using ContentPart = std::variant<std::string, ImageRef>;

struct ModelMessage {
    Role role = Role::user;
    std::vector<ContentPart> parts;

    static ModelMessage text(Role role, std::string body) { return {role, {std::move(body)}}; }
};

struct ModelRequest {
    std::vector<ModelMessage> messages;
    double temperature = 0.5;
    int max_tokens = 1024;
    std::string model_name;
    /// Assigned by the gateway when left empty.
    std::string request_id;

    void validate() const {
        if (messages.empty()) throw PreconditionViolation("ModelRequest needs at least one message");
        if (!(temperature >= 0.0 && temperature <= 2.0)) {
            throw PreconditionViolation("ModelRequest temperature must lie in [0,2]");
        }
        if (max_tokens <= 0) throw PreconditionViolation("ModelRequest max_tokens must be positive");
        for (const auto& m : messages) {
            if (m.parts.empty()) throw PreconditionViolation("ModelMessage needs at least one part");
            for (const auto& p : m.parts) {
                if (std::holds_alternative<ImageRef>(p) && m.role != Role::user) {
                    throw PreconditionViolation("image parts are only allowed in user messages");
                }
            }
        }
    }

    /// All text parts, with image parts rendered as "[image:<id>]".
    std::string flattened_text() const {
        std::string out;
        for (const auto& m : messages) {
            for (const auto& p : m.parts) {
                if (const auto* t = std::get_if<std::string>(&p)) {
                    out += *t;
                } else {
                    out += "[image:" + std::get<ImageRef>(p).image.id() + "]";
                }
                out += '\n';
            }
        }
        return out;
    }
};

struct ModelResponse {
    std::string text;
    double latency = 0.0;  // seconds
    std::string backend_id;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual ModelResponse complete(const ModelRequest& request) = 0;
    virtual std::string id() const = 0;
    /// A handle for one independent run. Stateless backends return
    /// themselves; replay backends return a fresh cursor over the same script.
    virtual std::shared_ptr<Backend> session() = 0;
};

/// Validates the request and forwards it to `backend`.
inline ModelResponse complete(const ModelRequest& request, Backend& backend) {
    request.validate();
    return backend.complete(request);
}

/// What agents and tools hold: a backend plus per-role sampling settings and
/// the run clock that model latency is charged to.
class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, std::shared_ptr<RunClock> clock, std::string model_name,
            double temperature = 0.5, int max_tokens = 1024)
        : backend_(std::move(backend)),
          clock_(std::move(clock)),
          model_name_(std::move(model_name)),
          temperature_(temperature),
          max_tokens_(max_tokens) {
        if (!backend_) throw PreconditionViolation("Gateway requires a backend");
        if (!clock_) clock_ = std::make_shared<WallClock>();
    }

    ModelResponse complete(std::vector<ModelMessage> messages) const {
        ModelRequest req{std::move(messages), temperature_, max_tokens_, model_name_, next_request_id()};
        return complete(std::move(req));
    }

    ModelResponse complete(ModelRequest request) const {
        if (request.request_id.empty()) request.request_id = next_request_id();
        auto response = gateway::complete(request, *backend_);
        clock_->advance(response.latency);
        return response;
    }

    /// Same backend and clock, different model or sampling settings.
    Gateway with_model(std::string model_name, std::optional<double> temperature = std::nullopt) const {
        Gateway g = *this;
        g.model_name_ = std::move(model_name);
        if (temperature) g.temperature_ = *temperature;
        return g;
    }

    const std::shared_ptr<Backend>& backend() const noexcept { return backend_; }
    const std::shared_ptr<RunClock>& clock() const noexcept { return clock_; }
    const std::string& model_name() const noexcept { return model_name_; }
    double temperature() const noexcept { return temperature_; }
    int max_tokens() const noexcept { return max_tokens_; }

private:
    static std::string next_request_id() {
        static std::atomic<unsigned long> counter{0};
        char buf[32];
        std::snprintf(buf, sizeof buf, "req-%06lu", ++counter);
        return buf;
    }

    std::shared_ptr<Backend> backend_;
    std::shared_ptr<RunClock> clock_;
    std::string model_name_;
    double temperature_;
    int max_tokens_;
};

}  // namespace uavca::gateway
