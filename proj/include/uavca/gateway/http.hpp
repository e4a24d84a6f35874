// SPDX-License-Identifier: Apache-2.0
//
// OpenAI-compatible chat-completions backend (POST <base>/chat/completions).
#pragma once

#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "uavca/errors.hpp"
#include "uavca/gateway/model.hpp"
#include "uavca/image_io.hpp"

namespace uavca::gateway {

/// Transient failures (network errors, 408/409/429/5xx) are retried up to
/// max_retries times, waiting 1s, 2s, 4s, ... before each retry.
struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{1000};
    double multiplier = 2.0;

    int max_attempts() const noexcept { return max_retries + 1; }

    /// Wait before retry number `retry` (1-based).
    std::chrono::milliseconds backoff_before_retry(int retry) const {
        double ms = static_cast<double>(initial_backoff.count());
        for (int i = 1; i < retry; ++i) ms *= multiplier;
        return std::chrono::milliseconds(static_cast<long long>(ms));
    }
};

struct HttpConfig {
    std::string api_base;  // e.g. https://api.example.com/v1
    std::string credential_env = "UAVCA_API_KEY";
    RetryPolicy retry;
    std::chrono::seconds timeout{120};
    std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
    };
};

/// Splits "scheme://host[:port][/prefix]" into the client origin and path prefix.
inline std::pair<std::string, std::string> split_base_url(const std::string& base) {
    const auto scheme_end = base.find("://");
    if (scheme_end == std::string::npos) throw Error("api base must include a scheme: " + base);
    const auto path_start = base.find('/', scheme_end + 3);
    std::string origin = path_start == std::string::npos ? base : base.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : base.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {origin, prefix};
}

/// The chat-completions request body. Text-only messages use a plain string
/// content; messages with images use the content-part array form.
inline nlohmann::json build_chat_payload(const ModelRequest& request) {
    using nlohmann::json;
    json messages = json::array();
    for (const auto& m : request.messages) {
        bool has_image = false;
        for (const auto& p : m.parts) has_image = has_image || std::holds_alternative<ImageRef>(p);
        json msg = {{"role", to_string(m.role)}};
        if (!has_image) {
            std::string text;
            for (const auto& p : m.parts) {
                if (!text.empty()) text += '\n';
                text += std::get<std::string>(p);
            }
            msg["content"] = text;
        } else {
            json parts = json::array();
            for (const auto& p : m.parts) {
                if (const auto* t = std::get_if<std::string>(&p)) {
                    parts.push_back({{"type", "text"}, {"text", *t}});
                } else {
                    const auto png = encode_png(std::get<ImageRef>(p).image);
                    const std::string url =
                        "data:image/png;base64," + httplib::detail::base64_encode(std::string(png.begin(), png.end()));
                    parts.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
                }
            }
            msg["content"] = std::move(parts);
        }
        messages.push_back(std::move(msg));
    }
    return {{"model", request.model_name},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
}

inline std::string response_text(const nlohmann::json& body) {
    const auto& content = body.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    std::string out;
    for (const auto& part : content) {
        if (part.value("type", "") == "text") out += part.value("text", "");
    }
    return out;
}

class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpConfig config) : config_(std::move(config)) {
        if (config_.api_base.empty()) throw Error("HTTP backend requires an api base URL");
        std::tie(origin_, prefix_) = split_base_url(config_.api_base);
        const char* key = std::getenv(config_.credential_env.c_str());
        if (key == nullptr) throw Error("credential environment variable " + config_.credential_env + " is not set");
        api_key_ = key;
        if (config_.retry.max_retries < 0) throw Error("retry count must be non-negative");
    }

    ModelResponse complete(const ModelRequest& request) override {
        const std::string body = build_chat_payload(request).dump();
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        std::string last_error;
        for (int attempt = 1; attempt <= config_.retry.max_attempts(); ++attempt) {
            if (attempt > 1) config_.sleep(config_.retry.backoff_before_retry(attempt - 1));

            httplib::Client client(origin_);
            client.set_connection_timeout(config_.timeout);
            client.set_read_timeout(config_.timeout);
            client.set_write_timeout(config_.timeout);

            const auto started = std::chrono::steady_clock::now();
            auto res = client.Post(prefix_ + "/chat/completions", headers, body, "application/json");
            const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

            if (!res) {
                last_error = "network error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403) {
                throw AuthRejected("endpoint rejected credential (HTTP " + std::to_string(res->status) + ")",
                                   request.request_id);
            }
            if (res->status == 408 || res->status == 409 || res->status == 429 || res->status >= 500) {
                last_error = "transient HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw GatewayError("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body,
                                   request.request_id);
            }
            try {
                return {response_text(nlohmann::json::parse(res->body)), latency, id()};
            } catch (const nlohmann::json::exception& e) {
                throw GatewayError(std::string("malformed chat-completions response: ") + e.what(), request.request_id);
            }
        }
        throw EndpointUnreachable(last_error + " after " + std::to_string(config_.retry.max_attempts()) + " attempt(s)",
                                  request.request_id);
    }

    std::string id() const override { return "http:" + origin_ + prefix_; }

    /// Stateless, so a session is just a copy of the configuration.
    std::shared_ptr<Backend> session() override { return std::make_shared<HttpBackend>(*this); }

private:
    HttpConfig config_;
    std::string origin_;
    std::string prefix_;
    std::string api_key_;
};

}  // namespace uavca::gateway
