// SPDX-License-Identifier: Apache-2.0
//
// In-process message passing between agents, plus periodic state reports.
//
// Every registered agent owns one mailbox. Delivery is FIFO per
// sender-recipient pair (a mailbox is a single queue, so it is FIFO overall).
#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uavca/clock.hpp"
#include "uavca/core.hpp"
#include "uavca/errors.hpp"
#include "uavca/gateway/keypoints.hpp"

namespace uavca::agents {

using Json = nlohmann::json;

enum class MessageKind { state_report, task_assignment, observation, final_answer };

inline const char* to_string(MessageKind k) noexcept {
    switch (k) {
    case MessageKind::state_report: return "state_report";
    case MessageKind::task_assignment: return "task_assignment";
    case MessageKind::observation: return "observation";
    case MessageKind::final_answer: return "final_answer";
    }
    return "observation";
}

struct AgentMessage {
    std::string from_agent;
    std::string to_agent;
    MessageKind kind = MessageKind::observation;
    Json payload;
    double timestamp = 0.0;  // seconds since run start
};

struct DeliveryReceipt {
    std::uint64_t sequence = 0;
    std::string recipient;
};

inline Json message_to_json(const AgentMessage& m) {
    return {{"from", m.from_agent},
            {"to", m.to_agent},
            {"kind", to_string(m.kind)},
            {"payload", m.payload},
            {"timestamp", m.timestamp}};
}

class MessageBus {
public:
    void register_agent(const std::string& agent_id) {
        if (agent_id.empty()) throw InvariantViolation("agent id must be non-empty");
        std::lock_guard lock(mutex_);
        mailboxes_.try_emplace(agent_id);
    }

    /// Drops the mailbox; pending messages are discarded.
    void unregister_agent(const std::string& agent_id) {
        std::lock_guard lock(mutex_);
        mailboxes_.erase(agent_id);
    }

    bool is_registered(const std::string& agent_id) const {
        std::lock_guard lock(mutex_);
        return mailboxes_.count(agent_id) != 0;
    }

    DeliveryReceipt send(AgentMessage message) {
        if (message.from_agent.empty()) throw InvariantViolation("message sender must be non-empty");
        if (message.from_agent == message.to_agent) throw InvariantViolation("message sender equals recipient");
        std::lock_guard lock(mutex_);
        const auto box = mailboxes_.find(message.to_agent);
        if (box == mailboxes_.end()) throw UnknownRecipient("no agent registered as " + message.to_agent);
        auto& last = last_timestamp_[message.from_agent];
        if (message.timestamp < last) {
            throw InvariantViolation("timestamps from " + message.from_agent + " must be non-decreasing");
        }
        last = message.timestamp;
        const auto seq = ++sequence_;
        log_.push_back(message);
        box->second.push_back(std::move(message));
        ready_.notify_all();
        return {seq, box->second.back().to_agent};
    }

    std::optional<AgentMessage> try_receive(const std::string& agent_id) {
        std::lock_guard lock(mutex_);
        return pop_locked(agent_id);
    }

    std::optional<AgentMessage> receive(const std::string& agent_id, std::chrono::milliseconds timeout) {
        std::unique_lock lock(mutex_);
        ready_.wait_for(lock, timeout, [&] {
            const auto it = mailboxes_.find(agent_id);
            return it == mailboxes_.end() || !it->second.empty();
        });
        return pop_locked(agent_id);
    }

    std::size_t mailbox_size(const std::string& agent_id) const {
        std::lock_guard lock(mutex_);
        const auto it = mailboxes_.find(agent_id);
        if (it == mailboxes_.end()) throw UnknownRecipient("no agent registered as " + agent_id);
        return it->second.size();
    }

    /// Every message accepted so far, in send order.
    std::vector<AgentMessage> history() const {
        std::lock_guard lock(mutex_);
        return log_;
    }

private:
    std::optional<AgentMessage> pop_locked(const std::string& agent_id) {
        const auto it = mailboxes_.find(agent_id);
        if (it == mailboxes_.end()) throw UnknownRecipient("no agent registered as " + agent_id);
        if (it->second.empty()) return std::nullopt;
        auto msg = std::move(it->second.front());
        it->second.pop_front();
        return msg;
    }

    mutable std::mutex mutex_;
    std::condition_variable ready_;
    std::map<std::string, std::deque<AgentMessage>> mailboxes_;
    std::map<std::string, double> last_timestamp_;
    std::vector<AgentMessage> log_;
    std::uint64_t sequence_ = 0;
};

struct AgentState {
    std::string agent_id;
    std::optional<PixelPoint> position;
    std::optional<std::string> last_image_id;
    std::vector<LabeledKeypoint> annotations;

    friend bool operator==(const AgentState&, const AgentState&) = default;
};

inline Json state_to_json(const AgentState& s) {
    Json j = {{"agent_id", s.agent_id}, {"annotations", gateway::keypoints_to_json(s.annotations)}};
    j["position"] = s.position ? Json{s.position->x, s.position->y} : Json(nullptr);
    j["last_image_id"] = s.last_image_id ? Json(*s.last_image_id) : Json(nullptr);
    return j;
}

inline AgentState state_from_json(const Json& j) {
    AgentState s;
    s.agent_id = j.at("agent_id").get<std::string>();
    if (s.agent_id.empty()) throw InvariantViolation("AgentState agent_id must be non-empty");
    if (const auto& p = j.at("position"); !p.is_null()) s.position = PixelPoint(p.at(0).get<double>(), p.at(1).get<double>());
    if (const auto& id = j.at("last_image_id"); !id.is_null()) s.last_image_id = id.get<std::string>();
    for (const auto& el : j.at("annotations")) {
        std::optional<BoundingBox> bbox;
        if (el.contains("bbox_2d")) {
            const auto& b = el["bbox_2d"];
            bbox = BoundingBox(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>());
        }
        std::optional<double> p;
        if (el.contains("probability")) p = el["probability"].get<double>();
        s.annotations.emplace_back(el.at("label").get<std::string>(),
                                   PixelPoint(el["point"][0].get<double>(), el["point"][1].get<double>()), bbox, p);
    }
    return s;
}

/// Emits a state_report whenever a full period has elapsed since the last
/// one. Driven by tick() with the run clock's time, so it works the same
/// under a virtual clock. The first tick always reports.
class StateReporter {
public:
    StateReporter(MessageBus& bus, std::string to_agent, std::function<AgentState()> state, double period)
        : bus_(bus), to_(std::move(to_agent)), state_(std::move(state)), period_(period) {
        if (!(period_ > 0.0)) throw PreconditionViolation("report period must be positive");
        if (!state_) throw PreconditionViolation("state provider required");
    }

    /// Returns the number of reports emitted (0 or 1).
    int tick(double now) {
        std::lock_guard lock(mutex_);
        if (stopped_) return 0;
        if (next_due_ && now < *next_due_) return 0;
        auto s = state_();
        bus_.send({s.agent_id, to_, MessageKind::state_report, state_to_json(s), now});
        ++emitted_;
        double due = next_due_ ? *next_due_ : now;
        while (due <= now) due += period_;
        next_due_ = due;
        return 1;
    }

    void stop() {
        std::lock_guard lock(mutex_);
        stopped_ = true;
    }

    int emitted() const {
        std::lock_guard lock(mutex_);
        return emitted_;
    }

private:
    MessageBus& bus_;
    std::string to_;
    std::function<AgentState()> state_;
    double period_;
    mutable std::mutex mutex_;
    std::optional<double> next_due_;
    bool stopped_ = false;
    int emitted_ = 0;
};

/// Wall-clock driver for a StateReporter; stops on destruction.
class BackgroundReporter {
public:
    BackgroundReporter(StateReporter& reporter, std::shared_ptr<RunClock> clock, std::chrono::milliseconds poll)
        : reporter_(reporter), clock_(std::move(clock)) {
        worker_ = std::jthread([this, poll](std::stop_token stop) {
            std::mutex m;
            std::condition_variable_any cv;
            while (!stop.stop_requested()) {
                reporter_.tick(clock_->now());
                std::unique_lock lock(m);
                cv.wait_for(lock, stop, poll, [] { return false; });
            }
        });
    }

    ~BackgroundReporter() { stop(); }

    void stop() {
        if (worker_.joinable()) {
            worker_.request_stop();
            worker_.join();
        }
        reporter_.stop();
    }

private:
    StateReporter& reporter_;
    std::shared_ptr<RunClock> clock_;
    std::jthread worker_;
};

}  // namespace uavca::agents
