// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>

namespace uavca {

/// Monotonic run clock in seconds since the clock was created.
///
/// Model calls report their latency through advance(). A wall clock ignores
/// it since real time already passed; a virtual clock accumulates it, which
/// makes timings reproducible when the backend is scripted.
class RunClock {
public:
    virtual ~RunClock() = default;
    virtual double now() const = 0;
    virtual void advance(double seconds) = 0;
    virtual bool is_virtual() const noexcept = 0;
};

class WallClock final : public RunClock {
public:
    WallClock() : start_(std::chrono::steady_clock::now()) {}

    double now() const override {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    void advance(double) override {}
    bool is_virtual() const noexcept override { return false; }

private:
    std::chrono::steady_clock::time_point start_;
};

/// Integer-microsecond accumulator, so concurrent advances commute exactly.
class VirtualClock final : public RunClock {
public:
    double now() const override { return static_cast<double>(micros_.load()) / 1e6; }
    void advance(double seconds) override {
        if (seconds > 0.0) micros_.fetch_add(std::llround(seconds * 1e6));
    }
    bool is_virtual() const noexcept override { return true; }

private:
    std::atomic<std::int64_t> micros_{0};
};

}  // namespace uavca
