// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uavca {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value failed a domain-type invariant at construction.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

/// An operation was called with arguments outside its precondition.
class PreconditionViolation : public Error {
public:
    using Error::Error;
};

// ---- model gateway -------------------------------------------------------

class GatewayError : public Error {
public:
    GatewayError(const std::string& what, std::string request_id)
        : Error(what + " [request " + request_id + "]"), request_id_(std::move(request_id)) {}

    const std::string& request_id() const noexcept { return request_id_; }

private:
    std::string request_id_;
};

class EndpointUnreachable : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class AuthRejected : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class ScenarioExhausted : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class Unparseable : public Error {
public:
    Unparseable(const std::string& what, std::size_t offset)
        : Error(what + " (best attempt at offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// No element of a grounding answer could be mapped to a keypoint.
class EmptyResult : public Error {
public:
    using Error::Error;
};

// ---- agent runtime -------------------------------------------------------

class DuplicateTool : public Error {
public:
    using Error::Error;
};

class UnknownTool : public Error {
public:
    using Error::Error;
};

class UnknownRecipient : public Error {
public:
    using Error::Error;
};

// ---- mission tools / simulation -----------------------------------------

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

class EmptyPath : public Error {
public:
    using Error::Error;
};

}  // namespace uavca
