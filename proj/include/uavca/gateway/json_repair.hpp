// SPDX-License-Identifier: Apache-2.0
//
// Tolerant extraction of JSON values from free-form model output.
//
// Model answers routinely wrap JSON in markdown fences, surround it with
// prose, leave trailing commas, use Python-style single quotes or stop
// mid-structure. extract_structured() locates the first JSON value and, if it
// does not parse as-is, applies four repair passes in a fixed order:
//
//   1. strip code fences
//   2. remove trailing commas
//   3. convert single-quoted strings to double-quoted
//   4. balance unclosed strings, brackets and braces by appending closers
#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "uavca/errors.hpp"

namespace uavca::gateway {

using Json = nlohmann::json;

struct Extracted {
    Json value;
    bool repaired = false;
};

namespace repair {

inline bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

/// Pass 1. Returns the body of the first fenced block (language tag dropped),
/// or the input unchanged when there is no fence. An unterminated fence keeps
/// everything after the opening line.
inline std::string strip_code_fences(std::string_view s) {
    const auto open = s.find("```");
    if (open == std::string_view::npos) return std::string(s);
    auto body = open + 3;
    // Language tag: everything up to the end of the fence line.
    const auto eol = s.find('\n', body);
    if (eol != std::string_view::npos) {
        const auto tag = s.substr(body, eol - body);
        const bool is_tag = std::all_of(tag.begin(), tag.end(), [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ' ' || c == '\r';
        });
        if (is_tag) body = eol + 1;
    }
    const auto close = s.find("```", body);
    if (close == std::string_view::npos) return std::string(s.substr(body));
    return std::string(s.substr(body, close - body));
}

/// Pass 2. Drops commas whose next non-space character closes a container.
/// String contents (either quote style) are left untouched.
inline std::string remove_trailing_commas(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    char quote = 0;
    bool escaped = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (quote != 0) {
            out.push_back(c);
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == quote) {
                quote = 0;
            }
            continue;
        }
        if (c == '"' || c == '\'') {
            quote = c;
            out.push_back(c);
            continue;
        }
        if (c == ',') {
            std::size_t j = i + 1;
            while (j < s.size() && is_space(s[j])) ++j;
            if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
        }
        out.push_back(c);
    }
    return out;
}

/// Pass 3. Rewrites 'single quoted' strings as "double quoted" ones,
/// escaping embedded double quotes and unescaping \'.
inline std::string single_to_double_quotes(std::string_view s) {
    std::string out;
    out.reserve(s.size() + 8);
    enum class State { code, dq, sq } state = State::code;
    bool escaped = false;
    for (const char c : s) {
        switch (state) {
        case State::code:
            if (c == '"') {
                state = State::dq;
                out.push_back(c);
            } else if (c == '\'') {
                state = State::sq;
                out.push_back('"');
            } else {
                out.push_back(c);
            }
            break;
        case State::dq:
            out.push_back(c);
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                state = State::code;
            }
            break;
        case State::sq:
            if (escaped) {
                escaped = false;
                if (c == '\'') {
                    out.push_back('\'');
                } else {
                    out.push_back('\\');
                    out.push_back(c);
                }
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '\'') {
                state = State::code;
                out.push_back('"');
            } else if (c == '"') {
                out += "\\\"";
            } else {
                out.push_back(c);
            }
            break;
        }
    }
    if (escaped) out.push_back('\\');
    return out;
}

/// Pass 4. Closes an unterminated string, drops a dangling comma, fills a
/// dangling key with null and appends the missing closers innermost-first.
inline std::string balance_brackets(std::string_view s) {
    std::string out(s);
    std::vector<char> closers;
    bool in_string = false;
    bool escaped = false;
    for (const char c : s) {
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            closers.push_back('}');
        } else if (c == '[') {
            closers.push_back(']');
        } else if ((c == '}' || c == ']') && !closers.empty() && closers.back() == c) {
            closers.pop_back();
        }
    }
    if (in_string) {
        if (escaped) out.pop_back();
        out.push_back('"');
    }
    if (closers.empty()) return out;
    while (!out.empty() && is_space(out.back())) out.pop_back();
    if (!out.empty() && out.back() == ',') out.pop_back();
    if (!out.empty() && out.back() == ':') out += "null";
    out.append(closers.rbegin(), closers.rend());
    return out;
}

/// End of the balanced value opening at `start`, or npos if it never closes.
/// Both quote styles are treated as strings so quoted brackets are skipped.
inline std::size_t balanced_end(std::string_view s, std::size_t start) {
    std::vector<char> closers;
    char quote = 0;
    bool escaped = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (quote != 0) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == quote) {
                quote = 0;
            }
            continue;
        }
        switch (c) {
        case '"':
        case '\'':
            quote = c;
            break;
        case '{':
            closers.push_back('}');
            break;
        case '[':
            closers.push_back(']');
            break;
        case '}':
        case ']':
            if (closers.empty() || closers.back() != c) return std::string_view::npos;
            closers.pop_back();
            if (closers.empty()) return i;
            break;
        default:
            break;
        }
    }
    return std::string_view::npos;
}

struct ParseAttempt {
    std::optional<Json> value;
    std::size_t error_byte = 0;
};

inline ParseAttempt try_parse(std::string_view s) {
    try {
        return {Json::parse(s.begin(), s.end()), 0};
    } catch (const Json::parse_error& e) {
        return {std::nullopt, e.byte};
    }
}

}  // namespace repair

/// Parses the first JSON value found in `text`. `repaired` is false only when
/// the value parsed without any repair pass changing the text.
/// Throws Unparseable when no candidate survives the repair passes.
inline Extracted extract_structured(std::string_view text) {
    using namespace repair;
    if (trim(text).empty()) throw PreconditionViolation("extract_structured: text must be non-empty");

    if (auto direct = try_parse(trim(text)); direct.value) return {std::move(*direct.value), false};

    const std::string unfenced = strip_code_fences(text);
    const bool fence_changed = unfenced != text;
    // Offsets reported in errors refer to the unfenced text.
    const std::string_view body = unfenced;

    if (fence_changed) {
        if (auto direct = try_parse(trim(body)); direct.value) return {std::move(*direct.value), true};
    }

    std::size_t best_offset = 0;
    constexpr int kMaxCandidates = 64;
    int attempts = 0;
    for (std::size_t pos = body.find_first_of("{["); pos != std::string_view::npos && attempts < kMaxCandidates;
         pos = body.find_first_of("{[", pos + 1), ++attempts) {
        const auto end = balanced_end(body, pos);
        const auto candidate = end == std::string_view::npos ? body.substr(pos) : body.substr(pos, end - pos + 1);

        auto plain = try_parse(candidate);
        if (plain.value) return {std::move(*plain.value), fence_changed};
        best_offset = std::max(best_offset, pos + plain.error_byte);

        const std::string fixed = balance_brackets(single_to_double_quotes(remove_trailing_commas(candidate)));
        auto repaired = try_parse(fixed);
        if (repaired.value) return {std::move(*repaired.value), true};
        best_offset = std::max(best_offset, pos + std::min(repaired.error_byte, candidate.size()));
    }
    throw Unparseable("no JSON value could be recovered from model output", best_offset);
}

}  // namespace uavca::gateway
