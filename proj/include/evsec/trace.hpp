// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "evsec/common.hpp"

namespace evsec {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "evsec 1.0.0";

class CorruptTrace : public Error {
public:
    using Error::Error;
};

class IncompleteTrace : public Error {
public:
    using Error::Error;
};

struct TraceEvent {
    std::size_t index = 0;
    std::string kind;
    std::vector<ActorId> actors;
    json data = json::object();

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct TraceHeader {
    std::string scenario;
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    /// Scenario configuration the run was produced from.
    json config = json::object();

    friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

/// Ordered event log of one scenario run. Indices are dense from 0.
class Trace {
public:
    Trace() = default;
    explicit Trace(TraceHeader header) : header_(std::move(header)) {}

    std::size_t append(std::string kind, std::vector<ActorId> actors, json data);

    /// Marks the run as finished; analysis refuses unfinished traces.
    void finish() { complete_ = true; }
    [[nodiscard]] bool complete() const { return complete_; }

    [[nodiscard]] const TraceHeader& header() const { return header_; }
    [[nodiscard]] const std::vector<TraceEvent>& events() const { return events_; }
    [[nodiscard]] const TraceEvent& at(std::size_t i) const { return events_.at(i); }
    [[nodiscard]] std::size_t size() const { return events_.size(); }

    /// Events of one kind, in order.
    [[nodiscard]] std::vector<const TraceEvent*> of_kind(const std::string& kind) const;

    /// One JSON record per line: header, events, then an end marker.
    void write_jsonl(std::ostream& out) const;
    [[nodiscard]] std::string to_jsonl() const;
    /// Throws CorruptTrace on malformed records or non-dense indices.
    static Trace read_jsonl(std::istream& in);

    friend bool operator==(const Trace& a, const Trace& b) {
        return a.header_ == b.header_ && a.events_ == b.events_ && a.complete_ == b.complete_;
    }

private:
    TraceHeader header_;
    std::vector<TraceEvent> events_;
    bool complete_ = false;
};

}  // namespace evsec
