// SPDX-License-Identifier: Apache-2.0
#include "evsec/trace.hpp"

#include <iomanip>
#include <sstream>

#include <openssl/sha.h>

namespace evsec {

namespace {

/// Each record carries SHA-256(previous digest || record without digest).
std::string chain(const std::string& prev, const json& record) {
    std::string input = prev + record.dump();
    unsigned char md[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(input.data()), input.size(), md);
    std::ostringstream hex;
    for (unsigned char c : md) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(c);
    return hex.str();
}

std::string take_digest(json& r, std::size_t lineno) {
    auto it = r.find("digest");
    if (it == r.end() || !it->is_string()) throw CorruptTrace("line " + std::to_string(lineno) + ": missing digest");
    std::string d = it->get<std::string>();
    r.erase("digest");
    return d;
}

}  // namespace

std::size_t Trace::append(std::string kind, std::vector<ActorId> actors, json data) {
    TraceEvent e;
    e.index = events_.size();
    e.kind = std::move(kind);
    e.actors = std::move(actors);
    e.data = std::move(data);
    events_.push_back(std::move(e));
    return events_.back().index;
}

std::vector<const TraceEvent*> Trace::of_kind(const std::string& kind) const {
    std::vector<const TraceEvent*> out;
    for (const auto& e : events_)
        if (e.kind == kind) out.push_back(&e);
    return out;
}

void Trace::write_jsonl(std::ostream& out) const {
    auto emit = [&](json r, std::string& prev) {
        prev = chain(prev, r);
        r["digest"] = prev;
        out << r.dump() << '\n';
    };
    std::string prev;
    emit(json{{"record", "header"},
              {"scenario", header_.scenario},
              {"seed", header_.seed},
              {"tool_version", header_.tool_version},
              {"config", header_.config}},
         prev);
    for (const auto& e : events_)
        emit(json{{"record", "event"}, {"index", e.index}, {"kind", e.kind}, {"actors", e.actors}, {"data", e.data}}, prev);
    if (complete_) emit(json{{"record", "end"}, {"events", events_.size()}}, prev);
}

std::string Trace::to_jsonl() const {
    std::ostringstream s;
    write_jsonl(s);
    return s.str();
}

Trace Trace::read_jsonl(std::istream& in) {
    Trace t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    bool ended = false;
    std::string prev;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (ended) throw CorruptTrace("line " + std::to_string(lineno) + ": record after end marker");
        json r;
        try {
            r = json::parse(line);
            std::string digest = take_digest(r, lineno);
            prev = chain(prev, r);
            if (digest != prev) throw CorruptTrace("line " + std::to_string(lineno) + ": digest mismatch (record altered)");
            std::string rec = r.at("record").get<std::string>();
            if (rec == "header") {
                if (have_header) throw CorruptTrace("duplicate header");
                t.header_.scenario = r.at("scenario").get<std::string>();
                t.header_.seed = r.at("seed").get<std::uint64_t>();
                t.header_.tool_version = r.at("tool_version").get<std::string>();
                t.header_.config = r.at("config");
                have_header = true;
            } else if (rec == "event") {
                if (!have_header) throw CorruptTrace("event before header");
                TraceEvent e;
                e.index = r.at("index").get<std::size_t>();
                if (e.index != t.events_.size())
                    throw CorruptTrace("line " + std::to_string(lineno) + ": expected event index " +
                                       std::to_string(t.events_.size()) + ", found " + std::to_string(e.index));
                e.kind = r.at("kind").get<std::string>();
                e.actors = r.at("actors").get<std::vector<ActorId>>();
                e.data = r.at("data");
                t.events_.push_back(std::move(e));
            } else if (rec == "end") {
                if (r.at("events").get<std::size_t>() != t.events_.size())
                    throw CorruptTrace("end marker announces " + r.at("events").dump() + " events, found " +
                                       std::to_string(t.events_.size()));
                t.complete_ = true;
                ended = true;
            } else {
                throw CorruptTrace("unknown record type '" + rec + "'");
            }
        } catch (const json::exception& ex) {
            throw CorruptTrace("line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    if (!have_header) throw CorruptTrace("missing header");
    return t;
}

}  // namespace evsec
