// SPDX-License-Identifier: Apache-2.0
#include <sstream>

#include "vendor/doctest.h"

#include "evsec/scenario.hpp"
#include "evsec/trace.hpp"
#include "support.hpp"

using namespace evsec;

namespace {

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::string join(const std::vector<std::string>& ls) {
    std::string out;
    for (const auto& l : ls) out += l + "\n";
    return out;
}

Trace parse(const std::string& s) {
    std::istringstream in(s);
    return Trace::read_jsonl(in);
}

std::string sample() {
    json doc = test::base_scenario();
    doc["steps"] = json::array({json{{"op", "authorize"}, {"credential", "cred1"}, {"cp", "cp1"}, {"mechanism", "asymmetric"}},
                                json{{"op", "cdr"}, {"cpo", "cpo1"}, {"emsp", "emsp1"}}});
    return test::run_doc(doc).trace.to_jsonl();
}

}  // namespace

TEST_CASE("trace round trip") {
    std::string text = sample();
    Trace t = parse(text);
    CHECK(t.complete());
    CHECK(t.to_jsonl() == text);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.at(i).index == i);
}

TEST_CASE("edited or deleted records are rejected") {
    auto ls = lines_of(sample());
    REQUIRE(ls.size() > 6);

    SUBCASE("deleted event") {
        auto cut = ls;
        cut.erase(cut.begin() + 3);
        CHECK_THROWS_AS(parse(join(cut)), CorruptTrace);
    }
    SUBCASE("edited payload with untouched index") {
        auto ed = ls;
        json rec = json::parse(ed[4]);
        rec["kind"] = rec["kind"].get<std::string>() + "x";
        ed[4] = rec.dump();
        CHECK_THROWS_AS(parse(join(ed)), CorruptTrace);
    }
    SUBCASE("edited header") {
        auto ed = ls;
        json rec = json::parse(ed[0]);
        rec["seed"] = 999;
        ed[0] = rec.dump();
        CHECK_THROWS_AS(parse(join(ed)), CorruptTrace);
    }
    SUBCASE("swapped events") {
        auto sw = ls;
        std::swap(sw[2], sw[3]);
        CHECK_THROWS_AS(parse(join(sw)), CorruptTrace);
    }
    SUBCASE("garbage line") {
        auto g = ls;
        g[2] = "{not json";
        CHECK_THROWS_AS(parse(join(g)), CorruptTrace);
    }
    SUBCASE("missing end marker") {
        auto trunc = ls;
        trunc.pop_back();
        Trace t = parse(join(trunc));
        CHECK_FALSE(t.complete());
        CHECK_THROWS_AS(verify_trace(t), IncompleteTrace);
    }
}

TEST_CASE("verify_trace reproduces the recorded verdicts") {
    json doc = test::base_scenario();
    doc["links"][1]["mode"] = "Plain";
    doc["links"][1]["client_auth"] = "static_token";
    doc["protection"] = {{"default", "NoProtection"}};
    doc["steps"] = json::array({json{{"op", "authorize"}, {"credential", "cred1"}, {"cp", "cp1"}, {"mechanism", "asymmetric"}},
                                json{{"op", "cdr"}, {"cpo", "cpo1"}, {"emsp", "emsp1"}}});
    RunResult r = test::run_doc(doc);
    Trace back = parse(r.trace.to_jsonl());
    CHECK(verify_trace(back) == r.verdicts);
}

TEST_CASE("unfinished traces are not analysed") {
    Trace t(TraceHeader{"x", 1});
    t.append("online", {"cp1"}, json{{"actor", "cp1"}, {"online", true}});
    Topology topo;
    CHECK_THROWS_AS(check_all(t, topo), IncompleteTrace);
}
