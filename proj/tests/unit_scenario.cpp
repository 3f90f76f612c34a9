// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <fstream>
#include <functional>

#include "vendor/doctest.h"

#include "evsec/scenario.hpp"
#include "support.hpp"

using namespace evsec;

namespace {

std::string config_error(const json& doc) {
    try {
        parse_scenario(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("config errors name the offending key") {
    json base = test::base_scenario();
    struct Case {
        const char* label;
        std::function<void(json&)> patch;
        const char* needle;
    };
    std::vector<Case> cases{
        {"unknown top-level key", [](json& d) { d["colour"] = "red"; }, "colour"},
        {"unknown actor key", [](json& d) { d["actors"][0]["colour"] = 1; }, "actors[0].colour"},
        {"bad role", [](json& d) { d["actors"][1]["role"] = "Toaster"; }, "actors[1].role"},
        {"wrong type", [](json& d) { d["seed"] = "seven"; }, "seed"},
        {"bad link mode", [](json& d) { d["links"][0]["mode"] = "Quantum"; }, "links[0].mode"},
        {"certificate without mutual auth",
         [](json& d) {
             d["links"][0]["mode"] = "ServerAuth";
             d["links"][0]["client_auth"] = "client_cert";
         },
         "links[0]"},
        {"unknown op", [](json& d) { d["steps"] = json::array({json{{"op", "teleport"}}}); }, "steps[0].op"},
        {"missing step arg", [](json& d) { d["steps"] = json::array({json{{"op", "authorize"}, {"cp", "cp1"}}}); },
         "credential"},
        {"bad decimal",
         [](json& d) {
             d["steps"] = json::array({json{{"op", "cdr"}, {"cpo", "cpo1"}, {"emsp", "emsp1"}, {"price", "cheap"}}});
         },
         "price"},
        {"bad protection", [](json& d) { d["protection"] = {{"default", "Vault"}}; }, "protection.default"},
        {"bad script action",
         [](json& d) {
             d["attackers"] = json::array(
                 {json{{"name", "x"}, {"kind", "network"}, {"target", "cp1-cpo1"}, {"script", {{{"type", "fly"}}}}}});
         },
         "attackers[0].script[0].type"},
    };
    for (const auto& c : cases) {
        CAPTURE(c.label);
        json d = base;
        c.patch(d);
        std::string msg = config_error(d);
        REQUIRE_FALSE(msg.empty());
        CHECK_MESSAGE(msg.find(c.needle) != std::string::npos, msg);
    }
}

TEST_CASE("topology errors") {
    json d = test::base_scenario();
    d["actors"].push_back(json{{"id", "cp1"}, {"role", "ChargePoint"}});
    CHECK_THROWS_AS(test::run_doc(d), TopologyError);
    json e = test::base_scenario();
    e["links"].push_back(json{{"client", "cp9"}, {"server", "cpo1"}});
    CHECK_THROWS_AS(test::run_doc(e), TopologyError);
}

TEST_CASE("links accept either endpoint naming") {
    json d = test::base_scenario();
    d["links"][0] = json{{"a", "cp1"}, {"b", "cpo1"}};
    auto cfg = parse_scenario(d);
    CHECK(cfg.topology.links[0].client == "cp1");
    CHECK(cfg.topology.links[0].server == "cpo1");
    CHECK(cfg.topology.links[0].client_auth == ClientAuthKind::ClientCertificate);
}

TEST_CASE("default confidentiality protects locations for operators") {
    json d = test::base_scenario();
    d.erase("confidentiality");
    auto cfg = parse_scenario(d);
    REQUIRE(cfg.confidentiality.count("location"));
    CHECK(cfg.confidentiality.at("location") == std::vector<ActorId>{"cpo1"});
}

TEST_CASE("built-in scenarios are valid and fast") {
    auto files = builtin_scenarios();
    REQUIRE(files.size() >= 20);
    for (const auto& f : files) {
        CAPTURE(f.filename().string());
        auto cfg = load_scenario(f);
        CHECK_FALSE(cfg.name.empty());
        CHECK_FALSE(cfg.description.empty());
        auto t0 = std::chrono::steady_clock::now();
        auto r = run_scenario(cfg);
        double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        CHECK(s < 1.0);
        CHECK(r.trace.complete());
        CHECK(r.verdicts.size() == 9);
    }
}

TEST_CASE("same seed, same trace and verdicts") {
    for (const auto& f : builtin_scenarios()) {
        CAPTURE(f.filename().string());
        auto cfg = load_scenario(f);
        auto a = run_scenario(cfg);
        auto b = run_scenario(cfg);
        CHECK(a.trace.to_jsonl() == b.trace.to_jsonl());
        CHECK(a.verdicts == b.verdicts);
    }
}

TEST_CASE("seed override changes key material, not verdicts") {
    auto cfg = load_scenario(scenario_dir() / "weak_uid_cloning.json");
    auto a = run_scenario(cfg, 1);
    auto b = run_scenario(cfg, 2);
    CHECK(a.trace.header().seed == 1);
    CHECK(a.trace.to_jsonl() != b.trace.to_jsonl());
    for (SrId sr : kAllRequirements) CHECK(test::grade_of(a.verdicts, sr) == test::grade_of(b.verdicts, sr));
}

TEST_CASE("network attackers cannot rewrite secured traffic") {
    json d = test::base_scenario();
    d["protection"] = {{"default", "NoProtection"}};
    d["attackers"] = json::array({json{{"name", "m"},
                                       {"kind", "network"},
                                       {"target", "cpo1-emsp1"},
                                       {"script",
                                        {{{"type", "modify"},
                                          {"match", {{"doc_type", "ChargeDetailRecord"}}},
                                          {"mutation", {{"op", "set_field"}, {"field", "cost"}, {"value", "9.000"}}}}}}}});
    d["steps"] = json::array({json{{"op", "authorize"}, {"credential", "cred1"}, {"cp", "cp1"}, {"mechanism", "asymmetric"}},
                              json{{"op", "cdr"}, {"cpo", "cpo1"}, {"emsp", "emsp1"}}});
    auto r = test::run_doc(d);
    auto stores = r.trace.of_kind("store");
    REQUIRE(stores.size() == 1);
    CHECK(test::grade_of(r.verdicts, SrId::SR4a) != Grade::Violated);
}

TEST_CASE("invalid attacker targets") {
    json d = test::base_scenario();
    d["attackers"] = json::array({json{{"name", "x"}, {"kind", "network"}, {"target", "nowhere"}, {"script", json::array()}}});
    CHECK_THROWS_AS(test::run_doc(d), InvalidTarget);
}
