// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "evsec/scenario.hpp"
#include "evsec/verdict.hpp"

namespace evsec::test {

using nlohmann::json;

inline const Verdict& verdict_of(const std::vector<Verdict>& vs, SrId sr) {
    for (const auto& v : vs)
        if (v.sr == sr) return v;
    throw std::out_of_range("no verdict");
}

inline Grade grade_of(const std::vector<Verdict>& vs, SrId sr) { return verdict_of(vs, sr).grade; }

inline RunResult run_doc(const json& doc, std::optional<std::uint64_t> seed = std::nullopt) {
    return run_scenario(parse_scenario(doc), seed);
}

/// Small honest topology: EV, charge point, CPO, eMSP, all mutually
/// authenticated. Callers patch what they need.
inline json base_scenario() {
    return json{
        {"name", "base"},
        {"seed", 5},
        {"actors",
         {{{"id", "ev1"}, {"role", "EV"}},
          {{"id", "cp1"}, {"role", "ChargePoint"}},
          {{"id", "cpo1"}, {"role", "CPO"}},
          {{"id", "emsp1"}, {"role", "EMSP"}}}},
        {"credentials", {{{"id", "cred1"}, {"holder", "ev1"}, {"uid", "04AABB"}}}},
        {"contracts", {{{"id", "C-1"}, {"emsp", "emsp1"}, {"credential", "04AABB"}}}},
        {"links",
         {{{"client", "cp1"}, {"server", "cpo1"}},
          {{"client", "cpo1"}, {"server", "emsp1"}},
          {{"client", "ev1"}, {"server", "cp1"}}}},
        {"confidentiality", json::object()},
        {"steps", json::array()},
    };
}

// ---------------------------------------------------------------------------
// Matrix oracle. Grades follow from the threat model alone:
//  - anyone who learns a bare UID can clone it; master keys open every card;
//  - content changes need an insider or a plain link;
//  - only signatures stop content changes, only sealing stops readers.
// ---------------------------------------------------------------------------

struct OracleRow {
    std::string mechanism, link_mode, client_auth, protection, attacker;
};

inline std::vector<OracleRow> oracle_rows() {
    std::vector<OracleRow> rows;
    const std::array<std::pair<const char*, const char*>, 4> links{{{"Plain", "static_token"},
                                                                    {"ServerAuth", "static_token"},
                                                                    {"MutualAuth", "static_token"},
                                                                    {"MutualAuth", "client_cert"}}};
    for (const char* m : {"weak_uid", "symmetric", "asymmetric", "online"})
        for (const auto& [mode, auth] : links)
            for (const char* p : {"NoProtection", "WholeMessageSignature", "SelectiveDisclosure"})
                for (const char* a : {"none", "physical", "endpoint-cpo", "network"}) rows.push_back({m, mode, auth, p, a});
    return rows;
}

inline std::array<const char*, 9> oracle_grades(const OracleRow& r) {
    constexpr const char* V = "Violated";
    constexpr const char* H = "Holds";
    constexpr const char* C = "ConditionallyHolds";
    constexpr const char* N = "NotExercised";
    const bool plain = r.link_mode == "Plain";
    const bool unprotected = r.protection == "NoProtection";
    const bool tamper = r.attacker == "endpoint-cpo" || (r.attacker == "network" && plain);
    const bool forged_grant = r.mechanism == "online" && unprotected && tamper;

    const char* sr1a = H;
    if (r.mechanism == "weak_uid" && r.attacker != "none") sr1a = V;
    if (r.mechanism == "symmetric" && r.attacker == "physical") sr1a = V;
    if (forged_grant) sr1a = V;

    const char* sr5 = unprotected ? V : (r.attacker == "network" && plain ? N : H);
    return {sr1a,
            forged_grant ? V : H,
            r.mechanism == "online" ? V : H,
            plain ? V : H,
            plain ? V : (r.link_mode == "ServerAuth" ? C : H),
            plain ? V : H,
            unprotected && tamper ? V : H,
            r.protection == "SelectiveDisclosure" ? H : V,
            sr5};
}

inline std::string oracle_table() {
    std::ostringstream out;
    out << "mechanism\tlink_mode\tclient_auth\tprotection\tattacker\tSR1a\tSR1b\tSR1c\tSR2a\tSR2b\tSR3\tSR4a\tSR4b\tSR5\n";
    for (const auto& r : oracle_rows()) {
        out << r.mechanism << '\t' << r.link_mode << '\t' << r.client_auth << '\t' << r.protection << '\t' << r.attacker;
        for (const char* g : oracle_grades(r)) out << '\t' << g;
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Random attacker scripts against a fully secured deployment
// ---------------------------------------------------------------------------

inline json secured_scenario() {
    return json{
        {"name", "secured-random"},
        {"seed", 1},
        {"actors",
         {{{"id", "ev1"}, {"role", "EV"}},
          {{"id", "cp1"}, {"role", "ChargePoint"}},
          {{"id", "cpo1"}, {"role", "CPO"}},
          {{"id", "ch1"}, {"role", "ClearingHouse"}},
          {{"id", "emsp1"}, {"role", "EMSP"}}}},
        {"credentials", {{{"id", "cred1"}, {"holder", "ev1"}, {"uid", "04AABB"}}}},
        {"contracts", {{{"id", "C-1"}, {"emsp", "emsp1"}, {"credential", "04AABB"}}}},
        {"links",
         {{{"client", "cp1"}, {"server", "cpo1"}},
          {{"client", "ev1"}, {"server", "cp1"}},
          {{"client", "cpo1"}, {"server", "ch1"}},
          {{"client", "ch1"}, {"server", "emsp1"}},
          {{"client", "cpo1"}, {"server", "emsp1"}}}},
        {"protection", {{"default", "SelectiveDisclosure"}}},
        {"confidentiality", {{"price_per_kwh", {"ev1"}}, {"location", {"cpo1"}}}},
        {"steps",
         {{{"op", "authorize"}, {"credential", "cred1"}, {"cp", "cp1"}, {"mechanism", "asymmetric"}},
          {{"op", "attacker_authorize"}, {"cp", "cp1"}, {"mechanism", "asymmetric"}, {"credentials", {"cred1"}}},
          {{"op", "tariff"}, {"emsp", "emsp1"}, {"cpo", "cpo1"}, {"cp", "cp1"}, {"ev", "ev1"}},
          {{"op", "cdr"}, {"cpo", "cpo1"}, {"emsp", "emsp1"}},
          {{"op", "meter_reading"}, {"signer", "ev"}, {"ev", "ev1"}, {"cp", "cp1"}, {"cpo", "cpo1"}, {"value", "7.500"}},
          {{"op", "impersonate"}, {"link", "cpo1-emsp1"}},
          {{"op", "falsify_stored"}, {"actor", "emsp1"}, {"field", "cost"}, {"value", "0.001"}}}},
    };
}

/// Random but capability-respecting scripts: network attackers only read,
/// drop or replay on secured links; insiders may rewrite anything they relay.
class ScriptGenerator {
public:
    explicit ScriptGenerator(std::uint64_t seed) : rng_(seed) {}

    json attackers() {
        json out = json::array();
        int n = 1 + pick(3);
        for (int i = 0; i < n; ++i) out.push_back(attacker(i));
        return out;
    }

private:
    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
    template <typename T>
    const T& choose(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(pick(static_cast<int>(v.size())))];
    }

    json matcher(const std::string& insider = {}) {
        static const std::vector<std::string> types{"",          "AuthorizationRequest", "AuthorizationResponse",
                                                    "TariffTable", "SelectedRate",       "ChargeDetailRecord",
                                                    "MeterReading"};
        static const std::vector<std::string> actors{"", "ev1", "cp1", "cpo1", "ch1", "emsp1"};
        json m = json::object();
        if (auto t = choose(types); !t.empty()) m["doc_type"] = t;
        if (!insider.empty() && pick(2) == 0)
            m["from"] = insider;
        else if (auto f = choose(actors); !f.empty())
            m["from"] = f;
        return m;
    }

    json mutation() {
        static const std::vector<std::string> fields{"cost",  "energy", "location", "contract_id", "granted",
                                                     "value", "entries.0.price_per_kwh", "entries.1.price_per_kwh",
                                                     "price_per_kwh"};
        static const std::vector<std::string> values{"0.000", "99.000", "1.250", "true", "site/elsewhere"};
        switch (pick(5)) {
            case 0:
                return {{"op", "set_field"}, {"field", choose(fields)}, {"value", choose(values)}};
            case 1:
                return {{"op", "remove_field"}, {"field", choose(fields)}};
            case 2:
                return {{"op", "tariff_filter"}};
            case 3:
                return {{"op", "set_digest"}, {"value", "implant"}};
            default:
                return {{"op", "grant"}};
        }
    }

    json action(const std::string& insider) {
        std::vector<std::string> kinds{"eavesdrop", "drop", "replay"};
        if (!insider.empty()) kinds.insert(kinds.end(), {"modify", "modify", "modify", "inject"});
        json a{{"type", choose(kinds)}};
        if (a["type"] != "eavesdrop" && a["type"] != "replay") a["match"] = matcher(insider);
        if (a["type"] == "modify") a["mutation"] = mutation();
        if (a["type"] == "inject") {
            a["doc_type"] = a["match"].value("doc_type", "ChargeDetailRecord");
            a["fields"] = json{{"cost", "0.000"}, {"granted", "true"}, {"price_per_kwh", "0.001"}};
        }
        if (pick(4) == 0) a["repeat"] = true;
        return a;
    }

    json attacker(int i) {
        static const std::vector<std::string> links{"cp1-cpo1", "cpo1-ch1", "ch1-emsp1", "cpo1-emsp1", "air:cp1"};
        static const std::vector<std::string> insiders{"cpo1", "ch1", "cp1", "emsp1"};
        json a{{"name", "r" + std::to_string(i)}};
        json script = json::array();
        switch (pick(4)) {
            case 0:
                a["kind"] = "network";
                a["target"] = choose(links);
                for (int k = 1 + pick(4); k > 0; --k) script.push_back(action({}));
                break;
            case 1:
            case 2:
                a["kind"] = "endpoint";
                a["target"] = choose(insiders);
                for (int k = 1 + pick(4); k > 0; --k) script.push_back(action(a["target"]));
                break;
            default:
                a["kind"] = "physical";
                a["target"] = "cred1";
                script.push_back(json{{"type", "read_card_uid"}, {"credential", "cred1"}});
                break;
        }
        a["script"] = script;
        return a;
    }

    std::mt19937_64 rng_;
};

}  // namespace evsec::test
