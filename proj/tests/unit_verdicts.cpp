// SPDX-License-Identifier: Apache-2.0
#include "vendor/doctest.h"

#include "evsec/scenario.hpp"
#include "support.hpp"

using namespace evsec;
using test::grade_of;
using test::verdict_of;

namespace {

RunResult run_builtin(const std::string& name) { return run_scenario(load_scenario(scenario_dir() / (name + ".json"))); }

const TraceEvent& ev(const RunResult& r, std::size_t i) { return r.trace.at(i); }

bool any_witness_of_kind(const RunResult& r, const Verdict& v, const std::string& kind) {
    for (auto w : v.witnesses)
        if (ev(r, w).kind == kind) return true;
    return false;
}

}  // namespace

TEST_CASE("cloned UID is charged to someone else") {
    auto r = run_builtin("weak_uid_cloning");
    const Verdict& v = verdict_of(r.verdicts, SrId::SR1a);
    CHECK(v.grade == Grade::Violated);
    REQUIRE_FALSE(v.witnesses.empty());
    bool attacker_grant = false;
    for (auto w : v.witnesses) {
        const auto& e = ev(r, w);
        if (e.kind == "auth.response" && e.data.value("granted", false) &&
            e.data.value("presenter", "").rfind("attacker:", 0) == 0)
            attacker_grant = true;
    }
    CHECK(attacker_grant);
}

TEST_CASE("asymmetric credentials survive card reading and offline charge points") {
    auto r = run_builtin("asymmetric_offline");
    CHECK(grade_of(r.verdicts, SrId::SR1a) == Grade::Holds);
    CHECK(grade_of(r.verdicts, SrId::SR1c) == Grade::Holds);
}

TEST_CASE("online-only authorization strands drivers offline") {
    auto r = run_builtin("online_offline");
    const Verdict& v = verdict_of(r.verdicts, SrId::SR1c);
    REQUIRE(v.grade == Grade::Violated);
    REQUIRE(v.witnesses.size() == 1);
    CHECK(ev(r, v.witnesses[0]).data.value("reason", "") == "offline");
}

TEST_CASE("extracted master key works for every UID") {
    auto r = run_builtin("symmetric_master_key");
    const Verdict& v = verdict_of(r.verdicts, SrId::SR1a);
    REQUIRE(v.grade == Grade::Violated);
    std::set<std::string> uids;
    for (auto w : v.witnesses)
        if (ev(r, w).kind == "auth.response") uids.insert(ev(r, w).data.value("uid", ""));
    CHECK(uids == std::set<std::string>{"04AABB", "04CCDD", "04EEFF"});
}

TEST_CASE("client authentication grades") {
    CHECK(grade_of(run_builtin("token_plain").verdicts, SrId::SR2b) == Grade::Violated);
    CHECK(grade_of(run_builtin("token_secured").verdicts, SrId::SR2b) == Grade::ConditionallyHolds);
    CHECK(grade_of(run_builtin("token_client_cert").verdicts, SrId::SR2b) == Grade::Holds);

    json doc = load_scenario(scenario_dir() / "token_secured.json").source;
    doc["links"][0]["secure_bootstrap"] = false;
    CHECK(grade_of(test::run_doc(doc).verdicts, SrId::SR2b) == Grade::Violated);
}

TEST_CASE("sniffed static token lets the attacker in") {
    auto r = run_builtin("token_plain");
    bool accepted = false;
    for (const auto* e : r.trace.of_kind("impersonation")) accepted = accepted || e->data.value("accepted", false);
    CHECK(accepted);
}

TEST_CASE("link security") {
    auto plain = run_builtin("token_plain");
    CHECK(grade_of(plain.verdicts, SrId::SR3) == Grade::Violated);
    CHECK(grade_of(plain.verdicts, SrId::SR2a) == Grade::Violated);
    auto bad_suite = run_builtin("unapproved_suite");
    const Verdict& v = verdict_of(bad_suite.verdicts, SrId::SR3);
    CHECK(v.grade == Grade::Violated);
    REQUIRE(v.witnesses.size() == 1);
    CHECK(ev(bad_suite, v.witnesses[0]).data.value("link", "") == "cpo1-emsp1");
    CHECK(grade_of(run_builtin("honest_secure").verdicts, SrId::SR3) == Grade::Holds);
}

TEST_CASE("tariff filtering") {
    auto none = run_builtin("tariff_filter_none");
    CHECK(grade_of(none.verdicts, SrId::SR4a) == Grade::Violated);
    CHECK(any_witness_of_kind(none, verdict_of(none.verdicts, SrId::SR4a), "attack"));
    auto sd = run_builtin("tariff_filter_sd");
    const Verdict& v = verdict_of(sd.verdicts, SrId::SR4a);
    CHECK(v.grade == Grade::Holds);
    CHECK(any_witness_of_kind(sd, v, "verify.fail"));
    CHECK(sd.trace.of_kind("rate.select").empty());
}

TEST_CASE("EV picks the cheapest visible rate") {
    auto r = run_builtin("honest_secure");
    auto sel = r.trace.of_kind("rate.select");
    REQUIRE(sel.size() == 1);
    CHECK(sel[0]->data.value("price_per_kwh", "") == "0.253");
    auto filtered = run_builtin("tariff_filter_none");
    auto f = filtered.trace.of_kind("rate.select");
    REQUIRE(f.size() == 1);
    CHECK(f[0]->data.value("price_per_kwh", "") == "0.449");
}

TEST_CASE("confidential prices") {
    auto sd = run_builtin("tariff_confidential");
    CHECK(grade_of(sd.verdicts, SrId::SR4b) == Grade::Holds);
    auto none = run_builtin("tariff_confidential_none");
    const Verdict& v = verdict_of(none.verdicts, SrId::SR4b);
    CHECK(v.grade == Grade::Violated);
    CHECK(v.explanation.find("cpo1") != std::string::npos);
}

TEST_CASE("billing records and falsification") {
    auto none = run_builtin("cdr_unsigned");
    CHECK(grade_of(none.verdicts, SrId::SR5) == Grade::Violated);
    auto sd = run_builtin("cdr_sd");
    CHECK(grade_of(sd.verdicts, SrId::SR5) == Grade::Holds);
    auto fals = sd.trace.of_kind("falsify");
    REQUIRE(fals.size() == 1);
    CHECK(fals[0]->data.value("detected", false));
}

TEST_CASE("clearing house tampering is caught") {
    auto r = run_builtin("cdr_clearing_house");
    CHECK(grade_of(r.verdicts, SrId::SR4a) == Grade::Holds);
    CHECK(r.trace.of_kind("store").empty());
    CHECK(r.trace.of_kind("quarantine").size() == 1);
}

TEST_CASE("firmware") {
    auto s = run_builtin("firmware_signed");
    CHECK(s.trace.of_kind("firmware.install").empty());
    CHECK(s.trace.of_kind("firmware.reject").size() == 1);
    auto u = run_builtin("firmware_unsigned");
    CHECK(u.trace.of_kind("firmware.install").size() == 1);
    CHECK(grade_of(u.verdicts, SrId::SR4a) == Grade::Violated);
}

TEST_CASE("nfc session start") {
    auto r = run_builtin("nfc_session");
    auto resp = r.trace.of_kind("auth.response");
    REQUIRE(resp.size() == 2);
    CHECK(resp[0]->data.value("granted", false));
    CHECK_FALSE(resp[1]->data.value("granted", true));
    CHECK(resp[1]->data.value("reason", "") == "replay");
    auto t = run_builtin("nfc_session_tampered");
    CHECK(t.trace.of_kind("energy.flow").empty());
    CHECK(grade_of(t.verdicts, SrId::SR4a) == Grade::Holds);
}

TEST_CASE("meter data signed by card and charge point") {
    auto r = run_builtin("meter_signing");
    CHECK(grade_of(r.verdicts, SrId::SR5) == Grade::Holds);
    auto stores = r.trace.of_kind("store");
    REQUIRE(stores.size() == 2);
    CHECK(stores[0]->data.value("producer", "") == "04AABB");
    CHECK(stores[1]->data.value("producer", "") == "cp1");
}

TEST_CASE("split trust anchors stop the handshake") {
    auto r = run_builtin("split_pki");
    REQUIRE(r.aborted.size() == 1);
    CHECK(r.aborted[0].find("root-a") != std::string::npos);
    CHECK(r.trace.of_kind("store").empty());
}

TEST_CASE("congestion") {
    auto honest = run_builtin("smart_charging_honest");
    auto ok = congestion_check(honest.trace);
    CHECK_FALSE(ok.breach);
    REQUIRE(ok.slots.size() == 3);
    for (const auto& s : ok.slots) CHECK(s.delivered_kw <= s.allotted_kw);

    auto attacked = run_builtin("smart_charging_attack");
    auto bad = congestion_check(attacked.trace);
    REQUIRE(bad.breach);
    REQUIRE_FALSE(bad.witnesses.empty());
    const auto& first = attacked.trace.at(bad.witnesses.front());
    CHECK(first.kind == "attack");
    CHECK(first.data.value("action", "") == "modify");
}

TEST_CASE("infeasible minimum allocation aborts the plan") {
    json doc = load_scenario(scenario_dir() / "smart_charging_honest.json").source;
    doc["steps"][0]["min_kw"] = "15.000";
    auto r = test::run_doc(doc);
    REQUIRE(r.aborted.size() == 1);
    CHECK(r.trace.of_kind("profile.deliver").empty());
    CHECK(congestion_check(r.trace).grade == Grade::NotExercised);
}

TEST_CASE("gdpr redaction per protection mode") {
    auto r = run_builtin("gdpr_redaction");
    auto records = stored_billing_documents(r.trace);
    REQUIRE(records.size() == 3);
    Topology topo = build_topology(load_scenario(scenario_dir() / "gdpr_redaction.json").topology, 33);
    auto res = redaction_gdpr_check(records, topo);
    REQUIRE(res.size() == 3);
    CHECK(res[0].mode == ProtectionMode::SelectiveDisclosure);
    CHECK(res[0].outcome == RedactionOutcome::Pass);
    CHECK(res[1].mode == ProtectionMode::WholeMessageSignature);
    CHECK(res[1].outcome == RedactionOutcome::Fail);
    CHECK(res[2].outcome == RedactionOutcome::VacuousFail);
}

TEST_CASE("format conversion of signed meter data") {
    auto r = run_builtin("format_conversion");
    auto conv = r.trace.of_kind("format.convert");
    REQUIRE(conv.size() == 2);
    CHECK(conv[0]->data.value("kind", "") == "lossy");
    CHECK(conv[0]->data.value("verify_before", false));
    CHECK_FALSE(conv[0]->data.value("verify_after", true));
    CHECK(conv[1]->data.value("kind", "") == "envelope_preserving");
    CHECK(conv[1]->data.value("verify_after", false));
}

TEST_CASE("minimum charge option is traced but never changes verdicts") {
    json doc = load_scenario(scenario_dir() / "online_offline.json").source;
    auto base = test::run_doc(doc);
    doc["options"] = {{"minimum_charge", true}};
    auto with = test::run_doc(doc);
    CHECK(with.trace.of_kind("minimum_charge").size() == 1);
    CHECK(base.trace.of_kind("minimum_charge").empty());
    for (SrId sr : kAllRequirements) CHECK(grade_of(with.verdicts, sr) == grade_of(base.verdicts, sr));
}

TEST_CASE("requirements without matching events are not exercised") {
    json doc = test::base_scenario();
    auto r = test::run_doc(doc);
    for (SrId sr : {SrId::SR1a, SrId::SR1b, SrId::SR1c, SrId::SR4b, SrId::SR5})
        CHECK(grade_of(r.verdicts, sr) == Grade::NotExercised);
}
