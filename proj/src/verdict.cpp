// SPDX-License-Identifier: Apache-2.0
#include "evsec/verdict.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "evsec/adversary.hpp"
#include "evsec/channel.hpp"
#include "evsec/codec.hpp"
#include "evsec/knowledge.hpp"

namespace evsec {

namespace {

constexpr std::array<std::string_view, 9> kSrNames{"SR1a", "SR1b", "SR1c", "SR2a", "SR2b", "SR3", "SR4a", "SR4b", "SR5"};
constexpr std::array<std::string_view, 4> kGradeNames{"Holds", "ConditionallyHolds", "Violated", "NotExercised"};

std::string str(const json& d, const char* key) {
    auto it = d.find(key);
    return it != d.end() && it->is_string() ? it->get<std::string>() : std::string();
}

bool flag(const json& d, const char* key) {
    auto it = d.find(key);
    return it != d.end() && it->is_boolean() && it->get<bool>();
}

bool is_attacker(const std::string& principal) { return principal.rfind("attacker:", 0) == 0; }

bool is_local(const Topology& topo, const std::string& link_id) {
    const Link* l = topo.find_link(link_id);
    return l && l->config.local;
}

std::string anchor_for(const Topology& topo, const ActorId& holder) {
    const Actor* a = topo.find_actor(holder);
    return a ? a->anchor : topo.default_anchor;
}

Verdict make(SrId sr, Grade g, std::vector<std::size_t> witnesses, std::string explanation) {
    std::sort(witnesses.begin(), witnesses.end());
    witnesses.erase(std::unique(witnesses.begin(), witnesses.end()), witnesses.end());
    return Verdict{sr, g, std::move(witnesses), std::move(explanation)};
}

/// Actors taken over by an attacker, per attacker name.
std::map<std::string, std::set<ActorId>> controlled_actors(const Trace& trace) {
    std::map<std::string, std::set<ActorId>> out;
    for (const auto* e : trace.of_kind("compromise")) out[str(e->data, "attacker")].insert(str(e->data, "actor"));
    return out;
}

std::set<ActorId> all_controlled(const Trace& trace) {
    std::set<ActorId> out;
    for (const auto& [name, actors] : controlled_actors(trace)) out.insert(actors.begin(), actors.end());
    return out;
}

bool has_valid_contract(const Topology& topo, const std::string& uid) {
    return std::any_of(topo.contracts.begin(), topo.contracts.end(),
                       [&](const auto& kv) { return kv.second.driver_credential == uid && kv.second.valid; });
}

// ---------------------------------------------------------------------------

Verdict sr1a(const Trace& trace, const Topology& topo) {
    auto responses = trace.of_kind("auth.response");
    if (responses.empty()) return make(SrId::SR1a, Grade::NotExercised, {}, "no authorization attempts");
    std::vector<std::size_t> bad;
    std::string why;
    for (const auto* e : responses) {
        if (!flag(e->data, "granted")) continue;
        std::string uid = str(e->data, "uid");
        if (uid.empty()) continue;
        std::string presenter = str(e->data, "presenter");
        const Credential* c = topo.credential_by_uid(uid);
        if (c && c->holder == presenter) continue;
        bad.push_back(e->index);
        if (why.empty())
            why = "'" + presenter + "' was granted charging as " + uid +
                  (c ? " without holding the credential" : ", which was never issued");
    }
    if (!bad.empty()) return make(SrId::SR1a, Grade::Violated, bad, why);
    return make(SrId::SR1a, Grade::Holds, {}, "every grant went to the credential holder");
}

Verdict sr1b(const Trace& trace, const Topology& topo) {
    auto flows = trace.of_kind("energy.flow");
    if (flows.empty()) return make(SrId::SR1b, Grade::NotExercised, {}, "no energy was delivered");
    std::vector<std::size_t> bad;
    std::string why;
    for (const auto* f : flows) {
        std::string rid = str(f->data, "request_id");
        bool response = false;
        bool authorized = false;
        for (const auto& e : trace.events()) {
            if (e.index >= f->index) break;
            if (str(e.data, "request_id") != rid || !flag(e.data, "granted")) continue;
            if (e.kind == "auth.response") response = true;
            if (e.kind == "auth.decision") {
                auto it = topo.contracts.find(str(e.data, "contract_id"));
                if (it != topo.contracts.end() && it->second.valid) authorized = true;
            }
        }
        if (response && authorized) continue;
        bad.push_back(f->index);
        if (why.empty())
            why = "energy for " + rid + (response ? " has no grant tied to a valid contract" : " was never granted");
    }
    if (!bad.empty()) return make(SrId::SR1b, Grade::Violated, bad, why);
    return make(SrId::SR1b, Grade::Holds, {}, "every energy flow follows a contract-backed grant");
}

Verdict sr1c(const Trace& trace, const Topology& topo) {
    std::vector<std::size_t> offline, bad;
    std::string why;
    for (const auto* e : trace.of_kind("auth.response")) {
        if (!flag(e->data, "offline")) continue;
        offline.push_back(e->index);
        if (flag(e->data, "granted") || str(e->data, "reason") != "offline") continue;
        std::string uid = str(e->data, "uid");
        const Credential* c = topo.credential_by_uid(uid);
        if (!c || c->holder != str(e->data, "presenter") || !has_valid_contract(topo, uid)) continue;
        bad.push_back(e->index);
        if (why.empty()) why = "holder of " + uid + " was denied at '" + str(e->data, "cp") + "' because it was offline";
    }
    if (offline.empty()) return make(SrId::SR1c, Grade::NotExercised, {}, "no offline authorization");
    if (!bad.empty()) return make(SrId::SR1c, Grade::Violated, bad, why);
    return make(SrId::SR1c, Grade::Holds, offline, "offline authorizations were decided on their merits");
}

Verdict sr2a(const Trace& trace, const Topology& topo) {
    bool any = false;
    std::vector<std::size_t> bad;
    std::string why;
    for (const auto* e : trace.of_kind("deliver")) {
        std::string link = str(e->data, "link");
        if (is_local(topo, link)) continue;
        any = true;
        if (flag(e->data, "server_authenticated")) continue;
        bad.push_back(e->index);
        if (why.empty()) why = "'" + str(e->data, "from") + "' exchanged data on '" + link + "' without authenticating the server";
    }
    if (!any) return make(SrId::SR2a, Grade::NotExercised, {}, "no application exchanges");
    if (!bad.empty()) return make(SrId::SR2a, Grade::Violated, bad, why);
    return make(SrId::SR2a, Grade::Holds, {}, "every exchange ran over a server-authenticated session");
}

Verdict sr2b(const Trace& trace, const Topology& topo) {
    std::vector<std::size_t> bad;
    std::string why;
    auto fail = [&](std::size_t i, const std::string& w) {
        bad.push_back(i);
        if (why.empty()) why = w;
    };
    bool exercised = false;
    bool tokens_only_conditional = false;
    std::set<std::string> unauthenticated_links;

    for (const auto& e : trace.events()) {
        const json& d = e.data;
        if (e.kind == "client_auth") {
            std::string link = str(d, "link");
            if (is_local(topo, link)) continue;
            exercised = true;
            bool accepted = flag(d, "accepted");
            std::string mode = str(d, "mode");
            if (accepted && is_attacker(str(d, "presenter")))
                fail(e.index, "attacker token accepted on '" + link + "'");
            else if (mode == to_string(LinkMode::Plain))
                fail(e.index, "static token crossed plain link '" + link + "'");
            else if (!flag(d, "secure_bootstrap"))
                fail(e.index, "static token on '" + link + "' was distributed insecurely");
            else if (mode != to_string(LinkMode::MutualAuth))
                tokens_only_conditional = true;
        } else if (e.kind == "impersonation") {
            if (is_local(topo, str(d, "link"))) continue;
            exercised = true;
            if (flag(d, "accepted")) fail(e.index, "attacker posed as '" + str(d, "client") + "' on '" + str(d, "link") + "'");
        } else if (e.kind == "handshake") {
            if (is_local(topo, str(d, "link")) || !flag(d, "ok")) continue;
            if (d.contains("authenticated_client") && d["authenticated_client"].is_string()) exercised = true;
        } else if (e.kind == "deliver") {
            std::string link_id = str(d, "link");
            const Link* l = topo.find_link(link_id);
            if (!l || l->config.local) continue;
            exercised = true;
            if (l->config.client_auth == ClientAuthKind::None && l->config.mode != LinkMode::MutualAuth &&
                unauthenticated_links.insert(link_id).second)
                fail(e.index, "client of '" + link_id + "' is never authenticated");
        }
    }
    if (!bad.empty()) return make(SrId::SR2b, Grade::Violated, bad, why);
    if (!exercised) return make(SrId::SR2b, Grade::NotExercised, {}, "no client authentication");
    if (tokens_only_conditional)
        return make(SrId::SR2b, Grade::ConditionallyHolds, {},
                    "static tokens only over secured links after secure distribution");
    return make(SrId::SR2b, Grade::Holds, {}, "clients authenticated by certificate");
}

Verdict sr3(const Trace& trace, const Topology&) {
    bool any = false;
    std::vector<std::size_t> bad;
    std::string why;
    for (const auto* e : trace.of_kind("link.config")) {
        if (flag(e->data, "local")) continue;
        any = true;
        bool plain = str(e->data, "mode") == to_string(LinkMode::Plain);
        if (!plain && flag(e->data, "approved")) continue;
        bad.push_back(e->index);
        if (why.empty())
            why = "link '" + str(e->data, "link") + "' " +
                  (plain ? std::string("is plain") : "uses unapproved suite " + str(e->data, "cipher_suite"));
    }
    if (!any) return make(SrId::SR3, Grade::NotExercised, {}, "no links");
    if (!bad.empty()) return make(SrId::SR3, Grade::Violated, bad, why);
    return make(SrId::SR3, Grade::Holds, {}, "every link uses TLS with an approved suite");
}

Verdict sr4a(const Trace& trace, const Topology&) {
    std::map<std::string, FieldList> originals;
    std::map<std::string, std::vector<std::size_t>> attacks_on;
    std::set<ActorId> controlled = all_controlled(trace);
    std::vector<std::size_t> bad, detected;
    std::string why;
    bool exercised = false;

    for (const auto& e : trace.events()) {
        const json& d = e.data;
        if (e.kind == "originate") {
            originals[str(d, "doc_id")] = fields_from_json(d.at("fields"));
        } else if (e.kind == "attack") {
            std::string action = str(d, "action");
            if (action == "modify" || action == "inject") {
                attacks_on[str(d, "doc_id")].push_back(e.index);
                exercised = true;
            }
        } else if (e.kind == "verify.fail") {
            if (attacks_on.count(str(d, "doc_id"))) detected.push_back(e.index);
        } else if (e.kind == "accept" && flag(d, "final")) {
            std::string actor = str(d, "actor");
            if (controlled.count(actor) || is_attacker(actor)) continue;
            exercised = true;
            std::string doc_id = str(d, "doc_id");
            FieldList got = fields_from_json(d.at("fields"));
            std::set<std::string> unreadable;
            for (const auto& u : d.at("unreadable")) unreadable.insert(u.get<std::string>());

            auto it = originals.find(doc_id);
            std::string diff;
            if (it == originals.end()) {
                diff = "never originated";
            } else {
                const FieldList& orig = it->second;
                std::set<std::string> names;
                for (const auto& f : orig) names.insert(f.name);
                for (const auto& f : got) {
                    auto o = std::find_if(orig.begin(), orig.end(), [&](const Field& x) { return x.name == f.name; });
                    if (o == orig.end()) {
                        diff = "added field " + f.name;
                        break;
                    }
                    if (!(o->value == f.value)) {
                        diff = "changed field " + f.name;
                        break;
                    }
                }
                if (diff.empty())
                    for (const auto& f : orig)
                        if (!unreadable.count(f.name) &&
                            std::none_of(got.begin(), got.end(), [&](const Field& x) { return x.name == f.name; })) {
                            diff = "removed field " + f.name;
                            break;
                        }
                if (diff.empty())
                    for (const auto& u : unreadable)
                        if (!names.count(u)) {
                            diff = "added field " + u;
                            break;
                        }
            }
            if (diff.empty()) continue;
            auto a = attacks_on.find(doc_id);
            if (a != attacks_on.end()) bad.insert(bad.end(), a->second.begin(), a->second.end());
            bad.push_back(e.index);
            if (why.empty()) why = "'" + actor + "' accepted " + doc_id + " with " + diff;
        }
    }
    if (!bad.empty()) return make(SrId::SR4a, Grade::Violated, bad, why);
    if (!exercised) return make(SrId::SR4a, Grade::NotExercised, {}, "no end-to-end deliveries");
    if (!detected.empty())
        return make(SrId::SR4a, Grade::Holds, detected, "every tampering attempt was detected");
    return make(SrId::SR4a, Grade::Holds, {}, "accepted payloads match their originals");
}

struct ConfidentialValue {
    std::size_t event = 0;
    std::string field;
    Term value;
    ActorId producer;
    std::set<ActorId> readers;
};

Verdict sr4b(const Trace& trace, const Topology& topo) {
    std::vector<ConfidentialValue> values;
    for (const auto* e : trace.of_kind("confidential")) {
        ConfidentialValue v{e->index, str(e->data, "field"), term_from_json(e->data.at("value")),
                            str(e->data, "producer"), {}};
        for (const auto& r : e->data.at("recipients")) v.readers.insert(r.get<std::string>());
        values.push_back(std::move(v));
    }
    if (values.empty()) return make(SrId::SR4b, Grade::NotExercised, {}, "no confidential fields");

    auto controlled = controlled_actors(trace);
    std::map<std::string, Knowledge> attackers;
    std::map<ActorId, Knowledge> intermediaries;
    std::vector<std::size_t> bad;
    std::string why;
    std::set<std::size_t> leaked;

    auto probe = [&](const Knowledge& k, const std::string& who, auto&& entitled, std::size_t at) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (leaked.count(i) || entitled(values[i])) continue;
            if (!k.can_derive(values[i].value)) continue;
            leaked.insert(i);
            bad.push_back(at);
            if (why.empty()) why = who + " can read " + values[i].field;
        }
    };

    for (const auto& e : trace.events()) {
        if (e.kind == "learn") {
            std::string name = str(e.data, "attacker");
            Knowledge& k = attackers[name];
            k.add_all(terms_from_json(e.data.at("terms")));
            const auto& mine = controlled[name];
            probe(k, "attacker '" + name + "'",
                  [&](const ConfidentialValue& v) {
                      return mine.count(v.producer) ||
                             std::any_of(v.readers.begin(), v.readers.end(), [&](const ActorId& r) { return mine.count(r); });
                  },
                  e.index);
        } else if (e.kind == "deliver") {
            ActorId to = str(e.data, "to");
            if (is_attacker(to) || !topo.find_actor(to)) continue;
            auto [it, fresh] = intermediaries.try_emplace(to);
            if (fresh) it->second.add_all(actor_secrets(topo.actor(to), topo));
            it->second.add_all(message_terms(message_from_json(e.data.at("message"))));
            probe(it->second, "'" + to + "'",
                  [&](const ConfidentialValue& v) { return v.producer == to || v.readers.count(to); }, e.index);
        }
    }
    if (!bad.empty()) return make(SrId::SR4b, Grade::Violated, bad, why);
    return make(SrId::SR4b, Grade::Holds, {}, "confidential fields stayed with their recipients");
}

Verdict sr5(const Trace& trace, const Topology& topo) {
    std::vector<std::size_t> bad;
    std::string why;
    auto records = stored_billing_documents(trace);
    for (const auto& r : records) {
        const auto& ev = trace.at(r.event);
        OriginResult o = prove_origin(r.doc, str(ev.data, "producer"), topo.pki, anchor_for(topo, r.holder));
        if (o.status == OriginStatus::Proof) continue;
        bad.push_back(r.event);
        if (why.empty()) why = r.doc.header.doc_id + " at '" + r.holder + "': " + std::string(to_string(o.status));
    }
    auto falsified = trace.of_kind("falsify");
    for (const auto* e : falsified) {
        if (flag(e->data, "detected")) continue;
        bad.push_back(e->index);
        if (why.empty()) why = "undetectable falsification of " + str(e->data, "field") + " in " + str(e->data, "doc_id");
    }
    if (records.empty() && falsified.empty()) return make(SrId::SR5, Grade::NotExercised, {}, "no stored billing records");
    if (!bad.empty()) return make(SrId::SR5, Grade::Violated, bad, why);
    return make(SrId::SR5, Grade::Holds, {}, "stored billing records prove their origin");
}

}  // namespace

std::string_view to_string(SrId sr) { return kSrNames[static_cast<std::size_t>(sr)]; }

std::optional<SrId> sr_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kSrNames.size(); ++i)
        if (kSrNames[i] == s) return static_cast<SrId>(i);
    return std::nullopt;
}

std::string_view to_string(Grade g) { return kGradeNames[static_cast<std::size_t>(g)]; }

std::optional<Grade> grade_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kGradeNames.size(); ++i)
        if (kGradeNames[i] == s) return static_cast<Grade>(i);
    return std::nullopt;
}

Verdict check(SrId sr, const Trace& trace, const Topology& topology) {
    if (!trace.complete()) throw IncompleteTrace("trace has no end marker");
    switch (sr) {
        case SrId::SR1a: return sr1a(trace, topology);
        case SrId::SR1b: return sr1b(trace, topology);
        case SrId::SR1c: return sr1c(trace, topology);
        case SrId::SR2a: return sr2a(trace, topology);
        case SrId::SR2b: return sr2b(trace, topology);
        case SrId::SR3: return sr3(trace, topology);
        case SrId::SR4a: return sr4a(trace, topology);
        case SrId::SR4b: return sr4b(trace, topology);
        case SrId::SR5: return sr5(trace, topology);
    }
    return {};
}

std::vector<Verdict> check_all(const Trace& trace, const Topology& topology) {
    std::vector<Verdict> out;
    for (SrId sr : kAllRequirements) out.push_back(check(sr, trace, topology));
    return out;
}

bool any_violated(const std::vector<Verdict>& verdicts) {
    return std::any_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.grade == Grade::Violated; });
}

json to_json(const Verdict& v) {
    return json{{"sr", std::string(to_string(v.sr))},
                {"grade", std::string(to_string(v.grade))},
                {"witnesses", v.witnesses},
                {"explanation", v.explanation}};
}

json to_json(const std::vector<Verdict>& vs) {
    json out = json::array();
    for (const auto& v : vs) out.push_back(to_json(v));
    return out;
}

// ---------------------------------------------------------------------------
// Congestion
// ---------------------------------------------------------------------------

CongestionReport congestion_check(const Trace& trace, const CapacityForecast& ground_truth) {
    CongestionReport r;
    std::map<std::int64_t, Decimal> sums;
    std::vector<std::size_t> deliveries;
    for (const auto* e : trace.of_kind("profile.deliver")) {
        deliveries.push_back(e->index);
        for (const auto& s : e->data.at("slots"))
            sums[s.at("slot_start").get<std::int64_t>()] =
                sums[s.at("slot_start").get<std::int64_t>()] + Decimal::parse(s.at("limit_kw").get<std::string>());
    }
    if (deliveries.empty()) {
        r.explanation = "no charge profiles delivered";
        return r;
    }

    std::map<std::int64_t, Decimal> allotted;
    for (const auto& s : ground_truth.slots) allotted[s.slot_start] = s.allotted_kw;
    std::string why;
    for (const auto& [start, sum] : sums) {
        auto it = allotted.find(start);
        Decimal cap = it == allotted.end() ? Decimal{} : it->second;
        r.slots.push_back({start, cap, sum});
        if (sum > cap) {
            r.breach = true;
            if (why.empty()) why = "slot " + std::to_string(start) + ": " + sum.str() + " kW planned, " + cap.str() + " kW available";
        }
    }
    if (!r.breach) {
        r.grade = Grade::Holds;
        r.explanation = "every slot stays within its allotment";
        return r;
    }
    r.grade = Grade::Violated;
    r.explanation = why;
    for (const auto* e : trace.of_kind("attack"))
        if (str(e->data, "doc_type") == "CapacityForecast") r.witnesses.push_back(e->index);
    r.witnesses.insert(r.witnesses.end(), deliveries.begin(), deliveries.end());
    return r;
}

CongestionReport congestion_check(const Trace& trace) {
    auto truths = trace.of_kind("forecast.truth");
    CapacityForecast truth;
    if (!truths.empty())
        for (const auto& s : truths.back()->data.at("slots"))
            truth.slots.push_back({s.at("slot_start").get<std::int64_t>(), Decimal::parse(s.at("allotted_kw").get<std::string>()),
                                   Decimal::parse(s.at("spare_kw").get<std::string>())});
    return congestion_check(trace, truth);
}

// ---------------------------------------------------------------------------
// Redaction
// ---------------------------------------------------------------------------

std::string_view to_string(RedactionOutcome o) {
    switch (o) {
        case RedactionOutcome::Pass: return "pass";
        case RedactionOutcome::Fail: return "fail";
        case RedactionOutcome::VacuousFail: return "vacuous-fail";
    }
    return "?";
}

std::vector<StoredRecord> stored_billing_documents(const Trace& trace) {
    std::vector<StoredRecord> out;
    for (const auto* e : trace.of_kind("store"))
        if (flag(e->data, "billing"))
            out.push_back(StoredRecord{str(e->data, "actor"), document_from_json(e->data.at("document")), e->index});
    return out;
}

std::vector<RedactionResult> redaction_gdpr_check(const std::vector<StoredRecord>& records, const Topology& topology) {
    std::vector<RedactionResult> out;
    for (const auto& r : records) {
        if (!r.doc.slot("location")) continue;
        RedactionResult res{r.doc.header.doc_id, r.holder, r.doc.mode, RedactionOutcome::VacuousFail};
        if (r.doc.mode != ProtectionMode::NoProtection) {
            bool ok = verify_document(redact(r.doc, "location"), topology.pki, anchor_for(topology, r.holder)).ok;
            res.outcome = ok ? RedactionOutcome::Pass : RedactionOutcome::Fail;
        }
        out.push_back(res);
    }
    return out;
}

}  // namespace evsec
