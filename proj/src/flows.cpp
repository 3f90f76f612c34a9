// SPDX-License-Identifier: Apache-2.0
#include "evsec/flows.hpp"

#include <algorithm>
#include <array>
#include <functional>

#include "evsec/codec.hpp"

namespace evsec {

namespace {

constexpr std::array<std::pair<AuthMechanism, std::string_view>, 4> kMechanisms{{
    {AuthMechanism::WeakUid, "weak_uid"},
    {AuthMechanism::Symmetric, "symmetric"},
    {AuthMechanism::Asymmetric, "asymmetric"},
    {AuthMechanism::Online, "online"},
}};

json mode_json(ProtectionMode m) { return std::string(to_string(m)); }

bool contract_ok(const std::optional<Contract>& c) { return c && c->valid; }

std::string leaf_of(const std::string& name) {
    auto dot = name.rfind('.');
    return dot == std::string::npos ? name : name.substr(dot + 1);
}

json slots_json(const CapacityForecast& f) {
    json out = json::array();
    for (const auto& s : f.slots)
        out.push_back(json{{"slot_start", s.slot_start}, {"allotted_kw", s.allotted_kw.str()}, {"spare_kw", s.spare_kw.str()}});
    return out;
}

}  // namespace

std::string_view to_string(AuthMechanism m) {
    for (const auto& [v, s] : kMechanisms)
        if (v == m) return s;
    return "?";
}

std::optional<AuthMechanism> auth_mechanism_from_string(std::string_view s) {
    for (const auto& [v, n] : kMechanisms)
        if (n == s) return v;
    return std::nullopt;
}

ProtectionMode ProtectionPolicy::mode_for(const std::string& doc_type) const {
    auto it = per_doc_type.find(doc_type);
    return it == per_doc_type.end() ? default_mode : it->second;
}

struct Simulation::Presenter {
    std::string name;
    std::function<std::optional<CredentialPresentation>(const Term& nonce)> respond;
};

Simulation::Simulation(const Topology& topology, Trace& trace, std::uint64_t seed, ProtectionPolicy protection,
                       ConfidentialityPolicy confidentiality, SimulationOptions options)
    : topo_(topology),
      trace_(trace),
      keys_(seed ^ 0x9e3779b97f4a7c15ULL),
      net_(topology, trace),
      hub_(topology, trace),
      protection_(std::move(protection)),
      confidentiality_(std::move(confidentiality)),
      options_(options) {
    net_.set_interceptor(&hub_);
    for (const auto& [id, a] : topo_.actors)
        if (const KeyPair* kp = a.key("tls")) recipient_keys_[id] = kp->public_part;
}

void Simulation::announce_links() {
    const auto& suites = topo_.approved_suites;
    for (const auto& l : topo_.links) {
        bool approved = std::find(suites.begin(), suites.end(), l.config.cipher_suite) != suites.end();
        trace_.append("link.config", {l.config.client, l.config.server},
                      json{{"link", l.id()},
                           {"client", l.config.client},
                           {"server", l.config.server},
                           {"mode", std::string(to_string(l.config.mode))},
                           {"cipher_suite", l.config.cipher_suite},
                           {"approved", approved},
                           {"client_auth", std::string(to_string(l.config.client_auth))},
                           {"secure_bootstrap", l.config.secure_bootstrap},
                           {"local", l.config.local}});
    }
}

void Simulation::abort(const std::string& flow, const std::string& reason) {
    trace_.append("flow.aborted", {}, json{{"flow", flow}, {"reason", reason}});
}

const std::string& Simulation::trust_anchor(const ActorId& actor) const { return topo_.actor(actor).anchor; }

std::optional<Term> Simulation::private_key_of(const ActorId& actor, const std::string& label) const {
    const Actor* a = topo_.find_actor(actor);
    if (!a) return std::nullopt;
    const KeyPair* kp = a->key(label);
    return kp ? kp->private_part : std::nullopt;
}

Session& Simulation::session_for(const ActorId& a, const ActorId& b, const std::string& flow) {
    const Link* link = topo_.link_between(a, b);
    if (!link) {
        abort(flow, "no link between '" + a + "' and '" + b + "'");
        throw FlowAborted("no link between '" + a + "' and '" + b + "'");
    }
    auto it = sessions_by_link_.find(link->id());
    if (it != sessions_by_link_.end() && it->second.established) return it->second;

    Session s;
    try {
        s = net_.establish(link->id(), link->config.client);
    } catch (const HandshakeFailure& e) {
        abort(flow, e.what());
        throw FlowAborted(e.what());
    } catch (const PeerOffline& e) {
        abort(flow, e.what());
        throw FlowAborted(e.what());
    }
    if (link->config.client_auth == ClientAuthKind::StaticToken) {
        auto token = net_.current_token(link->id());
        if (!token || !net_.authenticate_client_static(s, *token, link->config.client)) {
            abort(flow, "static token rejected on '" + link->id() + "'");
            throw FlowAborted("static token rejected on '" + link->id() + "'");
        }
    }
    return sessions_by_link_[link->id()] = std::move(s);
}

SecuredDocument Simulation::originate(const ActorId& producer, const Payload& payload,
                                      const std::vector<ActorId>& recipients, ProtectionMode mode) {
    const Actor& a = topo_.actor(producer);
    Producer p{producer, a.key("sig"), a.certificate_for("sig")};
    return originate_as(p, payload, recipients, mode);
}

SecuredDocument Simulation::originate_as(const Producer& producer, const Payload& payload,
                                         const std::vector<ActorId>& recipients, ProtectionMode mode) {
    std::string doc_id = "d" + std::to_string(doc_counter_++);
    SecuredDocument doc =
        protect(producer, doc_id, payload, mode, recipients, confidentiality_, recipient_keys_, keys_);
    FieldList fields = to_fields(payload);
    trace_.append("originate", {producer.id},
                  json{{"doc_id", doc_id},
                       {"producer", producer.id},
                       {"doc_type", std::string(doc_type_of(payload))},
                       {"protection", mode_json(mode)},
                       {"recipients", recipients},
                       {"fields", to_json(fields)}});
    for (const auto& f : fields) {
        auto it = confidentiality_.find(leaf_of(f.name));
        if (it == confidentiality_.end()) continue;
        trace_.append("confidential", {producer.id},
                      json{{"doc_id", doc_id},
                           {"field", f.name},
                           {"value", to_json(f.value)},
                           {"producer", producer.id},
                           {"recipients", it->second}});
    }
    return doc;
}

std::optional<SecuredDocument> Simulation::route(const std::vector<ActorId>& path, SecuredDocument doc,
                                                 const std::string& flow) {
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        Session& s = session_for(path[i], path[i + 1], flow);
        DeliveryResult r;
        try {
            r = net_.send(s, path[i], Message{"", doc, std::nullopt});
        } catch (const PeerOffline& e) {
            abort(flow, e.what());
            throw FlowAborted(e.what());
        }
        if (!r.delivered) return std::nullopt;
        doc = std::move(r.delivered->doc);
    }
    return doc;
}

std::optional<FieldList> Simulation::receive(const ActorId& actor, const SecuredDocument& doc,
                                             const ActorId& expected_producer, ProtectionMode expected, bool final) {
    auto reject = [&](const std::string& reason, const std::string& failure) -> std::optional<FieldList> {
        trace_.append("verify.fail", {actor},
                      json{{"actor", actor},
                           {"doc_id", doc.header.doc_id},
                           {"doc_type", doc.header.doc_type},
                           {"failure", failure},
                           {"reason", reason}});
        return std::nullopt;
    };

    if (expected != ProtectionMode::NoProtection) {
        if (doc.mode != expected)
            return reject("received " + std::string(to_string(doc.mode)) + " where " +
                              std::string(to_string(expected)) + " is required",
                          "protection_mismatch");
        VerifyResult v = verify_document(doc, topo_.pki, trust_anchor(actor));
        if (!v) return reject(v.detail, std::string(to_string(v.failure)));
        if (v.producer != expected_producer) return reject("signed by '" + v.producer + "'", "wrong_producer");
    }

    FieldList fields;
    std::vector<std::string> unreadable;
    std::optional<Term> key = private_key_of(actor, "tls");
    for (const auto& s : doc.slots) {
        FieldAccess a = decrypt_field(doc, s.name, actor, key);
        if (a) {
            fields.push_back({s.name, *a.value});
        } else if (a.reason == "commitment mismatch") {
            return reject("sealed field '" + s.name + "' does not match its commitment", "commitment_mismatch");
        } else {
            unreadable.push_back(s.name);
        }
    }
    if (unreadable.empty()) {
        try {
            payload_from_fields(doc.header.doc_type, fields);
        } catch (const MalformedPayload& e) {
            return reject(e.what(), "malformed");
        }
    }
    trace_.append("accept", {actor},
                  json{{"actor", actor},
                       {"doc_id", doc.header.doc_id},
                       {"doc_type", doc.header.doc_type},
                       {"producer", doc.header.producer},
                       {"protection", mode_json(doc.mode)},
                       {"final", final},
                       {"fields", to_json(fields)},
                       {"unreadable", unreadable}});
    return fields;
}

void Simulation::decision(const ActorId& authority, const std::string& request_id, bool granted,
                          const std::string& uid, const std::string& contract_id, const std::string& reason) {
    trace_.append("auth.decision", {authority},
                  json{{"authority", authority},
                       {"request_id", request_id},
                       {"granted", granted},
                       {"uid", uid},
                       {"contract_id", contract_id},
                       {"reason", reason}});
}

ChargeSession* Simulation::find_session(const std::string& session_id) {
    for (auto it = sessions_.rbegin(); it != sessions_.rend(); ++it)
        if (session_id.empty() ? it->presenter.rfind("attacker:", 0) != 0 : it->session_id == session_id) return &*it;
    return nullptr;
}

std::string Simulation::start_session(const ActorId& cp, const std::string& request_id, const std::string& uid,
                                      const std::string& contract_id, const std::string& presenter, Decimal energy) {
    ChargeSession s;
    s.session_id = "cs" + std::to_string(sessions_.size());
    s.request_id = request_id;
    s.uid = uid;
    s.contract_id = contract_id;
    s.charge_point = cp;
    s.presenter = presenter;
    s.start_time = clock_;
    s.end_time = clock_ + 90;
    s.energy = energy;
    clock_ += 120;
    trace_.append("session.start", {cp},
                  json{{"session_id", s.session_id},
                       {"cp", cp},
                       {"request_id", request_id},
                       {"uid", uid},
                       {"contract_id", contract_id},
                       {"presenter", presenter}});
    trace_.append("energy.flow", {cp},
                  json{{"session_id", s.session_id},
                       {"cp", cp},
                       {"request_id", request_id},
                       {"energy", energy.str()},
                       {"start_time", s.start_time},
                       {"end_time", s.end_time}});
    sessions_.push_back(s);
    return s.session_id;
}

// ---------------------------------------------------------------------------
// Authorization
// ---------------------------------------------------------------------------

std::optional<std::pair<bool, std::string>> Simulation::backend_decision(const ActorId& cp,
                                                                         const AuthorizationRequest& request,
                                                                         const std::string& request_id,
                                                                         AuthMechanism mechanism) {
    auto cpo = topo_.operator_of(cp);
    if (!cpo) return std::nullopt;
    const std::string& uid = presented_uid(request.presentation);
    std::optional<Contract> contract = lookup_contract(topo_, request.presentation);

    std::vector<ActorId> path{cp, *cpo};
    ActorId authority = *cpo;
    if (mechanism == AuthMechanism::Online && contract && contract->emsp != *cpo) {
        authority = contract->emsp;
        path.push_back(authority);
    }

    try {
        ProtectionMode req_mode = protection_.mode_for("AuthorizationRequest");
        auto got = route(path, originate(cp, request, {authority}, req_mode), "authorize");
        if (!got) return std::make_pair(false, std::string("request lost"));

        bool granted = false;
        std::string reason;
        auto fields = receive(authority, *got, cp, req_mode, true);
        if (!fields) {
            reason = "request failed verification";
        } else {
            auto req = std::get<AuthorizationRequest>(payload_from_fields("AuthorizationRequest", *fields));
            auto seen = lookup_contract(topo_, req.presentation);
            const std::string& seen_uid = presented_uid(req.presentation);
            if (mechanism == AuthMechanism::Online) {
                const auto* token = std::get_if<OnlineToken>(&req.presentation);
                const Credential* cred = topo_.credential_by_uid(seen_uid);
                if (!token || !cred || !seen) {
                    reason = "unknown credential";
                } else if (!(token->credential == Term::mac(cred->issuer_key, token->nonce))) {
                    reason = "credential check failed";
                } else if (!seen->valid) {
                    reason = "contract invalid";
                } else {
                    granted = true;
                    reason = "ok";
                }
            } else {
                const auto& wl = topo_.uid_whitelists;
                auto it = wl.find(*cpo);
                bool listed = it != wl.end() && std::count(it->second.begin(), it->second.end(), seen_uid);
                granted = listed || contract_ok(seen);
                reason = granted ? "ok" : "unknown uid";
            }
            decision(authority, request_id, granted, seen_uid, seen ? seen->contract_id : "", reason);
        }

        ProtectionMode resp_mode = protection_.mode_for("AuthorizationResponse");
        std::vector<ActorId> back(path.rbegin(), path.rend());
        auto resp = route(back, originate(authority, AuthorizationResponse{granted, reason}, {cp}, resp_mode), "authorize");
        if (!resp) return std::make_pair(false, std::string("response lost"));
        auto rf = receive(cp, *resp, authority, resp_mode, true);
        if (!rf) return std::make_pair(false, std::string("response failed verification"));
        auto r = std::get<AuthorizationResponse>(payload_from_fields("AuthorizationResponse", *rf));
        (void)uid;
        return std::make_pair(r.granted, r.reason);
    } catch (const FlowAborted&) {
        return std::nullopt;
    }
}

AuthOutcome Simulation::run_authorization(const ActorId& cp, AuthMechanism mechanism, const std::string& uid,
                                          const Presenter& presenter, Decimal energy) {
    const Actor& cpa = topo_.actor(cp);
    if (cpa.role != Role::ChargePoint) throw ConfigError("'" + cp + "' is not a charge point");

    AuthOutcome out;
    out.request_id = "auth" + std::to_string(request_counter_++);
    Term nonce = keys_.fresh_nonce("challenge/" + cp);
    if (mechanism != AuthMechanism::WeakUid) hub_.observe_air(cp, {nonce});

    auto presentation = presenter.respond(nonce);
    if (!presentation) {
        out.attempted = false;
        out.reason = "no credential material";
        return out;
    }
    AuthorizationRequest request{*presentation};
    FieldList pres_fields = to_fields(request);
    std::vector<Term> air;
    for (const auto& f : pres_fields) air.push_back(f.value);
    if (const auto* a = std::get_if<AsymmetricResponse>(&*presentation))
        if (const Certificate* c = topo_.pki.find(a->cert_id)) air.push_back(c->to_term());
    hub_.observe_air(cp, air);
    trace_.append("auth.present", {cp},
                  json{{"cp", cp},
                       {"request_id", out.request_id},
                       {"mechanism", std::string(to_string(mechanism))},
                       {"uid", uid},
                       {"presenter", presenter.name},
                       {"presentation", to_json(pres_fields)}});

    const bool cp_online = net_.is_online(cp);
    bool offline = !cp_online;
    std::optional<Contract> contract = lookup_contract(topo_, *presentation);
    std::string contract_id = contract ? contract->contract_id : "";
    const std::string& shown_uid = presented_uid(*presentation);

    auto local = [&](bool ok, const std::string& why) {
        out.granted = ok;
        out.reason = ok ? "ok" : why;
        decision(cp, out.request_id, ok, shown_uid, contract_id, out.reason);
    };

    switch (mechanism) {
        case AuthMechanism::WeakUid: {
            std::optional<std::pair<bool, std::string>> r;
            if (cp_online) r = backend_decision(cp, request, out.request_id, mechanism);
            if (r) {
                out.granted = r->first;
                out.reason = r->second;
            } else {
                offline = true;
                auto cpo = topo_.operator_of(cp);
                bool listed = false;
                if (cpo) {
                    auto it = topo_.uid_whitelists.find(*cpo);
                    listed = it != topo_.uid_whitelists.end() &&
                             std::count(it->second.begin(), it->second.end(), shown_uid);
                }
                local(listed, "uid not whitelisted");
            }
            break;
        }
        case AuthMechanism::Symmetric: {
            const auto* resp = std::get_if<SymmetricResponse>(&*presentation);
            if (!cpa.holds_master_key) {
                local(false, "no master key");
            } else {
                Term expected = Term::mac(kdf_diversify(topo_.master_key, shown_uid), nonce);
                bool mac_ok = resp && resp->nonce == nonce && resp->mac == expected;
                if (!mac_ok)
                    local(false, "mac check failed");
                else
                    local(contract_ok(contract), "no valid contract");
            }
            break;
        }
        case AuthMechanism::Asymmetric: {
            const auto* resp = std::get_if<AsymmetricResponse>(&*presentation);
            const Certificate* cert = resp ? topo_.pki.find(resp->cert_id) : nullptr;
            if (!cert || cert->subject != shown_uid) {
                local(false, "unknown certificate");
            } else if (!topo_.pki.verify_chain(cert->cert_id, trust_anchor(cp))) {
                local(false, "certificate chain invalid");
            } else if (!(resp->nonce == nonce) || resp->signature.kind() != TermKind::Sign ||
                       !verify(cert->public_key, resp->signature) ||
                       !(resp->signature.body() == Term::pair(nonce, Term::atom(cp)))) {
                local(false, "signature check failed");
            } else {
                local(contract_ok(contract), "no valid contract");
            }
            break;
        }
        case AuthMechanism::Online: {
            std::optional<std::pair<bool, std::string>> r;
            if (cp_online) r = backend_decision(cp, request, out.request_id, mechanism);
            if (r) {
                out.granted = r->first;
                out.reason = r->second;
            } else {
                offline = true;
                out.granted = false;
                out.reason = "offline";
            }
            break;
        }
    }

    trace_.append("auth.response", {cp},
                  json{{"cp", cp},
                       {"request_id", out.request_id},
                       {"mechanism", std::string(to_string(mechanism))},
                       {"uid", shown_uid},
                       {"contract_id", contract_id},
                       {"presenter", presenter.name},
                       {"granted", out.granted},
                       {"reason", out.reason},
                       {"offline", offline}});
    if (out.granted) {
        out.session_id = start_session(cp, out.request_id, shown_uid, contract_id, presenter.name, energy);
    } else if (out.reason == "offline" && options_.minimum_charge) {
        trace_.append("minimum_charge", {cp},
                      json{{"cp", cp}, {"request_id", out.request_id}, {"energy", options_.minimum_charge_energy.str()}});
    }
    return out;
}

AuthOutcome Simulation::authorize(const std::string& credential_id, const ActorId& charge_point,
                                  AuthMechanism mechanism, Decimal energy) {
    const Credential* cred = topo_.credential(credential_id);
    if (!cred) throw ConfigError("unknown credential '" + credential_id + "'");
    const Credential c = *cred;
    Presenter p{c.holder, [this, c, mechanism, charge_point](const Term& nonce) -> std::optional<CredentialPresentation> {
                    switch (mechanism) {
                        case AuthMechanism::WeakUid: return UidBroadcast{c.uid};
                        case AuthMechanism::Symmetric:
                            return SymmetricResponse{c.uid, nonce,
                                                     Term::mac(kdf_diversify(topo_.master_key, c.uid), nonce)};
                        case AuthMechanism::Asymmetric:
                            return AsymmetricResponse{c.uid, c.contract_cert, nonce,
                                                      sign(c.contract_key, Term::pair(nonce, Term::atom(charge_point)))};
                        case AuthMechanism::Online:
                            return OnlineToken{c.uid, nonce, Term::mac(c.issuer_key, nonce)};
                    }
                    return std::nullopt;
                }};
    return run_authorization(charge_point, mechanism, c.uid, p, energy);
}

std::vector<AuthOutcome> Simulation::attacker_authorize(const ActorId& charge_point, AuthMechanism mechanism,
                                                        const std::vector<std::string>& credential_ids,
                                                        const std::string& attacker) {
    std::vector<AuthOutcome> out;
    for (const auto& ap : hub_.attackers()) {
        AttackerState& a = *ap;
        if (!attacker.empty() && a.spec.name != attacker) continue;
        for (const auto& cid : credential_ids) {
            const Credential* cred = topo_.credential(cid);
            if (!cred) throw ConfigError("unknown credential '" + cid + "'");
            const Credential c = *cred;

            // Best material first: derivable response, replayed response, forgery.
            auto respond = [this, &a, c, mechanism, charge_point](const Term& nonce) -> std::optional<CredentialPresentation> {
                learn(a, {nonce}, "air:" + charge_point, trace_);
                std::string material = "forged";
                auto find_keyed = [&](TermKind kind, const Term& key) -> std::optional<Term> {
                    for (const auto& t : a.knowledge.terms())
                        if (t.kind() == kind && t.key_operand() == key) return t;
                    return std::nullopt;
                };
                std::optional<CredentialPresentation> pres;
                switch (mechanism) {
                    case AuthMechanism::WeakUid:
                        if (a.knowledge.can_derive(Term::atom(c.uid))) {
                            material = "derived";
                            pres = UidBroadcast{c.uid};
                        } else {
                            material = "none";
                        }
                        break;
                    case AuthMechanism::Symmetric: {
                        Term card_key = kdf_diversify(topo_.master_key, c.uid);
                        Term want = Term::mac(card_key, nonce);
                        Term mac = Term::atom("forged");
                        if (a.knowledge.can_derive(want)) {
                            material = "derived";
                            mac = want;
                        } else if (auto old = find_keyed(TermKind::Mac, card_key)) {
                            material = "replay";
                            mac = *old;
                        }
                        pres = SymmetricResponse{c.uid, nonce, mac};
                        break;
                    }
                    case AuthMechanism::Asymmetric: {
                        Term want = Term::sign(*c.contract_key.private_part, Term::pair(nonce, Term::atom(charge_point)));
                        Term sig = Term::atom("forged");
                        if (a.knowledge.can_derive(want)) {
                            material = "derived";
                            sig = want;
                        } else if (auto old = find_keyed(TermKind::Sign, *c.contract_key.private_part)) {
                            material = "replay";
                            sig = *old;
                        }
                        pres = AsymmetricResponse{c.uid, c.contract_cert, nonce, sig};
                        break;
                    }
                    case AuthMechanism::Online: {
                        Term want = Term::mac(c.issuer_key, nonce);
                        Term cred = Term::atom("forged");
                        if (a.knowledge.can_derive(want)) {
                            material = "derived";
                            cred = want;
                        } else if (auto old = find_keyed(TermKind::Mac, c.issuer_key)) {
                            material = "replay";
                            cred = *old;
                        }
                        pres = OnlineToken{c.uid, nonce, cred};
                        break;
                    }
                }
                trace_.append("attack.attempt", {charge_point},
                              json{{"attacker", a.spec.name},
                                   {"cp", charge_point},
                                   {"mechanism", std::string(to_string(mechanism))},
                                   {"uid", c.uid},
                                   {"material", material}});
                return pres;
            };
            out.push_back(run_authorization(charge_point, mechanism, c.uid, Presenter{a.principal(), respond},
                                            Decimal::units(20)));
        }
    }
    return out;
}

bool Simulation::attacker_impersonate(const std::string& link_id, const std::string& attacker) {
    const Link& link = topo_.link(link_id);
    bool any = false;
    for (const auto& ap : hub_.attackers()) {
        AttackerState& a = *ap;
        if (!attacker.empty() && a.spec.name != attacker) continue;
        if (a.controlled.count(link.config.client)) continue;
        json ev{{"attacker", a.spec.name}, {"link", link_id}, {"client", link.config.client}};
        Session s;
        try {
            s = net_.establish(link_id, link.config.client, a.principal(), &a.knowledge);
        } catch (const Error& e) {
            ev["accepted"] = false;
            ev["reason"] = e.what();
            trace_.append("impersonation", {link.config.server}, ev);
            continue;
        }
        bool accepted = true;
        std::string method = s.authenticated_client ? "client_cert" : "none";
        if (link.config.client_auth == ClientAuthKind::StaticToken) {
            method = "static_token";
            auto token = net_.current_token(link_id);
            Term presented = token && a.knowledge.can_derive(*token) ? *token : Term::atom("guess/" + a.spec.name);
            accepted = net_.authenticate_client_static(s, presented, a.principal());
        }
        ev["accepted"] = accepted;
        ev["method"] = method;
        trace_.append("impersonation", {link.config.server}, ev);
        if (s.established) net_.close(s);
        any = any || accepted;
    }
    return any;
}

// ---------------------------------------------------------------------------
// Tariffs and billing
// ---------------------------------------------------------------------------

TariffOutcome Simulation::tariff_flow(const ActorId& emsp, const ActorId& cpo, const ActorId& charge_point,
                                      const ActorId& ev, const TariffTable& table, const std::string& session_id) {
    TariffOutcome out;
    ProtectionMode mode = protection_.mode_for("TariffTable");
    SecuredDocument doc = originate(emsp, table, {ev}, mode);
    out.doc_id = doc.header.doc_id;
    auto got = route({emsp, cpo, charge_point, ev}, doc, "tariff");
    if (!got) return out;
    auto fields = receive(ev, *got, emsp, mode, true);
    if (!fields) return out;

    auto received = std::get<TariffTable>(payload_from_fields("TariffTable", *fields));
    if (received.entries.empty()) return out;
    std::size_t best = 0;
    for (std::size_t i = 1; i < received.entries.size(); ++i)
        if (received.entries[i].price_per_kwh < received.entries[best].price_per_kwh) best = i;
    out.accepted = true;
    out.selected_index = static_cast<std::int64_t>(best);
    out.selected_price = received.entries[best].price_per_kwh;

    ChargeSession* session = find_session(session_id);
    std::string sid = session ? session->session_id : session_id;
    if (session) session->selected_price = out.selected_price;
    trace_.append("rate.select", {ev},
                  json{{"ev", ev},
                       {"doc_id", out.doc_id},
                       {"session_id", sid},
                       {"entry_index", best},
                       {"price_per_kwh", out.selected_price->str()}});

    ProtectionMode rate_mode = protection_.mode_for("SelectedRate");
    SecuredDocument rate = originate(ev, SelectedRate{sid, static_cast<std::int64_t>(best)}, {emsp}, rate_mode);
    if (auto back = route({ev, charge_point, cpo, emsp}, rate, "tariff")) receive(emsp, *back, ev, rate_mode, true);
    return out;
}

std::optional<StoredRecord> Simulation::cdr_flow(const ActorId& cpo, const ActorId& emsp,
                                                 const std::string& session_id,
                                                 std::optional<ProtectionMode> protection, Decimal default_price) {
    ChargeSession* session = find_session(session_id);
    if (!session) {
        std::string why = "no charge session" + (session_id.empty() ? std::string() : " '" + session_id + "'");
        abort("cdr", why);
        throw FlowAborted(why);
    }
    std::vector<ActorId> path = topo_.billing_path(cpo, emsp);
    if (path.empty()) {
        abort("cdr", "no billing route from '" + cpo + "' to '" + emsp + "'");
        throw FlowAborted("no billing route from '" + cpo + "' to '" + emsp + "'");
    }

    ChargeDetailRecord cdr;
    cdr.cdr_id = "cdr-" + session->session_id;
    cdr.contract_id = session->contract_id.empty() ? "unknown" : session->contract_id;
    cdr.location = "site/" + session->charge_point;
    cdr.start_time = session->start_time;
    cdr.end_time = session->end_time;
    cdr.energy = session->energy;
    cdr.cost = session->energy * session->selected_price.value_or(default_price);

    ProtectionMode mode = protection.value_or(protection_.mode_for("ChargeDetailRecord"));
    SecuredDocument doc = originate(cpo, cdr, {emsp}, mode);
    auto got = route(path, doc, "cdr");
    if (!got) return std::nullopt;
    if (!receive(emsp, *got, cpo, mode, true)) {
        trace_.append("quarantine", {emsp}, json{{"actor", emsp}, {"doc_id", got->header.doc_id}, {"document", to_json(*got)}});
        return std::nullopt;
    }
    StoredRecord rec{emsp, *got, 0};
    rec.event = trace_.append("store", {emsp},
                              json{{"actor", emsp},
                                   {"doc_id", got->header.doc_id},
                                   {"doc_type", got->header.doc_type},
                                   {"producer", cpo},
                                   {"billing", true},
                                   {"document", to_json(*got)}});
    stored_.push_back(rec);
    return rec;
}

bool Simulation::falsify_stored(const ActorId& actor, const std::string& field, const std::string& value) {
    auto it = std::find_if(stored_.rbegin(), stored_.rend(), [&](const StoredRecord& r) { return r.holder == actor; });
    if (it == stored_.rend()) {
        abort("falsify_stored", "no stored record at '" + actor + "'");
        return false;
    }
    SecuredDocument altered = it->doc;
    tamper_set_value(altered, field, Term::atom(value));
    OriginResult o = prove_origin(altered, it->doc.header.producer, topo_.pki, trust_anchor(actor));
    bool detected = o.status == OriginStatus::TamperDetected || o.status == OriginStatus::WrongProducer;
    trace_.append("falsify", {actor},
                  json{{"actor", actor},
                       {"doc_id", altered.header.doc_id},
                       {"field", field},
                       {"value", value},
                       {"producer", altered.header.producer},
                       {"origin", std::string(to_string(o.status))},
                       {"detected", detected},
                       {"document", to_json(altered)}});
    it->doc = std::move(altered);
    return detected;
}

void Simulation::rotate_token(const std::string& link_id) {
    const Link& link = topo_.link(link_id);
    if (link.config.client_auth != ClientAuthKind::StaticToken)
        throw ConfigError("link '" + link_id + "' does not use static tokens");
    Session& s = session_for(link.config.client, link.config.server, "rotate_token");
    Term fresh = keys_.fresh_nonce("token/" + link_id + "/r" + std::to_string(rotation_counter_++));
    net_.rotate_static_token(s, fresh);
}

bool Simulation::format_convert(const ActorId& actor, const std::string& to_format, ConversionKind kind) {
    auto it = std::find_if(stored_.rbegin(), stored_.rend(), [&](const StoredRecord& r) { return r.holder == actor; });
    if (it == stored_.rend()) {
        abort("format_convert", "no stored record at '" + actor + "'");
        return false;
    }
    const SecuredDocument& doc = it->doc;
    SecuredDocument conv = convert_format(doc, to_format, kind);
    bool before = verify_document(doc, topo_.pki, trust_anchor(actor)).ok;
    bool after = verify_document(conv, topo_.pki, trust_anchor(actor)).ok;
    trace_.append("format.convert", {actor},
                  json{{"actor", actor},
                       {"doc_id", doc.header.doc_id},
                       {"doc_type", doc.header.doc_type},
                       {"protection", mode_json(doc.mode)},
                       {"kind", kind == ConversionKind::Lossy ? "lossy" : "envelope_preserving"},
                       {"from", doc.format},
                       {"to", to_format},
                       {"verify_before", before},
                       {"verify_after", after},
                       {"document", to_json(conv)}});
    return after;
}

// ---------------------------------------------------------------------------
// Smart charging, firmware, NFC session start, meter data
// ---------------------------------------------------------------------------

std::vector<ChargeProfile> Simulation::smart_charging_flow(const ActorId& dso, const ActorId& cpo,
                                                           const std::vector<ActorId>& charge_points,
                                                           const CapacityForecast& forecast, Decimal min_kw) {
    validate(forecast);
    if (charge_points.empty()) throw ConfigError("smart charging needs at least one charge point");
    trace_.append("forecast.truth", {dso}, json{{"dso", dso}, {"cpo", cpo}, {"slots", slots_json(forecast)}});

    ProtectionMode mode = protection_.mode_for("CapacityForecast");
    auto got = route({dso, cpo}, originate(dso, forecast, {cpo}, mode), "smart_charging");
    if (!got) return {};
    auto fields = receive(cpo, *got, dso, mode, true);
    if (!fields) return {};
    auto received = std::get<CapacityForecast>(payload_from_fields("CapacityForecast", *fields));

    const auto n = static_cast<std::int64_t>(charge_points.size());
    std::vector<ChargeProfile> profiles;
    for (const auto& cp : charge_points) profiles.push_back(ChargeProfile{cp, {}});
    json plan = json::array();
    for (const auto& slot : received.slots) {
        if (min_kw.milli() * n > slot.allotted_kw.milli()) {
            std::string why = "slot " + std::to_string(slot.slot_start) + ": " + std::to_string(n) + " x " +
                              min_kw.str() + " kW exceeds " + slot.allotted_kw.str() + " kW";
            abort("smart_charging", why);
            throw InfeasibleAllocation(why);
        }
        Decimal share = Decimal::from_milli(slot.allotted_kw.milli() / n);
        for (auto& p : profiles) p.slots.push_back({slot.slot_start, share});
        plan.push_back(json{{"slot_start", slot.slot_start}, {"allotted_kw", slot.allotted_kw.str()}, {"limit_kw", share.str()}});
    }
    trace_.append("plan", {cpo}, json{{"cpo", cpo}, {"charge_points", charge_points}, {"slots", plan}});

    ProtectionMode pmode = protection_.mode_for("ChargeProfile");
    std::vector<ChargeProfile> delivered;
    for (const auto& p : profiles) {
        auto pd = route({cpo, p.charge_point}, originate(cpo, p, {p.charge_point}, pmode), "smart_charging");
        if (!pd) continue;
        auto pf = receive(p.charge_point, *pd, cpo, pmode, true);
        if (!pf) continue;
        auto cp_profile = std::get<ChargeProfile>(payload_from_fields("ChargeProfile", *pf));
        json slots = json::array();
        for (const auto& s : cp_profile.slots) slots.push_back(json{{"slot_start", s.slot_start}, {"limit_kw", s.limit_kw.str()}});
        trace_.append("profile.deliver", {p.charge_point},
                      json{{"cp", p.charge_point}, {"doc_id", pd->header.doc_id}, {"slots", slots}});
        delivered.push_back(std::move(cp_profile));
    }
    return delivered;
}

FirmwareOutcome Simulation::firmware_flow(const ActorId& cpio, const std::vector<ActorId>& via,
                                          const ActorId& charge_point, const std::string& version, bool signed_update) {
    ProtectionMode mode = signed_update ? ProtectionMode::WholeMessageSignature : ProtectionMode::NoProtection;
    FirmwareUpdate fw{version, Term::hash(Term::atom("firmware/" + version))};
    std::vector<ActorId> path{cpio};
    path.insert(path.end(), via.begin(), via.end());
    path.push_back(charge_point);

    FirmwareOutcome out;
    auto got = route(path, originate(cpio, fw, {charge_point}, mode), "firmware");
    if (!got) {
        out.reason = "update lost";
        return out;
    }
    auto fields = receive(charge_point, *got, cpio, mode, true);
    if (!fields) {
        out.reason = "verification failed";
        trace_.append("firmware.reject", {charge_point},
                      json{{"cp", charge_point}, {"doc_id", got->header.doc_id}, {"reason", out.reason}});
        return out;
    }
    auto installed = std::get<FirmwareUpdate>(payload_from_fields("FirmwareUpdate", *fields));
    out.installed = true;
    trace_.append("firmware.install", {charge_point},
                  json{{"cp", charge_point},
                       {"doc_id", got->header.doc_id},
                       {"version", installed.version},
                       {"digest", to_json(installed.image_digest)},
                       {"signed", signed_update}});
    return out;
}

AuthOutcome Simulation::nfc_session_flow(const ActorId& cpo, const ActorId& phone, const ActorId& charge_point,
                                         const std::string& contract_id, Decimal max_energy, bool replay) {
    ProtectionMode mode = protection_.mode_for("SignedSessionDescription");
    AuthOutcome out;
    if (replay) {
        if (!last_description_) throw ConfigError("no session description to replay");
    } else {
        SignedSessionDescription sd{"nfc" + std::to_string(request_counter_++), charge_point, contract_id, max_energy};
        auto it = topo_.contracts.find(contract_id);
        bool valid = it != topo_.contracts.end() && it->second.valid;
        decision(cpo, sd.session_id, valid, "", contract_id, valid ? "ok" : "no valid contract");
        if (!valid) {
            out.request_id = sd.session_id;
            out.reason = "no valid contract";
            return out;
        }
        auto got = route({cpo, phone}, originate(cpo, sd, {charge_point}, mode), "nfc_session");
        if (!got) return out;
        last_description_ = *got;
    }
    out.request_id = last_description_->header.doc_id;

    auto relayed = route({phone, charge_point}, *last_description_, "nfc_session");
    if (!relayed) return out;
    std::optional<FieldList> fields;
    if (relayed->mode == ProtectionMode::NoProtection) {
        trace_.append("verify.fail", {charge_point},
                      json{{"actor", charge_point},
                           {"doc_id", relayed->header.doc_id},
                           {"doc_type", relayed->header.doc_type},
                           {"failure", "unsigned"},
                           {"reason", "session description is not signed"}});
    } else {
        fields = receive(charge_point, *relayed, cpo, mode, true);
    }

    std::string reason = "verification failed";
    SignedSessionDescription sd;
    if (fields) {
        sd = std::get<SignedSessionDescription>(payload_from_fields("SignedSessionDescription", *fields));
        out.request_id = sd.session_id;
        if (sd.charge_point != charge_point) {
            reason = "wrong charge point";
        } else if (!replay_cache_[charge_point].insert(sd.session_id).second) {
            reason = "replay";
        } else {
            out.granted = true;
            reason = "ok";
        }
    }
    out.reason = reason;
    trace_.append("auth.response", {charge_point},
                  json{{"cp", charge_point},
                       {"request_id", out.request_id},
                       {"mechanism", "nfc_session"},
                       {"uid", ""},
                       {"contract_id", fields ? sd.contract_id : ""},
                       {"presenter", phone},
                       {"granted", out.granted},
                       {"reason", reason},
                       {"offline", !net_.is_online(charge_point)}});
    if (out.granted)
        out.session_id = start_session(charge_point, out.request_id, "", sd.contract_id, phone, sd.max_energy);
    return out;
}

std::optional<StoredRecord> Simulation::meter_reading(const std::string& signer, const ActorId& ev,
                                                      const ActorId& charge_point, const ActorId& cpo, Decimal value) {
    ProtectionMode mode = protection_.mode_for("MeterReading");
    MeterReading reading{"meter/" + charge_point, clock_, value};
    SecuredDocument doc;
    std::vector<ActorId> path;
    ActorId producer;
    if (signer == "ev") {
        producer = ev;
        doc = originate(ev, reading, {cpo}, mode);
        path = {ev, charge_point, cpo};
    } else if (signer == "card") {
        const Credential* card = nullptr;
        for (const auto& c : topo_.credentials)
            if (c.holder == ev && c.signing) card = &c;
        if (!card) throw ConfigError("'" + ev + "' holds no signing card");
        producer = card->uid;
        doc = originate_as(Producer{card->uid, &card->contract_key, card->contract_cert}, reading, {cpo}, mode);
        path = {ev, charge_point, cpo};
    } else if (signer == "cp") {
        producer = charge_point;
        doc = originate(charge_point, reading, {cpo}, mode);
        path = {charge_point, cpo};
    } else {
        throw ConfigError("unknown meter signer '" + signer + "'");
    }
    auto got = route(path, doc, "meter_reading");
    if (!got) return std::nullopt;
    if (!receive(cpo, *got, producer, mode, true)) return std::nullopt;
    StoredRecord rec{cpo, *got, 0};
    rec.event = trace_.append("store", {cpo},
                              json{{"actor", cpo},
                                   {"doc_id", got->header.doc_id},
                                   {"doc_type", got->header.doc_type},
                                   {"producer", producer},
                                   {"billing", true},
                                   {"document", to_json(*got)}});
    stored_.push_back(rec);
    return rec;
}

void Simulation::set_online(const ActorId& actor, bool online) {
    net_.set_online(actor, online);
    trace_.append("online", {actor}, json{{"actor", actor}, {"online", online}});
}

void Simulation::gdpr_redaction(const ActorId& actor) {
    for (auto& rec : stored_) {
        if (rec.holder != actor || !rec.doc.slot("location")) continue;
        SecuredDocument red = redact(rec.doc, "location");
        bool before = verify_document(rec.doc, topo_.pki, trust_anchor(actor)).ok;
        bool after = verify_document(red, topo_.pki, trust_anchor(actor)).ok;
        std::string outcome = rec.doc.mode == ProtectionMode::NoProtection ? "vacuous-fail" : after ? "pass" : "fail";
        trace_.append("gdpr.redact", {actor},
                      json{{"actor", actor},
                           {"doc_id", rec.doc.header.doc_id},
                           {"protection", mode_json(rec.doc.mode)},
                           {"verify_before", before},
                           {"verify_after", after},
                           {"outcome", outcome}});
        rec.doc = std::move(red);
    }
}

}  // namespace evsec
