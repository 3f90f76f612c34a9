// SPDX-License-Identifier: Apache-2.0
#include "evsec/adversary.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "evsec/codec.hpp"

namespace evsec {

namespace {

constexpr std::array<std::pair<AttackerKind, std::string_view>, 3> kKinds{{
    {AttackerKind::Physical, "physical"},
    {AttackerKind::Endpoint, "endpoint"},
    {AttackerKind::Network, "network"},
}};

constexpr std::array<std::pair<ActionType, std::string_view>, 8> kActions{{
    {ActionType::Eavesdrop, "eavesdrop"},
    {ActionType::ModifyInTransit, "modify"},
    {ActionType::Inject, "inject"},
    {ActionType::Drop, "drop"},
    {ActionType::ReadCardUid, "read_card_uid"},
    {ActionType::ExtractMasterKey, "extract_master_key"},
    {ActionType::CompromiseActor, "compromise"},
    {ActionType::ReplayTranscript, "replay"},
}};

bool in_transit(ActionType t) {
    return t == ActionType::ModifyInTransit || t == ActionType::Inject || t == ActionType::Drop;
}

bool changes_content(ActionType t) { return t == ActionType::ModifyInTransit || t == ActionType::Inject; }

const std::string kAirPrefix = "air:";

void blocked(const AttackerState& a, ActionType t, const std::string& why, Trace& trace, json extra = json::object()) {
    extra["attacker"] = a.spec.name;
    extra["action"] = std::string(to_string(t));
    extra["reason"] = why;
    trace.append("attack.blocked", {}, std::move(extra));
}

}  // namespace

std::vector<Term> actor_secrets(const Actor& actor, const Topology& topo) {
    std::vector<Term> out;
    for (const auto& kp : actor.key_material) {
        out.push_back(kp.public_part);
        if (kp.private_part) out.push_back(*kp.private_part);
    }
    for (const auto& t : actor.static_secrets) out.push_back(t.secret);
    if (actor.holds_master_key) out.push_back(topo.master_key);
    for (const auto& c : topo.credentials) {
        if (c.holder != actor.id) continue;
        out.push_back(Term::atom(c.uid));
        out.push_back(c.contract_key.public_part);
        if (c.contract_key.private_part) out.push_back(*c.contract_key.private_part);
        out.push_back(c.issuer_key);
    }
    return out;
}

namespace {

void take_control(AttackerState& a, const ActorId& actor, const Topology& topo, Trace& trace) {
    a.controlled.insert(actor);
    trace.append("compromise", {actor},
                 json{{"attacker", a.spec.name}, {"actor", actor}, {"escalated", a.spec.kind == AttackerKind::Physical}});
    learn(a, actor_secrets(topo.actor(actor), topo), "compromise:" + actor, trace);
}

void validate_target(const AttackerSpec& spec, const Topology& topo) {
    const std::string& t = spec.target;
    switch (spec.kind) {
        case AttackerKind::Network: {
            if (topo.find_link(t)) return;
            if (t.rfind(kAirPrefix, 0) == 0) {
                const Actor* cp = topo.find_actor(t.substr(kAirPrefix.size()));
                if (cp && cp->role == Role::ChargePoint) return;
            }
            throw InvalidTarget("network attacker '" + spec.name + "' needs a link or air:<charge point>, got '" + t + "'");
        }
        case AttackerKind::Endpoint:
            if (topo.find_actor(t)) return;
            throw InvalidTarget("endpoint attacker '" + spec.name + "' targets unknown actor '" + t + "'");
        case AttackerKind::Physical: {
            const Actor* a = topo.find_actor(t);
            if (a && (a->role == Role::ChargePoint || a->role == Role::EV)) return;
            if (topo.credential(t)) return;
            throw InvalidTarget("physical attacker '" + spec.name + "' needs a field device or credential, got '" + t + "'");
        }
    }
}

std::optional<Decimal> readable_decimal(const SecuredDocument& doc, const std::string& name) {
    const FieldSlot* s = doc.slot(name);
    if (!s || !s->disclosure || s->disclosure->value.kind() != TermKind::Atom) return std::nullopt;
    try {
        return Decimal::parse(s->disclosure->value.text());
    } catch (const ConfigError&) {
        return std::nullopt;
    }
}

bool tariff_filter(SecuredDocument& doc) {
    const FieldSlot* count = doc.slot("entry_count");
    if (!count || !count->disclosure || count->disclosure->value.kind() != TermKind::Atom) return false;
    std::size_t n = 0;
    try {
        n = std::stoul(count->disclosure->value.text());
    } catch (const std::exception&) {
        return false;
    }
    if (n < 2) return false;

    auto name = [](std::size_t i, const char* leaf) { return "entries." + std::to_string(i) + "." + leaf; };
    std::size_t keep = n - 1;
    std::optional<Decimal> best;
    for (std::size_t i = 0; i < n; ++i) {
        auto p = readable_decimal(doc, name(i, "price_per_kwh"));
        if (p && (!best || *p > *best)) {
            best = p;
            keep = i;
        }
    }
    const std::string keep_prefix = "entries." + std::to_string(keep) + ".";
    std::vector<FieldSlot> slots;
    for (auto& s : doc.slots) {
        if (s.name.rfind("entries.", 0) != 0) {
            slots.push_back(std::move(s));
        } else if (s.name.rfind(keep_prefix, 0) == 0) {
            s.name = "entries.0." + s.name.substr(keep_prefix.size());
            slots.push_back(std::move(s));
        }
    }
    doc.slots = std::move(slots);
    tamper_set_value(doc, "entry_count", Term::atom("1"));
    if (doc.mode == ProtectionMode::WholeMessageSignature) doc.signature_broken = true;
    return true;
}

}  // namespace

std::string_view to_string(AttackerKind k) {
    for (const auto& [v, s] : kKinds)
        if (v == k) return s;
    return "?";
}

std::optional<AttackerKind> attacker_kind_from_string(std::string_view s) {
    for (const auto& [v, n] : kKinds)
        if (n == s) return v;
    return std::nullopt;
}

std::string_view to_string(ActionType t) {
    for (const auto& [v, s] : kActions)
        if (v == t) return s;
    return "?";
}

std::optional<ActionType> action_type_from_string(std::string_view s) {
    for (const auto& [v, n] : kActions)
        if (n == s) return v;
    return std::nullopt;
}

bool Matcher::matches(const ActorId& msg_from, const ActorId& msg_to, const Message& m) const {
    return (doc_type.empty() || doc_type == m.doc.header.doc_type) && (from.empty() || from == msg_from) &&
           (to.empty() || to == msg_to);
}

bool AttackerState::has_action(ActionType t) const {
    return std::any_of(spec.script.begin(), spec.script.end(), [&](const AttackAction& a) { return a.type == t; });
}

bool AttackerState::attached_to_link(const std::string& link_id) const {
    return spec.kind == AttackerKind::Network && spec.target == link_id;
}

bool AttackerState::watches_air(const ActorId& charge_point) const {
    if (spec.kind == AttackerKind::Network) return spec.target == kAirPrefix + charge_point;
    if (spec.kind == AttackerKind::Physical) return spec.target == charge_point && has_action(ActionType::Eavesdrop);
    return false;
}

void learn(AttackerState& a, const std::vector<Term>& terms, const std::string& source, Trace& trace) {
    std::vector<Term> fresh;
    for (const auto& t : terms)
        if (a.knowledge.add(t)) fresh.push_back(t);
    if (fresh.empty()) return;
    trace.append("learn", {}, json{{"attacker", a.spec.name}, {"source", source}, {"terms", to_json(fresh)}});
}

AttackerState activate(const AttackerSpec& spec, const Topology& topology, Trace& trace) {
    validate_target(spec, topology);
    AttackerState a;
    a.spec = spec;
    a.consumed.assign(spec.script.size(), false);

    json script = json::array();
    for (const auto& s : spec.script) script.push_back(std::string(to_string(s.type)));
    trace.append("attacker.activate", {},
                 json{{"attacker", spec.name},
                      {"kind", std::string(to_string(spec.kind))},
                      {"target", spec.target},
                      {"script", script}});

    std::vector<Term> pub;
    for (const auto& [id, anchor] : topology.pki.anchors()) pub.push_back(anchor.root_public_key);
    for (const auto& [id, cert] : topology.pki.certificates()) {
        pub.push_back(cert.to_term());
        pub.push_back(cert.public_key);
    }
    learn(a, pub, "public", trace);

    if (spec.kind == AttackerKind::Endpoint) take_control(a, spec.target, topology, trace);

    for (std::size_t i = 0; i < spec.script.size(); ++i) {
        const AttackAction& act = spec.script[i];
        switch (act.type) {
            case ActionType::CompromiseActor:
                if (spec.kind == AttackerKind::Physical && topology.find_actor(spec.target)) {
                    a.escalated = true;
                    take_control(a, spec.target, topology, trace);
                } else if (spec.kind == AttackerKind::Network) {
                    blocked(a, act.type, "network attacker cannot take over an endpoint", trace);
                }
                a.consumed[i] = true;
                break;
            case ActionType::ReadCardUid: {
                std::string cred_id = act.credential.empty() ? spec.target : act.credential;
                const Credential* c = topology.credential(cred_id);
                if (spec.kind != AttackerKind::Physical) {
                    blocked(a, act.type, "card access requires physical proximity", trace);
                } else if (!c) {
                    blocked(a, act.type, "unknown credential '" + cred_id + "'", trace);
                } else {
                    trace.append("card.read", {c->holder},
                                 json{{"attacker", spec.name}, {"credential", c->id}, {"uid", c->uid}});
                    std::vector<Term> read{Term::atom(c->uid)};
                    if (const Certificate* cert = topology.pki.find(c->contract_cert)) read.push_back(cert->to_term());
                    learn(a, read, "card:" + c->id, trace);
                }
                a.consumed[i] = true;
                break;
            }
            case ActionType::ExtractMasterKey: {
                const Actor* cp = topology.find_actor(spec.target);
                if (spec.kind != AttackerKind::Physical || !cp || cp->role != Role::ChargePoint) {
                    blocked(a, act.type, "master key extraction requires physical access to a charge point", trace);
                } else if (!cp->holds_master_key) {
                    blocked(a, act.type, "charge point '" + cp->id + "' holds no master key", trace);
                } else {
                    trace.append("attack", {cp->id},
                                 json{{"attacker", spec.name}, {"action", "extract_master_key"}, {"actor", cp->id}});
                    learn(a, {topology.master_key}, "extract:" + cp->id, trace);
                }
                a.consumed[i] = true;
                break;
            }
            default: break;
        }
    }
    return a;
}

void observe(AttackerState& a, const Session& s, const std::string& record_id, const std::vector<Term>& clear_terms,
             Trace& trace) {
    if (s.mode == LinkMode::Plain) {
        learn(a, clear_terms, "link:" + s.link_id, trace);
    } else {
        Term handle = Term::enc(Term::key("tls/" + s.session_id, KeyKind::Symmetric), Term::atom("record/" + record_id));
        learn(a, {handle}, "link:" + s.link_id, trace);
    }
}

bool apply_mutation(SecuredDocument& doc, const Mutation& m) {
    auto set = [&](const std::string& field, const Term& v) {
        const FieldSlot* s = doc.slot(field);
        if (!s) return false;
        if (s->disclosure && s->disclosure->value == v) return false;
        tamper_set_value(doc, field, v);
        return true;
    };
    bool changed = false;
    if (m.op == "set_field") {
        changed = set(m.field, Term::atom(m.value));
    } else if (m.op == "remove_field") {
        if (doc.slot(m.field)) {
            tamper_remove_slot(doc, m.field);
            changed = true;
        }
    } else if (m.op == "tariff_filter") {
        return tariff_filter(doc);
    } else if (m.op == "set_digest") {
        changed = set("image_digest", Term::hash(Term::atom(m.value)));
    } else if (m.op == "grant") {
        changed = set("granted", Term::atom("true"));
        changed = set("reason", Term::atom("ok")) || changed;
    } else {
        throw ConfigError("unknown mutation '" + m.op + "'");
    }
    if (changed && doc.mode == ProtectionMode::WholeMessageSignature) doc.signature_broken = true;
    return changed;
}

ActResult act(AttackerState& a, const Session& s, const ActorId& from, const ActorId& to, const Message& pending) {
    const bool endpoint = a.controlled.count(from) != 0;
    for (std::size_t i = 0; i < a.spec.script.size(); ++i) {
        const AttackAction& action = a.spec.script[i];
        if (a.consumed[i] || !in_transit(action.type) || !action.match.matches(from, to, pending)) continue;

        if (changes_content(action.type) && !endpoint && s.mode != LinkMode::Plain) {
            if (!action.repeat) a.consumed[i] = true;
            throw CapabilityViolation("'" + a.spec.name + "' cannot alter traffic on secured link '" + s.link_id + "'");
        }

        ActResult r;
        r.action = i;
        if (action.type == ActionType::Drop) {
            r.kind = ActKind::Dropped;
        } else if (action.type == ActionType::Inject) {
            Message m = pending;
            m.doc = SecuredDocument{};
            m.doc.header = pending.doc.header;
            m.doc.header.doc_type = action.inject_doc_type.empty() ? pending.doc.header.doc_type : action.inject_doc_type;
            m.doc.header.producer_cert.clear();
            for (const auto& f : action.inject_fields) m.doc.slots.push_back(FieldSlot{f.name, std::nullopt, Disclosure{f.value, std::nullopt}, {}});
            r.kind = ActKind::Injected;
            r.message = std::move(m);
        } else {
            Message m = pending;
            if (!apply_mutation(m.doc, action.mutation)) continue;
            r.kind = ActKind::Modified;
            r.message = std::move(m);
        }
        if (!action.repeat) a.consumed[i] = true;
        return r;
    }
    return ActResult{ActKind::Deliver, pending, std::nullopt};
}

bool can_derive(const AttackerState& a, const Term& t) { return a.knowledge.can_derive(t); }

AttackerState& AdversaryHub::add(const AttackerSpec& spec) {
    if (find(spec.name)) throw ConfigError("duplicate attacker '" + spec.name + "'");
    attackers_.push_back(std::make_unique<AttackerState>(activate(spec, topology_, trace_)));
    return *attackers_.back();
}

Interceptor::Outcome AdversaryHub::on_transit(const Session& s, const ActorId& from, const ActorId& to, const Message& m) {
    Outcome out{DeliveryStatus::Delivered, m};
    for (auto& ap : attackers_) {
        AttackerState& a = *ap;
        const bool endpoint = a.controlled.count(from) != 0;
        const bool on_path = a.attached_to_link(s.link_id);
        if (!endpoint && !on_path) continue;

        if (endpoint)
            learn(a, message_terms(*out.message), "endpoint:" + from, trace_);
        else
            observe(a, s, out.message->msg_id, message_terms(*out.message), trace_);

        ActResult r;
        try {
            r = act(a, s, from, to, *out.message);
        } catch (const CapabilityViolation& e) {
            blocked(a, ActionType::ModifyInTransit, e.what(), trace_,
                    json{{"link", s.link_id}, {"msg_id", out.message->msg_id}, {"doc_id", out.message->doc.header.doc_id}});
            continue;
        }
        if (!r.action) continue;

        const AttackAction& action = a.spec.script[*r.action];
        json ev{{"attacker", a.spec.name},
                {"action", std::string(to_string(action.type))},
                {"link", s.link_id},
                {"from", from},
                {"to", to},
                {"msg_id", out.message->msg_id},
                {"doc_id", out.message->doc.header.doc_id},
                {"doc_type", out.message->doc.header.doc_type}};
        if (action.type == ActionType::ModifyInTransit) ev["mutation"] = action.mutation.op;
        ev["before"] = to_json(out.message->doc);
        if (r.kind == ActKind::Dropped) {
            trace_.append("attack", {from, to}, ev);
            return Outcome{DeliveryStatus::Dropped, std::nullopt};
        }
        ev["after"] = to_json(r.message->doc);
        trace_.append("attack", {from, to}, ev);
        out.message = std::move(r.message);
        if (r.kind == ActKind::Injected)
            out.status = DeliveryStatus::Injected;
        else if (out.status == DeliveryStatus::Delivered)
            out.status = DeliveryStatus::Modified;
    }
    for (auto& ap : attackers_)
        if (ap->controlled.count(to)) learn(*ap, message_terms(*out.message), "endpoint:" + to, trace_);
    return out;
}

void AdversaryHub::on_observe(const Session& s, const ActorId& from, const std::vector<Term>& clear_terms) {
    for (auto& ap : attackers_) {
        AttackerState& a = *ap;
        if (a.controlled.count(s.client) || a.controlled.count(s.server))
            learn(a, clear_terms, "endpoint:" + from, trace_);
        else if (a.attached_to_link(s.link_id))
            observe(a, s, "ctl/" + from, clear_terms, trace_);
    }
}

void AdversaryHub::observe_air(const ActorId& charge_point, const std::vector<Term>& terms) {
    for (auto& ap : attackers_)
        if (ap->watches_air(charge_point) || ap->controlled.count(charge_point))
            learn(*ap, terms, "air:" + charge_point, trace_);
}

AttackerState* AdversaryHub::find(const std::string& name) {
    for (auto& a : attackers_)
        if (a->spec.name == name) return a.get();
    return nullptr;
}

bool AdversaryHub::is_compromised(const ActorId& actor) const {
    return std::any_of(attackers_.begin(), attackers_.end(), [&](const auto& a) { return a->controlled.count(actor) != 0; });
}

}  // namespace evsec
