// SPDX-License-Identifier: Apache-2.0
#include "evsec/model.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace evsec {

// ---------------------------------------------------------------------------
// Enum names
// ---------------------------------------------------------------------------

std::string_view to_string(LinkMode m) {
    switch (m) {
        case LinkMode::Plain: return "Plain";
        case LinkMode::ServerAuth: return "ServerAuth";
        case LinkMode::MutualAuth: return "MutualAuth";
    }
    return "?";
}

std::optional<LinkMode> link_mode_from_string(std::string_view s) {
    for (auto m : {LinkMode::Plain, LinkMode::ServerAuth, LinkMode::MutualAuth})
        if (to_string(m) == s) return m;
    return std::nullopt;
}

std::string_view to_string(ClientAuthKind k) {
    switch (k) {
        case ClientAuthKind::None: return "none";
        case ClientAuthKind::StaticToken: return "static_token";
        case ClientAuthKind::ClientCertificate: return "client_cert";
    }
    return "?";
}

std::optional<ClientAuthKind> client_auth_from_string(std::string_view s) {
    for (auto k : {ClientAuthKind::None, ClientAuthKind::StaticToken, ClientAuthKind::ClientCertificate})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Actor / Topology queries
// ---------------------------------------------------------------------------

const KeyPair* Actor::key(const std::string& label) const {
    for (const auto& k : key_material)
        if (k.algorithm_label == label) return &k;
    return nullptr;
}

std::string Actor::certificate_for(const std::string& label) const {
    // Certificates are stored in the same order as key_material.
    for (std::size_t i = 0; i < key_material.size() && i < certificates.size(); ++i)
        if (key_material[i].algorithm_label == label) return certificates[i];
    return {};
}

const Actor& Topology::actor(const ActorId& id) const {
    const Actor* a = find_actor(id);
    if (!a) throw TopologyError(TopologyError::Kind::InvalidReference, "unknown actor '" + id + "'");
    return *a;
}

const Actor* Topology::find_actor(const ActorId& id) const {
    auto it = actors.find(id);
    return it == actors.end() ? nullptr : &it->second;
}

const Link& Topology::link(const std::string& id) const {
    const Link* l = find_link(id);
    if (!l) throw TopologyError(TopologyError::Kind::InvalidReference, "unknown link '" + id + "'");
    return *l;
}

const Link* Topology::find_link(const std::string& id) const {
    for (const auto& l : links)
        if (l.id() == id) return &l;
    return nullptr;
}

const Link* Topology::link_between(const ActorId& a, const ActorId& b) const {
    for (const auto& l : links)
        if ((l.config.client == a && l.config.server == b) || (l.config.client == b && l.config.server == a))
            return &l;
    return nullptr;
}

const Credential* Topology::credential(const std::string& id) const {
    for (const auto& c : credentials)
        if (c.id == id) return &c;
    return nullptr;
}

const Credential* Topology::credential_by_uid(const std::string& uid) const {
    for (const auto& c : credentials)
        if (c.uid == uid) return &c;
    return nullptr;
}

std::optional<ActorId> Topology::operator_of(const ActorId& charge_point) const {
    for (const auto& l : links) {
        if (!l.touches(charge_point)) continue;
        const Actor* peer = find_actor(l.peer_of(charge_point));
        if (peer && peer->role == Role::CPO) return peer->id;
    }
    return std::nullopt;
}

std::vector<ActorId> Topology::actors_with_role(Role r) const {
    std::vector<ActorId> out;
    for (const auto& [id, a] : actors)
        if (a.role == r) out.push_back(id);
    return out;
}

const std::string& Topology::anchor_of(const ActorId& actor_id) const {
    const Actor* a = find_actor(actor_id);
    return (a && !a->anchor.empty()) ? a->anchor : default_anchor;
}

std::vector<ActorId> Topology::billing_path(const ActorId& cpo, const ActorId& emsp) const {
    std::map<ActorId, ActorId> parent;
    std::deque<ActorId> queue{cpo};
    parent[cpo] = cpo;
    while (!queue.empty()) {
        ActorId cur = queue.front();
        queue.pop_front();
        if (cur == emsp) break;
        if (cur != cpo) {
            const Actor* a = find_actor(cur);
            if (!a || a->role != Role::ClearingHouse) continue;
        }
        for (const auto& l : links) {
            if (!l.touches(cur)) continue;
            const ActorId& next = l.peer_of(cur);
            if (parent.count(next)) continue;
            parent[next] = cur;
            queue.push_back(next);
        }
    }
    if (!parent.count(emsp)) return {};
    std::vector<ActorId> path{emsp};
    while (path.back() != cpo) path.push_back(parent[path.back()]);
    std::reverse(path.begin(), path.end());
    return path;
}

// ---------------------------------------------------------------------------
// build_topology
// ---------------------------------------------------------------------------

namespace {

using TE = TopologyError::Kind;

class TopologyBuilder {
public:
    TopologyBuilder(const TopologyConfig& cfg, std::uint64_t seed) : cfg_(cfg), keys_(seed) {}

    Topology build() {
        if (cfg_.anchors.empty()) throw ConfigError("at least one trust anchor required");
        for (const auto& a : cfg_.anchors) t_.pki.add_anchor(a, keys_);
        t_.default_anchor = cfg_.anchors.front();
        t_.master_key = keys_.symmetric_key("master");
        t_.approved_suites = approved_cipher_suites(cfg_.extra_cipher_suites);

        for (const auto& ac : cfg_.actors) add_actor(ac);
        for (const auto& cc : cfg_.credentials) add_credential(cc);
        for (const auto& lc : cfg_.links) add_link(lc);
        for (const auto& kc : cfg_.contracts) add_contract(kc);
        for (const auto& [cpo, uids] : cfg_.uid_whitelists) {
            if (!t_.find_actor(cpo)) throw TopologyError(TE::InvalidReference, "whitelist for unknown actor '" + cpo + "'");
            t_.uid_whitelists[cpo] = uids;
        }
        return std::move(t_);
    }

private:
    std::string anchor_or_default(const std::string& a) {
        const std::string& id = a.empty() ? t_.default_anchor : a;
        if (!t_.pki.anchor(id)) throw TopologyError(TE::InvalidReference, "unknown trust anchor '" + id + "'");
        return id;
    }

    // One intermediate CA per (anchor, role): separate trees under one root.
    std::string sub_ca(const std::string& anchor, Role role) {
        auto key = anchor + "/" + std::string(to_string(role));
        auto it = sub_cas_.find(key);
        if (it != sub_cas_.end()) return it->second;
        auto kp = keys_.keygen("ca:" + key, "ca");
        const auto& cert = t_.pki.issue_certificate(AnchorRef{anchor}, "ca:" + key, role, kp.public_part);
        sub_cas_[key] = cert.cert_id;
        return cert.cert_id;
    }

    void add_actor(const ActorConfig& ac) {
        if (t_.actors.count(ac.id)) throw TopologyError(TE::DuplicateActorId, "duplicate actor id '" + ac.id + "'");
        Actor a;
        a.id = ac.id;
        a.role = ac.role;
        a.online = ac.online;
        a.holds_master_key = ac.holds_master_key;
        a.anchor = anchor_or_default(ac.anchor);
        std::string ca = sub_ca(a.anchor, a.role);
        for (const char* label : {"tls", "sig"}) {
            KeyPair kp = keys_.keygen(a.id, label);
            const auto& cert = t_.pki.issue_certificate(CertRef{ca}, a.id, a.role, kp.public_part);
            if (!ac.certificate_valid) t_.pki.set_validity(cert.cert_id, false);
            a.key_material.push_back(kp);
            a.certificates.push_back(cert.cert_id);
        }
        t_.actors.emplace(a.id, std::move(a));
    }

    void add_credential(const CredentialConfig& cc) {
        if (!t_.find_actor(cc.holder))
            throw TopologyError(TE::InvalidReference, "credential '" + cc.id + "' held by unknown actor '" + cc.holder + "'");
        Credential c;
        c.id = cc.id;
        c.holder = cc.holder;
        c.uid = cc.uid;
        c.signing = cc.signing;
        c.contract_key = keys_.keygen(cc.id, "contract");
        std::string ca = sub_ca(anchor_or_default(cc.anchor), Role::EV);
        const auto& cert = t_.pki.issue_certificate(CertRef{ca}, cc.uid, Role::EV, c.contract_key.public_part);
        if (cc.revoked) t_.pki.set_validity(cert.cert_id, false);
        c.contract_cert = cert.cert_id;
        c.issuer_key = keys_.symmetric_key("issuer/" + cc.id);
        t_.credentials.push_back(std::move(c));
    }

    void add_link(LinkConfig lc) {
        if (lc.id.empty()) lc.id = lc.client + "-" + lc.server;
        for (const auto* end : {&lc.client, &lc.server})
            if (!t_.find_actor(*end))
                throw TopologyError(TE::DanglingLinkEndpoint, "link '" + lc.id + "' names unknown actor '" + *end + "'");
        if (t_.find_link(lc.id)) throw TopologyError(TE::DuplicateLinkId, "duplicate link id '" + lc.id + "'");
        if (!lc.anchor.empty()) anchor_or_default(lc.anchor);
        Link l;
        l.server_cert = t_.actor(lc.server).certificate_for("tls");
        l.client_cert = t_.actor(lc.client).certificate_for("tls");
        if (lc.client_auth == ClientAuthKind::StaticToken) {
            l.static_token = keys_.fresh_nonce("token/" + lc.id);
            t_.actors[lc.client].static_secrets.push_back({lc.id, *l.static_token});
            t_.actors[lc.server].static_secrets.push_back({lc.id, *l.static_token});
        }
        l.config = std::move(lc);
        t_.links.push_back(std::move(l));
    }

    void add_contract(const ContractConfig& kc) {
        if (t_.contracts.count(kc.contract_id))
            throw TopologyError(TE::DuplicateContractId, "duplicate contract id '" + kc.contract_id + "'");
        if (!t_.find_actor(kc.emsp))
            throw TopologyError(TE::InvalidReference, "contract '" + kc.contract_id + "' names unknown eMSP '" + kc.emsp + "'");
        t_.contracts.emplace(kc.contract_id, Contract{kc.contract_id, kc.emsp, kc.credential, kc.valid});
    }

    const TopologyConfig& cfg_;
    KeyFactory keys_;
    Topology t_;
    std::map<std::string, std::string> sub_cas_;
};

}  // namespace

Topology build_topology(const TopologyConfig& config, std::uint64_t seed) {
    return TopologyBuilder(config, seed).build();
}

// ---------------------------------------------------------------------------
// Presentations and contracts
// ---------------------------------------------------------------------------

const std::string& presented_uid(const CredentialPresentation& p) {
    return std::visit([](const auto& v) -> const std::string& { return v.uid; }, p);
}

std::string_view presentation_method(const CredentialPresentation& p) {
    struct V {
        std::string_view operator()(const UidBroadcast&) const { return "uid"; }
        std::string_view operator()(const SymmetricResponse&) const { return "symmetric"; }
        std::string_view operator()(const AsymmetricResponse&) const { return "asymmetric"; }
        std::string_view operator()(const OnlineToken&) const { return "online"; }
    };
    return std::visit(V{}, p);
}

std::optional<Contract> lookup_contract(const Topology& topology, const CredentialPresentation& presentation) {
    const std::string& uid = presented_uid(presentation);
    std::optional<Contract> found;
    for (const auto& [id, c] : topology.contracts) {
        if (c.driver_credential != uid) continue;
        if (found) throw AmbiguousContract("credential '" + uid + "' matches contracts '" + found->contract_id + "' and '" + id + "'");
        found = c;
    }
    return found;
}

// ---------------------------------------------------------------------------
// Payload <-> fields
// ---------------------------------------------------------------------------

std::string_view doc_type_of(const Payload& p) {
    static constexpr std::string_view names[] = {"AuthorizationRequest", "AuthorizationResponse", "ChargeDetailRecord",
                                                 "TariffTable",          "SelectedRate",          "MeterReading",
                                                 "CapacityForecast",     "ChargeProfile",         "FirmwareUpdate",
                                                 "SignedSessionDescription"};
    return names[p.index()];
}

void validate(const Payload& p) {
    if (const auto* cdr = std::get_if<ChargeDetailRecord>(&p)) {
        if (cdr->end_time < cdr->start_time) throw MalformedPayload("CDR ends before it starts");
        if (cdr->energy < Decimal{}) throw MalformedPayload("CDR energy is negative");
        if (cdr->cost < Decimal{}) throw MalformedPayload("CDR cost is negative");
    } else if (const auto* fc = std::get_if<CapacityForecast>(&p)) {
        for (const auto& s : fc->slots)
            if (s.slot_start % kForecastSlotMinutes != 0)
                throw MalformedPayload("forecast slot at minute " + std::to_string(s.slot_start) + " is not 15-minute aligned");
    }
}

namespace {

Term num(std::int64_t v) { return Term::atom(std::to_string(v)); }
Term dec(Decimal d) { return Term::atom(d.str()); }
Term str(const std::string& s) { return Term::atom(s); }

class FieldReader {
public:
    FieldReader(std::string_view type, const FieldList& f) : type_(type), fields_(f) {}

    const Term& term(const std::string& name) const {
        for (const auto& f : fields_)
            if (f.name == name) return f.value;
        throw MalformedPayload(std::string(type_) + ": missing field '" + name + "'");
    }
    std::string text(const std::string& name) const {
        const Term& t = term(name);
        if (t.kind() != TermKind::Atom) throw MalformedPayload(std::string(type_) + ": field '" + name + "' is not a value");
        return t.text();
    }
    std::int64_t integer(const std::string& name) const {
        std::string s = text(name);
        try {
            std::size_t pos = 0;
            long long v = std::stoll(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw MalformedPayload(std::string(type_) + ": field '" + name + "' is not an integer");
        }
    }
    Decimal decimal(const std::string& name) const {
        try {
            return Decimal::parse(text(name));
        } catch (const ConfigError&) {
            throw MalformedPayload(std::string(type_) + ": field '" + name + "' is not a decimal");
        }
    }
    bool flag(const std::string& name) const {
        std::string s = text(name);
        if (s == "true") return true;
        if (s == "false") return false;
        throw MalformedPayload(std::string(type_) + ": field '" + name + "' is not a boolean");
    }

private:
    std::string_view type_;
    const FieldList& fields_;
};

std::string idx(const char* prefix, std::size_t i, const char* leaf) {
    return std::string(prefix) + "." + std::to_string(i) + "." + leaf;
}

struct ToFields {
    FieldList out;

    void operator()(const AuthorizationRequest& r) {
        out.push_back({"method", str(std::string(presentation_method(r.presentation)))});
        std::visit(*this, r.presentation);
    }
    void operator()(const UidBroadcast& p) { out.push_back({"uid", str(p.uid)}); }
    void operator()(const SymmetricResponse& p) {
        out.push_back({"uid", str(p.uid)});
        out.push_back({"nonce", p.nonce});
        out.push_back({"mac", p.mac});
    }
    void operator()(const AsymmetricResponse& p) {
        out.push_back({"uid", str(p.uid)});
        out.push_back({"cert_id", str(p.cert_id)});
        out.push_back({"nonce", p.nonce});
        out.push_back({"signature", p.signature});
    }
    void operator()(const OnlineToken& p) {
        out.push_back({"uid", str(p.uid)});
        out.push_back({"nonce", p.nonce});
        out.push_back({"credential", p.credential});
    }
    void operator()(const AuthorizationResponse& r) {
        out.push_back({"granted", str(r.granted ? "true" : "false")});
        out.push_back({"reason", str(r.reason)});
    }
    void operator()(const ChargeDetailRecord& c) {
        out.push_back({"cdr_id", str(c.cdr_id)});
        out.push_back({"contract_id", str(c.contract_id)});
        out.push_back({"location", str(c.location)});
        // The charging period travels as one field.
        out.push_back({"period", str(std::to_string(c.start_time) + "/" + std::to_string(c.end_time))});
        out.push_back({"energy", dec(c.energy)});
        out.push_back({"cost", dec(c.cost)});
    }
    void operator()(const TariffTable& t) {
        out.push_back({"entry_count", num(static_cast<std::int64_t>(t.entries.size()))});
        for (std::size_t i = 0; i < t.entries.size(); ++i) {
            const auto& e = t.entries[i];
            out.push_back({idx("entries", i, "slot_start"), num(e.slot_start)});
            out.push_back({idx("entries", i, "slot_end"), num(e.slot_end)});
            out.push_back({idx("entries", i, "price_per_kwh"), dec(e.price_per_kwh)});
            out.push_back({idx("entries", i, "max_power_kw"), dec(e.max_power_kw)});
        }
    }
    void operator()(const SelectedRate& s) {
        out.push_back({"session_id", str(s.session_id)});
        out.push_back({"entry_index", num(s.entry_index)});
    }
    void operator()(const MeterReading& m) {
        out.push_back({"meter_id", str(m.meter_id)});
        out.push_back({"timestamp", num(m.timestamp)});
        out.push_back({"value", dec(m.value)});
    }
    void operator()(const CapacityForecast& f) {
        out.push_back({"slot_count", num(static_cast<std::int64_t>(f.slots.size()))});
        for (std::size_t i = 0; i < f.slots.size(); ++i) {
            out.push_back({idx("slots", i, "slot_start"), num(f.slots[i].slot_start)});
            out.push_back({idx("slots", i, "allotted_kw"), dec(f.slots[i].allotted_kw)});
            out.push_back({idx("slots", i, "spare_kw"), dec(f.slots[i].spare_kw)});
        }
    }
    void operator()(const ChargeProfile& p) {
        out.push_back({"charge_point", str(p.charge_point)});
        out.push_back({"slot_count", num(static_cast<std::int64_t>(p.slots.size()))});
        for (std::size_t i = 0; i < p.slots.size(); ++i) {
            out.push_back({idx("slots", i, "slot_start"), num(p.slots[i].slot_start)});
            out.push_back({idx("slots", i, "limit_kw"), dec(p.slots[i].limit_kw)});
        }
    }
    void operator()(const FirmwareUpdate& f) {
        out.push_back({"version", str(f.version)});
        out.push_back({"image_digest", f.image_digest});
    }
    void operator()(const SignedSessionDescription& s) {
        out.push_back({"session_id", str(s.session_id)});
        out.push_back({"charge_point", str(s.charge_point)});
        out.push_back({"contract_id", str(s.contract_id)});
        out.push_back({"max_energy", dec(s.max_energy)});
    }
};

CredentialPresentation presentation_from(const FieldReader& r) {
    std::string method = r.text("method");
    if (method == "uid") return UidBroadcast{r.text("uid")};
    if (method == "symmetric") return SymmetricResponse{r.text("uid"), r.term("nonce"), r.term("mac")};
    if (method == "asymmetric")
        return AsymmetricResponse{r.text("uid"), r.text("cert_id"), r.term("nonce"), r.term("signature")};
    if (method == "online") return OnlineToken{r.text("uid"), r.term("nonce"), r.term("credential")};
    throw MalformedPayload("AuthorizationRequest: unknown method '" + method + "'");
}

std::size_t count_of(const FieldReader& r, const std::string& name) {
    std::int64_t n = r.integer(name);
    if (n < 0 || n > 100000) throw MalformedPayload("implausible " + name);
    return static_cast<std::size_t>(n);
}

}  // namespace

FieldList to_fields(const Payload& p) {
    ToFields v;
    std::visit(v, p);
    return std::move(v.out);
}

Payload payload_from_fields(std::string_view doc_type, const FieldList& fields) {
    std::set<std::string> names;
    for (const auto& f : fields)
        if (!names.insert(f.name).second) throw MalformedPayload("duplicate field '" + f.name + "'");
    FieldReader r(doc_type, fields);
    Payload out;
    if (doc_type == "AuthorizationRequest") {
        out = AuthorizationRequest{presentation_from(r)};
    } else if (doc_type == "AuthorizationResponse") {
        out = AuthorizationResponse{r.flag("granted"), r.text("reason")};
    } else if (doc_type == "ChargeDetailRecord") {
        ChargeDetailRecord c;
        c.cdr_id = r.text("cdr_id");
        c.contract_id = r.text("contract_id");
        c.location = r.text("location");
        std::string period = r.text("period");
        auto slash = period.find('/');
        if (slash == std::string::npos) throw MalformedPayload("ChargeDetailRecord: bad period");
        try {
            c.start_time = std::stoll(period.substr(0, slash));
            c.end_time = std::stoll(period.substr(slash + 1));
        } catch (const std::exception&) {
            throw MalformedPayload("ChargeDetailRecord: bad period");
        }
        c.energy = r.decimal("energy");
        c.cost = r.decimal("cost");
        out = c;
    } else if (doc_type == "TariffTable") {
        TariffTable t;
        std::size_t n = count_of(r, "entry_count");
        for (std::size_t i = 0; i < n; ++i)
            t.entries.push_back({r.integer(idx("entries", i, "slot_start")), r.integer(idx("entries", i, "slot_end")),
                                 r.decimal(idx("entries", i, "price_per_kwh")),
                                 r.decimal(idx("entries", i, "max_power_kw"))});
        out = t;
    } else if (doc_type == "SelectedRate") {
        out = SelectedRate{r.text("session_id"), r.integer("entry_index")};
    } else if (doc_type == "MeterReading") {
        out = MeterReading{r.text("meter_id"), r.integer("timestamp"), r.decimal("value")};
    } else if (doc_type == "CapacityForecast") {
        CapacityForecast f;
        std::size_t n = count_of(r, "slot_count");
        for (std::size_t i = 0; i < n; ++i)
            f.slots.push_back({r.integer(idx("slots", i, "slot_start")), r.decimal(idx("slots", i, "allotted_kw")),
                               r.decimal(idx("slots", i, "spare_kw"))});
        out = f;
    } else if (doc_type == "ChargeProfile") {
        ChargeProfile p;
        p.charge_point = r.text("charge_point");
        std::size_t n = count_of(r, "slot_count");
        for (std::size_t i = 0; i < n; ++i)
            p.slots.push_back({r.integer(idx("slots", i, "slot_start")), r.decimal(idx("slots", i, "limit_kw"))});
        out = p;
    } else if (doc_type == "FirmwareUpdate") {
        out = FirmwareUpdate{r.text("version"), r.term("image_digest")};
    } else if (doc_type == "SignedSessionDescription") {
        out = SignedSessionDescription{r.text("session_id"), r.text("charge_point"), r.text("contract_id"),
                                       r.decimal("max_energy")};
    } else {
        throw MalformedPayload("unknown document type '" + std::string(doc_type) + "'");
    }
    validate(out);
    return out;
}

}  // namespace evsec
