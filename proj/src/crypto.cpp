// SPDX-License-Identifier: Apache-2.0
#include "evsec/crypto.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace evsec {

std::string KeyFactory::next_tag() {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng_()));
    return std::to_string(counter_++) + "-" + std::string(buf, 8);
}

KeyPair KeyFactory::keygen(const ActorId& owner, const std::string& algorithm_label) {
    KeyPair kp;
    kp.key_id = owner + "/" + algorithm_label + "/" + next_tag();
    kp.owner = owner;
    kp.algorithm_label = algorithm_label;
    kp.public_part = Term::key(kp.key_id, KeyKind::Public);
    kp.private_part = Term::key(kp.key_id, KeyKind::Private);
    return kp;
}

Term KeyFactory::symmetric_key(const std::string& label) {
    return Term::key(label + "/" + next_tag(), KeyKind::Symmetric);
}

Term KeyFactory::fresh_nonce(const std::string& purpose) {
    return Term::nonce(purpose + "/" + next_tag());
}

Term sign(const KeyPair& signer, const Term& body) {
    if (!signer.private_part)
        throw MissingPrivateKey("no private part for key " + signer.key_id);
    return Term::sign(*signer.private_part, body);
}

bool verify(const Term& public_key, const Term& signed_term) {
    if (signed_term.kind() != TermKind::Sign) return false;
    if (public_key.kind() != TermKind::Key || public_key.key_kind() != KeyKind::Public) return false;
    const Term& k = signed_term.key_operand();
    return k.kind() == TermKind::Key && k.key_kind() == KeyKind::Private && k.text() == public_key.text();
}

Term kdf_diversify(const Term& master_key, const std::string& uid) {
    return Term::kdf(master_key, Term::atom(uid));
}

std::vector<std::string> approved_cipher_suites(const std::optional<std::vector<std::string>>& configured) {
    std::vector<std::string> suites{kMandatoryCipherSuite};
    if (!configured) return suites;
    if (configured->empty()) throw ConfigError("cipher_suites: at least one suite required");
    for (const auto& s : *configured)
        if (std::find(suites.begin(), suites.end(), s) == suites.end()) suites.push_back(s);
    return suites;
}

Term Certificate::to_term() const {
    Term body = Term::tuple({Term::atom("cert"), Term::atom(cert_id), Term::atom(subject),
                             Term::atom(std::string(to_string(subject_role))), public_key});
    return Term::sign(Term::key(issuer_key_id, KeyKind::Private), body);
}

const TrustAnchor& Pki::add_anchor(const std::string& anchor_id, KeyFactory& keys) {
    auto kp = keys.keygen("anchor:" + anchor_id, "root");
    auto [it, inserted] = anchors_.emplace(anchor_id, TrustAnchor{anchor_id, kp.public_part});
    if (!inserted) throw ConfigError("duplicate trust anchor '" + anchor_id + "'");
    return it->second;
}

const Certificate& Pki::issue_certificate(const Issuer& issuer, const std::string& subject,
                                          Role subject_role, const Term& public_key) {
    Certificate cert;
    if (const auto* a = std::get_if<AnchorRef>(&issuer)) {
        const TrustAnchor* anc = anchor(a->anchor_id);
        if (!anc) throw InvalidIssuer("unknown trust anchor '" + a->anchor_id + "'");
        cert.issuer_key_id = anc->root_public_key.text();
    } else {
        const auto& ref = std::get<CertRef>(issuer);
        const Certificate* parent = find(ref.cert_id);
        if (!parent) throw InvalidIssuer("unknown issuer certificate '" + ref.cert_id + "'");
        auto root = root_of(ref.cert_id);
        if (!root || !verify_chain(ref.cert_id, *root))
            throw InvalidIssuer("issuer chain of '" + ref.cert_id + "' is not valid");
        cert.issuer_key_id = parent->public_key.text();
    }
    cert.cert_id = "cert-" + std::to_string(serial_++) + "-" + subject;
    cert.subject = subject;
    cert.subject_role = subject_role;
    cert.public_key = public_key;
    cert.issuer = issuer;
    auto [it, _] = certs_.emplace(cert.cert_id, std::move(cert));
    return it->second;
}

std::optional<std::string> Pki::root_of(const std::string& cert_id) const {
    std::set<std::string> seen;
    const Certificate* c = find(cert_id);
    while (c) {
        if (!seen.insert(c->cert_id).second) return std::nullopt;
        if (const auto* a = std::get_if<AnchorRef>(&c->issuer)) {
            if (!anchor(a->anchor_id)) return std::nullopt;
            return a->anchor_id;
        }
        c = find(std::get<CertRef>(c->issuer).cert_id);
    }
    return std::nullopt;
}

bool Pki::verify_chain(const std::string& cert_id, const std::string& anchor_id) const {
    std::set<std::string> seen;
    const Certificate* c = find(cert_id);
    while (c) {
        if (!c->valid || !seen.insert(c->cert_id).second) return false;
        if (const auto* a = std::get_if<AnchorRef>(&c->issuer)) return a->anchor_id == anchor_id && anchor(anchor_id);
        c = find(std::get<CertRef>(c->issuer).cert_id);
    }
    return false;
}

void Pki::set_validity(const std::string& cert_id, bool valid) {
    auto it = certs_.find(cert_id);
    if (it == certs_.end()) throw ConfigError("unknown certificate '" + cert_id + "'");
    it->second.valid = valid;
}

const Certificate* Pki::find(const std::string& cert_id) const {
    auto it = certs_.find(cert_id);
    return it == certs_.end() ? nullptr : &it->second;
}

const TrustAnchor* Pki::anchor(const std::string& anchor_id) const {
    auto it = anchors_.find(anchor_id);
    return it == anchors_.end() ? nullptr : &it->second;
}

}  // namespace evsec
