// SPDX-License-Identifier: Apache-2.0
#include "evsec/envelope.hpp"

#include <algorithm>
#include <set>

namespace evsec {

std::string_view to_string(ProtectionMode m) {
    switch (m) {
        case ProtectionMode::NoProtection: return "NoProtection";
        case ProtectionMode::WholeMessageSignature: return "WholeMessageSignature";
        case ProtectionMode::SelectiveDisclosure: return "SelectiveDisclosure";
    }
    return "?";
}

std::optional<ProtectionMode> protection_from_string(std::string_view s) {
    for (auto m : {ProtectionMode::NoProtection, ProtectionMode::WholeMessageSignature,
                   ProtectionMode::SelectiveDisclosure})
        if (to_string(m) == s) return m;
    return std::nullopt;
}

std::string_view to_string(VerifyFailure f) {
    switch (f) {
        case VerifyFailure::None: return "none";
        case VerifyFailure::Unsigned: return "unsigned";
        case VerifyFailure::BadSignature: return "bad_signature";
        case VerifyFailure::CommitmentMismatch: return "commitment_mismatch";
        case VerifyFailure::BadChain: return "bad_chain";
    }
    return "?";
}

std::string_view to_string(OriginStatus s) {
    switch (s) {
        case OriginStatus::Proof: return "Proof";
        case OriginStatus::RepudiationPossible: return "RepudiationPossible";
        case OriginStatus::TamperDetected: return "TamperDetected";
        case OriginStatus::WrongProducer: return "WrongProducer";
    }
    return "?";
}

const FieldSlot* SecuredDocument::slot(const std::string& name) const {
    for (const auto& s : slots)
        if (s.name == name) return &s;
    return nullptr;
}

FieldSlot* SecuredDocument::slot(const std::string& name) {
    for (auto& s : slots)
        if (s.name == name) return &s;
    return nullptr;
}

FieldList SecuredDocument::plain_fields() const {
    FieldList out;
    for (const auto& s : slots)
        if (s.disclosure) out.push_back({s.name, s.disclosure->value});
    return out;
}

namespace {

std::string leaf_of(const std::string& name) {
    auto dot = name.rfind('.');
    return dot == std::string::npos ? name : name.substr(dot + 1);
}

Term header_term(const SecuredDocument& doc) {
    std::vector<Term> recipients;
    for (const auto& r : doc.header.intended_recipients) recipients.push_back(Term::atom(r));
    return Term::tuple({Term::atom(doc.header.producer), Term::atom(doc.header.producer_cert),
                        Term::atom(doc.header.doc_id), Term::atom(doc.header.doc_type),
                        Term::atom(std::string(to_string(doc.mode))), Term::tuple(recipients)});
}

const Term kAbsent = Term::atom("<absent>");

}  // namespace

Term field_commitment(const std::string& name, const Term& salt, const Term& value) {
    return Term::hash(Term::tuple({Term::atom("commit"), Term::atom(name), salt, value}));
}

Term signature_input(const SecuredDocument& doc) {
    std::vector<Term> parts;
    for (const auto& s : doc.slots) {
        if (doc.mode == ProtectionMode::SelectiveDisclosure)
            parts.push_back(s.commitment ? *s.commitment : kAbsent);
        else
            parts.push_back(Term::pair(Term::atom(s.name), s.disclosure ? s.disclosure->value : kAbsent));
    }
    return Term::hash(Term::pair(header_term(doc), Term::tuple(parts)));
}

SecuredDocument protect(const Producer& producer, const std::string& doc_id, const std::string& doc_type,
                        const FieldList& fields, ProtectionMode mode, const std::vector<ActorId>& recipients,
                        const ConfidentialityPolicy& policy, const RecipientKeys& recipient_keys, KeyFactory& salts) {
    std::set<std::string> names;
    for (const auto& f : fields)
        if (!names.insert(f.name).second) throw DuplicateFieldName("duplicate field name '" + f.name + "'");

    SecuredDocument doc;
    doc.header = {producer.id, producer.certificate, doc_id, doc_type, recipients};
    doc.mode = mode;

    if (mode != ProtectionMode::NoProtection) {
        if (!producer.signing_key || !producer.signing_key->private_part)
            throw MissingKey("producer '" + producer.id + "' has no signing key");
        if (producer.certificate.empty()) throw MissingKey("producer '" + producer.id + "' has no certificate");
    }

    for (const auto& f : fields) {
        FieldSlot slot;
        slot.name = f.name;
        if (mode != ProtectionMode::SelectiveDisclosure) {
            slot.disclosure = Disclosure{f.value, std::nullopt};
            doc.slots.push_back(std::move(slot));
            continue;
        }
        Term salt = salts.fresh_nonce("salt");
        slot.commitment = field_commitment(f.name, salt, f.value);
        auto pol = policy.find(leaf_of(f.name));
        if (pol == policy.end()) {
            slot.disclosure = Disclosure{f.value, salt};
        } else {
            for (const auto& r : pol->second) {
                auto key = recipient_keys.find(r);
                if (key == recipient_keys.end()) throw MissingKey("no encryption key for recipient '" + r + "'");
                slot.confidential_for.push_back({r, Term::enc(key->second, Term::pair(f.value, salt))});
            }
        }
        doc.slots.push_back(std::move(slot));
    }

    if (mode != ProtectionMode::NoProtection) doc.signature = sign(*producer.signing_key, signature_input(doc));
    return doc;
}

SecuredDocument protect(const Producer& producer, const std::string& doc_id, const Payload& payload,
                        ProtectionMode mode, const std::vector<ActorId>& recipients,
                        const ConfidentialityPolicy& policy, const RecipientKeys& recipient_keys, KeyFactory& salts) {
    validate(payload);
    return protect(producer, doc_id, std::string(doc_type_of(payload)), to_fields(payload), mode, recipients, policy,
                   recipient_keys, salts);
}

SecuredDocument redact(SecuredDocument doc, const std::string& field_name) {
    FieldSlot* s = doc.slot(field_name);
    if (!s) throw UnknownField("unknown field '" + field_name + "'");
    s->disclosure.reset();
    s->confidential_for.clear();
    if (doc.mode == ProtectionMode::WholeMessageSignature) doc.signature_broken = true;
    return doc;
}

VerifyResult verify_document(const SecuredDocument& doc, const Pki& pki, const std::string& anchor_id) {
    VerifyResult r;
    r.producer = doc.header.producer;
    auto fail = [&](VerifyFailure f, std::string detail) {
        r.ok = false;
        r.failure = f;
        r.detail = std::move(detail);
        return r;
    };
    if (doc.mode == ProtectionMode::NoProtection || !doc.signature) return fail(VerifyFailure::Unsigned, "no signature");

    const Certificate* cert = pki.find(doc.header.producer_cert);
    if (!cert) return fail(VerifyFailure::BadChain, "unknown producer certificate");
    if (cert->subject != doc.header.producer)
        return fail(VerifyFailure::BadChain, "certificate subject '" + cert->subject + "' is not the producer");
    if (!pki.verify_chain(cert->cert_id, anchor_id)) return fail(VerifyFailure::BadChain, "certificate chain invalid");

    if (doc.signature_broken) return fail(VerifyFailure::BadSignature, "signed content was removed");
    if (!verify(cert->public_key, *doc.signature))
        return fail(VerifyFailure::BadSignature, "signature key does not match producer certificate");
    if (!(doc.signature->body() == signature_input(doc)))
        return fail(VerifyFailure::BadSignature, "signature does not cover this content");

    if (doc.mode == ProtectionMode::SelectiveDisclosure) {
        for (const auto& s : doc.slots) {
            if (!s.commitment) return fail(VerifyFailure::CommitmentMismatch, "slot '" + s.name + "' has no commitment");
            if (!s.disclosure) continue;
            if (!s.disclosure->salt ||
                !(field_commitment(s.name, *s.disclosure->salt, s.disclosure->value) == *s.commitment))
                return fail(VerifyFailure::CommitmentMismatch, "field '" + s.name + "' does not match its commitment");
        }
    }
    r.ok = true;
    return r;
}

OriginResult prove_origin(const SecuredDocument& stored, const ActorId& claimed_producer, const Pki& pki,
                          const std::string& anchor_id) {
    OriginResult out;
    out.producer = stored.header.producer;
    if (stored.mode == ProtectionMode::NoProtection || !stored.signature) {
        out.status = OriginStatus::RepudiationPossible;
        out.failure = VerifyFailure::Unsigned;
        return out;
    }
    auto v = verify_document(stored, pki, anchor_id);
    if (!v) {
        out.status = OriginStatus::TamperDetected;
        out.failure = v.failure;
        return out;
    }
    out.status = v.producer == claimed_producer ? OriginStatus::Proof : OriginStatus::WrongProducer;
    return out;
}

FieldAccess decrypt_field(const SecuredDocument& doc, const std::string& field_name, const ActorId& recipient,
                          const std::optional<Term>& private_key) {
    const FieldSlot* s = doc.slot(field_name);
    if (!s) throw UnknownField("unknown field '" + field_name + "'");
    FieldAccess a;
    if (s->disclosure) {
        a.granted = true;
        a.value = s->disclosure->value;
        return a;
    }
    for (const auto& sealed : s->confidential_for) {
        if (sealed.recipient != recipient || !private_key) continue;
        const Term& ct = sealed.ciphertext;
        if (ct.kind() != TermKind::Enc || !(decryption_key_for(ct.key_operand()) == *private_key)) continue;
        const Term& body = ct.body();
        if (body.kind() != TermKind::Pair) {
            a.reason = "malformed sealed value";
            return a;
        }
        const Term& value = body.children()[0];
        const Term& salt = body.children()[1];
        if (s->commitment && !(field_commitment(s->name, salt, value) == *s->commitment)) {
            a.reason = "commitment mismatch";
            return a;
        }
        a.granted = true;
        a.value = value;
        return a;
    }
    a.reason = s->redacted() ? "redacted" : "access denied";
    return a;
}

OpenResult open_document(const SecuredDocument& doc, const ActorId& recipient, const std::optional<Term>& private_key,
                         const Pki& pki, const std::string& anchor_id) {
    OpenResult out;
    out.verification = verify_document(doc, pki, anchor_id);
    for (const auto& s : doc.slots) {
        auto access = decrypt_field(doc, s.name, recipient, private_key);
        if (access) {
            out.fields.push_back({s.name, *access.value});
        } else {
            out.unreadable.push_back(s.name);
            if (access.reason == "commitment mismatch" && out.verification.ok) {
                out.verification.ok = false;
                out.verification.failure = VerifyFailure::CommitmentMismatch;
                out.verification.detail = "sealed field '" + s.name + "' does not match its commitment";
            }
        }
    }
    return out;
}

namespace {

// Canonical number form of a JSON-style target: trailing zeros dropped.
Term canonical_value(const Term& v) {
    if (v.kind() != TermKind::Atom) return v;
    const std::string& s = v.text();
    auto dot = s.find('.');
    if (dot == std::string::npos) return v;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (i != dot && !(s[i] >= '0' && s[i] <= '9') && !(i == 0 && s[i] == '-')) return v;
    std::string t = s;
    while (!t.empty() && t.back() == '0') t.pop_back();
    if (!t.empty() && t.back() == '.') t.pop_back();
    return Term::atom(t);
}

}  // namespace

SecuredDocument convert_format(const SecuredDocument& doc, const std::string& to_format, ConversionKind kind) {
    SecuredDocument out = doc;
    out.format = to_format;
    if (kind == ConversionKind::EnvelopePreserving) return out;
    std::vector<FieldSlot> slots;
    for (const auto& s : doc.slots) {
        if (s.redacted() && doc.mode == ProtectionMode::SelectiveDisclosure) continue;
        FieldSlot c = s;
        if (c.disclosure) {
            c.disclosure->value = canonical_value(c.disclosure->value);
            c.disclosure->salt.reset();
        }
        slots.push_back(std::move(c));
    }
    std::stable_sort(slots.begin(), slots.end(), [](const FieldSlot& a, const FieldSlot& b) { return a.name < b.name; });
    out.slots = std::move(slots);
    return out;
}

std::vector<Term> document_terms(const SecuredDocument& doc) {
    std::vector<Term> out{Term::atom(doc.header.producer), Term::atom(doc.header.doc_id),
                          Term::atom(doc.header.doc_type)};
    for (const auto& s : doc.slots) {
        if (s.commitment) out.push_back(*s.commitment);
        if (s.disclosure) {
            out.push_back(s.disclosure->value);
            if (s.disclosure->salt) out.push_back(*s.disclosure->salt);
        }
        for (const auto& sealed : s.confidential_for) out.push_back(sealed.ciphertext);
    }
    if (doc.signature) out.push_back(*doc.signature);
    return out;
}

void tamper_set_value(SecuredDocument& doc, const std::string& field_name, const Term& value) {
    FieldSlot* s = doc.slot(field_name);
    if (!s) throw UnknownField("unknown field '" + field_name + "'");
    if (s->disclosure) {
        s->disclosure->value = value;
    } else {
        // A sealed value cannot be read, but it can be replaced.
        s->confidential_for.clear();
        s->disclosure = Disclosure{value, std::nullopt};
    }
}

void tamper_remove_slot(SecuredDocument& doc, const std::string& field_name) {
    auto it = std::find_if(doc.slots.begin(), doc.slots.end(), [&](const FieldSlot& s) { return s.name == field_name; });
    if (it == doc.slots.end()) throw UnknownField("unknown field '" + field_name + "'");
    doc.slots.erase(it);
}

void tamper_rename_slot(SecuredDocument& doc, const std::string& from, const std::string& to) {
    FieldSlot* s = doc.slot(from);
    if (!s) throw UnknownField("unknown field '" + from + "'");
    s->name = to;
}

}  // namespace evsec
