// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evsec/crypto.hpp"
#include "evsec/model.hpp"
#include "evsec/term.hpp"

namespace evsec {

enum class ProtectionMode { NoProtection, WholeMessageSignature, SelectiveDisclosure };

std::string_view to_string(ProtectionMode m);
std::optional<ProtectionMode> protection_from_string(std::string_view s);

class UnknownField : public Error {
public:
    using Error::Error;
};

class DuplicateFieldName : public Error {
public:
    using Error::Error;
};

class MissingKey : public Error {
public:
    using Error::Error;
};

struct DocumentHeader {
    ActorId producer;
    std::string producer_cert;
    std::string doc_id;
    std::string doc_type;
    std::vector<ActorId> intended_recipients;
};

struct Disclosure {
    Term value;
    /// Present only under SelectiveDisclosure.
    std::optional<Term> salt;
};

struct SealedValue {
    ActorId recipient;
    /// Enc(recipient public key, Pair(value, salt)).
    Term ciphertext;
};

/// One named field. Under SelectiveDisclosure the commitment
/// Hash(name, salt, value) is always present and the value is either
/// disclosed in the clear, sealed for specific recipients, or redacted.
/// Other modes carry only the plain value.
struct FieldSlot {
    std::string name;
    std::optional<Term> commitment;
    std::optional<Disclosure> disclosure;
    std::vector<SealedValue> confidential_for;

    [[nodiscard]] bool redacted() const { return !disclosure && confidential_for.empty(); }
};

struct SecuredDocument {
    DocumentHeader header;
    ProtectionMode mode = ProtectionMode::NoProtection;
    std::vector<FieldSlot> slots;
    std::optional<Term> signature;
    /// Set when a whole-message-signed document lost part of its content.
    bool signature_broken = false;
    std::string format = "native";

    [[nodiscard]] const FieldSlot* slot(const std::string& name) const;
    [[nodiscard]] FieldSlot* slot(const std::string& name);
    /// Values readable without any key, in slot order.
    [[nodiscard]] FieldList plain_fields() const;
};

/// Field name (last path component, e.g. "price_per_kwh" or "location")
/// to the recipients allowed to read it.
using ConfidentialityPolicy = std::map<std::string, std::vector<ActorId>>;

struct Producer {
    ActorId id;
    const KeyPair* signing_key = nullptr;
    std::string certificate;
};

/// Public encryption keys of potential recipients.
using RecipientKeys = std::map<ActorId, Term>;

SecuredDocument protect(const Producer& producer, const std::string& doc_id, const std::string& doc_type,
                        const FieldList& fields, ProtectionMode mode, const std::vector<ActorId>& recipients,
                        const ConfidentialityPolicy& policy, const RecipientKeys& recipient_keys, KeyFactory& salts);

SecuredDocument protect(const Producer& producer, const std::string& doc_id, const Payload& payload,
                        ProtectionMode mode, const std::vector<ActorId>& recipients,
                        const ConfidentialityPolicy& policy, const RecipientKeys& recipient_keys, KeyFactory& salts);

SecuredDocument redact(SecuredDocument doc, const std::string& field_name);

enum class VerifyFailure { None, Unsigned, BadSignature, CommitmentMismatch, BadChain };
std::string_view to_string(VerifyFailure f);

struct VerifyResult {
    bool ok = false;
    ActorId producer;
    VerifyFailure failure = VerifyFailure::None;
    std::string detail;
    explicit operator bool() const { return ok; }
};

/// Signature valid under the producer's certificate chain to `anchor_id`,
/// and every disclosed value matches its commitment.
VerifyResult verify_document(const SecuredDocument& doc, const Pki& pki, const std::string& anchor_id);

enum class OriginStatus { Proof, RepudiationPossible, TamperDetected, WrongProducer };
std::string_view to_string(OriginStatus s);

struct OriginResult {
    OriginStatus status = OriginStatus::RepudiationPossible;
    ActorId producer;
    VerifyFailure failure = VerifyFailure::None;
};

OriginResult prove_origin(const SecuredDocument& stored, const ActorId& claimed_producer, const Pki& pki,
                          const std::string& anchor_id);

struct FieldAccess {
    bool granted = false;
    std::optional<Term> value;
    std::string reason;
    explicit operator bool() const { return granted; }
};

/// Plain-disclosed values are readable by anyone; sealed values only by a
/// listed recipient holding `private_key`. Sealed values are checked against
/// their commitment after decryption.
FieldAccess decrypt_field(const SecuredDocument& doc, const std::string& field_name, const ActorId& recipient,
                          const std::optional<Term>& private_key);

/// Verifies the document and returns every field the recipient can read.
struct OpenResult {
    VerifyResult verification;
    FieldList fields;
    /// Names of fields that were neither disclosed nor readable.
    std::vector<std::string> unreadable;
};
OpenResult open_document(const SecuredDocument& doc, const ActorId& recipient, const std::optional<Term>& private_key,
                         const Pki& pki, const std::string& anchor_id);

enum class ConversionKind { Lossy, EnvelopePreserving };

/// Re-encodes a document in another format. Lossy conversion re-serializes
/// values canonically for the target format and drops material the target
/// format cannot carry (salts, redacted slots); envelope-preserving
/// conversion wraps the original unchanged.
SecuredDocument convert_format(const SecuredDocument& doc, const std::string& to_format, ConversionKind kind);

/// Every term an observer of the document learns.
std::vector<Term> document_terms(const SecuredDocument& doc);

/// Commitment to a single field value.
Term field_commitment(const std::string& name, const Term& salt, const Term& value);

/// Input covered by the producer's signature.
Term signature_input(const SecuredDocument& doc);

// Tampering primitives used by the adversary. None of them touch the
// signature or commitments.
void tamper_set_value(SecuredDocument& doc, const std::string& field_name, const Term& value);
void tamper_remove_slot(SecuredDocument& doc, const std::string& field_name);
void tamper_rename_slot(SecuredDocument& doc, const std::string& from, const std::string& to);

}  // namespace evsec
