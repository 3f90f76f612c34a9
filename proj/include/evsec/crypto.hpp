// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "evsec/common.hpp"
#include "evsec/term.hpp"

namespace evsec {

class MissingPrivateKey : public Error {
public:
    using Error::Error;
};

class InvalidIssuer : public Error {
public:
    using Error::Error;
};

struct KeyPair {
    std::string key_id;
    ActorId owner;
    std::string algorithm_label;
    Term public_part;
    std::optional<Term> private_part;
};

/// Deterministic source of key ids and nonces. Same seed and same call
/// sequence yield the same identifiers.
class KeyFactory {
public:
    explicit KeyFactory(std::uint64_t seed) : rng_(seed) {}

    KeyPair keygen(const ActorId& owner, const std::string& algorithm_label);
    Term symmetric_key(const std::string& label);
    Term fresh_nonce(const std::string& purpose);

private:
    std::string next_tag();

    std::mt19937_64 rng_;
    std::uint64_t counter_ = 0;
};

Term sign(const KeyPair& signer, const Term& body);
bool verify(const Term& public_key, const Term& signed_term);

/// Card key derived from the system master key and the card UID.
Term kdf_diversify(const Term& master_key, const std::string& uid);

inline constexpr const char* kMandatoryCipherSuite = "TLS_ECDHE_ECDSA_WITH_AES_128_GCM_SHA256";

/// The mandatory suite, followed by any configured additions. A configured
/// but empty list is rejected.
std::vector<std::string> approved_cipher_suites(
    const std::optional<std::vector<std::string>>& configured = std::nullopt);

struct TrustAnchor {
    std::string anchor_id;
    Term root_public_key;
};

struct AnchorRef {
    std::string anchor_id;
    friend bool operator==(const AnchorRef&, const AnchorRef&) = default;
};

struct CertRef {
    std::string cert_id;
    friend bool operator==(const CertRef&, const CertRef&) = default;
};

using Issuer = std::variant<AnchorRef, CertRef>;

struct Certificate {
    std::string cert_id;
    /// Actor id, or credential reference for contract certificates.
    std::string subject;
    Role subject_role = Role::EV;
    Term public_key;
    Issuer issuer;
    /// Key id of the issuing authority (anchor root key or issuer subject key).
    std::string issuer_key_id;
    bool valid = true;

    /// Symbolic encoding as seen on the wire: the issuer's signature over
    /// (id, subject, role, key).
    [[nodiscard]] Term to_term() const;
};

/// Certificate store with one or more trust anchors. A single root is the
/// default; additional anchors model a split PKI.
class Pki {
public:
    Pki() = default;

    const TrustAnchor& add_anchor(const std::string& anchor_id, KeyFactory& keys);

    /// Throws InvalidIssuer if the issuer is unknown or its chain is invalid.
    const Certificate& issue_certificate(const Issuer& issuer, const std::string& subject,
                                         Role subject_role, const Term& public_key);

    /// True iff every certificate on the issuer path is valid and the path
    /// ends at `anchor_id`.
    [[nodiscard]] bool verify_chain(const std::string& cert_id, const std::string& anchor_id) const;

    /// Anchor the chain of `cert_id` terminates at, if the path is well-formed.
    [[nodiscard]] std::optional<std::string> root_of(const std::string& cert_id) const;

    void set_validity(const std::string& cert_id, bool valid);

    [[nodiscard]] const Certificate* find(const std::string& cert_id) const;
    [[nodiscard]] const TrustAnchor* anchor(const std::string& anchor_id) const;
    [[nodiscard]] const std::map<std::string, Certificate>& certificates() const { return certs_; }
    [[nodiscard]] const std::map<std::string, TrustAnchor>& anchors() const { return anchors_; }

private:
    std::map<std::string, TrustAnchor> anchors_;
    std::map<std::string, Certificate> certs_;
    std::uint64_t serial_ = 0;
};

}  // namespace evsec
