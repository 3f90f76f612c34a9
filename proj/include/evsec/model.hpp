// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "evsec/common.hpp"
#include "evsec/crypto.hpp"
#include "evsec/term.hpp"

namespace evsec {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class TopologyError : public Error {
public:
    enum class Kind { DuplicateActorId, DanglingLinkEndpoint, DuplicateContractId, DuplicateLinkId, InvalidReference };
    TopologyError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    [[nodiscard]] Kind kind() const { return kind_; }

private:
    Kind kind_;
};

class AmbiguousContract : public Error {
public:
    using Error::Error;
};

class MalformedPayload : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Links
// ---------------------------------------------------------------------------

enum class LinkMode { Plain, ServerAuth, MutualAuth };
enum class ClientAuthKind { None, StaticToken, ClientCertificate };

std::string_view to_string(LinkMode m);
std::optional<LinkMode> link_mode_from_string(std::string_view s);
std::string_view to_string(ClientAuthKind k);
std::optional<ClientAuthKind> client_auth_from_string(std::string_view s);

struct LinkConfig {
    std::string id;  // defaults to "<client>-<server>"
    ActorId client;
    ActorId server;
    LinkMode mode = LinkMode::MutualAuth;
    std::string cipher_suite = kMandatoryCipherSuite;
    ClientAuthKind client_auth = ClientAuthKind::ClientCertificate;
    /// Static tokens were exchanged out-of-band over a secure channel.
    bool secure_bootstrap = true;
    /// Anchor the client validates the server against (empty: topology default).
    std::string anchor;
    /// Short-range hop (NFC, cable) that works without either side's backhaul.
    bool local = false;
};

struct Link {
    LinkConfig config;
    std::string server_cert;
    std::string client_cert;
    std::optional<Term> static_token;

    [[nodiscard]] const std::string& id() const { return config.id; }
    [[nodiscard]] bool touches(const ActorId& a) const { return config.client == a || config.server == a; }
    [[nodiscard]] const ActorId& peer_of(const ActorId& a) const {
        return config.client == a ? config.server : config.client;
    }
};

// ---------------------------------------------------------------------------
// Actors, credentials, contracts
// ---------------------------------------------------------------------------

struct StaticToken {
    std::string link_id;
    Term secret;
};

struct Actor {
    ActorId id;
    Role role = Role::EV;
    std::vector<KeyPair> key_material;
    std::vector<std::string> certificates;
    std::vector<StaticToken> static_secrets;
    bool compromised = false;
    bool online = true;
    bool holds_master_key = false;
    /// Anchor this actor's certificates chain to.
    std::string anchor;

    /// Key pair with the given label ("tls", "sig").
    [[nodiscard]] const KeyPair* key(const std::string& label) const;
    /// Certificate issued for the key with the given label.
    [[nodiscard]] std::string certificate_for(const std::string& label) const;
};

/// Driver credential: an RFID/EMV card or a Plug-and-Charge contract
/// certificate in the EV. One credential carries the material for every
/// authorization mechanism; the configured mechanism decides which is used.
struct Credential {
    std::string id;
    ActorId holder;
    std::string uid;
    KeyPair contract_key;
    std::string contract_cert;
    /// Card key shared only with the issuing eMSP (online verification).
    Term issuer_key;
    /// Card can sign meter data (EIM signing).
    bool signing = false;
};

struct Contract {
    std::string contract_id;
    ActorId emsp;
    /// Credential reference (card UID / contract certificate subject).
    std::string driver_credential;
    bool valid = true;
};

// ---------------------------------------------------------------------------
// Configuration and topology
// ---------------------------------------------------------------------------

struct ActorConfig {
    ActorId id;
    Role role = Role::EV;
    bool online = true;
    bool holds_master_key = false;
    bool certificate_valid = true;
    std::string anchor;
};

struct CredentialConfig {
    std::string id;
    ActorId holder;
    std::string uid;
    bool revoked = false;
    bool signing = false;
    std::string anchor;
};

struct ContractConfig {
    std::string contract_id;
    ActorId emsp;
    std::string credential;  // uid
    bool valid = true;
};

struct TopologyConfig {
    std::vector<std::string> anchors{"root"};
    std::vector<ActorConfig> actors;
    std::vector<LinkConfig> links;
    std::vector<CredentialConfig> credentials;
    std::vector<ContractConfig> contracts;
    /// Per-CPO UID whitelists pushed to their charge points.
    std::map<ActorId, std::vector<std::string>> uid_whitelists;
    std::optional<std::vector<std::string>> extra_cipher_suites;
};

class Topology {
public:
    std::map<ActorId, Actor> actors;
    std::vector<Link> links;
    std::vector<Credential> credentials;
    std::map<std::string, Contract> contracts;
    std::map<ActorId, std::vector<std::string>> uid_whitelists;
    Pki pki;
    std::string default_anchor;
    Term master_key;
    std::vector<std::string> approved_suites;

    [[nodiscard]] const Actor& actor(const ActorId& id) const;
    [[nodiscard]] const Actor* find_actor(const ActorId& id) const;
    [[nodiscard]] const Link& link(const std::string& id) const;
    [[nodiscard]] const Link* find_link(const std::string& id) const;
    [[nodiscard]] const Link* link_between(const ActorId& a, const ActorId& b) const;
    [[nodiscard]] const Credential* credential(const std::string& id) const;
    [[nodiscard]] const Credential* credential_by_uid(const std::string& uid) const;
    /// CPO operating the given charge point (first CPO linked to it).
    [[nodiscard]] std::optional<ActorId> operator_of(const ActorId& charge_point) const;
    [[nodiscard]] std::vector<ActorId> actors_with_role(Role r) const;
    /// Anchor used to validate certificates presented by `actor`.
    [[nodiscard]] const std::string& anchor_of(const ActorId& actor) const;

    /// Shortest billing route from a CPO to an eMSP; intermediate hops must
    /// be clearing houses. Empty if no route exists.
    [[nodiscard]] std::vector<ActorId> billing_path(const ActorId& cpo, const ActorId& emsp) const;
};

/// Builds a topology; pure in (config, seed).
Topology build_topology(const TopologyConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Payloads
// ---------------------------------------------------------------------------

struct Field {
    std::string name;
    Term value;
    friend bool operator==(const Field&, const Field&) = default;
};
using FieldList = std::vector<Field>;

struct UidBroadcast {
    std::string uid;
};
struct SymmetricResponse {
    std::string uid;
    Term nonce;
    Term mac;
};
struct AsymmetricResponse {
    std::string uid;
    std::string cert_id;
    Term nonce;
    Term signature;
};
struct OnlineToken {
    std::string uid;
    Term nonce;
    Term credential;
};
using CredentialPresentation = std::variant<UidBroadcast, SymmetricResponse, AsymmetricResponse, OnlineToken>;

const std::string& presented_uid(const CredentialPresentation& p);
std::string_view presentation_method(const CredentialPresentation& p);

struct AuthorizationRequest {
    CredentialPresentation presentation;
};
struct AuthorizationResponse {
    bool granted = false;
    std::string reason;
};
struct ChargeDetailRecord {
    std::string cdr_id;
    std::string contract_id;
    std::string location;
    std::int64_t start_time = 0;
    std::int64_t end_time = 0;
    Decimal energy;
    Decimal cost;
};
struct TariffEntry {
    std::int64_t slot_start = 0;
    std::int64_t slot_end = 0;
    Decimal price_per_kwh;
    Decimal max_power_kw;
};
struct TariffTable {
    std::vector<TariffEntry> entries;
};
struct SelectedRate {
    std::string session_id;
    std::int64_t entry_index = 0;
};
struct MeterReading {
    std::string meter_id;
    std::int64_t timestamp = 0;
    Decimal value;
};
/// Slot start times are minutes; forecasts use 15-minute granularity.
struct ForecastSlot {
    std::int64_t slot_start = 0;
    Decimal allotted_kw;
    Decimal spare_kw;
};
struct CapacityForecast {
    std::vector<ForecastSlot> slots;
};
struct ProfileSlot {
    std::int64_t slot_start = 0;
    Decimal limit_kw;
};
struct ChargeProfile {
    ActorId charge_point;
    std::vector<ProfileSlot> slots;
};
struct FirmwareUpdate {
    std::string version;
    Term image_digest;
};
struct SignedSessionDescription {
    std::string session_id;
    ActorId charge_point;
    std::string contract_id;
    Decimal max_energy;
};

using Payload = std::variant<AuthorizationRequest, AuthorizationResponse, ChargeDetailRecord, TariffTable,
                             SelectedRate, MeterReading, CapacityForecast, ChargeProfile, FirmwareUpdate,
                             SignedSessionDescription>;

inline constexpr std::int64_t kForecastSlotMinutes = 15;

std::string_view doc_type_of(const Payload& p);

/// Throws MalformedPayload on invariant violations (negative energy, time
/// travel, unaligned forecast slots).
void validate(const Payload& p);

/// Flattens a payload into uniquely named fields, in a fixed order.
FieldList to_fields(const Payload& p);

/// Inverse of `to_fields`; throws MalformedPayload on missing or invalid fields.
Payload payload_from_fields(std::string_view doc_type, const FieldList& fields);

/// Looks up the unique contract for the presented credential.
/// Returns nullopt if none matches; throws AmbiguousContract if several do.
std::optional<Contract> lookup_contract(const Topology& topology, const CredentialPresentation& presentation);

}  // namespace evsec
