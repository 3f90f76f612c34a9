// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evsec/adversary.hpp"
#include "evsec/channel.hpp"
#include "evsec/envelope.hpp"
#include "evsec/model.hpp"
#include "evsec/trace.hpp"

namespace evsec {

class InfeasibleAllocation : public Error {
public:
    using Error::Error;
};

/// A flow stopped early (handshake failure, unreachable peer). Already traced.
class FlowAborted : public Error {
public:
    using Error::Error;
};

enum class AuthMechanism { WeakUid, Symmetric, Asymmetric, Online };
std::string_view to_string(AuthMechanism m);
std::optional<AuthMechanism> auth_mechanism_from_string(std::string_view s);

struct ProtectionPolicy {
    ProtectionMode default_mode = ProtectionMode::SelectiveDisclosure;
    std::map<std::string, ProtectionMode> per_doc_type;

    [[nodiscard]] ProtectionMode mode_for(const std::string& doc_type) const;
};

struct SimulationOptions {
    /// Let offline-denied drivers draw a minimum charge. Off by default and
    /// never consulted by the verdicts.
    bool minimum_charge = false;
    Decimal minimum_charge_energy = Decimal::units(2);
};

struct AuthOutcome {
    std::string request_id;
    bool attempted = true;
    bool granted = false;
    std::string reason;
    std::string session_id;
};

struct ChargeSession {
    std::string session_id;
    std::string request_id;
    std::string uid;
    std::string contract_id;
    ActorId charge_point;
    std::string presenter;
    std::int64_t start_time = 0;
    std::int64_t end_time = 0;
    Decimal energy;
    std::optional<Decimal> selected_price;
};

struct StoredRecord {
    ActorId holder;
    SecuredDocument doc;
    std::size_t event = 0;
};

struct TariffOutcome {
    bool accepted = false;
    std::optional<std::int64_t> selected_index;
    std::optional<Decimal> selected_price;
    std::string doc_id;
};

struct FirmwareOutcome {
    bool installed = false;
    std::string reason;
};

/// One scenario run: owns the network, the attackers and the state of every
/// flow. All randomness comes from the seed.
class Simulation {
public:
    Simulation(const Topology& topology, Trace& trace, std::uint64_t seed, ProtectionPolicy protection,
               ConfidentialityPolicy confidentiality, SimulationOptions options = {});

    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    AdversaryHub& adversary() { return hub_; }
    Network& network() { return net_; }
    [[nodiscard]] const Topology& topology() const { return topo_; }

    /// Traces the configuration of every link.
    void announce_links();

    AuthOutcome authorize(const std::string& credential_id, const ActorId& charge_point, AuthMechanism mechanism,
                          Decimal energy = Decimal::units(20));

    /// Every attacker (or the named one) tries to start a session at the
    /// charge point with whatever it can derive for each credential.
    std::vector<AuthOutcome> attacker_authorize(const ActorId& charge_point, AuthMechanism mechanism,
                                                const std::vector<std::string>& credential_ids,
                                                const std::string& attacker = {});

    /// Attackers try to pose as the client of a link. Returns true if any got in.
    bool attacker_impersonate(const std::string& link_id, const std::string& attacker = {});

    TariffOutcome tariff_flow(const ActorId& emsp, const ActorId& cpo, const ActorId& charge_point, const ActorId& ev,
                              const TariffTable& table, const std::string& session_id = {});

    std::optional<StoredRecord> cdr_flow(const ActorId& cpo, const ActorId& emsp, const std::string& session_id = {},
                                         std::optional<ProtectionMode> protection = std::nullopt,
                                         Decimal default_price = Decimal::from_milli(300));

    /// Post-storage alteration of the latest billing record held by `actor`.
    /// Returns whether the alteration is detectable.
    bool falsify_stored(const ActorId& actor, const std::string& field, const std::string& value);

    void rotate_token(const std::string& link_id);

    /// Converts the latest stored record at `actor`; returns verification after conversion.
    bool format_convert(const ActorId& actor, const std::string& to_format, ConversionKind kind);

    std::vector<ChargeProfile> smart_charging_flow(const ActorId& dso, const ActorId& cpo,
                                                   const std::vector<ActorId>& charge_points,
                                                   const CapacityForecast& forecast, Decimal min_kw = {});

    FirmwareOutcome firmware_flow(const ActorId& cpio, const std::vector<ActorId>& via, const ActorId& charge_point,
                                  const std::string& version, bool signed_update);

    /// CPO-signed session description relayed by a phone to an offline
    /// charge point. `replay` re-sends the previous description.
    AuthOutcome nfc_session_flow(const ActorId& cpo, const ActorId& phone, const ActorId& charge_point,
                                 const std::string& contract_id, Decimal max_energy, bool replay = false);

    /// Signed meter reading from the EV, the driver's card, or the charge
    /// point itself; stored by the CPO.
    std::optional<StoredRecord> meter_reading(const std::string& signer, const ActorId& ev, const ActorId& charge_point,
                                              const ActorId& cpo, Decimal value);

    void set_online(const ActorId& actor, bool online);

    /// Removes "location" from every stored billing record at `actor`.
    void gdpr_redaction(const ActorId& actor);

    [[nodiscard]] const std::vector<StoredRecord>& stored() const { return stored_; }
    [[nodiscard]] const std::vector<ChargeSession>& sessions() const { return sessions_; }

private:
    struct Presenter;

    Session& session_for(const ActorId& a, const ActorId& b, const std::string& flow);
    SecuredDocument originate(const ActorId& producer, const Payload& payload, const std::vector<ActorId>& recipients,
                              ProtectionMode mode);
    SecuredDocument originate_as(const Producer& producer, const Payload& payload,
                                 const std::vector<ActorId>& recipients, ProtectionMode mode);
    std::optional<SecuredDocument> route(const std::vector<ActorId>& path, SecuredDocument doc, const std::string& flow);
    std::optional<FieldList> receive(const ActorId& actor, const SecuredDocument& doc, const ActorId& expected_producer,
                                     ProtectionMode expected, bool final);
    [[nodiscard]] std::optional<Term> private_key_of(const ActorId& actor, const std::string& label) const;
    [[nodiscard]] const std::string& trust_anchor(const ActorId& actor) const;

    AuthOutcome run_authorization(const ActorId& cp, AuthMechanism mechanism, const std::string& uid,
                                  const Presenter& presenter, Decimal energy);
    /// Asks the back office; nullopt if it cannot be reached.
    std::optional<std::pair<bool, std::string>> backend_decision(const ActorId& cp, const AuthorizationRequest& request,
                                                                 const std::string& request_id, AuthMechanism mechanism);
    void decision(const ActorId& authority, const std::string& request_id, bool granted, const std::string& uid,
                  const std::string& contract_id, const std::string& reason);
    std::string start_session(const ActorId& cp, const std::string& request_id, const std::string& uid,
                              const std::string& contract_id, const std::string& presenter, Decimal energy);
    ChargeSession* find_session(const std::string& session_id);
    void abort(const std::string& flow, const std::string& reason);

    const Topology& topo_;
    Trace& trace_;
    KeyFactory keys_;
    Network net_;
    AdversaryHub hub_;
    ProtectionPolicy protection_;
    ConfidentialityPolicy confidentiality_;
    SimulationOptions options_;
    RecipientKeys recipient_keys_;

    std::map<std::string, Session> sessions_by_link_;
    std::vector<StoredRecord> stored_;
    std::vector<ChargeSession> sessions_;
    std::map<ActorId, std::set<std::string>> replay_cache_;
    std::optional<SecuredDocument> last_description_;
    std::size_t doc_counter_ = 0;
    std::size_t request_counter_ = 0;
    std::size_t rotation_counter_ = 0;
    std::int64_t clock_ = 0;
};

}  // namespace evsec
