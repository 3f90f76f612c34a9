// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evsec/channel.hpp"
#include "evsec/knowledge.hpp"
#include "evsec/model.hpp"
#include "evsec/trace.hpp"

namespace evsec {

class CapabilityViolation : public Error {
public:
    using Error::Error;
};

class InvalidTarget : public Error {
public:
    using Error::Error;
};

/// Physical: field devices (charge points, EVs, cards). Endpoint: a
/// legitimate system turned malicious. Network: one link, or the RFID air
/// interface of a charge point ("air:<cp>").
enum class AttackerKind { Physical, Endpoint, Network };

enum class ActionType {
    Eavesdrop,
    ModifyInTransit,
    Inject,
    Drop,
    ReadCardUid,
    ExtractMasterKey,
    CompromiseActor,
    ReplayTranscript
};

std::string_view to_string(AttackerKind k);
std::optional<AttackerKind> attacker_kind_from_string(std::string_view s);
std::string_view to_string(ActionType t);
std::optional<ActionType> action_type_from_string(std::string_view s);

/// Selects in-transit messages. Empty members match anything.
struct Matcher {
    std::string doc_type;
    ActorId from;
    ActorId to;

    [[nodiscard]] bool matches(const ActorId& msg_from, const ActorId& msg_to, const Message& m) const;
};

/// Content change applied by ModifyInTransit.
///   set_field     field := value
///   remove_field  drop the field
///   tariff_filter keep only the most expensive readable tariff entry
///   set_digest    image_digest := Hash(value)
///   grant         authorization response granted := true
struct Mutation {
    std::string op;
    std::string field;
    std::string value;
};

struct AttackAction {
    ActionType type = ActionType::Eavesdrop;
    Matcher match;
    Mutation mutation;
    /// ReadCardUid: credential to read.
    std::string credential;
    /// Inject: replacement document content.
    std::string inject_doc_type;
    FieldList inject_fields;
    /// In-transit actions fire once unless repeat is set.
    bool repeat = false;
};

struct AttackerSpec {
    std::string name;
    AttackerKind kind = AttackerKind::Network;
    std::string target;
    std::vector<AttackAction> script;
};

struct AttackerState {
    AttackerSpec spec;
    Knowledge knowledge;
    /// Actors under this attacker's control (endpoint semantics).
    std::set<ActorId> controlled;
    /// Physical attacker promoted to endpoint attacker.
    bool escalated = false;
    std::vector<bool> consumed;

    [[nodiscard]] std::string principal() const { return "attacker:" + spec.name; }
    [[nodiscard]] bool has_action(ActionType t) const;
    [[nodiscard]] bool attached_to_link(const std::string& link_id) const;
    [[nodiscard]] bool watches_air(const ActorId& charge_point) const;
};

enum class ActKind { Deliver, Modified, Dropped, Injected };

struct ActResult {
    ActKind kind = ActKind::Deliver;
    std::optional<Message> message;
    /// Index of the script action that fired.
    std::optional<std::size_t> action;
};

/// Everything an actor holds: key pairs, static secrets, the master key,
/// and the material of the credentials it carries.
std::vector<Term> actor_secrets(const Actor& actor, const Topology& topology);

/// Records every newly learned term as a "learn" event.
void learn(AttackerState& a, const std::vector<Term>& terms, const std::string& source, Trace& trace);

/// Validates the target, seeds public knowledge (certificates, public
/// keys) and runs the immediate script actions (CompromiseActor,
/// ReadCardUid, ExtractMasterKey). Throws InvalidTarget.
AttackerState activate(const AttackerSpec& spec, const Topology& topology, Trace& trace);

/// Knowledge gained from traffic on a link: everything on a Plain link,
/// an opaque record handle on a secured one.
void observe(AttackerState& a, const Session& s, const std::string& record_id, const std::vector<Term>& clear_terms,
             Trace& trace);

/// Applies the first pending script action matching the in-transit message.
/// Throws CapabilityViolation for content changes on secured links by a
/// network attacker.
ActResult act(AttackerState& a, const Session& s, const ActorId& from, const ActorId& to, const Message& pending);

[[nodiscard]] bool can_derive(const AttackerState& a, const Term& t);

/// Applies a mutation to a document; returns false if it does not apply.
bool apply_mutation(SecuredDocument& doc, const Mutation& m);

/// Owns every attacker of a run and plugs them into the network.
class AdversaryHub : public Interceptor {
public:
    AdversaryHub(const Topology& topology, Trace& trace) : topology_(topology), trace_(trace) {}

    AttackerState& add(const AttackerSpec& spec);

    Outcome on_transit(const Session& s, const ActorId& from, const ActorId& to, const Message& m) override;
    void on_observe(const Session& s, const ActorId& from, const std::vector<Term>& clear_terms) override;

    /// Card-to-reader radio traffic at a charge point, always in the clear.
    void observe_air(const ActorId& charge_point, const std::vector<Term>& terms);

    [[nodiscard]] AttackerState* find(const std::string& name);
    [[nodiscard]] const std::vector<std::unique_ptr<AttackerState>>& attackers() const { return attackers_; }
    [[nodiscard]] bool is_compromised(const ActorId& actor) const;

private:
    const Topology& topology_;
    Trace& trace_;
    std::vector<std::unique_ptr<AttackerState>> attackers_;
};

}  // namespace evsec
