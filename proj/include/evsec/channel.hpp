// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evsec/envelope.hpp"
#include "evsec/knowledge.hpp"
#include "evsec/model.hpp"
#include "evsec/trace.hpp"

namespace evsec {

class HandshakeFailure : public Error {
public:
    enum class Reason { BadChain, UnapprovedSuite, NoProofOfPossession };
    HandshakeFailure(Reason r, const std::string& what) : Error(what), reason_(r) {}
    [[nodiscard]] Reason reason() const { return reason_; }

private:
    Reason reason_;
};

class PeerOffline : public Error {
public:
    using Error::Error;
};

class SessionClosed : public Error {
public:
    using Error::Error;
};

class NotAuthenticated : public Error {
public:
    using Error::Error;
};

/// Application message: a (possibly unprotected) document plus the static
/// client token that accompanies requests on token-authenticated links.
struct Message {
    std::string msg_id;
    SecuredDocument doc;
    std::optional<Term> token;
};

/// Terms visible to anyone who can read the message in the clear.
std::vector<Term> message_terms(const Message& m);

json to_json(const Message& m);
Message message_from_json(const json& j);

struct Session {
    std::string session_id;
    std::string link_id;
    ActorId client;
    ActorId server;
    LinkMode mode = LinkMode::Plain;
    std::optional<ActorId> authenticated_server;
    std::optional<ActorId> authenticated_client;
    bool established = false;
    /// Client passed static-token authentication (if the link uses tokens).
    bool token_accepted = false;
    /// Token presented at authentication; accompanies every client request.
    std::optional<Term> presented_token;
    /// Set when an attacker, not the configured client, opened the session.
    std::string impostor;
};

enum class DeliveryStatus { Delivered, Modified, Dropped, Injected };
std::string_view to_string(DeliveryStatus s);

struct DeliveryResult {
    DeliveryStatus status = DeliveryStatus::Delivered;
    std::optional<Message> delivered;
    std::size_t event_index = 0;
};

/// Hook through which attackers see and alter traffic. `on_transit` returns
/// the message to deliver (possibly altered), or nullopt to drop it.
class Interceptor {
public:
    virtual ~Interceptor() = default;

    struct Outcome {
        DeliveryStatus status = DeliveryStatus::Delivered;
        std::optional<Message> message;
    };

    virtual Outcome on_transit(const Session& s, const ActorId& from, const ActorId& to, const Message& m) = 0;
    /// Non-message traffic on a link (token presentations, handshakes).
    virtual void on_observe(const Session& s, const ActorId& from, const std::vector<Term>& clear_terms) = 0;
};

/// Point-to-point links of one scenario run, with TLS-like handshake
/// semantics. Owns the sessions and the current static tokens.
class Network {
public:
    Network(const Topology& topology, Trace& trace);

    void set_interceptor(Interceptor* i) { interceptor_ = i; }
    void set_online(const ActorId& actor, bool online);
    [[nodiscard]] bool is_online(const ActorId& actor) const;

    /// Opens a session on `link_id` from `initiator` (one of its endpoints).
    /// An `impostor` name with knowledge means an attacker claims the
    /// initiator's identity using only what it can derive.
    Session establish(const std::string& link_id, const ActorId& initiator, const std::string& impostor = {},
                      const Knowledge* impostor_knowledge = nullptr);

    DeliveryResult send(const Session& session, const ActorId& from, Message message);

    /// Compares the presented term to the link's current token; the
    /// presentation crosses the link and is traced.
    bool authenticate_client_static(Session& session, const Term& presented, const std::string& presenter);

    /// Replaces the link token in-band. Requires an authenticated client.
    void rotate_static_token(Session& session, const Term& new_secret);

    void close(Session& session);

    [[nodiscard]] std::optional<Term> current_token(const std::string& link_id) const;
    [[nodiscard]] const Topology& topology() const { return topology_; }
    [[nodiscard]] std::string next_message_id();

private:
    void check_open(const Session& s) const;

    const Topology& topology_;
    Trace& trace_;
    Interceptor* interceptor_ = nullptr;
    std::map<ActorId, bool> online_;
    std::map<std::string, Term> tokens_;
    std::set<std::string> closed_;
    std::size_t session_counter_ = 0;
    std::size_t message_counter_ = 0;
};

}  // namespace evsec
