// SPDX-License-Identifier: Apache-2.0
#include "evsec/channel.hpp"

#include <algorithm>

#include "evsec/codec.hpp"

namespace evsec {

std::vector<Term> message_terms(const Message& m) {
    std::vector<Term> out = document_terms(m.doc);
    if (m.token) out.push_back(*m.token);
    return out;
}

json to_json(const Message& m) {
    json j{{"msg_id", m.msg_id}, {"doc", to_json(m.doc)}};
    if (m.token) j["token"] = to_json(*m.token);
    return j;
}

Message message_from_json(const json& j) {
    Message m;
    try {
        m.msg_id = j.at("msg_id").get<std::string>();
        m.doc = document_from_json(j.at("doc"));
        if (j.contains("token")) m.token = term_from_json(j.at("token"));
    } catch (const json::exception& e) {
        throw CorruptTrace(std::string("malformed message: ") + e.what());
    }
    return m;
}

std::string_view to_string(DeliveryStatus s) {
    switch (s) {
        case DeliveryStatus::Delivered: return "delivered";
        case DeliveryStatus::Modified: return "modified";
        case DeliveryStatus::Dropped: return "dropped";
        case DeliveryStatus::Injected: return "injected";
    }
    return "?";
}

Network::Network(const Topology& topology, Trace& trace) : topology_(topology), trace_(trace) {
    for (const auto& [id, a] : topology_.actors) online_[id] = a.online;
    for (const auto& l : topology_.links)
        if (l.static_token) tokens_.emplace(l.id(), *l.static_token);
}

void Network::set_online(const ActorId& actor, bool online) {
    (void)topology_.actor(actor);
    online_[actor] = online;
}

bool Network::is_online(const ActorId& actor) const {
    auto it = online_.find(actor);
    return it != online_.end() && it->second;
}

std::string Network::next_message_id() { return "m" + std::to_string(message_counter_++); }

Session Network::establish(const std::string& link_id, const ActorId& initiator, const std::string& impostor,
                           const Knowledge* impostor_knowledge) {
    const Link& link = topology_.link(link_id);
    if (!link.touches(initiator))
        throw TopologyError(TopologyError::Kind::InvalidReference, "'" + initiator + "' is not an endpoint of '" + link_id + "'");

    Session s;
    s.session_id = "s" + std::to_string(session_counter_++);
    s.link_id = link_id;
    s.client = link.config.client;
    s.server = link.config.server;
    s.mode = link.config.mode;
    s.impostor = impostor;

    json ev{{"link", link_id},
            {"session", s.session_id},
            {"client", s.client},
            {"server", s.server},
            {"initiator", initiator},
            {"mode", std::string(to_string(s.mode))},
            {"cipher_suite", link.config.cipher_suite},
            {"impostor", impostor}};
    auto fail = [&](const std::string& reason) {
        ev["ok"] = false;
        ev["reason"] = reason;
        trace_.append("handshake", {s.client, s.server}, ev);
    };

    const ActorId& responder = link.peer_of(initiator);
    if (!link.config.local && (!is_online(responder) || (impostor.empty() && !is_online(initiator)))) {
        fail("peer offline");
        throw PeerOffline("'" + (is_online(responder) ? initiator : responder) + "' is offline");
    }

    if (s.mode != LinkMode::Plain) {
        const auto& suites = topology_.approved_suites;
        if (std::find(suites.begin(), suites.end(), link.config.cipher_suite) == suites.end()) {
            fail("unapproved cipher suite");
            throw HandshakeFailure(HandshakeFailure::Reason::UnapprovedSuite,
                                   "cipher suite '" + link.config.cipher_suite + "' is not approved");
        }
        const std::string& client_anchor =
            link.config.anchor.empty() ? topology_.anchor_of(s.client) : link.config.anchor;
        const Certificate* server_cert = topology_.pki.find(link.server_cert);
        if (!server_cert || server_cert->subject != s.server ||
            !topology_.pki.verify_chain(link.server_cert, client_anchor)) {
            fail("bad server certificate chain");
            throw HandshakeFailure(HandshakeFailure::Reason::BadChain,
                                   "server certificate of '" + s.server + "' does not chain to '" + client_anchor + "'");
        }
        if (interceptor_) interceptor_->on_observe(s, s.server, {server_cert->to_term()});
        s.authenticated_server = s.server;

        if (s.mode == LinkMode::MutualAuth) {
            const std::string& server_anchor =
                link.config.anchor.empty() ? topology_.anchor_of(s.server) : link.config.anchor;
            const Certificate* client_cert = topology_.pki.find(link.client_cert);
            if (!client_cert || client_cert->subject != s.client ||
                !topology_.pki.verify_chain(link.client_cert, server_anchor)) {
                fail("bad client certificate chain");
                throw HandshakeFailure(HandshakeFailure::Reason::BadChain,
                                       "client certificate of '" + s.client + "' does not chain to '" + server_anchor + "'");
            }
            Term private_key = decryption_key_for(client_cert->public_key);
            bool possession = false;
            if (impostor.empty()) {
                const KeyPair* kp = topology_.actor(s.client).key("tls");
                possession = kp && kp->private_part && *kp->private_part == private_key;
            } else {
                possession = impostor_knowledge && impostor_knowledge->can_derive(private_key);
            }
            if (!possession) {
                fail("no proof of possession for client key");
                throw HandshakeFailure(HandshakeFailure::Reason::NoProofOfPossession,
                                       "initiator cannot prove possession of the client key of '" + s.client + "'");
            }
            if (interceptor_) interceptor_->on_observe(s, s.client, {client_cert->to_term()});
            s.authenticated_client = s.client;
        }
    }
    s.established = true;
    ev["ok"] = true;
    ev["authenticated_server"] = s.authenticated_server ? json(*s.authenticated_server) : json(nullptr);
    ev["authenticated_client"] = s.authenticated_client ? json(*s.authenticated_client) : json(nullptr);
    trace_.append("handshake", {s.client, s.server}, ev);
    return s;
}

void Network::check_open(const Session& s) const {
    if (!s.established || closed_.count(s.session_id)) throw SessionClosed("session " + s.session_id + " is closed");
}

DeliveryResult Network::send(const Session& session, const ActorId& from, Message message) {
    check_open(session);
    const Link& link = topology_.link(session.link_id);
    if (!link.touches(from))
        throw TopologyError(TopologyError::Kind::InvalidReference, "'" + from + "' is not an endpoint of '" + session.link_id + "'");
    const ActorId& to = link.peer_of(from);
    if (!link.config.local && !is_online(to)) throw PeerOffline("'" + to + "' is offline");

    if (link.config.client_auth == ClientAuthKind::StaticToken && from == session.client) {
        if (!session.token_accepted)
            throw NotAuthenticated("client of session " + session.session_id + " has not authenticated");
        message.token = session.presented_token;
    }
    if (message.msg_id.empty()) message.msg_id = next_message_id();

    json base{{"link", session.link_id},
              {"session", session.session_id},
              {"from", from},
              {"to", to},
              {"msg_id", message.msg_id},
              {"doc_id", message.doc.header.doc_id},
              {"doc_type", message.doc.header.doc_type},
              {"mode", std::string(to_string(session.mode))},
              {"server_authenticated", session.authenticated_server.has_value()},
              {"impostor", session.impostor}};
    json sent = base;
    sent["message"] = to_json(message);
    trace_.append("send", {from, to}, sent);

    Interceptor::Outcome outcome{DeliveryStatus::Delivered, message};
    if (interceptor_) outcome = interceptor_->on_transit(session, from, to, message);

    DeliveryResult r;
    r.status = outcome.status;
    json ev = base;
    ev["status"] = std::string(to_string(outcome.status));
    if (outcome.status == DeliveryStatus::Dropped || !outcome.message) {
        r.status = DeliveryStatus::Dropped;
        ev["status"] = "dropped";
        r.event_index = trace_.append("drop", {from, to}, ev);
        return r;
    }
    ev["message"] = to_json(*outcome.message);
    r.event_index = trace_.append("deliver", {to}, ev);
    r.delivered = std::move(outcome.message);
    return r;
}

bool Network::authenticate_client_static(Session& session, const Term& presented, const std::string& presenter) {
    check_open(session);
    const Link& link = topology_.link(session.link_id);
    if (interceptor_) interceptor_->on_observe(session, session.client, {presented});
    auto it = tokens_.find(session.link_id);
    bool accepted = it != tokens_.end() && it->second == presented;
    session.token_accepted = accepted;
    session.presented_token = presented;
    trace_.append("client_auth", {session.client, session.server},
                  json{{"link", session.link_id},
                       {"session", session.session_id},
                       {"method", "static_token"},
                       {"client", session.client},
                       {"presenter", presenter},
                       {"accepted", accepted},
                       {"mode", std::string(to_string(session.mode))},
                       {"secure_bootstrap", link.config.secure_bootstrap}});
    if (!accepted) close(session);
    return accepted;
}

void Network::rotate_static_token(Session& session, const Term& new_secret) {
    check_open(session);
    if (!session.token_accepted && !session.authenticated_client)
        throw NotAuthenticated("token rotation on unauthenticated session " + session.session_id);
    if (interceptor_) interceptor_->on_observe(session, session.client, {new_secret});
    tokens_[session.link_id] = new_secret;
    session.presented_token = new_secret;
    trace_.append("token.rotate", {session.client, session.server},
                  json{{"link", session.link_id},
                       {"session", session.session_id},
                       {"mode", std::string(to_string(session.mode))}});
}

void Network::close(Session& session) {
    closed_.insert(session.session_id);
    session.established = false;
}

std::optional<Term> Network::current_token(const std::string& link_id) const {
    auto it = tokens_.find(link_id);
    if (it == tokens_.end()) return std::nullopt;
    return it->second;
}

}  // namespace evsec
