// SPDX-License-Identifier: Apache-2.0
#include "evsec/codec.hpp"

#include "evsec/trace.hpp"

namespace evsec {

namespace {

const char* op_name(TermKind k) {
    switch (k) {
        case TermKind::Pair: return "pair";
        case TermKind::Hash: return "hash";
        case TermKind::Enc: return "enc";
        case TermKind::Sign: return "sign";
        case TermKind::Mac: return "mac";
        case TermKind::Kdf: return "kdf";
        default: return nullptr;
    }
}

const char* key_kind_name(KeyKind k) {
    switch (k) {
        case KeyKind::Private: return "priv";
        case KeyKind::Public: return "pub";
        case KeyKind::Symmetric: return "sym";
    }
    return "?";
}

template <typename F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw CorruptTrace(std::string("malformed ") + what + ": " + e.what());
    } catch (const MalformedPayload& e) {
        throw CorruptTrace(std::string("malformed ") + what + ": " + e.what());
    }
}

}  // namespace

json to_json(const Term& t) {
    switch (t.kind()) {
        case TermKind::Atom: return json{{"atom", t.text()}};
        case TermKind::Nonce: return json{{"nonce", t.text()}};
        case TermKind::Key: return json{{"key", t.text()}, {"kind", key_kind_name(t.key_kind())}};
        default: {
            json args = json::array();
            for (const auto& c : t.children()) args.push_back(to_json(c));
            return json{{"op", op_name(t.kind())}, {"args", args}};
        }
    }
}

Term term_from_json(const json& j) {
    return guarded("term", [&]() -> Term {
        if (j.contains("atom")) return Term::atom(j.at("atom").get<std::string>());
        if (j.contains("nonce")) return Term::nonce(j.at("nonce").get<std::string>());
        if (j.contains("key")) {
            std::string k = j.at("kind").get<std::string>();
            KeyKind kind = k == "priv" ? KeyKind::Private : k == "pub" ? KeyKind::Public : KeyKind::Symmetric;
            if (k != "priv" && k != "pub" && k != "sym") throw CorruptTrace("unknown key kind '" + k + "'");
            return Term::key(j.at("key").get<std::string>(), kind);
        }
        std::string op = j.at("op").get<std::string>();
        const json& args = j.at("args");
        auto arity = [&](std::size_t n) {
            if (args.size() != n) throw CorruptTrace("term op '" + op + "' expects " + std::to_string(n) + " args");
        };
        if (op == "hash") {
            arity(1);
            return Term::hash(term_from_json(args[0]));
        }
        arity(2);
        Term a = term_from_json(args[0]);
        Term b = term_from_json(args[1]);
        if (op == "pair") return Term::pair(a, b);
        if (op == "enc") return Term::enc(a, b);
        if (op == "sign") return Term::sign(a, b);
        if (op == "mac") return Term::mac(a, b);
        if (op == "kdf") return Term::kdf(a, b);
        throw CorruptTrace("unknown term op '" + op + "'");
    });
}

json to_json(const FieldList& fields) {
    json out = json::array();
    for (const auto& f : fields) out.push_back(json{{"name", f.name}, {"value", to_json(f.value)}});
    return out;
}

FieldList fields_from_json(const json& j) {
    return guarded("field list", [&] {
        FieldList out;
        for (const auto& f : j) out.push_back({f.at("name").get<std::string>(), term_from_json(f.at("value"))});
        return out;
    });
}

json to_json(const Payload& p) { return json{{"type", std::string(doc_type_of(p))}, {"fields", to_json(to_fields(p))}}; }

Payload payload_from_json(const json& j) {
    return guarded("payload", [&] {
        return payload_from_fields(j.at("type").get<std::string>(), fields_from_json(j.at("fields")));
    });
}

json to_json(const SecuredDocument& d) {
    json slots = json::array();
    for (const auto& s : d.slots) {
        json js{{"name", s.name}};
        if (s.commitment) js["commitment"] = to_json(*s.commitment);
        if (s.disclosure) {
            json disc{{"value", to_json(s.disclosure->value)}};
            if (s.disclosure->salt) disc["salt"] = to_json(*s.disclosure->salt);
            js["disclosure"] = disc;
        }
        if (!s.confidential_for.empty()) {
            json sealed = json::array();
            for (const auto& c : s.confidential_for)
                sealed.push_back(json{{"recipient", c.recipient}, {"ciphertext", to_json(c.ciphertext)}});
            js["confidential_for"] = sealed;
        }
        slots.push_back(js);
    }
    json out{{"header",
              {{"producer", d.header.producer},
               {"producer_cert", d.header.producer_cert},
               {"doc_id", d.header.doc_id},
               {"doc_type", d.header.doc_type},
               {"intended_recipients", d.header.intended_recipients}}},
             {"mode", std::string(to_string(d.mode))},
             {"slots", slots},
             {"signature_broken", d.signature_broken},
             {"format", d.format}};
    if (d.signature) out["signature"] = to_json(*d.signature);
    return out;
}

SecuredDocument document_from_json(const json& j) {
    return guarded("document", [&] {
        SecuredDocument d;
        const json& h = j.at("header");
        d.header.producer = h.at("producer").get<std::string>();
        d.header.producer_cert = h.at("producer_cert").get<std::string>();
        d.header.doc_id = h.at("doc_id").get<std::string>();
        d.header.doc_type = h.at("doc_type").get<std::string>();
        d.header.intended_recipients = h.at("intended_recipients").get<std::vector<std::string>>();
        auto mode = protection_from_string(j.at("mode").get<std::string>());
        if (!mode) throw CorruptTrace("unknown protection mode");
        d.mode = *mode;
        for (const auto& js : j.at("slots")) {
            FieldSlot s;
            s.name = js.at("name").get<std::string>();
            if (js.contains("commitment")) s.commitment = term_from_json(js.at("commitment"));
            if (js.contains("disclosure")) {
                const json& disc = js.at("disclosure");
                Disclosure dd{term_from_json(disc.at("value")), std::nullopt};
                if (disc.contains("salt")) dd.salt = term_from_json(disc.at("salt"));
                s.disclosure = dd;
            }
            if (js.contains("confidential_for"))
                for (const auto& c : js.at("confidential_for"))
                    s.confidential_for.push_back({c.at("recipient").get<std::string>(), term_from_json(c.at("ciphertext"))});
            d.slots.push_back(std::move(s));
        }
        d.signature_broken = j.at("signature_broken").get<bool>();
        d.format = j.at("format").get<std::string>();
        if (j.contains("signature")) d.signature = term_from_json(j.at("signature"));
        return d;
    });
}

std::vector<json> to_json(const std::vector<Term>& terms) {
    std::vector<json> out;
    out.reserve(terms.size());
    for (const auto& t : terms) out.push_back(to_json(t));
    return out;
}

std::vector<Term> terms_from_json(const json& j) {
    return guarded("term list", [&] {
        std::vector<Term> out;
        for (const auto& t : j) out.push_back(term_from_json(t));
        return out;
    });
}

}  // namespace evsec
