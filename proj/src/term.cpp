// SPDX-License-Identifier: Apache-2.0
#include "evsec/term.hpp"

#include <stdexcept>

namespace evsec {

struct Term::Node {
    TermKind kind = TermKind::Atom;
    KeyKind key_kind = KeyKind::Symmetric;
    std::string text;
    std::vector<Term> children;
    std::string repr;
};

namespace {

const char* kind_tag(TermKind k) {
    switch (k) {
        case TermKind::Atom: return "atom";
        case TermKind::Nonce: return "nonce";
        case TermKind::Key: return "key";
        case TermKind::Pair: return "pair";
        case TermKind::Hash: return "hash";
        case TermKind::Enc: return "enc";
        case TermKind::Sign: return "sign";
        case TermKind::Mac: return "mac";
        case TermKind::Kdf: return "kdf";
    }
    return "?";
}

const char* key_tag(KeyKind k) {
    switch (k) {
        case KeyKind::Private: return "priv";
        case KeyKind::Public: return "pub";
        case KeyKind::Symmetric: return "sym";
    }
    return "?";
}

// Length-prefixed leaves keep the printed form injective.
std::string leaf_repr(const char* tag, const std::string& text) {
    return std::string(tag) + ":" + std::to_string(text.size()) + ":" + text;
}

}  // namespace

Term::Term() : Term(atom("")) {}

Term::Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

Term Term::make(TermKind kind, KeyKind key_kind, std::string text, std::vector<Term> children,
                std::string repr) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->key_kind = key_kind;
    n->text = std::move(text);
    n->children = std::move(children);
    n->repr = std::move(repr);
    return Term(std::move(n));
}

Term Term::atom(std::string text) {
    auto r = leaf_repr("a", text);
    return make(TermKind::Atom, KeyKind::Symmetric, std::move(text), {}, std::move(r));
}

Term Term::nonce(std::string id) {
    auto r = leaf_repr("n", id);
    return make(TermKind::Nonce, KeyKind::Symmetric, std::move(id), {}, std::move(r));
}

Term Term::key(std::string id, KeyKind kind) {
    auto r = leaf_repr(key_tag(kind), id);
    return make(TermKind::Key, kind, std::move(id), {}, std::move(r));
}

Term Term::pair(Term a, Term b) {
    auto r = "pair(" + a.repr() + "," + b.repr() + ")";
    return make(TermKind::Pair, KeyKind::Symmetric, {}, {std::move(a), std::move(b)}, std::move(r));
}

Term Term::hash(Term t) {
    auto r = "hash(" + t.repr() + ")";
    return make(TermKind::Hash, KeyKind::Symmetric, {}, {std::move(t)}, std::move(r));
}

Term Term::keyed(TermKind kind, Term key, Term body) {
    auto r = std::string(kind_tag(kind)) + "(" + key.repr() + "," + body.repr() + ")";
    return make(kind, KeyKind::Symmetric, {}, {std::move(key), std::move(body)}, std::move(r));
}

Term Term::enc(Term key, Term body) { return keyed(TermKind::Enc, std::move(key), std::move(body)); }
Term Term::sign(Term key, Term body) { return keyed(TermKind::Sign, std::move(key), std::move(body)); }
Term Term::mac(Term key, Term body) { return keyed(TermKind::Mac, std::move(key), std::move(body)); }
Term Term::kdf(Term master, Term uid) { return keyed(TermKind::Kdf, std::move(master), std::move(uid)); }

Term Term::tuple(const std::vector<Term>& items) {
    if (items.empty()) return atom("");
    Term acc = items.back();
    for (auto it = items.rbegin() + 1; it != items.rend(); ++it) acc = pair(*it, acc);
    return acc;
}

TermKind Term::kind() const { return node_->kind; }
const std::string& Term::text() const { return node_->text; }
KeyKind Term::key_kind() const { return node_->key_kind; }
const std::vector<Term>& Term::children() const { return node_->children; }
const std::string& Term::repr() const { return node_->repr; }

const Term& Term::key_operand() const {
    switch (kind()) {
        case TermKind::Enc:
        case TermKind::Sign:
        case TermKind::Mac:
        case TermKind::Kdf: return node_->children[0];
        default: throw std::logic_error("term has no key operand: " + repr());
    }
}

const Term& Term::body() const {
    switch (kind()) {
        case TermKind::Hash: return node_->children[0];
        case TermKind::Enc:
        case TermKind::Sign:
        case TermKind::Mac:
        case TermKind::Kdf: return node_->children[1];
        default: throw std::logic_error("term has no body: " + repr());
    }
}

Term decryption_key_for(const Term& key) {
    if (key.kind() == TermKind::Key && key.key_kind() == KeyKind::Public)
        return Term::key(key.text(), KeyKind::Private);
    return key;
}

Term public_half(const Term& private_key) {
    if (private_key.kind() != TermKind::Key || private_key.key_kind() != KeyKind::Private)
        throw std::invalid_argument("not a private key: " + private_key.repr());
    return Term::key(private_key.text(), KeyKind::Public);
}

}  // namespace evsec
