// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <memory>
#include <string>
#include <vector>

namespace evsec {

enum class TermKind { Atom, Nonce, Key, Pair, Hash, Enc, Sign, Mac, Kdf };

enum class KeyKind { Private, Public, Symmetric };

/// Immutable symbolic message term.
///
/// Terms are shared, structurally compared values. Key material is itself a
/// term (`Key`), so the adversary's knowledge set can hold keys alongside
/// message contents. `Kdf(master, uid)` denotes a diversified symmetric key.
class Term {
public:
    Term();  // Atom("")

    static Term atom(std::string text);
    static Term nonce(std::string id);
    static Term key(std::string id, KeyKind kind);
    static Term pair(Term a, Term b);
    static Term hash(Term t);
    static Term enc(Term key, Term body);
    static Term sign(Term key, Term body);
    static Term mac(Term key, Term body);
    static Term kdf(Term master, Term uid);

    /// Right-nested pairing of a list; empty list maps to Atom("").
    static Term tuple(const std::vector<Term>& items);

    [[nodiscard]] TermKind kind() const;
    /// Atom text, nonce id or key id; empty for compound terms.
    [[nodiscard]] const std::string& text() const;
    [[nodiscard]] KeyKind key_kind() const;
    [[nodiscard]] const std::vector<Term>& children() const;

    /// For Enc/Sign/Mac: the key operand. For Kdf: the master key.
    [[nodiscard]] const Term& key_operand() const;
    /// For Enc/Sign/Mac/Hash: the protected body. For Kdf: the uid.
    [[nodiscard]] const Term& body() const;

    /// Canonical printed form; equality and ordering are defined on it.
    [[nodiscard]] const std::string& repr() const;

    friend bool operator==(const Term& a, const Term& b) { return a.repr() == b.repr(); }
    friend std::strong_ordering operator<=>(const Term& a, const Term& b) {
        return a.repr() <=> b.repr();
    }

    /// Depth-first visit of this term and all its subterms.
    template <typename F>
    void visit(F&& f) const {
        f(*this);
        for (const auto& c : children()) c.visit(f);
    }

private:
    struct Node;
    explicit Term(std::shared_ptr<const Node> n);
    static Term make(TermKind kind, KeyKind key_kind, std::string text, std::vector<Term> children,
                     std::string repr);
    static Term keyed(TermKind kind, Term key, Term body);
    std::shared_ptr<const Node> node_;
};

/// Key that opens an Enc under `key`: private half for public-key encryption,
/// the key itself for symmetric encryption.
Term decryption_key_for(const Term& key);

/// Public half matching a private key term.
Term public_half(const Term& private_key);

}  // namespace evsec
