// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <set>
#include <vector>

#include "evsec/term.hpp"

namespace evsec {

/// Symbolic attacker knowledge.
///
/// The stored set is closed under analysis: unpairing, reading the plaintext
/// of signatures, and decrypting with derivable keys. Synthesis (pairing,
/// hashing, encrypting, signing, MACing and KDF with a known master key) is
/// decided on demand by `can_derive`. Hashes and MACs are never opened.
class Knowledge {
public:
    Knowledge() = default;

    /// Adds a term and restores the closure. Returns true if anything new
    /// entered the analyzed set.
    bool add(const Term& t);
    bool add_all(const std::vector<Term>& ts);

    /// Derivability of `t` from the closed set.
    [[nodiscard]] bool can_derive(const Term& t) const;

    [[nodiscard]] bool contains(const Term& t) const { return terms_.count(t) != 0; }
    [[nodiscard]] const std::set<Term>& terms() const { return terms_; }
    [[nodiscard]] std::size_t size() const { return terms_.size(); }

    /// Encryptions still sealed because no decryption key is derivable.
    [[nodiscard]] const std::vector<Term>& sealed() const { return sealed_; }

private:
    void drain(std::vector<Term>& work);

    std::set<Term> terms_;
    std::vector<Term> sealed_;
};

}  // namespace evsec
