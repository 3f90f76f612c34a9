// SPDX-License-Identifier: Apache-2.0
#include "evsec/knowledge.hpp"

namespace evsec {

bool Knowledge::add(const Term& t) {
    std::size_t before = terms_.size();
    std::vector<Term> work{t};
    drain(work);
    // Newly derivable keys may open encryptions seen earlier.
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t i = 0; i < sealed_.size(); ++i) {
            if (can_derive(decryption_key_for(sealed_[i].key_operand()))) {
                work.push_back(sealed_[i].body());
                sealed_.erase(sealed_.begin() + static_cast<std::ptrdiff_t>(i));
                drain(work);
                progress = true;
                break;
            }
        }
    }
    return terms_.size() != before;
}

bool Knowledge::add_all(const std::vector<Term>& ts) {
    bool changed = false;
    for (const auto& t : ts) changed = add(t) || changed;
    return changed;
}

void Knowledge::drain(std::vector<Term>& work) {
    while (!work.empty()) {
        Term x = work.back();
        work.pop_back();
        if (!terms_.insert(x).second) continue;
        switch (x.kind()) {
            case TermKind::Pair:
                work.push_back(x.children()[0]);
                work.push_back(x.children()[1]);
                break;
            case TermKind::Sign:
                work.push_back(x.body());
                break;
            case TermKind::Enc:
                if (can_derive(decryption_key_for(x.key_operand())))
                    work.push_back(x.body());
                else
                    sealed_.push_back(x);
                break;
            default:
                break;
        }
    }
}

bool Knowledge::can_derive(const Term& t) const {
    if (terms_.count(t)) return true;
    switch (t.kind()) {
        case TermKind::Atom:
        case TermKind::Nonce:
        case TermKind::Key:
            return false;
        case TermKind::Pair:
            return can_derive(t.children()[0]) && can_derive(t.children()[1]);
        case TermKind::Hash:
            return can_derive(t.body());
        case TermKind::Enc:
        case TermKind::Sign:
        case TermKind::Mac:
            return can_derive(t.key_operand()) && can_derive(t.body());
        case TermKind::Kdf:
            // Card identifiers are not secrets; the master key decides.
            return can_derive(t.key_operand());
    }
    return false;
}

}  // namespace evsec
