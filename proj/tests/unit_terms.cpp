// SPDX-License-Identifier: Apache-2.0
#include <random>
#include <set>

#include "vendor/doctest.h"

#include "evsec/common.hpp"
#include "evsec/crypto.hpp"
#include "evsec/knowledge.hpp"
#include "evsec/term.hpp"

using namespace evsec;

namespace {

// Naive reference: saturate by repeated passes, then decide synthesis
// recursively against the saturated set.
struct NaiveOracle {
    std::set<Term> s;

    bool synth(const Term& t) const {
        if (s.count(t)) return true;
        switch (t.kind()) {
            case TermKind::Pair:
                return synth(t.children()[0]) && synth(t.children()[1]);
            case TermKind::Hash:
                return synth(t.body());
            case TermKind::Enc:
            case TermKind::Sign:
            case TermKind::Mac:
                return synth(t.key_operand()) && synth(t.body());
            case TermKind::Kdf:
                return synth(t.key_operand());
            default:
                return false;
        }
    }

    void saturate() {
        for (bool grew = true; grew;) {
            grew = false;
            std::vector<Term> snapshot(s.begin(), s.end());
            for (const auto& t : snapshot) {
                std::vector<Term> parts;
                if (t.kind() == TermKind::Pair) parts = t.children();
                if (t.kind() == TermKind::Sign) parts = {t.body()};
                if (t.kind() == TermKind::Enc && synth(decryption_key_for(t.key_operand()))) parts = {t.body()};
                for (const auto& p : parts) grew = s.insert(p).second || grew;
            }
        }
    }
};

Term random_term(std::mt19937_64& rng, int depth) {
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    static const std::vector<Term> leaves{Term::atom("a"),
                                          Term::atom("b"),
                                          Term::nonce("n1"),
                                          Term::key("k1", KeyKind::Symmetric),
                                          Term::key("k2", KeyKind::Private),
                                          Term::key("k2", KeyKind::Public),
                                          Term::key("k3", KeyKind::Private),
                                          Term::key("k3", KeyKind::Public),
                                          Term::key("m", KeyKind::Symmetric)};
    if (depth == 0 || pick(3) == 0) return leaves[static_cast<std::size_t>(pick(static_cast<int>(leaves.size())))];
    auto sub = [&] { return random_term(rng, depth - 1); };
    switch (pick(7)) {
        case 0:
            return Term::pair(sub(), sub());
        case 1:
            return Term::hash(sub());
        case 2:
            return Term::enc(sub(), sub());
        case 3:
            return Term::sign(sub(), sub());
        case 4:
            return Term::mac(sub(), sub());
        case 5:
            return Term::kdf(sub(), Term::atom("uid"));
        default:
            return Term::pair(sub(), Term::enc(Term::key("k2", KeyKind::Public), sub()));
    }
}

}  // namespace

TEST_CASE("terms compare structurally") {
    Term a = Term::pair(Term::atom("x"), Term::nonce("n"));
    Term b = Term::pair(Term::atom("x"), Term::nonce("n"));
    CHECK(a == b);
    CHECK(a != Term::pair(Term::nonce("n"), Term::atom("x")));
    CHECK(Term::atom("n") != Term::nonce("n"));
    CHECK(Term::tuple({}) == Term::atom(""));
    CHECK(Term::tuple({Term::atom("1"), Term::atom("2"), Term::atom("3")}) ==
          Term::pair(Term::atom("1"), Term::pair(Term::atom("2"), Term::atom("3"))));
    CHECK(decryption_key_for(Term::key("k", KeyKind::Public)) == Term::key("k", KeyKind::Private));
    CHECK(public_half(Term::key("k", KeyKind::Private)) == Term::key("k", KeyKind::Public));
    CHECK_THROWS(public_half(Term::atom("k")));
}

TEST_CASE("knowledge analysis") {
    Term k = Term::key("k", KeyKind::Symmetric);
    Term secret = Term::atom("secret");
    Knowledge kn;
    kn.add(Term::pair(Term::atom("hdr"), Term::enc(k, secret)));
    CHECK(kn.can_derive(Term::atom("hdr")));
    CHECK_FALSE(kn.can_derive(secret));
    CHECK(kn.sealed().size() == 1);

    SUBCASE("late key opens earlier ciphertext") {
        kn.add(k);
        CHECK(kn.can_derive(secret));
        CHECK(kn.sealed().empty());
    }
    SUBCASE("hashes and MACs stay closed") {
        Knowledge h;
        h.add(Term::hash(secret));
        h.add(Term::mac(k, secret));
        CHECK_FALSE(h.can_derive(secret));
        CHECK(h.can_derive(Term::hash(Term::hash(secret))));
    }
    SUBCASE("signatures reveal their body but need the key to forge") {
        Term sk = Term::key("s", KeyKind::Private);
        Knowledge s;
        s.add(Term::sign(sk, secret));
        CHECK(s.can_derive(secret));
        Term forged = Term::sign(sk, Term::pair(secret, secret));
        CHECK_FALSE(s.can_derive(forged));
        s.add(sk);
        CHECK(s.can_derive(forged));
    }
    SUBCASE("public-key encryption opens with the private half") {
        Term pub = Term::key("p", KeyKind::Public);
        Knowledge e;
        e.add(Term::enc(pub, secret));
        CHECK_FALSE(e.can_derive(secret));
        e.add(Term::key("p", KeyKind::Private));
        CHECK(e.can_derive(secret));
    }
    SUBCASE("master key derives every card key") {
        Term master = Term::key("master", KeyKind::Symmetric);
        Knowledge m;
        CHECK_FALSE(m.can_derive(kdf_diversify(master, "04AABB")));
        m.add(master);
        CHECK(m.can_derive(kdf_diversify(master, "04AABB")));
        CHECK(m.can_derive(kdf_diversify(master, "never-seen")));
    }
}

TEST_CASE("knowledge agrees with a naive saturation oracle") {
    std::mt19937_64 rng(20240601);
    int derivable = 0;
    for (int round = 0; round < 400; ++round) {
        Knowledge kn;
        NaiveOracle oracle;
        int n = 1 + static_cast<int>(rng() % 5);
        for (int i = 0; i < n; ++i) {
            Term t = random_term(rng, 4);
            kn.add(t);
            oracle.s.insert(t);
        }
        oracle.saturate();
        for (int q = 0; q < 20; ++q) {
            Term query = random_term(rng, 3);
            bool expected = oracle.synth(query);
            derivable += expected ? 1 : 0;
            REQUIRE_MESSAGE(kn.can_derive(query) == expected, query.repr());
        }
    }
    // The generator must exercise both outcomes.
    CHECK(derivable > 100);
    CHECK(derivable < 7900);
}

TEST_CASE("decimal arithmetic is exact to three digits") {
    CHECK(Decimal::parse("12").milli() == 12000);
    CHECK(Decimal::parse("-0.125").milli() == -125);
    CHECK(Decimal::parse("0.5").str() == "0.500");
    CHECK_THROWS_AS(Decimal::parse("0.0001"), Error);
    CHECK_THROWS_AS(Decimal::parse("abc"), Error);
    CHECK((Decimal::parse("18.000") * Decimal::parse("0.317")).str() == "5.706");
    CHECK((Decimal::parse("0.1") + Decimal::parse("0.2")) == Decimal::parse("0.3"));
}

TEST_CASE("key factory is deterministic per seed") {
    KeyFactory a(9), b(9), c(10);
    CHECK(a.fresh_nonce("x") == b.fresh_nonce("x"));
    CHECK(a.keygen("o", "sig").public_part == b.keygen("o", "sig").public_part);
    CHECK(KeyFactory(9).fresh_nonce("x") != c.fresh_nonce("x"));
}

TEST_CASE("pki chains end at their anchor") {
    KeyFactory keys(3);
    Pki pki;
    pki.add_anchor("root-a", keys);
    pki.add_anchor("root-b", keys);
    KeyPair kp = keys.keygen("cpo1", "tls");
    const Certificate& sub = pki.issue_certificate(AnchorRef{"root-a"}, "sub-cpo", Role::CPO, keys.keygen("ca", "ca").public_part);
    std::string sub_id = sub.cert_id;
    std::string leaf = pki.issue_certificate(CertRef{sub_id}, "cpo1", Role::CPO, kp.public_part).cert_id;
    CHECK(pki.verify_chain(leaf, "root-a"));
    CHECK_FALSE(pki.verify_chain(leaf, "root-b"));
    CHECK(pki.root_of(leaf) == std::optional<std::string>("root-a"));
    pki.set_validity(sub_id, false);
    CHECK_FALSE(pki.verify_chain(leaf, "root-a"));
    CHECK_THROWS_AS(pki.issue_certificate(CertRef{"nope"}, "x", Role::EV, kp.public_part), InvalidIssuer);
    CHECK_THROWS_AS(pki.issue_certificate(AnchorRef{"root-z"}, "x", Role::EV, kp.public_part), InvalidIssuer);
}

TEST_CASE("approved suites") {
    auto s = approved_cipher_suites();
    REQUIRE(s.size() == 1);
    CHECK(s[0] == kMandatoryCipherSuite);
    auto t = approved_cipher_suites(std::vector<std::string>{"X"});
    CHECK(t == std::vector<std::string>{kMandatoryCipherSuite, "X"});
    CHECK_THROWS(approved_cipher_suites(std::vector<std::string>{}));
}
