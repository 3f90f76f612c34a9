// SPDX-License-Identifier: Apache-2.0
#include "vendor/doctest.h"

#include "evsec/envelope.hpp"
#include "evsec/knowledge.hpp"
#include "evsec/model.hpp"

using namespace evsec;

namespace {

struct Fixture {
    Topology topo;
    KeyFactory salts{77};
    RecipientKeys keys;

    Fixture() {
        TopologyConfig cfg;
        for (auto [id, role] : {std::pair{"ev1", Role::EV}, {"cpo1", Role::CPO}, {"emsp1", Role::EMSP}}) {
            ActorConfig a;
            a.id = id;
            a.role = role;
            cfg.actors.push_back(a);
        }
        topo = build_topology(cfg, 1);
        for (const auto& [id, a] : topo.actors)
            if (const KeyPair* kp = a.key("tls")) keys[id] = kp->public_part;
    }

    Producer producer(const ActorId& id) const {
        const Actor& a = topo.actor(id);
        return Producer{id, a.key("sig"), a.certificate_for("sig")};
    }

    std::optional<Term> private_key(const ActorId& id) const { return topo.actor(id).key("tls")->private_part; }

    FieldList cdr_fields() const {
        return {{"cdr_id", Term::atom("cdr-1")},
                {"contract_id", Term::atom("C-1")},
                {"location", Term::atom("site/cp1")},
                {"energy", Term::atom("18.000")},
                {"cost", Term::atom("5.706")}};
    }

    SecuredDocument make(ProtectionMode mode, const ConfidentialityPolicy& policy = {}) {
        return protect(producer("cpo1"), "d1", "ChargeDetailRecord", cdr_fields(), mode, {"emsp1"}, policy, keys, salts);
    }

    bool ok(const SecuredDocument& d) const { return verify_document(d, topo.pki, topo.default_anchor).ok; }
};

}  // namespace

TEST_CASE("each mode verifies when untouched") {
    Fixture f;
    CHECK(f.ok(f.make(ProtectionMode::WholeMessageSignature)));
    CHECK(f.ok(f.make(ProtectionMode::SelectiveDisclosure)));
    auto plain = verify_document(f.make(ProtectionMode::NoProtection), f.topo.pki, f.topo.default_anchor);
    CHECK_FALSE(plain.ok);
    CHECK(plain.failure == VerifyFailure::Unsigned);
}

TEST_CASE("selective disclosure commits per field") {
    Fixture f;
    auto doc = f.make(ProtectionMode::SelectiveDisclosure);
    for (const auto& s : doc.slots) {
        REQUIRE(s.commitment);
        REQUIRE(s.disclosure);
        REQUIRE(s.disclosure->salt);
        CHECK(*s.commitment == field_commitment(s.name, *s.disclosure->salt, s.disclosure->value));
    }
    SUBCASE("redaction keeps the signature valid") {
        auto r = redact(doc, "location");
        CHECK(r.slot("location")->redacted());
        CHECK(f.ok(r));
        CHECK_THROWS_AS(redact(doc, "nope"), UnknownField);
    }
    SUBCASE("a changed value breaks its commitment") {
        tamper_set_value(doc, "cost", Term::atom("0.010"));
        auto v = verify_document(doc, f.topo.pki, f.topo.default_anchor);
        CHECK_FALSE(v.ok);
        CHECK(v.failure == VerifyFailure::CommitmentMismatch);
    }
    SUBCASE("dropping a slot breaks the signature") {
        tamper_remove_slot(doc, "cost");
        CHECK_FALSE(f.ok(doc));
    }
    SUBCASE("renaming a slot is detected") {
        tamper_rename_slot(doc, "cost", "energy_cost");
        CHECK_FALSE(f.ok(doc));
    }
}

TEST_CASE("whole-message signature breaks under redaction and tampering") {
    Fixture f;
    auto doc = f.make(ProtectionMode::WholeMessageSignature);
    CHECK_FALSE(f.ok(redact(doc, "location")));
    auto t = doc;
    tamper_set_value(t, "energy", Term::atom("35.000"));
    CHECK_FALSE(f.ok(t));
}

TEST_CASE("confidential fields are sealed for their recipients only") {
    Fixture f;
    ConfidentialityPolicy policy{{"location", {"emsp1"}}};
    auto doc = f.make(ProtectionMode::SelectiveDisclosure, policy);
    const FieldSlot* loc = doc.slot("location");
    REQUIRE(loc);
    CHECK_FALSE(loc->disclosure);
    REQUIRE(loc->confidential_for.size() == 1);
    CHECK(f.ok(doc));

    auto mine = decrypt_field(doc, "location", "emsp1", f.private_key("emsp1"));
    REQUIRE(mine.granted);
    CHECK(*mine.value == Term::atom("site/cp1"));
    CHECK_FALSE(decrypt_field(doc, "location", "ev1", f.private_key("ev1")).granted);
    CHECK(decrypt_field(doc, "cost", "ev1", std::nullopt).granted);

    // A passive observer holding every public term still cannot read it.
    Knowledge observer;
    observer.add_all(document_terms(doc));
    CHECK_FALSE(observer.can_derive(Term::atom("site/cp1")));
    CHECK(observer.can_derive(Term::atom("5.706")));

    auto opened = open_document(doc, "ev1", f.private_key("ev1"), f.topo.pki, f.topo.default_anchor);
    CHECK(opened.verification.ok);
    CHECK(opened.unreadable == std::vector<std::string>{"location"});
}

TEST_CASE("whole-message signatures leave every field readable") {
    Fixture f;
    auto doc = f.make(ProtectionMode::WholeMessageSignature, {{"location", {"emsp1"}}});
    Knowledge observer;
    observer.add_all(document_terms(doc));
    CHECK(observer.can_derive(Term::atom("site/cp1")));
}

TEST_CASE("origin proofs") {
    Fixture f;
    auto sd = f.make(ProtectionMode::SelectiveDisclosure);
    CHECK(prove_origin(sd, "cpo1", f.topo.pki, f.topo.default_anchor).status == OriginStatus::Proof);
    CHECK(prove_origin(sd, "emsp1", f.topo.pki, f.topo.default_anchor).status == OriginStatus::WrongProducer);
    auto t = sd;
    tamper_set_value(t, "cost", Term::atom("1.000"));
    CHECK(prove_origin(t, "cpo1", f.topo.pki, f.topo.default_anchor).status == OriginStatus::TamperDetected);
    auto none = f.make(ProtectionMode::NoProtection);
    CHECK(prove_origin(none, "cpo1", f.topo.pki, f.topo.default_anchor).status == OriginStatus::RepudiationPossible);
}

TEST_CASE("format conversion") {
    Fixture f;
    for (auto mode : {ProtectionMode::WholeMessageSignature, ProtectionMode::SelectiveDisclosure}) {
        CAPTURE(to_string(mode));
        auto doc = f.make(mode);
        CHECK(f.ok(convert_format(doc, "json", ConversionKind::EnvelopePreserving)));
        CHECK_FALSE(f.ok(convert_format(doc, "json", ConversionKind::Lossy)));
        CHECK(convert_format(doc, "json", ConversionKind::EnvelopePreserving).format == "json");
    }
}

TEST_CASE("duplicate field names are rejected") {
    Fixture f;
    FieldList dup{{"a", Term::atom("1")}, {"a", Term::atom("2")}};
    CHECK_THROWS_AS(protect(f.producer("cpo1"), "d", "X", dup, ProtectionMode::SelectiveDisclosure, {}, {}, f.keys, f.salts),
                    DuplicateFieldName);
}

TEST_CASE("signing without a private key fails") {
    Fixture f;
    KeyPair pub_only = *f.topo.actor("cpo1").key("sig");
    pub_only.private_part.reset();
    Producer p{"cpo1", &pub_only, f.topo.actor("cpo1").certificate_for("sig")};
    CHECK_THROWS(protect(p, "d", "X", f.cdr_fields(), ProtectionMode::SelectiveDisclosure, {}, {}, f.keys, f.salts));
}
