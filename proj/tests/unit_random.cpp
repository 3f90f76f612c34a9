// SPDX-License-Identifier: Apache-2.0
#include "vendor/doctest.h"

#include "evsec/scenario.hpp"
#include "support.hpp"

using namespace evsec;

TEST_CASE("random scripts never break integrity or confidentiality on secured deployments") {
    const json base = test::secured_scenario();
    for (std::uint64_t seed : {101u, 202u}) {
        test::ScriptGenerator gen(seed);
        int attacked = 0;
        for (int i = 0; i < 150; ++i) {
            json doc = base;
            doc["attackers"] = gen.attackers();
            CAPTURE(doc.dump());
            RunResult r = test::run_doc(doc, seed + static_cast<std::uint64_t>(i));
            attacked += r.trace.of_kind("attack").empty() ? 0 : 1;
            CHECK(test::grade_of(r.verdicts, SrId::SR4a) != Grade::Violated);
            CHECK(test::grade_of(r.verdicts, SrId::SR4b) != Grade::Violated);
            CHECK(test::grade_of(r.verdicts, SrId::SR5) != Grade::Violated);
        }
        CHECK(attacked > 20);
    }
}

TEST_CASE("random runs are reproducible") {
    const json base = test::secured_scenario();
    test::ScriptGenerator a(7), b(7);
    for (int i = 0; i < 20; ++i) {
        json da = base, db = base;
        da["attackers"] = a.attackers();
        db["attackers"] = b.attackers();
        REQUIRE(da == db);
        CHECK(test::run_doc(da).trace.to_jsonl() == test::run_doc(db).trace.to_jsonl());
    }
}
