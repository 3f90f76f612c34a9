// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "evsec/flows.hpp"
#include "evsec/model.hpp"
#include "evsec/trace.hpp"

namespace evsec {

enum class SrId { SR1a, SR1b, SR1c, SR2a, SR2b, SR3, SR4a, SR4b, SR5 };

inline constexpr std::array<SrId, 9> kAllRequirements{SrId::SR1a, SrId::SR1b, SrId::SR1c, SrId::SR2a, SrId::SR2b,
                                                      SrId::SR3,  SrId::SR4a, SrId::SR4b, SrId::SR5};

enum class Grade { Holds, ConditionallyHolds, Violated, NotExercised };

std::string_view to_string(SrId sr);
std::optional<SrId> sr_from_string(std::string_view s);
std::string_view to_string(Grade g);
std::optional<Grade> grade_from_string(std::string_view s);

struct Verdict {
    SrId sr = SrId::SR1a;
    Grade grade = Grade::NotExercised;
    /// Trace event indices supporting the grade.
    std::vector<std::size_t> witnesses;
    std::string explanation;

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// The nine requirement verdicts, in SrId order. Throws IncompleteTrace if
/// the trace was not finished.
std::vector<Verdict> check_all(const Trace& trace, const Topology& topology);

Verdict check(SrId sr, const Trace& trace, const Topology& topology);

[[nodiscard]] bool any_violated(const std::vector<Verdict>& verdicts);
nlohmann::json to_json(const Verdict& v);
nlohmann::json to_json(const std::vector<Verdict>& vs);

struct SlotLoad {
    std::int64_t slot_start = 0;
    Decimal allotted_kw;
    Decimal delivered_kw;
};

struct CongestionReport {
    Grade grade = Grade::NotExercised;
    bool breach = false;
    std::vector<SlotLoad> slots;
    std::vector<std::size_t> witnesses;
    std::string explanation;
};

/// Sums the delivered charge profiles per slot and compares them with the
/// true allotment.
CongestionReport congestion_check(const Trace& trace, const CapacityForecast& ground_truth);
/// Same, using the ground truth recorded in the trace.
CongestionReport congestion_check(const Trace& trace);

enum class RedactionOutcome { Pass, Fail, VacuousFail };
std::string_view to_string(RedactionOutcome o);

struct RedactionResult {
    std::string doc_id;
    ActorId holder;
    ProtectionMode mode = ProtectionMode::NoProtection;
    RedactionOutcome outcome = RedactionOutcome::VacuousFail;
};

/// Billing records stored during the run, as recorded in the trace.
std::vector<StoredRecord> stored_billing_documents(const Trace& trace);

/// Removes "location" from each record and re-verifies it at its holder.
/// Records without a location field are skipped.
std::vector<RedactionResult> redaction_gdpr_check(const std::vector<StoredRecord>& records, const Topology& topology);

}  // namespace evsec
