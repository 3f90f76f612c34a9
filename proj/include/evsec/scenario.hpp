// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "evsec/adversary.hpp"
#include "evsec/flows.hpp"
#include "evsec/model.hpp"
#include "evsec/trace.hpp"
#include "evsec/verdict.hpp"

namespace evsec {

struct Step {
    std::string op;
    nlohmann::json args = nlohmann::json::object();
};

struct ScenarioConfig {
    std::string name;
    std::string description;
    std::uint64_t seed = 0;
    TopologyConfig topology;
    std::vector<AttackerSpec> attackers;
    ProtectionPolicy protection;
    ConfidentialityPolicy confidentiality;
    SimulationOptions options;
    std::vector<Step> steps;
    /// The document this config was parsed from; recorded in trace headers.
    nlohmann::json source;
};

/// Validates and decodes a scenario document. Unknown keys and wrongly
/// typed values raise ConfigError naming the offending key.
ScenarioConfig parse_scenario(const nlohmann::json& doc);
ScenarioConfig load_scenario(const std::filesystem::path& path);

struct RunResult {
    Trace trace;
    std::vector<Verdict> verdicts;
    /// Flows that stopped early (aborted handshakes, infeasible plans).
    std::vector<std::string> aborted;
};

/// Runs the steps in order. Aborted flows are recorded and the run
/// continues; any other error propagates.
RunResult run_scenario(const ScenarioConfig& config, std::optional<std::uint64_t> seed = std::nullopt);

/// Re-evaluates a stored trace against the topology rebuilt from its header.
std::vector<Verdict> verify_trace(const Trace& trace);

/// Directory holding the built-in scenario files.
std::filesystem::path scenario_dir();
std::vector<std::filesystem::path> builtin_scenarios();

// ---------------------------------------------------------------------------
// Mechanism x link x protection x attacker matrix
// ---------------------------------------------------------------------------

enum class AttackerClass { None, Physical, EndpointCpo, Network };
std::string_view to_string(AttackerClass c);

struct LinkSetup {
    LinkMode mode = LinkMode::MutualAuth;
    ClientAuthKind client_auth = ClientAuthKind::ClientCertificate;
};

struct MatrixConfig {
    AuthMechanism mechanism = AuthMechanism::Asymmetric;
    LinkSetup links;
    ProtectionMode protection = ProtectionMode::SelectiveDisclosure;
    AttackerClass attacker = AttackerClass::None;

    [[nodiscard]] std::string label() const;
};

struct MatrixRow {
    MatrixConfig config;
    std::vector<Grade> grades;
};

/// Every configuration of the matrix, in table order.
std::vector<MatrixConfig> matrix_configurations();

/// Scenario document for one matrix row.
nlohmann::json matrix_scenario(const MatrixConfig& c);

std::vector<MatrixRow> run_matrix();

/// Tab-separated table with a header line.
std::string format_matrix(const std::vector<MatrixRow>& rows);

struct MatrixMismatch {
    std::string row;
    SrId sr = SrId::SR1a;
    std::string expected;
    std::string actual;
};

/// Compares a table against an expected one (same format). Rows missing
/// from either side are reported with sr = SR1a and an empty grade.
std::vector<MatrixMismatch> compare_matrix(const std::string& expected, const std::string& actual);

/// Path of the expected matrix shipped with the scenarios.
std::filesystem::path expected_matrix_path();

}  // namespace evsec
