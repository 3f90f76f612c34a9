// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "evsec/scenario.hpp"
#include "evsec/verdict.hpp"

using namespace evsec;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kViolated = 2;

void print_verdicts(const std::vector<Verdict>& verdicts) {
    for (const auto& v : verdicts) {
        std::cout << std::left << std::setw(6) << to_string(v.sr) << std::setw(20) << to_string(v.grade) << v.explanation;
        if (!v.witnesses.empty()) {
            std::cout << "  [events";
            for (std::size_t i = 0; i < v.witnesses.size() && i < 8; ++i) std::cout << ' ' << v.witnesses[i];
            if (v.witnesses.size() > 8) std::cout << " ...";
            std::cout << ']';
        }
        std::cout << '\n';
    }
}

void print_extra_reports(const Trace& trace) {
    CongestionReport c = congestion_check(trace);
    if (c.grade != Grade::NotExercised)
        std::cout << "congestion: " << (c.breach ? "BREACH" : "ok") << " - " << c.explanation << '\n';
    for (const auto* e : trace.of_kind("gdpr.redact"))
        std::cout << "gdpr redaction " << e->data.value("doc_id", "") << " (" << e->data.value("protection", "")
                  << "): " << e->data.value("outcome", "") << '\n';
    for (const auto* e : trace.of_kind("format.convert"))
        std::cout << "format conversion " << e->data.value("doc_id", "") << " " << e->data.value("kind", "")
                  << ": verifies " << (e->data.value("verify_after", false) ? "yes" : "no") << '\n';
}

int cmd_run(const std::string& file, std::optional<std::uint64_t> seed, const std::string& trace_out) {
    ScenarioConfig config = load_scenario(file);
    RunResult r = run_scenario(config, seed);
    if (!trace_out.empty()) {
        std::ofstream out(trace_out);
        if (!out) throw ConfigError("cannot write '" + trace_out + "'");
        r.trace.write_jsonl(out);
    }
    std::cout << "scenario " << config.name << " (seed " << r.trace.header().seed << ", " << r.trace.size()
              << " events)\n";
    for (const auto& a : r.aborted) std::cout << "aborted " << a << '\n';
    print_verdicts(r.verdicts);
    print_extra_reports(r.trace);
    return any_violated(r.verdicts) ? kViolated : kOk;
}

int cmd_matrix(const std::string& out_path, const std::string& expected_path) {
    auto start = std::chrono::steady_clock::now();
    std::string table = format_matrix(run_matrix());
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out_path.empty()) {
        std::cout << table;
    } else {
        std::ofstream out(out_path);
        if (!out) throw ConfigError("cannot write '" + out_path + "'");
        out << table;
    }
    std::cerr << "matrix computed in " << std::fixed << std::setprecision(2) << secs << " s\n";
    if (expected_path.empty()) return kOk;

    std::ifstream in(expected_path);
    if (!in) throw ConfigError("cannot read '" + expected_path + "'");
    std::stringstream want;
    want << in.rdbuf();
    auto diff = compare_matrix(want.str(), table);
    for (const auto& m : diff)
        std::cerr << "mismatch " << m.row << " " << to_string(m.sr) << ": expected " << m.expected << ", got "
                  << m.actual << '\n';
    std::cerr << (diff.empty() ? "matrix matches " : "matrix differs from ") << expected_path << '\n';
    return diff.empty() ? kOk : kViolated;
}

int cmd_verify_trace(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read '" + file + "'");
    Trace t = Trace::read_jsonl(in);
    auto verdicts = verify_trace(t);
    std::cout << "trace " << t.header().scenario << " (seed " << t.header().seed << ", " << t.size() << " events)\n";
    print_verdicts(verdicts);
    return any_violated(verdicts) ? kViolated : kOk;
}

int cmd_list() {
    for (const auto& p : builtin_scenarios()) {
        ScenarioConfig c = load_scenario(p);
        std::cout << std::left << std::setw(26) << c.name << std::setw(32) << p.filename().string() << c.description
                  << '\n';
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EV-charging protocol security simulator and verifier"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    std::string file, trace_out, out_path, expected_path;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "Run a scenario and print the nine verdicts");
    run->add_option("file", file, "Scenario file")->required();
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--trace-out", trace_out, "Write the trace log (JSON lines) to PATH");

    auto* matrix = app.add_subcommand("matrix", "Run the mechanism x link x protection x attacker matrix");
    matrix->add_option("--out", out_path, "Write the table to PATH instead of stdout");
    matrix->add_option("--expected", expected_path, "Compare against an expected table");

    auto* verify = app.add_subcommand("verify-trace", "Re-check a stored trace without re-simulating");
    verify->add_option("file", file, "Trace file")->required();

    auto* list = app.add_subcommand("list-scenarios", "List the built-in scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kError;
    }

    try {
        if (*run) return cmd_run(file, seed, trace_out);
        if (*matrix) return cmd_matrix(out_path, expected_path);
        if (*verify) return cmd_verify_trace(file);
        if (*list) return cmd_list();
    } catch (const CorruptTrace& e) {
        std::cerr << "CorruptTrace: " << e.what() << '\n';
    } catch (const IncompleteTrace& e) {
        std::cerr << "IncompleteTrace: " << e.what() << '\n';
    } catch (const ConfigError& e) {
        std::cerr << "ConfigError: " << e.what() << '\n';
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return kError;
}
