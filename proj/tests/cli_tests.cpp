// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "vendor/doctest.h"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result cli(const std::string& args) {
    std::string cmd = std::string("\"") + EVSEC_CLI + "\" " + args + " 2>&1";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p);
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), p)) r.out += buf.data();
    int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string scenario(const std::string& name) { return std::string(EVSEC_SCENARIOS) + "/" + name + ".json"; }

fs::path tmp(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "evsec-cli-tests";
    fs::create_directories(dir);
    return dir / name;
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

void write_lines(const fs::path& p, const std::vector<std::string>& ls) {
    std::ofstream out(p);
    for (const auto& l : ls) out << l << '\n';
}

}  // namespace

TEST_CASE("run exit codes") {
    CHECK(cli("run " + scenario("honest_secure")).code == 0);
    auto v = cli("run " + scenario("weak_uid_cloning"));
    CHECK(v.code == 2);
    CHECK(v.out.find("SR1a") != std::string::npos);
    CHECK(cli("run /does/not/exist.json").code == 1);

    auto bad = tmp("bad.json");
    std::ofstream(bad) << R"({"name":"x","actors":[],"bogus":1})";
    auto b = cli("run " + bad.string());
    CHECK(b.code == 1);
    CHECK(b.out.find("bogus") != std::string::npos);

    auto broken = tmp("broken.json");
    std::ofstream(broken) << "{";
    CHECK(cli("run " + broken.string()).code == 1);
}

TEST_CASE("usage errors") {
    CHECK(cli("").code == 1);
    CHECK(cli("frobnicate").code == 1);
    CHECK(cli("run").code == 1);
    CHECK(cli("--help").code == 0);
}

TEST_CASE("seed override and trace output") {
    auto a = tmp("a.jsonl"), b = tmp("b.jsonl");
    REQUIRE(cli("run " + scenario("cdr_sd") + " --seed 4 --trace-out " + a.string()).code == 0);
    REQUIRE(cli("run " + scenario("cdr_sd") + " --seed 4 --trace-out " + b.string()).code == 0);
    CHECK(read_lines(a) == read_lines(b));
    CHECK(read_lines(a).front().find("\"seed\":4") != std::string::npos);
}

TEST_CASE("verify-trace") {
    auto path = tmp("t.jsonl");
    REQUIRE(cli("run " + scenario("token_plain") + " --trace-out " + path.string()).code == 2);
    auto ok = cli("verify-trace " + path.string());
    CHECK(ok.code == 2);
    CHECK(ok.out.find("SR2b") != std::string::npos);

    auto lines = read_lines(path);
    REQUIRE(lines.size() > 5);

    auto deleted = lines;
    deleted.erase(deleted.begin() + 3);
    write_lines(tmp("deleted.jsonl"), deleted);
    auto d = cli("verify-trace " + tmp("deleted.jsonl").string());
    CHECK(d.code == 1);
    CHECK(d.out.find("CorruptTrace") != std::string::npos);

    auto edited = lines;
    auto pos = edited[5].find("\"kind\":\"");
    REQUIRE(pos != std::string::npos);
    edited[5].insert(pos + 8, "x");
    write_lines(tmp("edited.jsonl"), edited);
    auto e = cli("verify-trace " + tmp("edited.jsonl").string());
    CHECK(e.code == 1);
    CHECK(e.out.find("CorruptTrace") != std::string::npos);

    auto truncated = lines;
    truncated.pop_back();
    write_lines(tmp("truncated.jsonl"), truncated);
    auto t = cli("verify-trace " + tmp("truncated.jsonl").string());
    CHECK(t.code == 1);
    CHECK(t.out.find("IncompleteTrace") != std::string::npos);
}

TEST_CASE("list-scenarios") {
    auto r = cli("list-scenarios");
    CHECK(r.code == 0);
    for (const char* n : {"weak-uid-cloning", "honest-secure", "smart-charging-attack", "gdpr-redaction"})
        CHECK(r.out.find(n) != std::string::npos);
}

TEST_CASE("matrix against the shipped expectation") {
    auto out = tmp("matrix.tsv");
    auto r = cli("matrix --out " + out.string() + " --expected " + std::string(EVSEC_SCENARIOS) + "/expected_matrix.tsv");
    CHECK(r.code == 0);
    CHECK(read_lines(out).size() == 193);
}
