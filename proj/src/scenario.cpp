// SPDX-License-Identifier: Apache-2.0
#include "evsec/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace evsec {

namespace {

// ---------------------------------------------------------------------------
// Schema helpers
// ---------------------------------------------------------------------------

std::string at(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
}

void require_array(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError("'" + where + "' must be a list");
}

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    require_object(j, where.empty() ? "scenario" : where);
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError("unknown key '" + at(where, k) + "'");
}

const json* field(const json& j, const std::string& where, const std::string& key, bool required) {
    auto it = j.find(key);
    if (it == j.end()) {
        if (required) throw ConfigError("missing key '" + at(where, key) + "'");
        return nullptr;
    }
    return &*it;
}

std::string get_str(const json& j, const std::string& where, const std::string& key, std::optional<std::string> def = {}) {
    const json* v = field(j, where, key, !def);
    if (!v) return *def;
    if (!v->is_string()) throw ConfigError("key '" + at(where, key) + "' must be a string");
    return v->get<std::string>();
}

bool get_bool(const json& j, const std::string& where, const std::string& key, std::optional<bool> def = {}) {
    const json* v = field(j, where, key, !def);
    if (!v) return *def;
    if (!v->is_boolean()) throw ConfigError("key '" + at(where, key) + "' must be true or false");
    return v->get<bool>();
}

std::int64_t get_int(const json& j, const std::string& where, const std::string& key, std::optional<std::int64_t> def = {}) {
    const json* v = field(j, where, key, !def);
    if (!v) return *def;
    if (!v->is_number_integer()) throw ConfigError("key '" + at(where, key) + "' must be an integer");
    return v->get<std::int64_t>();
}

Decimal get_decimal(const json& j, const std::string& where, const std::string& key, std::optional<Decimal> def = {}) {
    const json* v = field(j, where, key, !def);
    if (!v) return *def;
    try {
        if (v->is_string()) return Decimal::parse(v->get<std::string>());
        if (v->is_number()) return Decimal::parse(v->dump());
    } catch (const Error&) {
    }
    throw ConfigError("key '" + at(where, key) + "' must be a decimal with at most three fractional digits");
}

std::vector<std::string> get_list(const json& j, const std::string& where, const std::string& key,
                                  std::optional<std::vector<std::string>> def = {}) {
    const json* v = field(j, where, key, !def);
    if (!v) return *def;
    if (!v->is_array()) throw ConfigError("key '" + at(where, key) + "' must be a list of strings");
    std::vector<std::string> out;
    for (const auto& e : *v) {
        if (!e.is_string()) throw ConfigError("key '" + at(where, key) + "' must be a list of strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

template <typename T, typename F>
T parse_enum(const std::string& text, const std::string& key, F&& from_string) {
    auto v = from_string(text);
    if (!v) throw ConfigError("key '" + key + "' has unknown value '" + text + "'");
    return *v;
}

const std::set<std::string> kDocTypes{"AuthorizationRequest", "AuthorizationResponse", "ChargeDetailRecord",
                                      "TariffTable",          "SelectedRate",          "MeterReading",
                                      "CapacityForecast",     "ChargeProfile",         "FirmwareUpdate",
                                      "SignedSessionDescription"};

// ---------------------------------------------------------------------------
// Steps
// ---------------------------------------------------------------------------

enum class ArgType { String, Integer, Bool, Decimal, StringList, Entries, Forecast };

struct ArgSpec {
    const char* name;
    ArgType type;
    bool required;
};

const std::map<std::string, std::vector<ArgSpec>>& step_schema() {
    using A = ArgType;
    static const std::map<std::string, std::vector<ArgSpec>> schema{
        {"authorize", {{"credential", A::String, true}, {"cp", A::String, true}, {"mechanism", A::String, true},
                       {"energy", A::Decimal, false}}},
        {"attacker_authorize", {{"cp", A::String, true}, {"mechanism", A::String, true},
                                {"credentials", A::StringList, true}, {"attacker", A::String, false}}},
        {"impersonate", {{"link", A::String, true}, {"attacker", A::String, false}}},
        {"tariff", {{"emsp", A::String, true}, {"cpo", A::String, true}, {"cp", A::String, true}, {"ev", A::String, true},
                    {"session", A::String, false}, {"entries", A::Entries, false}}},
        {"cdr", {{"cpo", A::String, true}, {"emsp", A::String, true}, {"session", A::String, false},
                 {"protection", A::String, false}, {"price", A::Decimal, false}}},
        {"falsify_stored", {{"actor", A::String, true}, {"field", A::String, true}, {"value", A::String, true}}},
        {"rotate_token", {{"link", A::String, true}}},
        {"format_convert", {{"actor", A::String, true}, {"to", A::String, true}, {"kind", A::String, true}}},
        {"smart_charging", {{"dso", A::String, true}, {"cpo", A::String, true}, {"cps", A::StringList, true},
                            {"forecast", A::Forecast, true}, {"min_kw", A::Decimal, false}}},
        {"firmware", {{"cpio", A::String, true}, {"cp", A::String, true}, {"version", A::String, true},
                      {"via", A::StringList, false}, {"signed", A::Bool, false}}},
        {"nfc_session", {{"cpo", A::String, true}, {"phone", A::String, true}, {"cp", A::String, true},
                         {"contract", A::String, true}, {"max_energy", A::Decimal, false}, {"replay", A::Bool, false}}},
        {"meter_reading", {{"signer", A::String, true}, {"ev", A::String, true}, {"cp", A::String, true},
                           {"cpo", A::String, true}, {"value", A::Decimal, true}}},
        {"set_online", {{"actor", A::String, true}, {"online", A::Bool, true}}},
        {"gdpr_redaction", {{"actor", A::String, true}}},
    };
    return schema;
}

std::vector<TariffEntry> parse_entries(const json& j, const std::string& where) {
    require_array(j, where);
    std::vector<TariffEntry> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        std::string w = where + "[" + std::to_string(i) + "]";
        check_keys(j[i], w, {"slot_start", "slot_end", "price_per_kwh", "max_power_kw"});
        out.push_back({get_int(j[i], w, "slot_start"), get_int(j[i], w, "slot_end"), get_decimal(j[i], w, "price_per_kwh"),
                       get_decimal(j[i], w, "max_power_kw", Decimal::units(22))});
    }
    return out;
}

CapacityForecast parse_forecast(const json& j, const std::string& where) {
    require_array(j, where);
    CapacityForecast f;
    for (std::size_t i = 0; i < j.size(); ++i) {
        std::string w = where + "[" + std::to_string(i) + "]";
        check_keys(j[i], w, {"slot_start", "allotted_kw", "spare_kw"});
        f.slots.push_back({get_int(j[i], w, "slot_start"), get_decimal(j[i], w, "allotted_kw"),
                           get_decimal(j[i], w, "spare_kw", Decimal{})});
    }
    return f;
}

void validate_step(const json& j, const std::string& where) {
    require_object(j, where);
    std::string op = get_str(j, where, "op");
    auto it = step_schema().find(op);
    if (it == step_schema().end()) throw ConfigError("key '" + at(where, "op") + "' has unknown value '" + op + "'");
    std::set<std::string> allowed{"op"};
    for (const auto& a : it->second) allowed.insert(a.name);
    check_keys(j, where, allowed);
    for (const auto& a : it->second) {
        if (!a.required && !j.contains(a.name)) continue;
        switch (a.type) {
            case ArgType::String: get_str(j, where, a.name); break;
            case ArgType::Integer: get_int(j, where, a.name); break;
            case ArgType::Bool: get_bool(j, where, a.name); break;
            case ArgType::Decimal: get_decimal(j, where, a.name); break;
            case ArgType::StringList: get_list(j, where, a.name); break;
            case ArgType::Entries: parse_entries(j.at(a.name), at(where, a.name)); break;
            case ArgType::Forecast: parse_forecast(j.at(a.name), at(where, a.name)); break;
        }
    }
    if (j.contains("mechanism"))
        parse_enum<AuthMechanism>(j["mechanism"].get<std::string>(), at(where, "mechanism"), auth_mechanism_from_string);
    if (j.contains("protection"))
        parse_enum<ProtectionMode>(j["protection"].get<std::string>(), at(where, "protection"), protection_from_string);
    if (op == "format_convert") {
        std::string kind = j["kind"].get<std::string>();
        if (kind != "lossy" && kind != "envelope_preserving")
            throw ConfigError("key '" + at(where, "kind") + "' has unknown value '" + kind + "'");
    }
    if (op == "meter_reading") {
        std::string signer = j["signer"].get<std::string>();
        if (signer != "ev" && signer != "card" && signer != "cp")
            throw ConfigError("key '" + at(where, "signer") + "' has unknown value '" + signer + "'");
    }
}

// ---------------------------------------------------------------------------
// Sections
// ---------------------------------------------------------------------------

ActorConfig parse_actor(const json& j, const std::string& w) {
    check_keys(j, w, {"id", "role", "online", "master_key", "certificate_valid", "anchor"});
    ActorConfig a;
    a.id = get_str(j, w, "id");
    a.role = parse_enum<Role>(get_str(j, w, "role"), at(w, "role"), role_from_string);
    a.online = get_bool(j, w, "online", true);
    a.holds_master_key = get_bool(j, w, "master_key", false);
    a.certificate_valid = get_bool(j, w, "certificate_valid", true);
    a.anchor = get_str(j, w, "anchor", "");
    return a;
}

CredentialConfig parse_credential(const json& j, const std::string& w) {
    check_keys(j, w, {"id", "holder", "uid", "revoked", "signing", "anchor"});
    CredentialConfig c;
    c.id = get_str(j, w, "id");
    c.holder = get_str(j, w, "holder");
    c.uid = get_str(j, w, "uid");
    c.revoked = get_bool(j, w, "revoked", false);
    c.signing = get_bool(j, w, "signing", false);
    c.anchor = get_str(j, w, "anchor", "");
    return c;
}

ContractConfig parse_contract(const json& j, const std::string& w) {
    check_keys(j, w, {"id", "emsp", "credential", "valid"});
    return ContractConfig{get_str(j, w, "id"), get_str(j, w, "emsp"), get_str(j, w, "credential"),
                          get_bool(j, w, "valid", true)};
}

LinkConfig parse_link(const json& j, const std::string& w) {
    check_keys(j, w, {"id", "client", "server", "a", "b", "mode", "cipher_suite", "client_auth", "secure_bootstrap",
                      "anchor", "local"});
    LinkConfig l;
    l.id = get_str(j, w, "id", "");
    if (j.contains("a") || j.contains("b")) {
        if (j.contains("client") || j.contains("server"))
            throw ConfigError("link '" + w + "' mixes 'a'/'b' with 'client'/'server'");
        l.client = get_str(j, w, "a");
        l.server = get_str(j, w, "b");
    } else {
        l.client = get_str(j, w, "client");
        l.server = get_str(j, w, "server");
    }
    l.mode = parse_enum<LinkMode>(get_str(j, w, "mode", "MutualAuth"), at(w, "mode"), link_mode_from_string);
    l.cipher_suite = get_str(j, w, "cipher_suite", kMandatoryCipherSuite);
    std::string default_auth = l.mode == LinkMode::MutualAuth ? "client_cert" : "none";
    l.client_auth = parse_enum<ClientAuthKind>(get_str(j, w, "client_auth", default_auth), at(w, "client_auth"),
                                               client_auth_from_string);
    if (l.client_auth == ClientAuthKind::ClientCertificate && l.mode != LinkMode::MutualAuth)
        throw ConfigError("key '" + at(w, "client_auth") + "': client_cert requires mode MutualAuth");
    l.secure_bootstrap = get_bool(j, w, "secure_bootstrap", true);
    l.anchor = get_str(j, w, "anchor", "");
    l.local = get_bool(j, w, "local", false);
    return l;
}

AttackAction parse_action(const json& j, const std::string& w) {
    check_keys(j, w, {"type", "match", "mutation", "credential", "doc_type", "fields", "repeat"});
    AttackAction a;
    a.type = parse_enum<ActionType>(get_str(j, w, "type"), at(w, "type"), action_type_from_string);
    if (j.contains("match")) {
        std::string mw = at(w, "match");
        check_keys(j["match"], mw, {"doc_type", "from", "to"});
        a.match.doc_type = get_str(j["match"], mw, "doc_type", "");
        a.match.from = get_str(j["match"], mw, "from", "");
        a.match.to = get_str(j["match"], mw, "to", "");
        if (!a.match.doc_type.empty() && !kDocTypes.count(a.match.doc_type))
            throw ConfigError("key '" + at(mw, "doc_type") + "' has unknown value '" + a.match.doc_type + "'");
    }
    if (j.contains("mutation")) {
        std::string mw = at(w, "mutation");
        check_keys(j["mutation"], mw, {"op", "field", "value"});
        a.mutation.op = get_str(j["mutation"], mw, "op");
        a.mutation.field = get_str(j["mutation"], mw, "field", "");
        a.mutation.value = get_str(j["mutation"], mw, "value", "");
        static const std::set<std::string> ops{"set_field", "remove_field", "tariff_filter", "set_digest", "grant"};
        if (!ops.count(a.mutation.op))
            throw ConfigError("key '" + at(mw, "op") + "' has unknown value '" + a.mutation.op + "'");
    } else if (a.type == ActionType::ModifyInTransit) {
        throw ConfigError("missing key '" + at(w, "mutation") + "'");
    }
    a.credential = get_str(j, w, "credential", "");
    a.inject_doc_type = get_str(j, w, "doc_type", "");
    if (j.contains("fields")) {
        std::string fw = at(w, "fields");
        require_object(j["fields"], fw);
        for (const auto& [k, v] : j["fields"].items()) {
            if (!v.is_string()) throw ConfigError("key '" + at(fw, k) + "' must be a string");
            a.inject_fields.push_back({k, Term::atom(v.get<std::string>())});
        }
    }
    if (a.type == ActionType::Inject && a.inject_doc_type.empty())
        throw ConfigError("missing key '" + at(w, "doc_type") + "'");
    a.repeat = get_bool(j, w, "repeat", false);
    return a;
}

AttackerSpec parse_attacker(const json& j, const std::string& w) {
    check_keys(j, w, {"name", "kind", "target", "script"});
    AttackerSpec s;
    s.name = get_str(j, w, "name");
    s.kind = parse_enum<AttackerKind>(get_str(j, w, "kind"), at(w, "kind"), attacker_kind_from_string);
    s.target = get_str(j, w, "target");
    if (j.contains("script")) {
        require_array(j["script"], at(w, "script"));
        for (std::size_t i = 0; i < j["script"].size(); ++i)
            s.script.push_back(parse_action(j["script"][i], at(w, "script") + "[" + std::to_string(i) + "]"));
    }
    return s;
}

template <typename T, typename F>
std::vector<T> parse_list(const json& doc, const std::string& key, F&& parse) {
    std::vector<T> out;
    if (!doc.contains(key)) return out;
    require_array(doc[key], key);
    for (std::size_t i = 0; i < doc[key].size(); ++i) out.push_back(parse(doc[key][i], key + "[" + std::to_string(i) + "]"));
    return out;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

TariffTable default_tariff() {
    return TariffTable{{{0, 60, Decimal::from_milli(317), Decimal::units(11)},
                        {60, 120, Decimal::from_milli(253), Decimal::units(22)},
                        {120, 180, Decimal::from_milli(449), Decimal::units(50)}}};
}

void execute(Simulation& sim, const Step& step) {
    const json& a = step.args;
    const std::string w = "step";
    auto s = [&](const char* k) { return get_str(a, w, k); };
    auto so = [&](const char* k) { return get_str(a, w, k, ""); };
    auto mech = [&] { return *auth_mechanism_from_string(s("mechanism")); };

    const std::string& op = step.op;
    if (op == "authorize") {
        sim.authorize(s("credential"), s("cp"), mech(), get_decimal(a, w, "energy", Decimal::units(20)));
    } else if (op == "attacker_authorize") {
        sim.attacker_authorize(s("cp"), mech(), get_list(a, w, "credentials"), so("attacker"));
    } else if (op == "impersonate") {
        sim.attacker_impersonate(s("link"), so("attacker"));
    } else if (op == "tariff") {
        TariffTable t = a.contains("entries") ? TariffTable{parse_entries(a["entries"], "entries")} : default_tariff();
        sim.tariff_flow(s("emsp"), s("cpo"), s("cp"), s("ev"), t, so("session"));
    } else if (op == "cdr") {
        std::optional<ProtectionMode> p;
        if (a.contains("protection")) p = protection_from_string(s("protection"));
        sim.cdr_flow(s("cpo"), s("emsp"), so("session"), p, get_decimal(a, w, "price", Decimal::from_milli(300)));
    } else if (op == "falsify_stored") {
        sim.falsify_stored(s("actor"), s("field"), s("value"));
    } else if (op == "rotate_token") {
        sim.rotate_token(s("link"));
    } else if (op == "format_convert") {
        sim.format_convert(s("actor"), s("to"),
                           s("kind") == "lossy" ? ConversionKind::Lossy : ConversionKind::EnvelopePreserving);
    } else if (op == "smart_charging") {
        sim.smart_charging_flow(s("dso"), s("cpo"), get_list(a, w, "cps"), parse_forecast(a["forecast"], "forecast"),
                                get_decimal(a, w, "min_kw", Decimal{}));
    } else if (op == "firmware") {
        sim.firmware_flow(s("cpio"), get_list(a, w, "via", std::vector<std::string>{}), s("cp"), s("version"),
                          get_bool(a, w, "signed", true));
    } else if (op == "nfc_session") {
        sim.nfc_session_flow(s("cpo"), s("phone"), s("cp"), s("contract"),
                             get_decimal(a, w, "max_energy", Decimal::units(20)), get_bool(a, w, "replay", false));
    } else if (op == "meter_reading") {
        sim.meter_reading(s("signer"), s("ev"), s("cp"), s("cpo"), get_decimal(a, w, "value"));
    } else if (op == "set_online") {
        sim.set_online(s("actor"), get_bool(a, w, "online"));
    } else if (op == "gdpr_redaction") {
        sim.gdpr_redaction(s("actor"));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

ScenarioConfig parse_scenario(const json& doc) {
    check_keys(doc, "", {"name", "description", "seed", "anchors", "cipher_suites", "actors", "credentials", "contracts",
                         "whitelists", "links", "attackers", "protection", "confidentiality", "options", "steps"});
    ScenarioConfig c;
    c.source = doc;
    c.name = get_str(doc, "", "name");
    c.description = get_str(doc, "", "description", "");
    c.seed = static_cast<std::uint64_t>(get_int(doc, "", "seed", 0));
    c.topology.anchors = get_list(doc, "", "anchors", std::vector<std::string>{"root"});
    if (doc.contains("cipher_suites")) c.topology.extra_cipher_suites = get_list(doc, "", "cipher_suites");
    c.topology.actors = parse_list<ActorConfig>(doc, "actors", parse_actor);
    c.topology.credentials = parse_list<CredentialConfig>(doc, "credentials", parse_credential);
    c.topology.contracts = parse_list<ContractConfig>(doc, "contracts", parse_contract);
    c.topology.links = parse_list<LinkConfig>(doc, "links", parse_link);
    if (doc.contains("whitelists")) {
        require_object(doc["whitelists"], "whitelists");
        for (const auto& [cpo, v] : doc["whitelists"].items())
            c.topology.uid_whitelists[cpo] = get_list(doc["whitelists"], "whitelists", cpo);
    }
    c.attackers = parse_list<AttackerSpec>(doc, "attackers", parse_attacker);

    if (doc.contains("protection")) {
        const json& p = doc["protection"];
        require_object(p, "protection");
        for (const auto& [k, v] : p.items()) {
            std::string key = at("protection", k);
            if (k != "default" && !kDocTypes.count(k)) throw ConfigError("unknown key '" + key + "'");
            if (!v.is_string()) throw ConfigError("key '" + key + "' must be a string");
            auto mode = parse_enum<ProtectionMode>(v.get<std::string>(), key, protection_from_string);
            if (k == "default")
                c.protection.default_mode = mode;
            else
                c.protection.per_doc_type[k] = mode;
        }
    }

    if (doc.contains("confidentiality")) {
        require_object(doc["confidentiality"], "confidentiality");
        for (const auto& [field, v] : doc["confidentiality"].items())
            c.confidentiality[field] = get_list(doc["confidentiality"], "confidentiality", field);
    } else {
        // Location stays with the charge point operators unless configured otherwise.
        std::vector<ActorId> cpos;
        for (const auto& a : c.topology.actors)
            if (a.role == Role::CPO) cpos.push_back(a.id);
        c.confidentiality["location"] = cpos;
    }

    if (doc.contains("options")) {
        check_keys(doc["options"], "options", {"minimum_charge", "minimum_charge_energy"});
        c.options.minimum_charge = get_bool(doc["options"], "options", "minimum_charge", false);
        c.options.minimum_charge_energy =
            get_decimal(doc["options"], "options", "minimum_charge_energy", Decimal::units(2));
    }

    if (doc.contains("steps")) {
        require_array(doc["steps"], "steps");
        for (std::size_t i = 0; i < doc["steps"].size(); ++i) {
            const json& s = doc["steps"][i];
            validate_step(s, "steps[" + std::to_string(i) + "]");
            Step step{s["op"].get<std::string>(), s};
            step.args.erase("op");
            c.steps.push_back(std::move(step));
        }
    }
    return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_scenario(doc);
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

RunResult run_scenario(const ScenarioConfig& config, std::optional<std::uint64_t> seed) {
    const std::uint64_t s = seed.value_or(config.seed);
    json source = config.source;
    source["seed"] = s;

    RunResult r;
    r.trace = Trace(TraceHeader{config.name, s, kToolVersion, source});
    Topology topo = build_topology(config.topology, s);
    {
        Simulation sim(topo, r.trace, s, config.protection, config.confidentiality, config.options);
        sim.announce_links();
        for (const auto& a : config.attackers) sim.adversary().add(a);
        for (const auto& step : config.steps) {
            try {
                execute(sim, step);
            } catch (const FlowAborted& e) {
                r.aborted.push_back(step.op + ": " + e.what());
            } catch (const InfeasibleAllocation& e) {
                r.aborted.push_back(step.op + ": " + e.what());
            }
        }
    }
    r.trace.finish();
    r.verdicts = check_all(r.trace, topo);
    return r;
}

std::vector<Verdict> verify_trace(const Trace& trace) {
    if (!trace.complete()) throw IncompleteTrace("trace has no end marker");
    ScenarioConfig config;
    try {
        config = parse_scenario(trace.header().config);
    } catch (const ConfigError& e) {
        throw CorruptTrace(std::string("trace header holds an invalid scenario: ") + e.what());
    }
    Topology topo = build_topology(config.topology, trace.header().seed);
    try {
        return check_all(trace, topo);
    } catch (const json::exception& e) {
        throw CorruptTrace(std::string("malformed event: ") + e.what());
    }
}

std::filesystem::path scenario_dir() { return EVSEC_SCENARIO_DIR; }

std::vector<std::filesystem::path> builtin_scenarios() {
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(scenario_dir()))
        if (e.path().extension() == ".json") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::filesystem::path expected_matrix_path() { return scenario_dir() / "expected_matrix.tsv"; }

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

std::string_view to_string(AttackerClass c) {
    switch (c) {
        case AttackerClass::None: return "none";
        case AttackerClass::Physical: return "physical";
        case AttackerClass::EndpointCpo: return "endpoint-cpo";
        case AttackerClass::Network: return "network";
    }
    return "?";
}

std::string MatrixConfig::label() const {
    std::string out;
    for (auto part : {to_string(mechanism), to_string(links.mode), to_string(links.client_auth), to_string(protection),
                      to_string(attacker)}) {
        if (!out.empty()) out += '\t';
        out += part;
    }
    return out;
}

std::vector<MatrixConfig> matrix_configurations() {
    const LinkSetup links[] = {{LinkMode::Plain, ClientAuthKind::StaticToken},
                               {LinkMode::ServerAuth, ClientAuthKind::StaticToken},
                               {LinkMode::MutualAuth, ClientAuthKind::StaticToken},
                               {LinkMode::MutualAuth, ClientAuthKind::ClientCertificate}};
    std::vector<MatrixConfig> out;
    for (auto m : {AuthMechanism::WeakUid, AuthMechanism::Symmetric, AuthMechanism::Asymmetric, AuthMechanism::Online})
        for (const auto& l : links)
            for (auto p : {ProtectionMode::NoProtection, ProtectionMode::WholeMessageSignature,
                           ProtectionMode::SelectiveDisclosure})
                for (auto a : {AttackerClass::None, AttackerClass::Physical, AttackerClass::EndpointCpo,
                               AttackerClass::Network})
                    out.push_back({m, l, p, a});
    return out;
}

json matrix_scenario(const MatrixConfig& c) {
    const bool sym = c.mechanism == AuthMechanism::Symmetric;
    const std::string mech(to_string(c.mechanism));
    json links = json::array();
    for (auto [client, server] : {std::pair{"cp1", "cpo1"}, {"cp2", "cpo1"}, {"cpo1", "emsp1"}, {"ev1", "cp1"}})
        links.push_back(json{{"client", client},
                             {"server", server},
                             {"mode", std::string(to_string(c.links.mode))},
                             {"client_auth", std::string(to_string(c.links.client_auth))}});

    json attackers = json::array();
    switch (c.attacker) {
        case AttackerClass::None: break;
        case AttackerClass::Physical:
            attackers.push_back(json{{"name", "cloner"},
                                     {"kind", "physical"},
                                     {"target", "cred1"},
                                     {"script", {{{"type", "read_card_uid"}, {"credential", "cred1"}}}}});
            attackers.push_back(json{{"name", "extractor"},
                                     {"kind", "physical"},
                                     {"target", "cp1"},
                                     {"script", {{{"type", "eavesdrop"}}, {{"type", "extract_master_key"}}}}});
            break;
        case AttackerClass::EndpointCpo:
            attackers.push_back(
                json{{"name", "insider"},
                     {"kind", "endpoint"},
                     {"target", "cpo1"},
                     {"script",
                      {{{"type", "modify"},
                        {"match", {{"doc_type", "TariffTable"}, {"from", "cpo1"}}},
                        {"mutation", {{"op", "tariff_filter"}}}},
                       {{"type", "modify"},
                        {"match", {{"doc_type", "AuthorizationResponse"}}},
                        {"mutation", {{"op", "grant"}}},
                        {"repeat", true}}}}});
            break;
        case AttackerClass::Network:
            for (const auto& l : links) {
                std::string id = l["client"].get<std::string>() + "-" + l["server"].get<std::string>();
                attackers.push_back(
                    json{{"name", "mitm-" + id},
                         {"kind", "network"},
                         {"target", id},
                         {"script",
                          {{{"type", "eavesdrop"}},
                           {{"type", "modify"},
                            {"match", {{"doc_type", "AuthorizationResponse"}}},
                            {"mutation", {{"op", "grant"}}},
                            {"repeat", true}},
                           {{"type", "modify"},
                            {"match", {{"doc_type", "TariffTable"}}},
                            {"mutation", {{"op", "tariff_filter"}}}},
                           {{"type", "modify"},
                            {"match", {{"doc_type", "ChargeDetailRecord"}}},
                            {"mutation", {{"op", "set_field"}, {"field", "cost"}, {"value", "99.000"}}}}}}});
            }
            attackers.push_back(
                json{{"name", "sniffer"}, {"kind", "network"}, {"target", "air:cp1"}, {"script", {{{"type", "eavesdrop"}}}}});
            break;
    }

    std::string name = "matrix";
    for (auto part : {to_string(c.mechanism), to_string(c.links.mode), to_string(c.links.client_auth),
                      to_string(c.protection), to_string(c.attacker)})
        name += "/" + std::string(part);

    return json{
        {"name", name},
        {"seed", 7},
        {"actors",
         {{{"id", "ev1"}, {"role", "EV"}},
          {{"id", "ev2"}, {"role", "EV"}},
          {{"id", "cp1"}, {"role", "ChargePoint"}, {"master_key", sym}},
          {{"id", "cp2"}, {"role", "ChargePoint"}, {"master_key", sym}, {"online", false}},
          {{"id", "cpo1"}, {"role", "CPO"}},
          {{"id", "emsp1"}, {"role", "EMSP"}}}},
        {"credentials",
         {{{"id", "cred1"}, {"holder", "ev1"}, {"uid", "04AABB"}}, {{"id", "cred2"}, {"holder", "ev2"}, {"uid", "04CCDD"}}}},
        {"contracts",
         {{{"id", "C-1"}, {"emsp", "emsp1"}, {"credential", "04AABB"}},
          {{"id", "C-2"}, {"emsp", "emsp1"}, {"credential", "04CCDD"}}}},
        {"whitelists", {{"cpo1", {"04AABB", "04CCDD"}}}},
        {"links", links},
        {"attackers", attackers},
        {"protection", {{"default", std::string(to_string(c.protection))}}},
        {"confidentiality", {{"price_per_kwh", {"ev1"}}}},
        {"steps",
         {{{"op", "authorize"}, {"credential", "cred2"}, {"cp", "cp2"}, {"mechanism", mech}},
          {{"op", "authorize"}, {"credential", "cred1"}, {"cp", "cp1"}, {"mechanism", mech}},
          {{"op", "attacker_authorize"}, {"cp", "cp1"}, {"mechanism", mech}, {"credentials", {"cred1", "cred2"}}},
          {{"op", "impersonate"}, {"link", "cpo1-emsp1"}},
          {{"op", "tariff"}, {"emsp", "emsp1"}, {"cpo", "cpo1"}, {"cp", "cp1"}, {"ev", "ev1"}},
          {{"op", "cdr"}, {"cpo", "cpo1"}, {"emsp", "emsp1"}},
          {{"op", "falsify_stored"}, {"actor", "emsp1"}, {"field", "cost"}, {"value", "0.010"}}}}};
}

std::vector<MatrixRow> run_matrix() {
    std::vector<MatrixRow> rows;
    for (const auto& c : matrix_configurations()) {
        RunResult r = run_scenario(parse_scenario(matrix_scenario(c)));
        MatrixRow row{c, {}};
        for (const auto& v : r.verdicts) row.grades.push_back(v.grade);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_matrix(const std::vector<MatrixRow>& rows) {
    std::ostringstream out;
    out << "mechanism\tlink_mode\tclient_auth\tprotection\tattacker";
    for (SrId sr : kAllRequirements) out << '\t' << to_string(sr);
    out << '\n';
    for (const auto& r : rows) {
        out << r.config.label();
        for (Grade g : r.grades) out << '\t' << to_string(g);
        out << '\n';
    }
    return out.str();
}

std::vector<MatrixMismatch> compare_matrix(const std::string& expected, const std::string& actual) {
    constexpr std::size_t kKeyColumns = 5;
    auto parse = [](const std::string& text) {
        std::map<std::string, std::vector<std::string>> rows;
        std::istringstream in(text);
        std::string line;
        bool header = true;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (header) {
                header = false;
                continue;
            }
            std::vector<std::string> cols;
            std::istringstream ls(line);
            std::string col;
            while (std::getline(ls, col, '\t')) cols.push_back(col);
            if (cols.size() < kKeyColumns) continue;
            std::string key;
            for (std::size_t i = 0; i < kKeyColumns; ++i) key += (i ? "\t" : "") + cols[i];
            rows[key] = std::vector<std::string>(cols.begin() + kKeyColumns, cols.end());
        }
        return rows;
    };
    auto want = parse(expected);
    auto got = parse(actual);
    std::vector<MatrixMismatch> out;
    for (const auto& [key, grades] : want) {
        auto it = got.find(key);
        if (it == got.end()) {
            out.push_back({key, SrId::SR1a, "row", ""});
            continue;
        }
        for (std::size_t i = 0; i < kAllRequirements.size(); ++i) {
            std::string e = i < grades.size() ? grades[i] : "";
            std::string a = i < it->second.size() ? it->second[i] : "";
            if (e != a) out.push_back({key, kAllRequirements[i], e, a});
        }
    }
    for (const auto& [key, grades] : got)
        if (!want.count(key)) out.push_back({key, SrId::SR1a, "", "row"});
    return out;
}

}  // namespace evsec
