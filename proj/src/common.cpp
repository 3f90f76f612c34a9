// SPDX-License-Identifier: Apache-2.0
#include "evsec/common.hpp"

#include <array>
#include <cstdlib>
#include <utility>

namespace evsec {

namespace {

constexpr std::array<std::pair<Role, std::string_view>, 7> kRoleNames{{
    {Role::EV, "EV"},
    {Role::ChargePoint, "ChargePoint"},
    {Role::CPO, "CPO"},
    {Role::EMSP, "EMSP"},
    {Role::ClearingHouse, "ClearingHouse"},
    {Role::DSO, "DSO"},
    {Role::CPIO, "CPIO"},
}};

}  // namespace

std::string_view to_string(Role r) {
    for (const auto& [role, name] : kRoleNames)
        if (role == r) return name;
    return "?";
}

std::optional<Role> role_from_string(std::string_view s) {
    for (const auto& [role, name] : kRoleNames)
        if (name == s) return role;
    return std::nullopt;
}

Decimal Decimal::parse(std::string_view text) {
    auto fail = [&] { return ConfigError("invalid decimal '" + std::string(text) + "'"); };
    if (text.empty()) throw fail();
    bool negative = false;
    std::size_t i = 0;
    if (text[0] == '-' || text[0] == '+') {
        negative = text[0] == '-';
        i = 1;
    }
    std::int64_t whole = 0;
    std::int64_t frac = 0;
    int frac_digits = 0;
    bool any_digit = false;
    bool in_frac = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c == '.') {
            if (in_frac) throw fail();
            in_frac = true;
            continue;
        }
        if (c < '0' || c > '9') throw fail();
        any_digit = true;
        if (in_frac) {
            if (++frac_digits > 3) throw fail();
            frac = frac * 10 + (c - '0');
        } else {
            whole = whole * 10 + (c - '0');
        }
    }
    if (!any_digit) throw fail();
    while (frac_digits < 3) {
        frac *= 10;
        ++frac_digits;
    }
    std::int64_t m = whole * 1000 + frac;
    return from_milli(negative ? -m : m);
}

std::string Decimal::str() const {
    std::int64_t a = std::llabs(milli_);
    std::string frac = std::to_string(a % 1000);
    while (frac.size() < 3) frac.insert(frac.begin(), '0');
    return (milli_ < 0 ? "-" : "") + std::to_string(a / 1000) + "." + frac;
}

}  // namespace evsec
