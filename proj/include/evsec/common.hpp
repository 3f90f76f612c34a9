// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace evsec {

using ActorId = std::string;

enum class Role { EV, ChargePoint, CPO, EMSP, ClearingHouse, DSO, CPIO };

std::string_view to_string(Role r);
std::optional<Role> role_from_string(std::string_view s);

/// Fixed-point decimal with three fractional digits. Used for kWh, kW and
/// currency so billing arithmetic stays exact.
class Decimal {
public:
    constexpr Decimal() = default;
    static constexpr Decimal from_milli(std::int64_t m) {
        Decimal d;
        d.milli_ = m;
        return d;
    }
    static constexpr Decimal units(std::int64_t u) { return from_milli(u * 1000); }
    /// Parses "12", "12.5", "-0.125"; more than three fractional digits is an error.
    static Decimal parse(std::string_view text);

    [[nodiscard]] constexpr std::int64_t milli() const { return milli_; }
    /// Always printed with exactly three fractional digits.
    [[nodiscard]] std::string str() const;

    friend constexpr Decimal operator+(Decimal a, Decimal b) { return from_milli(a.milli_ + b.milli_); }
    friend constexpr Decimal operator-(Decimal a, Decimal b) { return from_milli(a.milli_ - b.milli_); }
    /// Product rounded toward zero to three digits.
    friend constexpr Decimal operator*(Decimal a, Decimal b) {
        return from_milli(a.milli_ * b.milli_ / 1000);
    }
    friend constexpr auto operator<=>(Decimal, Decimal) = default;

private:
    std::int64_t milli_ = 0;
};

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace evsec
