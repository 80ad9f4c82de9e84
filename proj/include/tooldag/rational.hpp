#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>
#include <string_view>

namespace tooldag {

using Rational = mpq_class;

// Accepts integers ("-3"), fractions ("7/2") and finite decimals ("-1.25").
std::optional<Rational> parse_rational(std::string_view text);

// Integers print bare, everything else as "p/q".
std::string format_rational(const Rational& value);

inline bool is_integer(const Rational& value) { return value.get_den() == 1; }

}  // namespace tooldag
