#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>

namespace wd {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// Exact fraction formatting: "p" when the denominator is 1, "p/q" otherwise.
std::string rat_str(const Rat& r);

// Parses "p", "-p", "p/q". Returns nullopt on malformed input or zero
// denominator. No floats, ever.
std::optional<Rat> rat_parse(const std::string& s);

bool is_integer(const Rat& r);

// ell-adic valuation of a nonzero rational.
long long l_adic_valuation(const Rat& r, const Int& ell);

// If q = b^2 for an integer b >= 2, returns b.
std::optional<Int> perfect_square_root(const Int& q);

// |r| = base^k for some integer k (base >= 2)? Returns k.
std::optional<long long> log_base(const Rat& abs_value, const Int& base);

Int factorial(unsigned n);
Int binomial(unsigned n, unsigned k);

}  // namespace wd
