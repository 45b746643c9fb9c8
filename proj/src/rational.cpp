#include "wd/rational.hpp"

#include <cctype>

namespace wd {

std::string rat_str(const Rat& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

namespace {

std::optional<Int> int_parse(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return std::nullopt;
  for (std::size_t j = i; j < s.size(); ++j)
    if (!std::isdigit(static_cast<unsigned char>(s[j]))) return std::nullopt;
  return Int(s);
}

}  // namespace

std::optional<Rat> rat_parse(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) {
    auto n = int_parse(s);
    if (!n) return std::nullopt;
    return Rat(*n);
  }
  auto n = int_parse(s.substr(0, slash));
  auto d = int_parse(s.substr(slash + 1));
  if (!n || !d || *d == 0) return std::nullopt;
  return Rat(*n, *d);
}

bool is_integer(const Rat& r) { return denominator(r) == 1; }

long long l_adic_valuation(const Rat& r, const Int& ell) {
  auto count = [&ell](Int v) {
    long long k = 0;
    v = abs(v);
    while (v != 0 && v % ell == 0) {
      v /= ell;
      ++k;
    }
    return k;
  };
  return count(numerator(r)) - count(denominator(r));
}

std::optional<Int> perfect_square_root(const Int& q) {
  if (q < 4) return std::nullopt;
  Int b = sqrt(q);
  if (b * b != q) return std::nullopt;
  return b;
}

std::optional<long long> log_base(const Rat& abs_value, const Int& base) {
  if (abs_value <= 0) return std::nullopt;
  if (abs_value == 1) return 0;
  if (is_integer(abs_value)) {
    Int v = numerator(abs_value);
    long long k = 0;
    while (v % base == 0) {
      v /= base;
      ++k;
    }
    if (v != 1) return std::nullopt;
    return k;
  }
  if (numerator(abs_value) == 1) {
    auto k = log_base(Rat(denominator(abs_value)), base);
    if (!k) return std::nullopt;
    return -*k;
  }
  return std::nullopt;
}

Int factorial(unsigned n) {
  Int f = 1;
  for (unsigned i = 2; i <= n; ++i) f *= i;
  return f;
}

Int binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  Int b = 1;
  for (unsigned i = 0; i < k; ++i) {
    b *= n - i;
    b /= i + 1;
  }
  return b;
}

}  // namespace wd
