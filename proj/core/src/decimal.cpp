#include "mrdebug/decimal.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mrdebug {

namespace {

constexpr std::string_view kUnicodeMinus = "\xE2\x88\x92";

__extension__ using wide = __int128;

std::int64_t round_div(wide num, wide den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const bool negative = num < 0;
  const wide mag = negative ? -num : num;
  const wide q = (mag + den / 2) / den;
  return static_cast<std::int64_t>(negative ? -q : q);
}

}  // namespace

Decimal Decimal::from_double(double value) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("non-finite decimal value");
  }
  return from_cents(static_cast<std::int64_t>(std::llround(value * 100.0)));
}

std::optional<Decimal> Decimal::try_parse(std::string_view text) {
  bool negative = false;
  if (text.starts_with('-')) {
    negative = true;
    text.remove_prefix(1);
  } else if (text.starts_with(kUnicodeMinus)) {
    negative = true;
    text.remove_prefix(kUnicodeMinus.size());
  } else if (text.starts_with('+')) {
    text.remove_prefix(1);
  }
  if (text.empty()) return std::nullopt;

  std::int64_t whole = 0;
  std::size_t i = 0;
  std::size_t whole_digits = 0;
  for (; i < text.size() && text[i] != '.'; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') return std::nullopt;
    if (whole > (std::numeric_limits<std::int64_t>::max() / 100 - 9) / 10) {
      return std::nullopt;
    }
    whole = whole * 10 + (c - '0');
    ++whole_digits;
  }
  std::int64_t frac = 0;
  std::size_t frac_digits = 0;
  if (i < text.size()) {
    ++i;  // '.'
    for (; i < text.size(); ++i) {
      const char c = text[i];
      if (c < '0' || c > '9') return std::nullopt;
      if (frac_digits == 2) return std::nullopt;
      frac = frac * 10 + (c - '0');
      ++frac_digits;
    }
    if (frac_digits == 0 && whole_digits == 0) return std::nullopt;
  }
  if (whole_digits == 0 && frac_digits == 0) return std::nullopt;
  if (frac_digits == 1) frac *= 10;
  const std::int64_t cents = whole * 100 + frac;
  return from_cents(negative ? -cents : cents);
}

Decimal Decimal::parse(std::string_view text) {
  if (auto d = try_parse(text)) return *d;
  throw std::invalid_argument("malformed decimal '" + std::string(text) + "'");
}

std::string Decimal::to_string() const {
  const bool negative = cents_ < 0;
  const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-(cents_ + 1)) + 1
                                     : static_cast<std::uint64_t>(cents_);
  std::string out = negative ? "-" : "";
  out += std::to_string(mag / 100);
  out += '.';
  const auto frac = mag % 100;
  out += static_cast<char>('0' + frac / 10);
  out += static_cast<char>('0' + frac % 10);
  return out;
}

std::string Decimal::to_compact_string() const {
  std::string s = to_string();
  if (s.ends_with(".00")) s.resize(s.size() - 3);
  return s;
}

Decimal Decimal::scaled(std::int64_t numerator, std::int64_t denominator) const {
  if (denominator == 0) throw std::invalid_argument("zero denominator");
  return from_cents(round_div(static_cast<wide>(cents_) * numerator, denominator));
}

}  // namespace mrdebug
