#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mrdebug {

/// Fixed-point number with exactly two fractional digits, stored as a scaled
/// integer (hundredths). All record numerics and SUT outputs use it so that
/// equality and epsilon comparisons are reproducible bit for bit.
class Decimal {
 public:
  constexpr Decimal() = default;

  static constexpr Decimal from_cents(std::int64_t cents) {
    Decimal d;
    d.cents_ = cents;
    return d;
  }
  static constexpr Decimal from_units(std::int64_t units) {
    return from_cents(units * 100);
  }
  /// Rounds to the nearest hundredth, half away from zero.
  static Decimal from_double(double value);

  /// Accepts `[-]digits[.digits]` with at most two fraction digits. The
  /// Unicode minus sign (U+2212) is accepted in place of '-'.
  static std::optional<Decimal> try_parse(std::string_view text);
  /// Throws std::invalid_argument on malformed input.
  static Decimal parse(std::string_view text);

  constexpr std::int64_t cents() const { return cents_; }
  double to_double() const { return static_cast<double>(cents_) / 100.0; }

  /// Always two fraction digits: "-88.49", "0.00".
  std::string to_string() const;
  /// Drops a ".00" suffix for whole values: "56844", "0.50".
  std::string to_compact_string() const;

  /// value * numerator / denominator, rounded half away from zero.
  Decimal scaled(std::int64_t numerator, std::int64_t denominator) const;

  constexpr Decimal operator-() const { return from_cents(-cents_); }
  constexpr Decimal operator+(Decimal o) const { return from_cents(cents_ + o.cents_); }
  constexpr Decimal operator-(Decimal o) const { return from_cents(cents_ - o.cents_); }
  constexpr Decimal& operator+=(Decimal o) {
    cents_ += o.cents_;
    return *this;
  }
  constexpr Decimal& operator-=(Decimal o) {
    cents_ -= o.cents_;
    return *this;
  }

  constexpr auto operator<=>(const Decimal&) const = default;

 private:
  std::int64_t cents_ = 0;
};

constexpr Decimal abs(Decimal d) { return d < Decimal{} ? -d : d; }
constexpr Decimal min(Decimal a, Decimal b) { return b < a ? b : a; }
constexpr Decimal max(Decimal a, Decimal b) { return a < b ? b : a; }

}  // namespace mrdebug
