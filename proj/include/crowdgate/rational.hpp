#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace crowdgate {

/// Exact positive frame rate, e.g. 30000/1001. Always stored reduced.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den);

  /// Accepts "30", "30000/1001" or a decimal such as "29.97".
  static Rational parse(std::string_view text);
  /// Exact conversion of the shortest decimal representation of `value`.
  static Rational from_double(double value);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// "30" for integral rates, otherwise "num/den".
  std::string to_string() const;

  friend bool operator==(const Rational&, const Rational&) = default;

 private:
  std::int64_t num_ = 1;
  std::int64_t den_ = 1;
};

/// round(numerator / denominator) with halves away from zero, for
/// non-negative operands; denominator must be positive.
std::uint64_t round_div(std::uint64_t numerator, std::uint64_t denominator);

/// Milliseconds at which `frame` starts: round(frame * 1000 / fps).
std::uint64_t frame_to_ms(std::uint64_t frame, const Rational& fps);

}  // namespace crowdgate
