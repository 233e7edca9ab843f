#include "crowdgate/rational.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "crowdgate/error.hpp"

namespace crowdgate {

namespace {

__extension__ using u128 = unsigned __int128;

std::int64_t parse_int(std::string_view text, std::string_view whole) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw InputError("fps", "not a frame rate: '" + std::string(whole) + "'");
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (num <= 0 || den <= 0)
    throw InputError("fps", "frame rate must be positive, got " + std::to_string(num) + "/" + std::to_string(den));
  const std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

Rational Rational::parse(std::string_view text) {
  const std::string_view t = trim(text);
  if (const auto slash = t.find('/'); slash != std::string_view::npos)
    return Rational(parse_int(trim(t.substr(0, slash)), t), parse_int(trim(t.substr(slash + 1)), t));

  const auto dot = t.find('.');
  if (dot == std::string_view::npos) return Rational(parse_int(t, t), 1);

  // Exact decimal: "29.97" -> 2997/100.
  const std::string_view int_part = t.substr(0, dot);
  const std::string_view frac_part = t.substr(dot + 1);
  if (frac_part.empty() || frac_part.size() > 12 || (!frac_part.empty() && frac_part.front() == '-'))
    throw InputError("fps", "not a frame rate: '" + std::string(t) + "'");
  const std::int64_t whole = int_part.empty() ? 0 : parse_int(int_part, t);
  const std::int64_t frac = parse_int(frac_part, t);
  std::int64_t scale = 1;
  for (std::size_t i = 0; i < frac_part.size(); ++i) scale *= 10;
  if (whole < 0 || whole > std::numeric_limits<std::int64_t>::max() / scale - 1)
    throw InputError("fps", "frame rate out of range: '" + std::string(t) + "'");
  return Rational(whole * scale + frac, scale);
}

Rational Rational::from_double(double value) {
  if (!std::isfinite(value) || value <= 0.0)
    throw InputError("fps", "frame rate must be positive");
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
  if (ec != std::errc()) throw InputError("fps", "frame rate out of range");
  return parse(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

std::uint64_t round_div(std::uint64_t numerator, std::uint64_t denominator) {
  const std::uint64_t q = numerator / denominator;
  const std::uint64_t r = numerator % denominator;
  return (r >= denominator - r) ? q + 1 : q;
}

std::uint64_t frame_to_ms(std::uint64_t frame, const Rational& fps) {
  const u128 n = static_cast<u128>(frame) * 1000u * static_cast<std::uint64_t>(fps.den());
  const u128 d = static_cast<std::uint64_t>(fps.num());
  const auto q = n / d;
  const auto r = n % d;
  return static_cast<std::uint64_t>((r >= d - r) ? q + 1 : q);
}

}  // namespace crowdgate
