#pragma once

// Core vocabulary: Minkowski vectors with signature (+,-,...,-), exact
// rationals for scaling exponents, the error taxonomy, and small numeric
// helpers shared by every module.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace modlab {

using Complex = std::complex<double>;
using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct SupportOverflow : Error {
  using Error::Error;
};
struct AliasingError : Error {
  using Error::Error;
};
struct EmptySupport : Error {
  using Error::Error;
};
struct QuadratureDivergence : Error {
  using Error::Error;
};
struct UnsupportedDimension : Error {
  using Error::Error;
};
struct UnregisteredChannel : Error {
  using Error::Error;
};
struct DegreeOverflow : Error {
  using Error::Error;
};
struct NonHermitianGenerator : Error {
  using Error::Error;
};
struct DegreeMismatch : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct DanglingReference : Error {
  using Error::Error;
};
struct InvariantViolation : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Spacetime

struct SpacetimeSpec {
  int d_space = 1;

  SpacetimeSpec() = default;
  explicit SpacetimeSpec(int spatial) : d_space(spatial) {
    if (d_space < 1) throw InvariantViolation("SpacetimeSpec: d_space must be >= 1");
  }
  int dim() const { return 1 + d_space; }
};

// k.x = k0 x0 - sum_i ki xi; the single metric convention of the codebase.
inline double minkowski_dot(const Vec& a, const Vec& b) {
  double s = a[0] * b[0];
  for (std::size_t i = 1; i < a.size(); ++i) s -= a[i] * b[i];
  return s;
}

inline bool is_spacelike(const Vec& u) {
  double t2 = u[0] * u[0];
  double r2 = 0.0;
  for (std::size_t i = 1; i < u.size(); ++i) r2 += u[i] * u[i];
  return r2 > t2;
}

// ---------------------------------------------------------------------------
// Exact rationals (scaling exponents alpha; selection rule must be decided
// without floating point).

class Rational {
 public:
  Rational() = default;
  Rational(long long num, long long den = 1) : num_(num), den_(den) { normalize(); }

  static Rational from_string(std::string_view s);

  long long num() const { return num_; }
  long long den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool positive() const { return num_ > 0; }

  Rational operator+(const Rational& o) const {
    return Rational(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
  }
  Rational operator*(const Rational& o) const { return Rational(num_ * o.num_, den_ * o.den_); }
  bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const Rational& o) const { return !(*this == o); }
  bool operator<(const Rational& o) const { return num_ * o.den_ < o.num_ * den_; }

  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  long long num_ = 0;
  long long den_ = 1;

  void normalize() {
    if (den_ == 0) throw InvariantViolation("Rational: zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    long long g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }
};

// Accepts "p/q", integers, and plain decimal strings ("0.5" -> 1/2 exactly).
inline Rational Rational::from_string(std::string_view s) {
  auto bad = [&] { throw ParseError("Rational: cannot parse '" + std::string(s) + "'"); };
  if (s.empty()) bad();
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    long long p = 0, q = 0;
    auto r1 = std::from_chars(s.data(), s.data() + slash, p);
    auto r2 = std::from_chars(s.data() + slash + 1, s.data() + s.size(), q);
    if (r1.ec != std::errc() || r2.ec != std::errc() || r2.ptr != s.data() + s.size()) bad();
    return Rational(p, q);
  }
  auto dot = s.find('.');
  if (dot == std::string_view::npos) {
    long long p = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), p);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) bad();
    return Rational(p);
  }
  bool neg = s.front() == '-';
  std::string digits;
  long long den = 1;
  for (std::size_t i = neg ? 1 : 0; i < s.size(); ++i) {
    if (i == dot) continue;
    if (s[i] < '0' || s[i] > '9') bad();
    digits.push_back(s[i]);
    if (i > dot) {
      if (den > (1LL << 60) / 10) bad();
      den *= 10;
    }
  }
  if (digits.empty()) bad();
  long long p = 0;
  auto r = std::from_chars(digits.data(), digits.data() + digits.size(), p);
  if (r.ec != std::errc()) bad();
  return Rational(neg ? -p : p, den);
}

// ---------------------------------------------------------------------------
// Shortest round-trip formatting of doubles (bit-exact golden files).

inline std::string fmt_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// FNV-1a over bytes; stable digests for scenario hashing and channel keys.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 1469598103934665603ull) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace modlab
