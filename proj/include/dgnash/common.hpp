#pragma once

// Shared primitives: error type, small vector helpers, deterministic RNG and
// low-discrepancy sequences, round-trip-exact number formatting.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace dgnash {

using Vec = std::vector<double>;

enum class ErrorKind {
  config,    // bad configuration file or option value
  domain,    // query outside the declared domain under strict policy
  numeric,   // non-finite intermediate or impossible numeric request
  io,        // file read/write failure or malformed data file
  strategy,  // strategy emitted a control outside the sampled control set
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool ok, ErrorKind kind, const std::string& msg) {
  if (!ok) fail(kind, msg);
}

// ---- small vector helpers ----------------------------------------------------

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_l1(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += std::abs(x);
  return s;
}

inline double norm_l2(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

inline double norm_linf(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s = std::max(s, std::abs(x));
  return s;
}

inline double dist_l2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double dist_linf(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

inline Vec axpy(double alpha, std::span<const double> x, std::span<const double> y) {
  Vec r(x.size());
  for (size_t i = 0; i < x.size(); ++i) r[i] = alpha * x[i] + y[i];
  return r;
}

inline bool all_finite(std::span<const double> a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

// ---- deterministic randomness --------------------------------------------------

// splitmix64: cheap, well-mixed stream used to derive sub-seeds.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  uint64_t s = seed ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
  splitmix64(s);
  return splitmix64(s);
}

inline double unit_double(uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;  // [0,1)
}

// Additive-recurrence (Kronecker) low-discrepancy sequence in [0,1)^dim.
// Deterministic for a given (seed, dim); used for hull weights and ball probes.
class KroneckerSeq {
 public:
  KroneckerSeq(uint64_t seed, int dim) : alpha_(dim), x_(dim) {
    // Generalized golden-ratio alphas: roots of x^(d+1) = x + 1 give good equidistribution.
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
    uint64_t s = seed;
    for (int j = 0; j < dim; ++j) {
      alpha_[j] = std::fmod(std::pow(1.0 / phi, j + 1), 1.0);
      x_[j] = unit_double(splitmix64(s));  // seeded start offset
    }
  }

  const Vec& next() {
    for (size_t j = 0; j < x_.size(); ++j) {
      x_[j] += alpha_[j];
      if (x_[j] >= 1.0) x_[j] -= 1.0;
    }
    return x_;
  }

 private:
  Vec alpha_;
  Vec x_;
};

// Convex weights on m vertices from a low-discrepancy point via exponential spacings.
inline Vec convex_weights(std::span<const double> u, int m) {
  Vec w(m);
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    double ui = std::min(std::max(u[i], 1e-12), 1.0 - 1e-12);
    w[i] = -std::log1p(-ui);
    total += w[i];
  }
  for (int i = 0; i < m; ++i) w[i] /= total;
  return w;
}

// ---- formatting / parsing -------------------------------------------------------

// Shortest representation that round-trips exactly; keeps exports byte-stable.
inline std::string fmt(double v) {
  std::array<char, 32> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

inline std::string fmt(std::span<const double> v, char sep = ' ') {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += fmt(v[i]);
  }
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc()) return false;
  while (p < e && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
  return p == e;
}

inline std::string_view trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// Whitespace-separated doubles; throws `kind` with `what` context on garbage.
inline Vec parse_vec(std::string_view s, ErrorKind kind, const std::string& what) {
  Vec out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',')) ++i;
    if (i >= s.size()) break;
    size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != ',') ++j;
    double v;
    if (!parse_double(s.substr(i, j - i), v))
      fail(kind, what + ": cannot parse number '" + std::string(s.substr(i, j - i)) + "'");
    out.push_back(v);
    i = j;
  }
  return out;
}

}  // namespace dgnash
