#ifndef REID_COMMON_HPP_
#define REID_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace reid {

// Base class for everything this library throws on bad input or bad state.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed text input; messages name the offending line.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Vector / matrix dimension disagreement.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Duplicate (identity, view) rows.
class UniquenessError : public Error {
 public:
  using Error::Error;
};

// Probe/gallery or split contract violations.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Bad configuration values (model kinds, batch sizes, flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Gradient check requested too close to a hinge kink.
class KinkError : public Error {
 public:
  using Error::Error;
};

// Audit over fewer than two shared identities.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Evaluation-side errors (non-finite distances, mismatched curves).
class EvalError : public Error {
 public:
  using Error::Error;
};

// splitmix64 finalizer; used to derive substream seeds, e.g. (seed, epoch).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic RNG used everywhere a seed appears in an interface.
// mt19937_64 has a standard-specified output sequence, so a fixed seed
// reproduces the same stream on any conforming implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1): 53 high bits of the generator output.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound) { return gen_() % bound; }

  // Standard normal via Box-Muller, one spare cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Fisher-Yates; identical permutation for identical seed.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

// Strict parse of a full token; throws ParseError on trailing junk.
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

}  // namespace reid

#endif  // REID_COMMON_HPP_
