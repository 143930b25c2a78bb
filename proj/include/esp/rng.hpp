#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace esp {

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Combines two 64-bit values into a well-mixed seed.
inline uint64_t mix64(uint64_t a, uint64_t b) {
  uint64_t s = a ^ (b * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL);
  return splitmix64(s);
}

/// Deterministic RNG. All conversions from raw bits to doubles/ints are done
/// by hand so that sampled sequences are reproducible bit-for-bit across
/// platforms (std::*_distribution output is implementation-defined and is
/// never used here).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  /// Independent stream derived from (seed, stream_id). Streams with
  /// different ids are decorrelated even for adjacent seeds.
  static Rng stream(uint64_t seed, uint64_t stream_id) {
    uint64_t s = seed;
    uint64_t a = splitmix64(s);
    s ^= stream_id * 0xda942042e4dd58b5ULL;
    uint64_t b = splitmix64(s);
    return Rng(a ^ (b + 0x165667b19e3779f9ULL));
  }

  uint64_t next() { return gen_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (no cached spare, keeps the stream
  /// state trivially serializable).
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Uniform integer in [0, n), unbiased.
  uint64_t randint(uint64_t n) {
    if (n == 0) throw std::invalid_argument("randint: n must be positive");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(randint(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::string serialize() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }

  static Rng deserialize(const std::string& s) {
    Rng r(0);
    std::istringstream is(s);
    is >> r.gen_;
    if (!is) throw std::invalid_argument("Rng::deserialize: bad state string");
    return r;
  }

  bool operator==(const Rng& other) const { return gen_ == other.gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace esp
