#pragma once

#include <cstdint>
#include <string_view>
#include <type_traits>

namespace bcer {

/// Deterministic keyed random source. Every draw is addressed by a label
/// path instead of consuming sequential generator state, so the mapping
/// (seed, labels) -> value is independent of draw order and of which
/// controller consumes it. This is what makes fault streams matched
/// across controller arms: the same site always sees the same draw.
class FaultStream {
 public:
  FaultStream() = default;
  explicit FaultStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  template <class... Labels>
  std::uint64_t bits(const Labels&... labels) const {
    std::uint64_t h = kFnvOffset;
    feed(h, seed_);
    (feed(h, labels), ...);
    return finalize(h);
  }

  /// Uniform draw in [0, 1) keyed by the label path.
  template <class... Labels>
  double uniform(const Labels&... labels) const {
    return static_cast<double>(bits(labels...) >> 11) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
  static constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

  static void feed_byte(std::uint64_t& h, unsigned char b) {
    h ^= b;
    h *= kFnvPrime;
  }

  static void feed(std::uint64_t& h, std::string_view s) {
    for (unsigned char c : s) feed_byte(h, c);
    feed_byte(h, 0xff);  // separator so ("ab","c") != ("a","bc")
  }

  static void feed(std::uint64_t& h, const char* s) {
    feed(h, std::string_view(s));
  }

  template <class T, class = std::enable_if_t<std::is_integral_v<T>>>
  static void feed(std::uint64_t& h, T v) {
    auto u = static_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) feed_byte(h, (u >> (8 * i)) & 0xff);
    feed_byte(h, 0xfe);
  }

  static std::uint64_t finalize(std::uint64_t x) {
    // splitmix64 finisher
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_ = 0;
};

}  // namespace bcer
