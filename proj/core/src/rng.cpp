#include "stms/rng.hpp"

#include <cmath>

namespace stms {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline std::uint32_t mulhi(std::uint32_t a, std::uint32_t b) {
  return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) >> 32);
}

// 64-bit mix (splitmix64 finalizer); used to decorrelate substream keys.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> RngStream::philox4x32(const std::array<std::uint32_t, 4>& counter,
                                                   const std::array<std::uint32_t, 2>& key) {
  std::array<std::uint32_t, 4> c = counter;
  std::array<std::uint32_t, 2> k = key;
  for (int round = 0; round < 10; ++round) {
    const std::uint32_t hi0 = mulhi(kPhiloxM0, c[0]);
    const std::uint32_t lo0 = kPhiloxM0 * c[0];
    const std::uint32_t hi1 = mulhi(kPhiloxM1, c[2]);
    const std::uint32_t lo1 = kPhiloxM1 * c[2];
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
  // Mix seed and stream so that nearby values give unrelated keys.
  const std::uint64_t k = mix64(seed ^ mix64(stream));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  counter_ = {0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  pos_ = 4;
}

void RngStream::refill() {
  block_ = philox4x32(counter_, key_);
  pos_ = 0;
  if (++counter_[0] == 0) ++counter_[1];
}

std::uint32_t RngStream::next_u32() {
  if (pos_ >= 4) refill();
  return block_[pos_++];
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double RngStream::uniform() {
  // 53-bit mantissa, shifted into (0,1).
  const std::uint64_t r = next_u64() >> 11;
  return (static_cast<double>(r) + 0.5) * 0x1.0p-53;
}

namespace {

// Ziggurat tables for the standard normal (128 layers).
struct ZigguratTables {
  double x[129];
  double ratio[128];  // x[i+1]/x[i]
  double f[129];      // exp(-x^2/2)

  ZigguratTables() {
    const double R = 3.442619855899;
    const double V = 9.91256303526217e-3;
    x[0] = V / std::exp(-0.5 * R * R);
    x[1] = R;
    x[128] = 0.0;
    for (int i = 2; i < 128; ++i)
      x[i] = std::sqrt(-2.0 * std::log(V / x[i - 1] + std::exp(-0.5 * x[i - 1] * x[i - 1])));
    for (int i = 0; i < 128; ++i) ratio[i] = x[i + 1] / x[i];
    for (int i = 0; i <= 128; ++i) f[i] = std::exp(-0.5 * x[i] * x[i]);
  }
};

const ZigguratTables& ziggurat() {
  static const ZigguratTables t;
  return t;
}

}  // namespace

double RngStream::normal() {
  const ZigguratTables& t = ziggurat();
  const double R = 3.442619855899;
  for (;;) {
    const std::uint64_t raw = next_u64();
    const int layer = static_cast<int>(raw & 127u);
    const double sign = (raw & 128u) ? -1.0 : 1.0;
    const double u = (static_cast<double>(raw >> 11) + 0.5) * 0x1.0p-53;
    const double x = u * t.x[layer];
    if (u < t.ratio[layer]) return sign * x;
    if (layer == 0) {
      // Tail beyond R (Marsaglia's method).
      double xt, yt;
      do {
        xt = -std::log(uniform()) / R;
        yt = -std::log(uniform());
      } while (yt + yt < xt * xt);
      return sign * (R + xt);
    }
    const double fx = std::exp(-0.5 * x * x);
    if (t.f[layer + 1] + uniform() * (t.f[layer] - t.f[layer + 1]) < fx) return sign * x;
  }
}

double RngStream::exponential() { return -std::log(uniform()); }

double RngStream::frechet() { return 1.0 / exponential(); }

RngStream RngStream::substream(std::uint64_t id) const {
  const std::uint64_t base =
      (static_cast<std::uint64_t>(key_[1]) << 32) | key_[0];
  RngStream s;
  const std::uint64_t k = mix64(base ^ mix64(id + 0x517CC1B727220A95ull));
  s.key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  s.counter_ = {0, 0, static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
  s.pos_ = 4;
  return s;
}

}  // namespace stms
