#pragma once

#include <array>
#include <cstdint>

namespace stms {

// Philox4x32-10 counter-based generator. Streams are addressed by a
// (seed, stream) key pair, so independent substreams can be derived for
// parallel work without coordination: results depend only on the key and
// the draw index, never on scheduling.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on (0,1); never returns 0 or 1.
  double uniform();
  // Standard normal via Box-Muller.
  double normal();
  // Exponential with unit rate.
  double exponential();
  // Standard Frechet: CDF exp(-1/z).
  double frechet();

  // Derive an unrelated child stream; deterministic in (this key, id).
  RngStream substream(std::uint64_t id) const;

  static std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                                 const std::array<std::uint32_t, 2>& key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_;
  int pos_;
};

}  // namespace stms
