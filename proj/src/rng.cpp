#include "fimlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace fimlab {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Stafford mix13 finalizer, the same mixer splitmix64 uses.
std::uint64_t mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : key_(mix(mix(master_seed + kGolden) ^ mix(stream_id + 0x6a09e667f3bcc909ULL))) {}

std::uint64_t RngStream::next_u64() { return mix(key_ + (++counter_) * kGolden); }

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::bernoulli_pm1() { return (next_u64() >> 63) ? 1.0 : -1.0; }

int RngStream::poisson(double mean) {
  // Knuth's product method; fine for the small means used here.
  const double limit = std::exp(-mean);
  int k = 0;
  double prod = 1.0;
  do {
    ++k;
    prod *= uniform();
  } while (prod > limit);
  return k - 1;
}

RngStream RngStream::substream(std::uint64_t child) const {
  return RngStream(mix(key_ ^ mix(child + 0xa4093822299f31d0ULL)));
}

RngStream RngStream::substream(std::string_view label) const {
  return substream(fnv1a(label));
}

}  // namespace fimlab
