#pragma once

#include <cstdint>
#include <string_view>

namespace fimlab {

// Counter-based generator: every draw is a hash of (key, counter), so streams
// can be split arbitrarily and results never depend on evaluation order across
// streams. Same (master_seed, stream_id) always replays the same sequence.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  double uniform();        // [0, 1)
  double normal();         // standard normal, Box-Muller
  double bernoulli_pm1();  // +1 or -1 with probability 1/2
  int poisson(double mean);

  // Independent child stream; derivation is stable under draw order.
  RngStream substream(std::uint64_t child) const;
  RngStream substream(std::string_view label) const;

 private:
  explicit RngStream(std::uint64_t key) : key_(key) {}
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace fimlab
