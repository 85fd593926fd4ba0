#pragma once

#include <cstdint>
#include <random>

namespace panelvuong {

// Independent random stream keyed by (seed, replication, stream id). The key,
// not the order of construction, determines the draws, so parallel
// replications reproduce serial ones bit for bit.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream);

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  // Standard normal by inversion.
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace panelvuong
