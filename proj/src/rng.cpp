#include "panelvuong/rng.hpp"

#include "panelvuong/normal.hpp"

namespace panelvuong {
namespace {

std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(rep), hi(rep), lo(stream), hi(stream)};
  return std::mt19937_64(seq);
}

}  // namespace

Stream::Stream(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream) : engine_(keyed_engine(seed, rep, stream)) {}

double Stream::uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

double Stream::normal() { return normal_quantile(uniform()); }

}  // namespace panelvuong
