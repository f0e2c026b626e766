// Small shared utilities: seed derivation, content digests, deterministic
// number formatting and a fixed-size worker pool.
#pragma once

#include <atomic>
#include <charconv>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace sgmix {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent per-index stream seed derived from a master seed; replication
// b of a batch always uses derive_seed(master, b) so batches reproduce
// regardless of scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x51ed2701ULL));
}

// FNV-1a, used to fingerprint inputs and manifests. Not cryptographic.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t v);

// Shortest representation that round-trips the exact double value; locale
// independent, so emitted CSVs are byte-stable.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, bool& ok) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  ok = (res.ec == std::errc{} && res.ptr == s.data() + s.size());
  return v;
}

// Runs tasks 0..count-1 on up to `jobs` threads. Tasks must not share
// mutable state; the first captured exception is rethrown after join.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task);

}  // namespace sgmix
