#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstring>
#include <random>
#include <string_view>

namespace gansearch {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A batch of row-vector samples (rows = samples, cols = features).
using Batch = Eigen::MatrixXd;

enum class Role { Generator, Discriminator };

inline const char* to_string(Role r) {
  return r == Role::Generator ? "generator" : "discriminator";
}

// --- content hashing (FNV-1a 64) ------------------------------------------

inline constexpr std::uint64_t kFnvBasis = 1469598103934665603ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = kFnvBasis) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a_u64(std::uint64_t v, std::uint64_t h = kFnvBasis) {
  return fnv1a(&v, sizeof(v), h);
}

inline std::uint64_t fnv1a_matrix(const Matrix& m, std::uint64_t h = kFnvBasis) {
  h = fnv1a_u64(static_cast<std::uint64_t>(m.rows()), h);
  h = fnv1a_u64(static_cast<std::uint64_t>(m.cols()), h);
  return fnv1a(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()), h);
}

std::string to_hex(std::uint64_t v);

// --- deterministic rng streams ---------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Independent stream keyed by (seed, tag, up to three indices). Streams with
/// distinct keys are uncorrelated for our purposes; same key -> same stream.
inline std::mt19937_64 rng_stream(std::uint64_t seed, std::string_view tag,
                                  std::uint64_t a = 0, std::uint64_t b = 0,
                                  std::uint64_t c = 0) {
  std::uint64_t h = fnv1a(tag.data(), tag.size());
  h = fnv1a_u64(seed, h);
  h = fnv1a_u64(a, h);
  h = fnv1a_u64(b, h);
  h = fnv1a_u64(c, h);
  std::uint64_t s = h;
  std::seed_seq seq{splitmix64(s), splitmix64(s), splitmix64(s), splitmix64(s)};
  return std::mt19937_64(seq);
}

}  // namespace gansearch
