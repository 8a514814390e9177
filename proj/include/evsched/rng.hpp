#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace evsched {

using Rng = std::mt19937_64;

/// Independent random stream derived from a root seed and a stream name
/// ("data", "sessions", "policy-noise", ...). Changing the draws of one
/// stream never shifts another.
Rng make_stream(std::uint64_t seed, std::string_view name);

double standard_normal(Rng& rng);
double uniform(Rng& rng, double lo, double hi);
std::size_t uniform_index(Rng& rng, std::size_t n);

/// 64-bit FNV-1a; used for config and data digests.
std::uint64_t fnv1a(std::string_view bytes,
                    std::uint64_t h = 14695981039346656037ULL);
std::string hex_digest(std::uint64_t h);

}  // namespace evsched
