#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace propdetect {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// 64-bit FNV-1a. Stable across platforms; used for seeding, feature hashing and digests.
constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = kFnvOffset) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= kFnvPrime;
  }
  return hash;
}

std::string hex64(std::uint64_t value);

bool is_space(char c);
std::string_view trim(std::string_view text);
std::vector<std::string_view> split(std::string_view text, char sep);
std::string to_lower(std::string_view text);

/// Shortest round-trippable decimal form.
std::string format_double(double value);
/// Fixed-point with `decimals` digits.
std::string format_fixed(double value, int decimals);

}  // namespace propdetect
