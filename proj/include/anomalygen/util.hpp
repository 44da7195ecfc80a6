#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace anomalygen::util {

// 64-bit FNV-1a. Used for template ids, session ids, and manifest content hashes.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t value);

// splitmix64: portable seeded generator. std::uniform_int_distribution is not
// bit-stable across standard libraries, so all seeded sampling goes through this.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // Unbiased value in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) return 0;
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }
};

std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_tokens(std::string_view s);  // whitespace-separated
bool contains(std::string_view haystack, std::string_view needle);

std::optional<std::string> read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);  // throws on failure

// Glob with '*' (any run, including dots) and '?' (single char), anchored both ends.
// Throws std::invalid_argument on an empty or whitespace-containing pattern.
bool glob_match(std::string_view pattern, std::string_view text);
void validate_glob(std::string_view pattern);

std::string sanitize_filename(std::string_view name);

}  // namespace anomalygen::util
