#include "cams/rng.hpp"

#include <sstream>
#include <stdexcept>

namespace cams {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below requires n > 0");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

Rng Rng::deserialize(std::string_view text) {
  Rng rng;
  std::istringstream is{std::string(text)};
  is >> rng.engine_;
  if (!is) throw std::invalid_argument("malformed rng state");
  return rng;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::string_view label) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ index);
  h = splitmix64(h ^ fnv1a(label));
  return h;
}

}  // namespace cams
