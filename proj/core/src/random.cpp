#include "bfwi/random.hpp"

namespace bfwi {
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

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::string_view tag) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ index);
  return splitmix64(h ^ fnv1a(tag));
}

Rng make_rng(std::uint64_t base, std::uint64_t index, std::string_view tag) {
  return Rng(derive_seed(base, index, tag));
}

double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

double uniform01(Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

long long uniform_int(Rng& rng, long long lo, long long hi) {
  std::uniform_int_distribution<long long> dist(lo, hi);
  return dist(rng);
}

double uniform_real(Rng& rng, double lo, double hi) {
  if (lo == hi) return lo;
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

Field normal_field(Shape shape, Rng& rng) {
  Field f(shape);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& v : f.values()) v = dist(rng);
  return f;
}

}  // namespace bfwi
