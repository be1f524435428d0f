#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "bfwi/tensor.hpp"

namespace bfwi {

using Rng = std::mt19937_64;

/// Derive an independent substream seed from (base seed, index, purpose tag).
///
/// All randomness in experiments flows through this function so that any
/// record can be regenerated in isolation: the tag is hashed with FNV-1a and
/// the three parts are mixed with the splitmix64 finalizer.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::string_view tag);

Rng make_rng(std::uint64_t base, std::uint64_t index, std::string_view tag);

double standard_normal(Rng& rng);
double uniform01(Rng& rng);
/// Uniform integer in [lo, hi].
long long uniform_int(Rng& rng, long long lo, long long hi);
double uniform_real(Rng& rng, double lo, double hi);

/// Field of i.i.d. standard normal entries.
Field normal_field(Shape shape, Rng& rng);

}  // namespace bfwi
