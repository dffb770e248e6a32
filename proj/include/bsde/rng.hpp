#pragma once

#include <cstdint>
#include <random>

namespace bsde {

/// Deterministic child seed for (master, a, b); used to split a run's master
/// seed into per-trial, per-iteration and per-direction streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// Engine owning the substream of sample path `index`. Every per-sample
/// draw in the library goes through one of these, which is what makes the
/// batches independent of the OpenMP thread count.
std::mt19937_64 sample_engine(std::uint64_t seed, std::uint64_t index);

}  // namespace bsde
