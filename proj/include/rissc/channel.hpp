#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "rissc/ctensor.hpp"

namespace rissc {

struct ChannelSpec {
  std::string kind = "awgn";
  double snr_db = 19.0;
  std::uint64_t seed = 0;
};

/// Mean of |z|^2 over all elements. Empty tensors are an error.
double avg_power(const CTensor& field);

/// Adds circularly-symmetric complex Gaussian noise at the requested SNR,
/// defined against the empirical average power of `field`. Per-element
/// noise variance is avg_power * 10^(-snr_db/10), split evenly between the
/// real and imaginary components. Differentiable pass-through: the
/// gradient flows to `field` unchanged (noise acts as an additive
/// constant).
CTensor awgn(const CTensor& field, double snr_db, std::mt19937_64& rng);

}  // namespace rissc
