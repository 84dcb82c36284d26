#pragma once

#include <cstdint>

#include "codessm/model/config.hpp"
#include "codessm/numerics/gradcheck.hpp"

namespace codessm::training {

/// Finite differences of the SSM path on a random kernel spec (64-bit).
GradCheckResult ssm_path_gradcheck(std::size_t state_size, std::size_t length, std::size_t channels,
                                   std::uint64_t seed);

/// Finite differences of the whole encoder under masked cross-entropy, in
/// double precision. Weights are scaled up from the init so gradients sit
/// well above roundoff.
/// max_entries_per_tensor = 0 checks every entry.
GradCheckResult encoder_gradcheck(const model::EncoderConfig& config, std::size_t batch, std::size_t length,
                                  std::size_t max_entries_per_tensor, std::uint64_t seed);

}  // namespace codessm::training
