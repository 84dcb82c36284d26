#pragma once

#include <cstdint>
#include <vector>

#include "codessm/layers/embedding.hpp"

namespace codessm::training {

using layers::PadMask;
using layers::TokenIds;

inline constexpr std::int32_t kIgnoreLabel = -100;

struct MaskedBatch {
  TokenIds input_ids;  // B x L
  TokenIds labels;     // original id where selected, kIgnoreLabel elsewhere
  PadMask mask;
};

struct MaskingOptions {
  double mask_prob = 0.15;
  double replace_with_mask = 0.8;
  double replace_with_random = 0.1;  // the remainder stays unchanged
  std::int32_t mask_id = 4;
  std::vector<std::int32_t> special_ids{0, 1, 2, 3, 4};
};

/// Independent per-position selection among valid, non-special tokens, then
/// the mask/random/unchanged replacement split. Random replacements are drawn
/// from the non-special ids.
MaskedBatch mlm_mask(const TokenIds& ids, const PadMask& mask, std::size_t vocab_size, const MaskingOptions& opts,
                     Rng& rng);

}  // namespace codessm::training
