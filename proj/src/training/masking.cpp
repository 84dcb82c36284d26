#include "codessm/training/masking.hpp"

#include <algorithm>
#include <string>

#include "codessm/numerics/errors.hpp"

namespace codessm::training {

MaskedBatch mlm_mask(const TokenIds& ids, const PadMask& mask, std::size_t vocab_size, const MaskingOptions& opts,
                     Rng& rng) {
  if (opts.mask_prob < 0.0 || opts.mask_prob >= 1.0) {
    throw ConfigError("mask_prob must lie in [0, 1), got " + std::to_string(opts.mask_prob));
  }
  if (opts.mask_id < 0 || static_cast<std::size_t>(opts.mask_id) >= vocab_size) {
    throw ConfigError("mask id " + std::to_string(opts.mask_id) + " outside vocabulary");
  }
  if (ids.rank() != 2 || ids.dim(0) != mask.batch() || ids.dim(1) != mask.seq_len()) {
    throw SizeError("token ids " + shape_string(ids.shape()) + " do not match mask");
  }
  std::vector<std::int32_t> ordinary;
  for (std::size_t v = 0; v < vocab_size; ++v) {
    const auto id = static_cast<std::int32_t>(v);
    if (std::find(opts.special_ids.begin(), opts.special_ids.end(), id) == opts.special_ids.end()) {
      ordinary.push_back(id);
    }
  }

  MaskedBatch out{ids, TokenIds(ids.shape(), kIgnoreLabel), mask};
  const std::size_t len = mask.seq_len();
  for (std::size_t b = 0; b < mask.batch(); ++b) {
    for (std::size_t t = 0; t < mask.valid_length(b); ++t) {
      const std::size_t i = b * len + t;
      const auto id = ids[i];
      if (std::find(opts.special_ids.begin(), opts.special_ids.end(), id) != opts.special_ids.end()) continue;
      if (!rng.bernoulli(opts.mask_prob)) continue;
      out.labels[i] = id;
      const double r = rng.uniform();
      if (r < opts.replace_with_mask) {
        out.input_ids[i] = opts.mask_id;
      } else if (r < opts.replace_with_mask + opts.replace_with_random && !ordinary.empty()) {
        out.input_ids[i] = ordinary[rng.uniform_int(ordinary.size())];
      }
    }
  }
  return out;
}

}  // namespace codessm::training
