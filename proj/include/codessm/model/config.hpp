#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "codessm/layers/gated_layer.hpp"

namespace codessm::model {

/// Encoder variants: the base model and its ablations.
enum class Variant {
  Base,     // bidirectional gated SSM, no positional table
  Pos,      // base + learned absolute positions
  Dropout,  // base + dropout after each elementwise product
  CodeF,    // SSM replaced by a DFT mixing step
  Uni,      // flips removed (causal)
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct EncoderConfig {
  std::size_t n_layers = 2;
  std::size_t hidden = 64;
  std::size_t state_size = 16;
  std::size_t vocab_size = 261;
  Variant variant = Variant::Base;
  std::size_t max_position = 256;  // used by Variant::Pos only
  double dropout = 0.1;            // used by Variant::Dropout only
  bool tie_mlm_head = true;
  bool bert_head = false;  // dense + GELU + LayerNorm before the vocabulary projection
  bool gate_bias = false;
  ssm::Discretization discretization = ssm::Discretization::ZeroOrderHold;

  static constexpr std::size_t kMinVocab = 5;  // special tokens of the byte tokenizer

  /// Throws ConfigError describing the first violated invariant.
  void validate() const;
  layers::LayerOptions layer_options() const;
  bool positional() const noexcept { return variant == Variant::Pos; }

  nlohmann::json to_json() const;
  /// Rejects unknown keys and ill-typed values with ConfigError.
  static EncoderConfig from_json(const nlohmann::json& j);

  /// 64-bit FNV-1a of the canonical JSON form.
  std::uint64_t hash() const;

  /// CPU-trainable default (2 layers, d = 64, N = 16).
  static EncoderConfig desk();
  /// Published model shape (12 layers, d = 1024); forward-only at desk scale.
  static EncoderConfig paper_scale();

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace codessm::model
