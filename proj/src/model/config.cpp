#include "codessm/model/config.hpp"

#include <set>

namespace codessm::model {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Base: return "base";
    case Variant::Pos: return "pos";
    case Variant::Dropout: return "dropout";
    case Variant::CodeF: return "codef";
    case Variant::Uni: return "uni";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "base") return Variant::Base;
  if (s == "pos") return Variant::Pos;
  if (s == "dropout") return Variant::Dropout;
  if (s == "codef") return Variant::CodeF;
  if (s == "uni") return Variant::Uni;
  throw ConfigError("unknown variant '" + s + "' (expected base|pos|dropout|codef|uni)");
}

void EncoderConfig::validate() const {
  if (n_layers < 1) throw ConfigError("n_layers must be >= 1");
  if (hidden < 2 || hidden % 2 != 0) throw ConfigError("hidden must be even and >= 2");
  if (state_size < 1) throw ConfigError("state_size must be >= 1");
  if (vocab_size < kMinVocab) throw ConfigError("vocab_size must cover the special tokens");
  if (variant == Variant::Pos && max_position < 1) throw ConfigError("pos variant needs max_position >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
}

layers::LayerOptions EncoderConfig::layer_options() const {
  layers::LayerOptions o;
  switch (variant) {
    case Variant::Base:
    case Variant::Pos: o.variant = layers::LayerVariant::Base; break;
    case Variant::Dropout: o.variant = layers::LayerVariant::Dropout; break;
    case Variant::CodeF: o.variant = layers::LayerVariant::Dft; break;
    case Variant::Uni: o.variant = layers::LayerVariant::Uni; break;
  }
  o.dropout = dropout;
  o.gate_bias = gate_bias;
  o.kernel.discretization = discretization;
  return o;
}

nlohmann::json EncoderConfig::to_json() const {
  return {
      {"n_layers", n_layers},
      {"hidden", hidden},
      {"state_size", state_size},
      {"vocab_size", vocab_size},
      {"variant", to_string(variant)},
      {"max_position", max_position},
      {"dropout", dropout},
      {"tie_mlm_head", tie_mlm_head},
      {"bert_head", bert_head},
      {"gate_bias", gate_bias},
      {"discretization", discretization == ssm::Discretization::ZeroOrderHold ? "zoh" : "bilinear"},
  };
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  EncoderConfig c;
  static const std::set<std::string> known = {"n_layers", "hidden",       "state_size", "vocab_size",
                                              "variant",  "max_position", "dropout",    "tie_mlm_head",
                                              "bert_head", "gate_bias",   "discretization"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown model config key '" + key + "'");
  }
  auto uint_field = [&](const char* key, std::size_t& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_unsigned()) throw ConfigError(std::string("model.") + key + " must be a non-negative integer");
    out = j[key].get<std::size_t>();
  };
  auto bool_field = [&](const char* key, bool& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_boolean()) throw ConfigError(std::string("model.") + key + " must be a boolean");
    out = j[key].get<bool>();
  };
  uint_field("n_layers", c.n_layers);
  uint_field("hidden", c.hidden);
  uint_field("state_size", c.state_size);
  uint_field("vocab_size", c.vocab_size);
  uint_field("max_position", c.max_position);
  bool_field("tie_mlm_head", c.tie_mlm_head);
  bool_field("bert_head", c.bert_head);
  bool_field("gate_bias", c.gate_bias);
  if (j.contains("dropout")) {
    if (!j["dropout"].is_number()) throw ConfigError("model.dropout must be a number");
    c.dropout = j["dropout"].get<double>();
  }
  if (j.contains("variant")) {
    if (!j["variant"].is_string()) throw ConfigError("model.variant must be a string");
    c.variant = variant_from_string(j["variant"].get<std::string>());
  }
  if (j.contains("discretization")) {
    const auto s = j["discretization"].is_string() ? j["discretization"].get<std::string>() : "";
    if (s == "zoh")
      c.discretization = ssm::Discretization::ZeroOrderHold;
    else if (s == "bilinear")
      c.discretization = ssm::Discretization::Bilinear;
    else
      throw ConfigError("model.discretization must be \"zoh\" or \"bilinear\"");
  }
  c.validate();
  return c;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t EncoderConfig::hash() const { return fnv1a64(to_json().dump()); }

EncoderConfig EncoderConfig::desk() { return EncoderConfig{}; }

EncoderConfig EncoderConfig::paper_scale() {
  EncoderConfig c;
  c.n_layers = 12;
  c.hidden = 1024;
  c.state_size = 64;
  return c;
}

}  // namespace codessm::model
