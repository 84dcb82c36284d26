#include "codessm/training/gradcheck.hpp"

#include <cmath>

#include "codessm/model/encoder.hpp"
#include "codessm/ssm/kernel.hpp"
#include "codessm/training/loss.hpp"
#include "codessm/training/masking.hpp"

namespace codessm::training {

GradCheckResult ssm_path_gradcheck(std::size_t state_size, std::size_t length, std::size_t channels,
                                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<cplx> lam(state_size), b(state_size), c(state_size);
  for (std::size_t i = 0; i < state_size; ++i) {
    lam[i] = {-(0.05 + rng.uniform()), 6.0 * (rng.uniform() - 0.5)};
    b[i] = {rng.normal(), rng.normal()};
    c[i] = {rng.normal(), rng.normal()};
  }
  auto spec = ssm::KernelSpec<double>::from_complex(lam, b, c, 0.05 + 0.2 * rng.uniform());
  Tensor<double> u({length, channels}), probe({length, channels});
  for (auto& v : u.values()) v = rng.normal();
  for (auto& v : probe.values()) v = rng.normal();

  auto loss = [&] {
    auto y = ssm::ssm_conv(ssm::materialize_kernel(spec, length), u);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * probe[i];
    return s;
  };
  const auto k = ssm::materialize_kernel(spec, length);
  std::vector<double> dk;
  auto du = ssm::ssm_conv_backward(k, u, probe, dk);
  ssm::KernelSpec<double> grad(state_size);
  ssm::kernel_backward(spec, dk, {}, grad);

  const std::vector<GradCheckParam> params = {
      {"u", &u, &du},
      {"lambda_log_neg_re", &spec.lambda_log_neg_re, &grad.lambda_log_neg_re},
      {"lambda_im", &spec.lambda_im, &grad.lambda_im},
      {"b_re", &spec.b_re, &grad.b_re},
      {"b_im", &spec.b_im, &grad.b_im},
      {"c_re", &spec.c_re, &grad.c_re},
      {"c_im", &spec.c_im, &grad.c_im},
      {"log_delta", &spec.log_delta, &grad.log_delta},
  };
  return finite_diff_check(loss, params);
}

GradCheckResult encoder_gradcheck(const model::EncoderConfig& config, std::size_t batch, std::size_t length,
                                  std::size_t max_entries_per_tensor, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  auto params = model::init_params<double>(config, seed + 1);
  for (auto& r : param_refs(params)) {
    if (r.group == DecayGroup::NoDecaySsm) continue;
    for (auto& v : r.tensor->values()) v = r.group == DecayGroup::Decay ? v * 15.0 : v + 0.2 * rng.normal();
  }
  for (auto& layer : params.layers)
    for (auto* k : {&layer.fwd_kernel, &layer.bwd_kernel}) k->log_delta[0] = std::log(0.2);
  model::Encoder<double> enc(config, params);

  // Ragged lengths so padding is exercised.
  std::vector<std::size_t> lengths(batch, length);
  for (std::size_t b = 1; b < batch; ++b) lengths[b] = 1 + rng.uniform_int(length);
  const PadMask mask(length, lengths);
  TokenIds ids({batch, length});
  for (auto& v : ids.values()) v = static_cast<std::int32_t>(rng.uniform_int(config.vocab_size));
  // Masked cross-entropy with a random target at every valid position: the
  // training objective, and O(1) in size so finite differences stay well
  // above roundoff.
  TokenIds labels({batch, length});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < length; ++t)
      labels[b * length + t] =
          t < lengths[b] ? static_cast<std::int32_t>(rng.uniform_int(config.vocab_size)) : kIgnoreLabel;

  auto loss = [&] {
    Rng unused(0);
    return masked_cross_entropy(enc.forward(ids, mask, false, unused).logits, labels).loss;
  };
  model::EncoderCache<double> cache;
  Rng unused(0);
  const auto out = enc.forward(ids, mask, false, unused, true, &cache);
  Tensor<double> d_logits;
  masked_cross_entropy(out.logits, labels, &d_logits);
  auto grads = zeros_like(enc.params());
  enc.backward(cache, nullptr, &d_logits, grads);

  auto prefs = param_refs(enc.params());
  auto grefs = param_refs(grads);
  std::vector<GradCheckParam> checked;
  for (std::size_t i = 0; i < prefs.size(); ++i) checked.push_back({prefs[i].name, prefs[i].tensor, grefs[i].tensor});
  GradCheckOptions opts;
  opts.max_entries_per_tensor = max_entries_per_tensor;
  opts.seed = seed;
  return finite_diff_check(loss, checked, opts);
}

}  // namespace codessm::training
