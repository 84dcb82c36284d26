#include <doctest.h>

#include <cmath>

#include "codessm/layers/embedding.hpp"
#include "codessm/layers/gated_layer.hpp"
#include "codessm/numerics/gradcheck.hpp"

using namespace codessm;
using namespace codessm::layers;

namespace {

using Mat = std::vector<std::vector<double>>;

Tensor<double> random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = rng.normal() * scale;
  return t;
}

// Larger weights than the 0.02 init so every path carries visible signal.
GatedLayerParams<double> random_layer(std::size_t d, std::size_t n, Rng& rng, bool gate_bias = false) {
  auto p = init_gated_layer<double>(d, n, gate_bias, rng, 0.4);
  for (auto* t : {&p.ln_gamma, &p.ln_beta, &p.bv, &p.bf, &p.bb}) {
    for (auto& v : t->values()) v += 0.3 * rng.normal();
  }
  for (auto* t : {&p.bu1, &p.bu2, &p.bu, &p.bo}) {
    for (auto& v : t->values()) v = 0.3 * rng.normal();
  }
  for (auto* k : {&p.fwd_kernel, &p.bwd_kernel}) {
    k->log_delta[0] = std::log(0.2);
    for (auto& v : k->c_re.values()) v *= 3.0;
  }
  return p;
}

// ---- straight-line single-sample reference of the three stages ----------

Mat to_mat(const Tensor<double>& x, std::size_t b, std::size_t len) {
  const std::size_t d = x.cols();
  Mat m(len, std::vector<double>(d));
  for (std::size_t t = 0; t < len; ++t)
    for (std::size_t c = 0; c < d; ++c) m[t][c] = x[(b * len + t) * d + c];
  return m;
}

Mat apply(const Tensor<double>& w, const Tensor<double>* bias, const Mat& x, bool act) {
  const std::size_t out = w.dim(0), in = w.dim(1);
  Mat y(x.size(), std::vector<double>(out));
  for (std::size_t t = 0; t < x.size(); ++t)
    for (std::size_t o = 0; o < out; ++o) {
      double acc = bias && !bias->empty() ? (*bias)[o] : 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += w.at(o, i) * x[t][i];
      y[t][o] = act ? 0.5 * acc * (1.0 + std::erf(acc / std::sqrt(2.0))) : acc;
    }
  return y;
}

Mat reversed(Mat x) {
  std::reverse(x.begin(), x.end());
  return x;
}

Mat product(const Mat& a, const Mat& b) {
  Mat y = a;
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t c = 0; c < a[t].size(); ++c) y[t][c] *= b[t][c];
  return y;
}

Mat recurrence(const ssm::KernelSpec<double>& spec, const Mat& u) {
  const auto disc = ssm::discretize(spec);
  const std::size_t n = spec.state_size();
  Mat y(u.size(), std::vector<double>(u[0].size()));
  for (std::size_t c = 0; c < u[0].size(); ++c) {
    std::vector<cplx> x(n);
    for (std::size_t t = 0; t < u.size(); ++t) {
      double acc = 0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = disc.a_bar[i] * x[i] + disc.b_bar[i] * u[t][c];
        acc += 2.0 * (spec.c(i) * x[i]).real();
      }
      y[t][c] = acc;
    }
  }
  return y;
}

Mat reference_layer(const GatedLayerParams<double>& p, const Mat& xi, bool bidirectional) {
  const std::size_t d = xi[0].size();
  Mat x = xi;
  for (auto& row : x) {
    double mean = 0, var = 0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(d);
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    for (std::size_t c = 0; c < d; ++c) row[c] = (row[c] - mean) / std::sqrt(var + 1e-5) * p.ln_gamma[c] + p.ln_beta[c];
  }
  const Mat v = apply(p.wv, &p.bv, x, true);
  const Mat f = apply(p.wf, &p.bf, x, true);
  const Mat b = apply(p.wb, &p.bb, bidirectional ? reversed(x) : x, true);
  const Mat u1 = apply(p.wu1, &p.bu1, recurrence(p.fwd_kernel, f), false);
  const Mat u2 = apply(p.wu2, &p.bu2, recurrence(p.bwd_kernel, b), false);
  const Mat u = apply(p.wu, &p.bu, product(u1, bidirectional ? reversed(u2) : u2), true);
  Mat o = apply(p.wo, &p.bo, product(u, v), false);
  for (std::size_t t = 0; t < o.size(); ++t)
    for (std::size_t c = 0; c < d; ++c) o[t][c] += xi[t][c];
  return o;
}

double weighted_sum(const Tensor<double>& y, const Tensor<double>& probe) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * probe[i];
  return s;
}

}  // namespace

TEST_CASE("flip reverses the valid prefix only") {
  auto x = Tensor<double>::from({1, 3, 1}, {1, 2, 3});
  auto full = PadMask::full(1, 3);
  auto y = flip(x, full);
  CHECK(y == Tensor<double>::from({1, 3, 1}, {3, 2, 1}));
  CHECK(flip(y, full) == x);

  auto padded = Tensor<double>::from({1, 4, 1}, {1, 2, 3, 9});
  auto z = flip(padded, PadMask(4, {3}));
  CHECK(z == Tensor<double>::from({1, 4, 1}, {3, 2, 1, 9}));

  Rng rng(1);
  auto r = random_tensor({3, 6, 2}, rng);
  PadMask mixed(6, {6, 2, 0});
  CHECK(flip(flip(r, mixed), mixed) == r);
}

TEST_CASE("PadMask validates prefix structure") {
  CHECK_NOTHROW(PadMask::from_flags({{true, true, false}}));
  CHECK(PadMask::from_flags({{true, true, false}}).valid_length(0) == 2);
  CHECK_THROWS_AS(PadMask::from_flags({{true, false, true}}), SizeError);
  CHECK_THROWS_AS(PadMask(3, {4}), SizeError);
}

TEST_CASE("zero input is a fixed point") {
  GatedLayerParams<double> p(8, 4, false);
  Rng rng(2);
  p = init_gated_layer<double>(8, 4, false, rng);
  auto x = Tensor<double>({2, 5, 8});
  auto y = layer_forward(p, {}, x, PadMask::full(2, 5), false, rng);
  for (double v : y.values()) CHECK(v == 0.0);
}

TEST_CASE("uni variant is causal, base variant is not") {
  Rng rng(3);
  const std::size_t len = 12, d = 8, t0 = 5;
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_layer(d, 4, rng);
    auto x = random_tensor({1, len, d}, rng);
    auto x2 = x;
    for (std::size_t c = 0; c < d; ++c) x2.at(t0, c) += 1.0 + rng.uniform();
    const auto mask = PadMask::full(1, len);

    LayerOptions uni{LayerVariant::Uni};
    auto a = layer_forward(p, uni, x, mask, false, rng);
    auto b = layer_forward(p, uni, x2, mask, false, rng);
    double before = 0;
    for (std::size_t t = 0; t < t0; ++t)
      for (std::size_t c = 0; c < d; ++c) before = std::max(before, std::abs(a.at(t, c) - b.at(t, c)));
    CHECK(before < 1e-6);

    LayerOptions base{LayerVariant::Base};
    auto c1 = layer_forward(p, base, x, mask, false, rng);
    auto c2 = layer_forward(p, base, x2, mask, false, rng);
    double changed = 0;
    for (std::size_t t = 0; t < t0; ++t)
      for (std::size_t c = 0; c < d; ++c) changed = std::max(changed, std::abs(c1.at(t, c) - c2.at(t, c)));
    CHECK(changed > 1e-6);
  }
}

TEST_CASE("layer_forward matches the straight-line reference") {
  Rng rng(4);
  const std::size_t len = 9, d = 6;
  for (bool gate_bias : {false, true}) {
    auto p = random_layer(d, 5, rng, gate_bias);
    auto x = random_tensor({2, len, d}, rng);
    LayerOptions opts;
    opts.gate_bias = gate_bias;
    for (auto variant : {LayerVariant::Base, LayerVariant::Uni}) {
      opts.variant = variant;
      auto y = layer_forward(p, opts, x, PadMask::full(2, len), false, rng);
      for (std::size_t b = 0; b < 2; ++b) {
        const Mat ref = reference_layer(p, to_mat(x, b, len), variant == LayerVariant::Base);
        for (std::size_t t = 0; t < len; ++t)
          for (std::size_t c = 0; c < d; ++c) CHECK(std::abs(y[(b * len + t) * d + c] - ref[t][c]) < 1e-5);
      }
    }
  }
}

TEST_CASE("padded positions never leak into valid outputs") {
  Rng rng(5);
  const std::size_t len = 10, d = 6;
  auto p = random_layer(d, 4, rng);
  PadMask mask(len, {7, 10});
  auto x = random_tensor({2, len, d}, rng);
  zero_padding(x, mask);
  for (auto variant : {LayerVariant::Base, LayerVariant::Uni, LayerVariant::Dft}) {
    LayerOptions opts{variant};
    auto y = layer_forward(p, opts, x, mask, false, rng);
    // Same sample alone at its true length.
    Tensor<double> solo({1, 7, d});
    for (std::size_t i = 0; i < 7 * d; ++i) solo[i] = x[i];
    auto ys = layer_forward(p, opts, solo, PadMask::full(1, 7), false, rng);
    for (std::size_t i = 0; i < 7 * d; ++i) CHECK(std::abs(y[i] - ys[i]) < 1e-10);
    for (std::size_t i = 7 * d; i < len * d; ++i) CHECK(y[i] == 0.0);
  }
}

TEST_CASE("dropout semantics") {
  Rng rng(6);
  auto p = random_layer(8, 4, rng);
  auto x = random_tensor({2, 8, 8}, rng);
  const auto mask = PadMask::full(2, 8);
  LayerOptions drop{LayerVariant::Dropout, 0.3};
  Rng r1(100), r2(200);
  auto a = layer_forward(p, drop, x, mask, false, r1);
  auto b = layer_forward(p, drop, x, mask, false, r2);
  CHECK(a == b);
  CHECK(r1.position() == 0);

  LayerOptions zero{LayerVariant::Dropout, 0.0};
  Rng r3(1), r4(1);
  CHECK(layer_forward(p, zero, x, mask, true, r3) == layer_forward(p, LayerOptions{}, x, mask, true, r4));

  Rng r5(1), r6(2);
  CHECK_FALSE(layer_forward(p, drop, x, mask, true, r5) == layer_forward(p, drop, x, mask, true, r6));
}

TEST_CASE("zero output projection leaves the residual path") {
  Rng rng(7);
  auto p = random_layer(8, 4, rng);
  p.wo.fill(0.0);
  auto x = random_tensor({1, 6, 8}, rng);
  CHECK(layer_forward(p, {}, x, PadMask::full(1, 6), false, rng) == x);
}

TEST_CASE("layer gradients pass finite differences") {
  Rng rng(8);
  const std::size_t d = 8, len = 16;
  struct Case {
    LayerVariant variant;
    bool gate_bias;
    PadMask mask;
  };
  const std::vector<Case> cases = {
      {LayerVariant::Base, false, PadMask::full(2, len)},
      {LayerVariant::Uni, false, PadMask::full(2, len)},
      {LayerVariant::Dft, false, PadMask(len, {16, 11})},
      {LayerVariant::Dropout, true, PadMask(len, {13, 16})},
  };
  for (const auto& tc : cases) {
    auto p = random_layer(d, 4, rng, tc.gate_bias);
    LayerOptions opts{tc.variant, 0.2};
    opts.gate_bias = tc.gate_bias;
    auto x = random_tensor({2, len, d}, rng);
    zero_padding(x, tc.mask);
    auto probe = random_tensor({2, len, d}, rng);

    // Dropout masks are replayed from the same seed on every evaluation.
    auto loss = [&] {
      Rng r(77);
      return weighted_sum(layer_forward(p, opts, x, tc.mask, true, r), probe);
    };
    Rng r(77);
    GatedLayerCache<double> cache;
    layer_forward(p, opts, x, tc.mask, true, r, &cache);
    auto grads = zeros_like(p);
    auto dx = layer_backward(p, opts, cache, probe, grads);

    auto prefs = param_refs(p);
    auto grefs = param_refs(grads);
    REQUIRE(prefs.size() == grefs.size());
    std::vector<GradCheckParam> params;
    for (std::size_t i = 0; i < prefs.size(); ++i) params.push_back({prefs[i].name, prefs[i].tensor, grefs[i].tensor});
    params.push_back({"x", &x, &dx});
    auto res = finite_diff_check(loss, params);
    INFO("variant " << static_cast<int>(tc.variant) << " worst " << res.worst_param << "[" << res.worst_index
                    << "] " << res.worst_analytic << " vs " << res.worst_numeric);
    CHECK(res.max_rel_error < 1e-4);
  }
}

TEST_CASE("decay grouping of layer parameters") {
  GatedLayerParams<float> p(4, 2, true);
  std::size_t ssm = 0, decay = 0, nodecay = 0;
  for (const auto& r : param_refs(p)) {
    if (r.group == DecayGroup::NoDecaySsm) {
      ++ssm;
      CHECK(r.name.find("ssm_") == 0);
    } else if (r.group == DecayGroup::Decay) {
      ++decay;
      CHECK(r.name.find(".weight") != std::string::npos);
    } else {
      ++nodecay;
    }
  }
  CHECK(ssm == 14);
  CHECK(decay == 7);
  CHECK(nodecay == 9);
}

TEST_CASE("embedding lookup") {
  Rng rng(9);
  auto base = init_embedding<float>(20, 4, 0, rng);
  TokenIds ids({1, 4096}, 3);
  CHECK_NOTHROW(embed(base, ids, PadMask::full(1, 4096)));

  auto two = TokenIds::from({1, 2}, {7, 7});
  auto e = embed(base, two, PadMask::full(1, 2));
  for (std::size_t c = 0; c < 4; ++c) CHECK(e.at(0, c) == e.at(1, c));

  auto pos = init_embedding<float>(20, 4, 256, rng);
  CHECK_NOTHROW(embed(pos, TokenIds({1, 256}, 1), PadMask::full(1, 256)));
  CHECK_THROWS_AS(embed(pos, TokenIds({1, 257}, 1), PadMask::full(1, 257)), LengthError);
  auto ep = embed(pos, two, PadMask::full(1, 2));
  CHECK(ep.at(0, 0) != ep.at(1, 0));

  auto padded = embed(base, TokenIds::from({1, 3}, {1, 2, 0}), PadMask(3, {2}));
  for (std::size_t c = 0; c < 4; ++c) CHECK(padded.at(2, c) == 0.0f);
  CHECK_THROWS_AS(embed(base, TokenIds::from({1, 1}, {20}), PadMask::full(1, 1)), SizeError);
}
