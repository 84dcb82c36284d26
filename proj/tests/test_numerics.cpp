#include <doctest.h>

#include <cmath>
#include <numbers>

#include "codessm/numerics/fft.hpp"
#include "codessm/numerics/gradcheck.hpp"
#include "codessm/numerics/ops.hpp"
#include "codessm/numerics/rng.hpp"

using namespace codessm;

namespace {

// O(n^2) reference transform.
std::vector<cplx> naive_dft(const std::vector<cplx>& x, bool inverse) {
  const std::size_t n = x.size();
  std::vector<cplx> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    cplx acc(0, 0);
    for (std::size_t t = 0; t < n; ++t) {
      const double a = sign * 2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
      acc += x[t] * cplx(std::cos(a), std::sin(a));
    }
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

ComplexVector random_vector(std::size_t n, Rng& rng) {
  ComplexVector v(n);
  for (std::size_t i = 0; i < n; ++i) v.set(i, {rng.normal(), rng.normal()});
  return v;
}

Tensor<double> random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = rng.normal() * scale;
  return t;
}

}  // namespace

TEST_CASE("fft of impulse and unit delay") {
  auto x = fft(ComplexVector({1, 0, 0, 0}, {0, 0, 0, 0}));
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(x.re[k] == doctest::Approx(1.0));
    CHECK(x.im[k] == doctest::Approx(0.0));
  }
  auto y = fft(ComplexVector({0, 1, 0, 0}, {0, 0, 0, 0}));
  const cplx expected[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(std::abs(y[k] - expected[k]) < 1e-15);
  }
}

TEST_CASE("fft matches direct DFT and round-trips") {
  Rng rng(11);
  const auto v = random_vector(64, rng);
  std::vector<cplx> raw(64);
  for (std::size_t i = 0; i < 64; ++i) raw[i] = v[i];
  const auto ref = naive_dft(raw, false);
  const auto fwd = fft(v);
  for (std::size_t k = 0; k < 64; ++k) CHECK(std::abs(fwd[k] - ref[k]) < 1e-9);
  const auto back = fft(fwd, true);
  for (std::size_t k = 0; k < 64; ++k) CHECK(std::abs(back[k] - v[k]) < 1e-9);
}

TEST_CASE("fft rejects non power of two") {
  CHECK_THROWS_AS(fft(ComplexVector(6)), SizeError);
  CHECK_THROWS_AS(fft(ComplexVector(0)), SizeError);
  CHECK_NOTHROW(fft(ComplexVector(1)));
}

TEST_CASE("fft linearity, Parseval and conjugate symmetry") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = std::size_t{1} << (1 + trial % 8);
    const auto u = random_vector(n, rng), v = random_vector(n, rng);
    const cplx a(rng.normal(), rng.normal()), b(rng.normal(), rng.normal());
    ComplexVector mix(n);
    for (std::size_t i = 0; i < n; ++i) mix.set(i, a * u[i] + b * v[i]);
    const auto fu = fft(u), fv = fft(v), fm = fft(mix);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(fm[k] - (a * fu[k] + b * fv[k])) < 1e-9);

    double time_energy = 0, freq_energy = 0;
    for (std::size_t k = 0; k < n; ++k) {
      time_energy += std::norm(u[k]);
      freq_energy += std::norm(fu[k]);
    }
    CHECK(std::abs(time_energy - freq_energy / static_cast<double>(n)) < 1e-9);

    ComplexVector real(n);
    for (std::size_t i = 0; i < n; ++i) real.set(i, {rng.normal(), 0.0});
    const auto fr = fft(real);
    for (std::size_t k = 1; k < n; ++k) CHECK(std::abs(fr[k] - std::conj(fr[n - k])) < 1e-9);
  }
}

TEST_CASE("gelu uses the exact erf form") {
  CHECK(gelu(0.0) == 0.0);
  CHECK(gelu(10.0) == doctest::Approx(10.0).epsilon(1e-7));
  CHECK(std::abs(gelu(-10.0)) < 1e-6);
  CHECK(std::abs(gelu(10.0f) - 10.0f) < 1e-6f);
  // 1 * Phi(1) with Phi(1) = 0.841344746068543
  CHECK(gelu(1.0) == doctest::Approx(0.841344746068543).epsilon(1e-14));
  for (double x : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
    const double h = 1e-6;
    CHECK(gelu_derivative(x) == doctest::Approx((gelu(x + h) - gelu(x - h)) / (2 * h)).epsilon(1e-8));
  }
}

TEST_CASE("layer_norm examples") {
  auto ones = Tensor<double>({4}, 1.0);
  auto zeros = Tensor<double>({4}, 0.0);
  auto y = layer_norm(Tensor<double>({1, 4}, 1.0), ones, zeros);
  for (auto v : y.values()) CHECK(v == 0.0);

  auto y2 = layer_norm(Tensor<double>::from({1, 2}, {1.0, -1.0}), Tensor<double>({2}, 1.0), Tensor<double>({2}, 0.0),
                       0.0);
  CHECK(y2[0] == doctest::Approx(1.0));
  CHECK(y2[1] == doctest::Approx(-1.0));

  Rng rng(3);
  auto x = random_tensor({4, 8}, rng, 3.0);
  auto g = Tensor<double>({8}, 1.0);
  auto b = Tensor<double>({8}, 0.0);
  auto z = layer_norm(x, g, b);
  for (std::size_t r = 0; r < 4; ++r) {
    double mean = 0, var = 0;
    for (auto v : z.row(r)) mean += v;
    mean /= 8;
    for (auto v : z.row(r)) var += (v - mean) * (v - mean);
    CHECK(std::abs(mean) < 1e-6);
    CHECK(var / 8 == doctest::Approx(1.0).epsilon(1e-4));
  }
  CHECK_THROWS_AS(layer_norm(x, Tensor<double>({7}, 1.0), b), SizeError);
}

TEST_CASE("finite_diff_check trivial cases") {
  auto w = Tensor<double>::from({1}, {3.0});
  auto g = Tensor<double>::from({1}, {6.0});
  GradCheckParam p{"w", &w, &g};
  auto r = finite_diff_check([&] { return w[0] * w[0]; }, std::span(&p, 1));
  CHECK(r.max_rel_error < 1e-9);
  CHECK(r.entries_checked == 1);

  auto zero = Tensor<double>::from({1}, {0.0});
  GradCheckParam pc{"w", &w, &zero};
  CHECK(finite_diff_check([] { return 4.0; }, std::span(&pc, 1)).max_rel_error == 0.0);

  GradCheckParam pn{"bad", &w, &g};
  try {
    finite_diff_check([&] { return w[0] > 3.0 ? NAN : 0.0; }, std::span(&pn, 1));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("bad") != std::string::npos);
  }
}

TEST_CASE("layer_norm and linear backward pass finite differences") {
  Rng rng(21);
  auto x = random_tensor({3, 5}, rng);
  auto gamma = random_tensor({5}, rng);
  auto beta = random_tensor({5}, rng);
  auto w = random_tensor({4, 5}, rng);
  auto bias = random_tensor({4}, rng);
  auto probe = random_tensor({3, 4}, rng);

  auto loss = [&] {
    auto y = linear(gelu(layer_norm(x, gamma, beta)), w, &bias);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * probe[i];
    return s;
  };

  LayerNormCache<double> cache;
  auto ln = layer_norm(x, gamma, beta, kLayerNormEps, &cache);
  auto act = gelu(ln);
  Tensor<double> dgamma({5}), dbeta({5}), dw({4, 5}), dbias({4});
  auto dact = linear_backward(probe, act, w, dw, &dbias);
  for (std::size_t i = 0; i < dact.size(); ++i) dact[i] *= gelu_derivative(ln[i]);
  auto dx = layer_norm_backward(dact, gamma, cache, dgamma, dbeta);

  std::vector<GradCheckParam> params = {
      {"x", &x, &dx}, {"gamma", &gamma, &dgamma}, {"beta", &beta, &dbeta}, {"w", &w, &dw}, {"bias", &bias, &dbias}};
  auto r = finite_diff_check(loss, params);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("rng streams are reproducible") {
  Rng a(1234), b(1234), c(1235);
  bool differs = false;
  for (int i = 0; i < 1'000'000; ++i) {
    const auto x = a.next_u64();
    REQUIRE(x == b.next_u64());
    differs |= x != c.next_u64();
  }
  CHECK(differs);
  Rng resumed(1234, a.position());
  CHECK(resumed.next_u64() == a.next_u64());

  Rng u(9);
  double mean = 0;
  for (int i = 0; i < 100000; ++i) mean += u.normal();
  CHECK(std::abs(mean / 100000) < 0.02);
  for (int i = 0; i < 1000; ++i) CHECK(u.uniform_int(7) < 7);
  for (int i = 0; i < 1000; ++i) CHECK(std::abs(u.truncated_normal(0.02)) <= 0.04);
}

TEST_CASE("tracked tensor memory") {
  const auto before = memory::current_bytes();
  memory::reset_peak();
  {
    Tensor<float> t({256, 4});
    CHECK(memory::current_bytes() - before == 4096);
  }
  CHECK(memory::current_bytes() == before);
  CHECK(memory::peak_bytes() - before >= 4096);
  CHECK_THROWS_AS(Tensor<float>({3, 0}), SizeError);
  CHECK_THROWS_AS(Tensor<float>::from({2, 2}, {1.f, 2.f, 3.f}), SizeError);
}
