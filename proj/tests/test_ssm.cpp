#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "codessm/numerics/gradcheck.hpp"
#include "codessm/numerics/ops.hpp"
#include "codessm/ssm/kernel.hpp"
#include "codessm/ssm/spectrum.hpp"

using namespace codessm;
using namespace codessm::ssm;

namespace {

KernelSpec<double> random_spec(std::size_t n, Rng& rng) {
  std::vector<cplx> lam(n), b(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    lam[i] = {-(0.05 + rng.uniform()), 6.0 * (rng.uniform() - 0.5)};
    b[i] = {rng.normal(), rng.normal()};
    c[i] = {rng.normal(), rng.normal()};
  }
  const double delta = std::exp(std::log(1e-3) + rng.uniform() * (std::log(0.5) - std::log(1e-3)));
  return KernelSpec<double>::from_complex(lam, b, c, delta);
}

Tensor<double> random_tensor(Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = rng.normal();
  return t;
}

// y[t] = sum_{l <= t} k[l] u[t - l], per channel.
Tensor<double> direct_conv(const std::vector<double>& k, const Tensor<double>& u) {
  const std::size_t len = u.dim(0), d = u.dim(1);
  Tensor<double> y(u.shape());
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t t = 0; t < len; ++t) {
      double acc = 0;
      for (std::size_t l = 0; l <= t; ++l) acc += k[l] * u.at(t - l, c);
      y.at(t, c) = acc;
    }
  return y;
}

}  // namespace

TEST_CASE("discretize closed forms") {
  auto spec = KernelSpec<double>::from_complex({{-1.0, 0.0}}, {{1.0, 0.0}}, {{1.0, 0.0}}, std::log(2.0));
  const auto d = discretize(spec);
  CHECK(d.a_bar.re[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(d.a_bar.im[0]) < 1e-15);
  CHECK(d.b_bar.re[0] == doctest::Approx(0.5).epsilon(1e-14));

  for (double delta : {1e-3, 1e-4, 1e-5}) {
    auto s = KernelSpec<double>::from_complex({{-0.7, 2.0}}, {{0.3, -1.1}}, {{1.0, 0.0}}, delta);
    const auto dd = discretize(s);
    CHECK(std::abs(dd.a_bar[0] - 1.0) < 3 * delta);
    CHECK(std::abs(dd.b_bar[0] - delta * s.b(0)) < 10 * delta * delta);
  }

  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_spec(4, rng);
    const auto dd = discretize(s);
    for (std::size_t n = 0; n < 4; ++n) {
      const double direct = std::abs(std::exp(s.delta() * s.lambda(n)));
      CHECK(std::abs(dd.a_bar[n]) == doctest::Approx(direct).epsilon(1e-14));
      CHECK(std::abs(dd.a_bar[n]) < 1.0);
    }
  }
}

TEST_CASE("log parameterization keeps Lambda stable under any stored value") {
  KernelSpec<double> s(3);
  s.lambda_log_neg_re[0] = -40.0;
  s.lambda_log_neg_re[1] = 0.0;
  s.lambda_log_neg_re[2] = 5.0;
  for (std::size_t n = 0; n < 3; ++n) CHECK(s.lambda(n).real() < 0);
  CHECK(s.delta() > 0);
  CHECK_THROWS_AS(KernelSpec<double>::from_complex({{0.0, 1.0}}, {{1, 0}}, {{1, 0}}, 0.1), NumericError);
}

TEST_CASE("bilinear discretization is available") {
  auto spec = KernelSpec<double>::from_complex({{-1.0, 0.0}}, {{1.0, 0.0}}, {{1.0, 0.0}}, 0.5);
  const auto d = discretize(spec, Discretization::Bilinear);
  CHECK(d.a_bar.re[0] == doctest::Approx(0.75 / 1.25));
  CHECK(d.b_bar.re[0] == doctest::Approx(0.5 / 1.25));
}

TEST_CASE("materialize_kernel examples") {
  // A_bar = 0.5, B_bar = 1 under zero-order hold: Lambda = -ln 2, Delta = 1,
  // B = Lambda / (A_bar - 1) so that B_bar = 1.
  const double lam = -std::log(2.0);
  auto spec = KernelSpec<double>::from_complex({{lam, 0.0}}, {{lam / (0.5 - 1.0), 0.0}}, {{1.0, 0.0}}, 1.0);
  const auto k = materialize_kernel(spec, 4, {Discretization::ZeroOrderHold, ModeConvention::RealOnly});
  const double expected[4] = {1.0, 0.5, 0.25, 0.125};
  for (std::size_t l = 0; l < 4; ++l) CHECK(k.values[l] == doctest::Approx(expected[l]).epsilon(1e-14));

  auto zero_c = spec;
  zero_c.c_re.fill(0.0);
  for (double v : materialize_kernel(zero_c, 16).values) CHECK(v == 0.0);

  Rng rng(8);
  const auto rs = random_spec(8, rng);
  const auto kr = materialize_kernel(rs, 64);
  const auto disc = discretize(rs);
  for (std::size_t l = 0; l < 64; ++l) {
    cplx acc(0, 0);
    for (std::size_t n = 0; n < 8; ++n) {
      cplx power(1, 0);
      for (std::size_t i = 0; i < l; ++i) power *= disc.a_bar[n];
      acc += rs.c(n) * power * disc.b_bar[n];
    }
    CHECK(std::abs(kr.values[l] - 2.0 * acc.real()) < 1e-10);
  }
}

TEST_CASE("ssm_conv examples") {
  Rng rng(12);
  auto spec = random_spec(4, rng);
  auto k = materialize_kernel(spec, 10);
  Tensor<double> impulse({10, 1});
  impulse.at(0, 0) = 1.0;
  auto y = ssm_conv(k, impulse);
  for (std::size_t t = 0; t < 10; ++t) CHECK(std::abs(y.at(t, 0) - k.values[t]) < 1e-12);

  DiscreteKernel identity{std::vector<double>(10, 0.0), 1};
  identity.values[0] = 1.0;
  auto u = random_tensor({10, 3}, rng);
  CHECK(max_abs_diff(ssm_conv(identity, u), u) < 1e-12);

  auto kr = materialize_kernel(random_spec(6, rng), 32);
  auto u2 = random_tensor({32, 3}, rng);
  CHECK(max_abs_diff(ssm_conv(kr, u2), direct_conv(kr.values, u2)) < 1e-6);

  CHECK_THROWS_AS(ssm_conv(kr, random_tensor({31, 3}, rng)), SizeError);
}

TEST_CASE("ssm_conv handles batches and odd channel counts") {
  Rng rng(13);
  auto k = materialize_kernel(random_spec(3, rng), 7);
  auto u = random_tensor({3, 7, 5}, rng);
  auto y = ssm_conv(k, u);
  for (std::size_t b = 0; b < 3; ++b) {
    Tensor<double> slice({7, 5});
    for (std::size_t i = 0; i < 35; ++i) slice[i] = u[b * 35 + i];
    auto ref = direct_conv(k.values, slice);
    for (std::size_t i = 0; i < 35; ++i) CHECK(std::abs(y[b * 35 + i] - ref[i]) < 1e-9);
  }
}

TEST_CASE("ssm_recurrence examples") {
  Rng rng(14);
  auto spec = random_spec(5, rng);
  auto zeros = Tensor<double>({12, 2});
  const auto silent = ssm_recurrence(spec, zeros);
  for (double v : silent.values()) CHECK(v == 0.0);

  auto one = Tensor<double>::from({1, 1}, {1.7});
  const auto disc = discretize(spec);
  cplx acc(0, 0);
  for (std::size_t n = 0; n < 5; ++n) acc += spec.c(n) * disc.b_bar[n];
  CHECK(ssm_recurrence(spec, one)[0] == doctest::Approx(2.0 * acc.real() * 1.7).epsilon(1e-13));

  auto u = random_tensor({64, 2}, rng);
  auto conv = ssm_conv(materialize_kernel(spec, 64), u);
  CHECK(max_abs_diff(conv, ssm_recurrence(spec, u)) < 1e-5);
}

TEST_CASE("convolution and recurrence agree on random specs (float path)") {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(8), len = 1 + rng.uniform_int(64), d = 1 + rng.uniform_int(4);
    auto spec = random_spec(n, rng).cast<float>();
    Tensor<float> u({len, d});
    for (auto& v : u.values()) v = static_cast<float>(rng.normal());
    auto conv = ssm_conv(materialize_kernel(spec, len), u);
    auto rec = ssm_recurrence(spec, u);
    CHECK(max_abs_diff(conv, rec) < 1e-4f);
  }
}

TEST_CASE("kernel decays inside its geometric envelope") {
  Rng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(8), len = 2 + rng.uniform_int(63);
    auto spec = random_spec(n, rng);
    auto k = materialize_kernel(spec, len);
    const auto disc = discretize(spec);
    double rho = 0, weight = 0;
    for (std::size_t i = 0; i < n; ++i) {
      rho = std::max(rho, std::abs(disc.a_bar[i]));
      weight += std::abs(spec.c(i) * disc.b_bar[i]);
    }
    CHECK(rho < 1.0);
    CHECK(std::abs(k.values[len - 1]) <= 2.0 * weight * std::pow(rho, static_cast<double>(len - 1)) + 1e-15);
  }
}

TEST_CASE("ssm_conv is linear") {
  Rng rng(17);
  auto k = materialize_kernel(random_spec(4, rng), 20);
  auto u = random_tensor({20, 3}, rng), v = random_tensor({20, 3}, rng);
  const double a = 0.7, b = -1.3;
  Tensor<double> mix({20, 3});
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * u[i] + b * v[i];
  auto lhs = ssm_conv(k, mix);
  auto yu = ssm_conv(k, u), yv = ssm_conv(k, v);
  for (std::size_t i = 0; i < mix.size(); ++i) CHECK(std::abs(lhs[i] - (a * yu[i] + b * yv[i])) < 1e-5);
}

TEST_CASE("gradients through discretize, materialize and conv") {
  Rng rng(18);
  for (auto rule : {Discretization::ZeroOrderHold, Discretization::Bilinear}) {
    const KernelOptions opts{rule, ModeConvention::ConjugatePair};
    auto spec = random_spec(4, rng);
    auto u = random_tensor({2, 12, 3}, rng);
    auto probe = random_tensor({2, 12, 3}, rng);

    auto loss = [&] {
      auto y = ssm_conv(materialize_kernel(spec, 12, opts), u);
      double s = 0;
      for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * probe[i];
      return s;
    };

    const auto k = materialize_kernel(spec, 12, opts);
    std::vector<double> dk;
    auto du = ssm_conv_backward(k, u, probe, dk);
    KernelSpec<double> grad(4);
    kernel_backward(spec, dk, opts, grad);

    std::vector<GradCheckParam> params = {
        {"u", &u, &du},
        {"lambda_log_neg_re", &spec.lambda_log_neg_re, &grad.lambda_log_neg_re},
        {"lambda_im", &spec.lambda_im, &grad.lambda_im},
        {"b_re", &spec.b_re, &grad.b_re},
        {"b_im", &spec.b_im, &grad.b_im},
        {"c_re", &spec.c_re, &grad.c_re},
        {"c_im", &spec.c_im, &grad.c_im},
        {"log_delta", &spec.log_delta, &grad.log_delta},
    };
    auto r = finite_diff_check(loss, params);
    INFO("worst " << r.worst_param << "[" << r.worst_index << "] " << r.worst_analytic << " vs " << r.worst_numeric);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("S4D-Lin initialization") {
  Rng rng(19);
  auto s = init_s4d_lin<float>(16, rng);
  for (std::size_t n = 0; n < 16; ++n) {
    CHECK(s.lambda(n).real() == doctest::Approx(-0.5).epsilon(1e-6));
    CHECK(s.lambda(n).imag() == doctest::Approx(std::numbers::pi * n).epsilon(1e-6));
    CHECK(s.b(n) == cplx(1.0, 0.0));
  }
  CHECK(s.delta() >= 1e-3 * (1 - 1e-6));
  CHECK(s.delta() <= 1e-1 * (1 + 1e-6));
}

TEST_CASE("spectrum examples") {
  const std::vector<double> impulse = {1, 0, 0, 0};
  auto r = kernel_spectrum(impulse, 4);
  for (const auto& p : r.points) {
    CHECK(p.magnitude == doctest::Approx(1.0));
    CHECK(std::abs(p.phase_deg) < 1e-12);
  }

  const std::vector<double> delay = {0, 1, 0, 0};
  auto d = kernel_spectrum(delay, 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(d.points[k].magnitude == doctest::Approx(1.0));
    CHECK(std::abs(wrap_degrees(d.points[k].phase_deg + 90.0 * static_cast<double>(k))) < 1e-9);
  }

  Rng rng(20);
  for (std::size_t n_freq : {7u, 10u, 16u}) {
    auto s = spectrum(random_spec(6, rng), 10, n_freq);
    for (std::size_t k = 1; k < n_freq; ++k) {
      const auto& a = s.points[k];
      const auto& b = s.points[n_freq - k];
      CHECK(std::abs(a.magnitude - b.magnitude) < 1e-9);
      CHECK(std::abs(wrap_degrees(a.phase_deg + b.phase_deg)) < 1e-9);
      CHECK(a.phase_deg > -180.0);
      CHECK(a.phase_deg <= 180.0);
    }
  }
  CHECK_THROWS_AS(kernel_spectrum(impulse, 1), SizeError);
}

TEST_CASE("spectrum CSV layout") {
  SpectrumReport r = kernel_spectrum(std::vector<double>{1, 0}, 2);
  r.layer_index = 3;
  r.direction = "forward";
  std::ostringstream os;
  write_spectrum_csv(os, std::span(&r, 1));
  const std::string out = os.str();
  CHECK(out.rfind("layer_index,direction,freq_index,omega,magnitude,phase_deg\n", 0) == 0);
  CHECK(out.find("3,forward,0,0,1,0\n") != std::string::npos);
}
