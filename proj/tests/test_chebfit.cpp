#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <random>

#include "glide/chebfit.hpp"
#include "glide/geometry.hpp"
#include "support/mocks.hpp"

using namespace glide;
using glide::testing::FunctionAeroModel;

namespace {

double cheb_t(int n, double x) { return std::cos(n * std::acos(std::min(1.0, std::max(-1.0, x)))); }

Envelope default_env() {
  Envelope e;
  e.alpha_min = -30.0 * M_PI / 180.0;
  e.alpha_max = 60.0 * M_PI / 180.0;
  e.re_min = 1e4;
  e.re_max = 1e6;
  return e;
}

double map_unit(double v, double lo, double hi) { return (2.0 * v - lo - hi) / (hi - lo); }

}  // namespace

TEST_CASE("chebyshev nodes closed forms") {
  const auto n2 = chebyshev_nodes(2, -1.0, 1.0);
  CHECK(n2[0] == doctest::Approx(-std::sqrt(2.0) / 2.0).epsilon(1e-14));
  CHECK(n2[1] == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));

  const auto n3 = chebyshev_nodes(3, -1.0, 1.0);
  CHECK(n3[0] == doctest::Approx(-std::sqrt(3.0) / 2.0).epsilon(1e-14));
  CHECK(n3[1] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(n3[2] == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-14));

  const auto s3 = chebyshev_nodes(3, 0.0, 2.0);
  CHECK(s3[0] == doctest::Approx(1.0 - std::sqrt(3.0) / 2.0).epsilon(1e-14));
  CHECK(s3[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s3[2] == doctest::Approx(1.0 + std::sqrt(3.0) / 2.0).epsilon(1e-14));

  CHECK_THROWS_AS(chebyshev_nodes(1, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("fit recovers an exactly representable tensor polynomial") {
  const Envelope env = default_env();
  const int k = 12, m = 20;
  // Random coefficient tensor of per-axis degree k-1 injected as the model.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd target[3];
  for (auto& t : target) {
    t.resize(k, k);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) t(a, b) = u(rng);
    }
  }
  FunctionAeroModel model([&](const KulfanAirfoil&, double alpha, double re) {
    const double ah = map_unit(alpha, env.alpha_min, env.alpha_max);
    const double rh = map_unit(std::log10(re), env.logre_min(), env.logre_max());
    AeroCoeffs c;
    double* out[3] = {&c.c_l, &c.c_d, &c.c_m};
    for (int ch = 0; ch < 3; ++ch) {
      double s = 0.0;
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) s += target[ch](a, b) * cheb_t(a, ah) * cheb_t(b, rh);
      }
      *out[ch] = s;
    }
    return c;
  });

  const auto t0 = std::chrono::steady_clock::now();
  const ChebSurrogate s = fit(model, KulfanAirfoil{}, env, k, m);
  const double fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(fit_seconds < 1.0);

  for (int ch = 0; ch < 3; ++ch) {
    CHECK((s.coeffs[ch] - target[ch]).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(s.rms_residual[ch] < 1e-10);
  }

  // Max error < 1e-9 over 1e3 random envelope points.
  std::uniform_real_distribution<double> ua(env.alpha_min, env.alpha_max);
  std::uniform_real_distribution<double> ur(env.logre_min(), env.logre_max());
  double max_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double alpha = ua(rng), logre = ur(rng);
    const AeroCoeffs truth = model.eval(KulfanAirfoil{}, alpha, std::pow(10.0, logre));
    const ChebEval e = eval(s, alpha, logre);
    max_err = std::max(max_err, std::abs(e.value[0] - truth.c_l));
    max_err = std::max(max_err, std::abs(e.value[1] - truth.c_d));
    max_err = std::max(max_err, std::abs(e.value[2] - truth.c_m));
  }
  CHECK(max_err < 1e-9);
}

TEST_CASE("square fit interpolates the samples") {
  const Envelope env = default_env();
  const int k = 6;
  FunctionAeroModel model([](const KulfanAirfoil&, double alpha, double re) {
    return AeroCoeffs{std::sin(2.0 * alpha), std::exp(0.1 * std::log10(re)), alpha * alpha, 1.0};
  });
  const ChebSurrogate s = fit(model, KulfanAirfoil{}, env, k, k);
  const auto an = chebyshev_nodes(k, env.alpha_min, env.alpha_max);
  const auto rn = chebyshev_nodes(k, env.logre_min(), env.logre_max());
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const AeroCoeffs truth = model.eval(KulfanAirfoil{}, an[i], std::pow(10.0, rn[j]));
      const ChebEval e = eval(s, an[i], rn[j]);
      CHECK(std::abs(e.value[0] - truth.c_l) < 1e-9);
      CHECK(std::abs(e.value[1] - truth.c_d) < 1e-9);
      CHECK(std::abs(e.value[2] - truth.c_m) < 1e-9);
    }
  }
}

TEST_CASE("analytic model fit over the default envelope is tight") {
  const AnalyticAeroModel model;
  const KulfanAirfoil a = fit_naca4412();
  const Envelope env = default_env();
  const ChebSurrogate s = fit(model, a, env, 12, 20);
  // Residual below 1e-2 of each channel's range over the envelope.
  double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
  for (int i = 0; i <= 90; ++i) {
    for (int j = 0; j <= 20; ++j) {
      const double alpha = env.alpha_min + (env.alpha_max - env.alpha_min) * i / 90.0;
      const double logre = env.logre_min() + (env.logre_max() - env.logre_min()) * j / 20.0;
      const AeroCoeffs c = model.eval(a, alpha, std::pow(10.0, logre));
      const double v[3] = {c.c_l, c.c_d, c.c_m};
      for (int ch = 0; ch < 3; ++ch) {
        lo[ch] = std::min(lo[ch], v[ch]);
        hi[ch] = std::max(hi[ch], v[ch]);
      }
    }
  }
  for (int ch = 0; ch < 3; ++ch) CHECK(s.rms_residual[ch] < 1e-2 * (hi[ch] - lo[ch]));

  const ChebSurrogate coarse = fit(model, a, env, 8, 12);
  const ChebSurrogate fine = fit(model, a, env, 16, 24);
  for (int ch = 0; ch < 3; ++ch) CHECK(fine.rms_residual[ch] <= coarse.rms_residual[ch]);
}

TEST_CASE("eval of a constant surrogate") {
  const ChebSurrogate s = glide::testing::constant_surrogate(1.5, 0.25, -0.1, default_env());
  const ChebEval e = eval(s, 0.2, 5.0);
  CHECK(e.value[0] == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(e.value[1] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(e.value[2] == doctest::Approx(-0.1).epsilon(1e-14));
  for (int ch = 0; ch < 3; ++ch) {
    CHECK(e.d_alpha[ch] == 0.0);
    CHECK(e.d_logre[ch] == 0.0);
    CHECK(e.d2_alpha_alpha[ch] == 0.0);
  }
}

TEST_CASE("T1 surrogate differentiates to the affine-map slope") {
  const Envelope env = default_env();
  ChebSurrogate s = glide::testing::constant_surrogate(0.0, 0.0, 0.0, env);
  s.coeffs[0](1, 0) = 1.0;  // C_L = T1(alpha_hat)
  const ChebEval e = eval(s, 0.1, 5.0);
  CHECK(e.d_alpha[0] ==
        doctest::Approx(2.0 / (env.alpha_max - env.alpha_min)).epsilon(1e-13));
  CHECK(e.d2_alpha_alpha[0] == doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("surrogate derivatives match finite differences of eval") {
  const AnalyticAeroModel model;
  const KulfanAirfoil a = fit_naca4412();
  const Envelope env = default_env();
  const ChebSurrogate s = fit(model, a, env, 10, 16);
  std::mt19937_64 rng(23);
  // Interior points, away from the boundary so the FD stencil stays inside.
  const double margin_a = 0.05 * (env.alpha_max - env.alpha_min);
  const double margin_r = 0.05 * (env.logre_max() - env.logre_min());
  std::uniform_real_distribution<double> ua(env.alpha_min + margin_a, env.alpha_max - margin_a);
  std::uniform_real_distribution<double> ur(env.logre_min() + margin_r, env.logre_max() - margin_r);
  const double e = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const double alpha = ua(rng), logre = ur(rng);
    const ChebEval c = eval(s, alpha, logre);
    const ChebEval cap = eval(s, alpha + e, logre), cam = eval(s, alpha - e, logre);
    const ChebEval crp = eval(s, alpha, logre + e), crm = eval(s, alpha, logre - e);
    for (int ch = 0; ch < 3; ++ch) {
      const double fda = (cap.value[ch] - cam.value[ch]) / (2 * e);
      const double fdr = (crp.value[ch] - crm.value[ch]) / (2 * e);
      CHECK(std::abs(c.d_alpha[ch] - fda) / std::max(1e-3, std::abs(fda)) < 1e-6);
      CHECK(std::abs(c.d_logre[ch] - fdr) / std::max(1e-3, std::abs(fdr)) < 1e-6);
      const double fdaa = (cap.d_alpha[ch] - cam.d_alpha[ch]) / (2 * e);
      const double fdar = (crp.d_alpha[ch] - crm.d_alpha[ch]) / (2 * e);
      const double fdrr = (crp.d_logre[ch] - crm.d_logre[ch]) / (2 * e);
      CHECK(std::abs(c.d2_alpha_alpha[ch] - fdaa) / std::max(1e-2, std::abs(fdaa)) < 1e-6);
      CHECK(std::abs(c.d2_alpha_logre[ch] - fdar) / std::max(1e-2, std::abs(fdar)) < 1e-6);
      CHECK(std::abs(c.d2_logre_logre[ch] - fdrr) / std::max(1e-2, std::abs(fdrr)) < 1e-6);
    }
  }
}

TEST_CASE("out-of-envelope queries throw unless clamped") {
  const ChebSurrogate s = glide::testing::constant_surrogate(1.0, 0.1, 0.0, default_env());
  CHECK_THROWS_AS(eval(s, 2.0, 5.0), std::domain_error);
  CHECK_NOTHROW(eval(s, 2.0, 5.0, true));
  CHECK(eval(s, 2.0, 5.0, true).value[0] == doctest::Approx(1.0));
}

TEST_CASE("fit is linear in the model") {
  const Envelope env = default_env();
  auto f1 = [](double alpha, double re) { return std::sin(alpha) + 0.01 * std::log10(re); };
  auto f2 = [](double alpha, double re) { return std::cos(3.0 * alpha) * std::log10(re); };
  FunctionAeroModel m1([&](const KulfanAirfoil&, double a, double r) {
    return AeroCoeffs{f1(a, r), 0.0, 0.0, 1.0};
  });
  FunctionAeroModel m2([&](const KulfanAirfoil&, double a, double r) {
    return AeroCoeffs{f2(a, r), 0.0, 0.0, 1.0};
  });
  FunctionAeroModel msum([&](const KulfanAirfoil&, double a, double r) {
    return AeroCoeffs{f1(a, r) + f2(a, r), 0.0, 0.0, 1.0};
  });
  const int k = 8, m = 14;
  const ChebSurrogate s1 = fit(m1, KulfanAirfoil{}, env, k, m);
  const ChebSurrogate s2 = fit(m2, KulfanAirfoil{}, env, k, m);
  const ChebSurrogate ss = fit(msum, KulfanAirfoil{}, env, k, m);
  CHECK((ss.coeffs[0] - s1.coeffs[0] - s2.coeffs[0]).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit jacobian: psi-independent model gives zero") {
  const Envelope env = default_env();
  FunctionAeroModel model(
      [](const KulfanAirfoil&, double a, double) { return AeroCoeffs{std::sin(a), 0.1, 0.0, 1.0}; },
      [](const KulfanAirfoil&, double, double, AeroGrad& g) { g = AeroGrad{}; });
  const KulfanAirfoil a = fit_naca4412();
  const ChebSurrogate s = fit(model, a, env, 6, 10);
  const Eigen::MatrixXd J = fit_jacobian(model, a, s);
  CHECK(J.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit jacobian: model linear in psi0, constant over the envelope") {
  const Envelope env = default_env();
  FunctionAeroModel model(
      [](const KulfanAirfoil& af, double, double) {
        return AeroCoeffs{af.upper_weights[0], 1.0 + af.upper_weights[0], 0.0, 1.0};
      },
      [](const KulfanAirfoil&, double, double, AeroGrad& g) {
        g = AeroGrad{};
        g.dpsi(0, 0) = 1.0;
        g.dpsi(1, 0) = 1.0;
      });
  const KulfanAirfoil a = fit_naca4412();
  const int k = 6;
  const ChebSurrogate s = fit(model, a, env, k, 10);
  const Eigen::MatrixXd J = fit_jacobian(model, a, s);
  // The constant response lands entirely in the [0,0] coefficient of the
  // C_L and C_D channels.
  for (int ch = 0; ch < 2; ++ch) {
    CHECK(J(ch * k * k, 0) == doctest::Approx(1.0).epsilon(1e-10));
    for (int r = 1; r < k * k; ++r) CHECK(std::abs(J(ch * k * k + r, 0)) < 1e-10);
  }
  CHECK(J.col(5).cwiseAbs().maxCoeff() < 1e-12);

  // Stale-surrogate guard.
  KulfanAirfoil other = a;
  other.upper_weights[0] += 0.1;
  CHECK_THROWS_AS(fit_jacobian(model, other, s), std::invalid_argument);
}

TEST_CASE("fit jacobian matches refit finite differences for the analytic model") {
  const AnalyticAeroModel model;
  const KulfanAirfoil a = fit_naca4412();
  const Envelope env = default_env();
  const int k = 8, m = 12;
  const ChebSurrogate s = fit(model, a, env, k, m);
  const Eigen::MatrixXd J = fit_jacobian(model, a, s);

  auto flatten = [&](const ChebSurrogate& sur) {
    Eigen::VectorXd w(3 * k * k);
    for (int ch = 0; ch < 3; ++ch) {
      for (int ai = 0; ai < k; ++ai) {
        for (int b = 0; b < k; ++b) w[ch * k * k + ai * k + b] = sur.coeffs[ch](ai, b);
      }
    }
    return w;
  };
  const double e = 1e-5;
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> ui(0, 17);
  for (int trial = 0; trial < 4; ++trial) {
    const int i = ui(rng);
    Vector18 p = a.to_vector(), q = a.to_vector();
    p[i] += e;
    q[i] -= e;
    const Eigen::VectorXd wp = flatten(fit(model, KulfanAirfoil::from_vector(p), env, k, m));
    const Eigen::VectorXd wq = flatten(fit(model, KulfanAirfoil::from_vector(q), env, k, m));
    const Eigen::VectorXd fd = (wp - wq) / (2 * e);
    const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
    CHECK((J.col(i) - fd).cwiseAbs().maxCoeff() / scale < 1e-4);
  }
}

TEST_CASE("surrogate json round trip") {
  const AnalyticAeroModel model;
  const KulfanAirfoil a = fit_naca4412();
  const ChebSurrogate s = fit(model, a, default_env(), 6, 8);
  const ChebSurrogate r = surrogate_from_json_text(to_json_text(s));
  CHECK(r.degree_k == s.degree_k);
  CHECK(r.design_hash == s.design_hash);
  for (int ch = 0; ch < 3; ++ch) {
    CHECK((r.coeffs[ch] - s.coeffs[ch]).cwiseAbs().maxCoeff() == 0.0);
  }
}
