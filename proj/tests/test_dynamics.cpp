#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "glide/dynamics.hpp"
#include "glide/geometry.hpp"
#include "support/mocks.hpp"

using namespace glide;
using glide::testing::constant_surrogate;

namespace {

const ChebSurrogate& naca_surrogate() {
  static const ChebSurrogate s = [] {
    const AnalyticAeroModel model;
    return fit(model, fit_naca4412(), Envelope{}, 10, 16);
  }();
  return s;
}

GliderState perching_like_state() {
  GliderState s;
  s.x = -8.5;
  s.z = 1.0;
  s.xdot = 6.0;
  s.zdot = 3.0;
  return s;
}

double total_energy(const GliderState& s, const GliderParams& p) {
  const double v2 = s.xdot * s.xdot + s.zdot * s.zdot;
  return 0.5 * p.total_mass() * v2 + 0.5 * p.inertia * s.thetadot * s.thetadot +
         p.total_mass() * p.g * s.z;
}

// Step-doubling adaptive RK4 reference (test-only oracle).
GliderState integrate_reference(GliderState s, double u, double t_total, const GliderParams& p,
                                const ChebSurrogate& sw, const ChebSurrogate& se,
                                double tol = 1e-8) {
  double t = 0.0, h = 1e-3;
  while (t < t_total) {
    h = std::min(h, t_total - t);
    const GliderState full = step(s, u, h, p, sw, se);
    const GliderState half = step(step(s, u, h / 2, p, sw, se), u, h / 2, p, sw, se);
    const double err = (full.to_vector() - half.to_vector()).cwiseAbs().maxCoeff();
    if (err < tol || h < 1e-7) {
      s = half;
      t += h;
      if (err < tol / 32.0) h *= 2.0;
    } else {
      h *= 0.5;
    }
  }
  return s;
}

}  // namespace

TEST_CASE("surface kinematics basics") {
  const GliderParams p;
  GliderState rest;
  const auto at_rest = surface_kinematics(rest, p, LiftSurface::Wing);
  CHECK(at_rest.v_rel.norm() == 0.0);
  CHECK(at_rest.re == 0.0);
  CHECK(at_rest.alpha == 0.0);

  GliderState level;
  level.xdot = 6.0;
  const auto lw = surface_kinematics(level, p, LiftSurface::Wing);
  CHECK(lw.alpha == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(lw.v_rel.norm() == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(lw.re == doctest::Approx(p.rho * 6.0 * p.chord_w / p.mu_air).epsilon(1e-12));

  GliderState descending = level;
  descending.zdot = -1.0;
  const auto dw = surface_kinematics(descending, p, LiftSurface::Wing);
  CHECK(dw.alpha == doctest::Approx(std::atan2(1.0, 6.0)).epsilon(1e-12));

  // Elevator chord angle includes phi.
  GliderState deflected = level;
  deflected.phi = 0.1;
  const auto de = surface_kinematics(deflected, p, LiftSurface::Elevator);
  CHECK(de.alpha == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("surface loads formula and scaling") {
  const GliderParams p;
  const ChebSurrogate lift_only = constant_surrogate(1.0, 0.0, 0.0);

  GliderState rest;
  const auto zero = surface_loads(rest, p, LiftSurface::Wing, lift_only);
  CHECK(zero.first.norm() == 0.0);
  CHECK(zero.second == 0.0);

  GliderState level;
  level.xdot = 6.0;
  const auto loads = surface_loads(level, p, LiftSurface::Wing, lift_only);
  CHECK(loads.first.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(loads.first.y() == doctest::Approx(0.5 * p.rho * 36.0 * p.s_w).epsilon(1e-12));

  GliderState fast = level;
  fast.xdot = 12.0;
  const auto loads2 = surface_loads(fast, p, LiftSurface::Wing, lift_only);
  CHECK(loads2.first.norm() == doctest::Approx(4.0 * loads.first.norm()).epsilon(1e-12));
}

TEST_CASE("free fall under zero-coefficient surrogates") {
  const GliderParams p;
  const ChebSurrogate zero = constant_surrogate(0.0, 0.0, 0.0);
  GliderState s = perching_like_state();
  s.thetadot = 0.3;
  const Vec7 d = continuous_dynamics(s, 0.7, p, zero, zero);
  CHECK(d[0] == s.xdot);
  CHECK(d[1] == s.zdot);
  CHECK(d[2] == s.thetadot);
  CHECK(d[3] == 0.7);
  CHECK(d[4] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(d[5] == doctest::Approx(-p.g).epsilon(1e-14));
  CHECK(d[6] == doctest::Approx(0.0).epsilon(1e-14));

  // RK4 is exact for constant acceleration.
  GliderState at_rest;
  at_rest.xdot = 1.0;
  const GliderState nxt = step(at_rest, 0.0, 0.01, p, zero, zero);
  CHECK(nxt.zdot == doctest::Approx(-p.g * 0.01).epsilon(1e-14));
}

TEST_CASE("elevator-only torque matches the hand cross product") {
  GliderParams p;
  const ChebSurrogate zero = constant_surrogate(0.0, 0.0, 0.0);
  const double cl = 0.8;
  const ChebSurrogate elev = constant_surrogate(cl, 0.0, 0.0);
  GliderState level;
  level.xdot = 6.0;
  const Vec7 d = continuous_dynamics(level, 0.0, p, zero, elev);
  const double qbar = 0.5 * p.rho * 36.0 * p.s_e;
  const double r_x = (-p.l - p.l_e) - p.com_x();
  const double expected = r_x * (qbar * cl) / p.inertia;
  CHECK(d[6] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(d[4] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d[5] == doctest::Approx(qbar * cl / p.total_mass() - p.g).epsilon(1e-12));
}

TEST_CASE("dynamics are translation invariant") {
  const GliderParams p;
  GliderState s = perching_like_state();
  s.theta = 0.2;
  s.phi = -0.1;
  s.thetadot = 0.5;
  GliderState shifted = s;
  shifted.x += 13.0;
  shifted.z += -4.0;
  const Vec7 d0 = continuous_dynamics(s, 0.4, p, naca_surrogate(), naca_surrogate());
  const Vec7 d1 = continuous_dynamics(shifted, 0.4, p, naca_surrogate(), naca_surrogate());
  CHECK((d0 - d1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("integrator shows fourth-order convergence on a perching-like arc") {
  const GliderParams p;
  const ChebSurrogate& s = naca_surrogate();
  const GliderState x0 = perching_like_state();
  const double u = 0.5, T = 1.0;
  const GliderState ref = integrate_reference(x0, u, T, p, s, s, 1e-11);

  auto rollout = [&](double h) {
    GliderState x = x0;
    const int n = static_cast<int>(std::round(T / h));
    for (int i = 0; i < n; ++i) x = step(x, u, h, p, s, s);
    return (x.to_vector() - ref.to_vector()).norm();
  };
  const double e1 = rollout(0.004);
  const double e2 = rollout(0.002);
  const double e4 = rollout(0.001);
  CHECK(e1 / e2 > 12.0);
  CHECK(e1 / e2 < 20.0);
  CHECK(e2 / e4 > 12.0);
  CHECK(e2 / e4 < 20.0);

  // One step vs two half steps differ at fifth order: halving the step
  // shrinks the discrepancy by about 2^5. Probed in a mild attached-flow
  // state so the leading error term dominates.
  GliderState mild;
  mild.xdot = 6.0;
  mild.zdot = -0.5;
  auto split_gap = [&](double h) {
    const GliderState one = step(mild, u, h, p, s, s);
    const GliderState two = step(step(mild, u, h / 2, p, s, s), u, h / 2, p, s, s);
    return (one.to_vector() - two.to_vector()).cwiseAbs().maxCoeff();
  };
  const double g1 = split_gap(0.008);
  const double g2 = split_gap(0.004);
  CHECK(g1 / g2 > 20.0);
  CHECK(g1 / g2 < 48.0);
}

TEST_CASE("drag-only mock dissipates mechanical energy at fourth order") {
  const GliderParams p;
  const ChebSurrogate drag = constant_surrogate(0.0, 0.4, 0.0);
  GliderState x0 = perching_like_state();
  x0.thetadot = 0.4;

  auto max_energy_rise = [&](double h) {
    GliderState x = x0;
    double prev = total_energy(x, p);
    double rise = 0.0;
    const int n = static_cast<int>(std::round(1.0 / h));
    for (int i = 0; i < n; ++i) {
      x = step(x, 0.0, h, p, drag, drag);
      const double e = total_energy(x, p);
      rise = std::max(rise, e - prev);
      prev = e;
    }
    return rise;
  };
  // Dissipation dominates integrator error: energy never increases.
  CHECK(max_energy_rise(0.02) <= 0.0);

  auto energy_drift = [&](double h) {
    GliderState x = x0;
    const int n = static_cast<int>(std::round(0.5 / h));
    for (int i = 0; i < n; ++i) x = step(x, 0.0, h, p, drag, drag);
    return total_energy(x, p);
  };
  const GliderState xr = integrate_reference(x0, 0.0, 0.5, p, drag, drag, 1e-11);
  const double er = total_energy(xr, p);
  const double d1 = std::abs(energy_drift(0.02) - er);
  const double d2 = std::abs(energy_drift(0.01) - er);
  CHECK(d1 / d2 > 8.0);  // 4th order nominal 16 with slack
}

TEST_CASE("lift does no work") {
  const GliderParams p;
  const ChebSurrogate lift = constant_surrogate(1.2, 0.0, 0.0);
  GliderState s = perching_like_state();
  s.theta = 0.3;
  s.thetadot = 1.1;
  s.phi = -0.2;
  for (LiftSurface which : {LiftSurface::Wing, LiftSurface::Elevator}) {
    const double phidot = (which == LiftSurface::Elevator) ? 2.0 : 0.0;
    const auto kin = surface_kinematics(s, p, which, phidot);
    const auto loads = surface_loads(s, p, which, lift, phidot);
    // v_rel is the airflow; the AC velocity is its negative.
    const double power = loads.first.dot(-kin.v_rel);
    CHECK(std::abs(power) < 1e-10);
  }
}

TEST_CASE("step jacobians: free-fall closed form") {
  const GliderParams p;
  const ChebSurrogate zero = constant_surrogate(0.0, 0.0, 0.0);
  GliderState s = perching_like_state();
  const double h = 0.03, u = 0.6;
  Mat7 A;
  Vec7 B, C;
  step_jacobians(s, u, h, p, zero, zero, A, B, C);
  Mat7 expected = Mat7::Identity();
  expected(0, 4) = h;
  expected(1, 5) = h;
  expected(2, 6) = h;
  CHECK((A - expected).cwiseAbs().maxCoeff() < 1e-13);
  Vec7 Bexp = Vec7::Zero();
  Bexp[3] = h;
  CHECK((B - Bexp).cwiseAbs().maxCoeff() < 1e-13);
  // For the affine free-fall field, d(step)/dh = f + h A f exactly.
  const Vec7 f = continuous_dynamics(s, u, p, zero, zero);
  Vec7 Af = Vec7::Zero();
  Af[0] = f[4];
  Af[1] = f[5];
  Af[2] = f[6];
  CHECK((C - (f + h * Af)).cwiseAbs().maxCoeff() < 1e-12);

  // (df/du)/h -> e_phi as h -> 0 under the zero-coefficient mock.
  step_jacobians(s, u, 1e-6, p, zero, zero, A, B, C);
  Vec7 e4 = Vec7::Zero();
  e4[3] = 1.0;
  CHECK(((B / 1e-6) - e4).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("step jacobians match finite differences at random states") {
  const GliderParams p;
  const ChebSurrogate& sur = naca_surrogate();
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> un(-1.0, 1.0);
  const double e = 1e-6;
  for (int trial = 0; trial < 30; ++trial) {
    GliderState s;
    s.x = 3.0 * un(rng);
    s.z = 1.0 + un(rng);
    s.theta = 0.5 * un(rng);
    s.phi = 0.3 * un(rng);
    s.xdot = 5.0 + 2.0 * un(rng);
    s.zdot = 1.5 * un(rng);
    s.thetadot = 1.0 * un(rng);
    const double u = 3.0 * un(rng);
    const double h = 0.03 + 0.02 * un(rng);

    Mat7 A;
    Vec7 B, C;
    step_jacobians(s, u, h, p, sur, sur, A, B, C);

    Vec7 sv = s.to_vector();
    for (int i = 0; i < 7; ++i) {
      Vec7 sp = sv, sm = sv;
      sp[i] += e;
      sm[i] -= e;
      const Vec7 fd = (step(GliderState::from_vector(sp), u, h, p, sur, sur).to_vector() -
                       step(GliderState::from_vector(sm), u, h, p, sur, sur).to_vector()) /
                      (2 * e);
      for (int r = 0; r < 7; ++r) {
        CHECK(std::abs(A(r, i) - fd[r]) / std::max(1e-2, std::abs(fd[r])) < 1e-5);
      }
    }
    const Vec7 fdu = (step(s, u + e, h, p, sur, sur).to_vector() -
                      step(s, u - e, h, p, sur, sur).to_vector()) /
                     (2 * e);
    const Vec7 fdh = (step(s, u, h + e, p, sur, sur).to_vector() -
                      step(s, u, h - e, p, sur, sur).to_vector()) /
                     (2 * e);
    for (int r = 0; r < 7; ++r) {
      CHECK(std::abs(B[r] - fdu[r]) / std::max(1e-2, std::abs(fdu[r])) < 1e-5);
      CHECK(std::abs(C[r] - fdh[r]) / std::max(1e-2, std::abs(fdh[r])) < 1e-5);
    }
  }
}

TEST_CASE("coefficient sensitivity of the step matches finite differences") {
  const GliderParams p;
  ChebSurrogate sw = naca_surrogate();
  ChebSurrogate se = naca_surrogate();
  GliderState s = perching_like_state();
  s.theta = 0.15;
  s.phi = -0.1;
  s.thetadot = 0.4;
  const double u = 1.2, h = 0.04;

  const Eigen::MatrixXd W = step_w_jacobian(s, u, h, p, sw, se);
  const int k2 = sw.coeff_count();
  CHECK(W.cols() == 6 * k2);

  std::mt19937_64 rng(43);
  std::uniform_int_distribution<int> uc(0, 6 * k2 - 1);
  const double e = 1e-6;
  for (int trial = 0; trial < 24; ++trial) {
    const int col = uc(rng);
    const int surf = col / (3 * k2);
    const int chan = (col % (3 * k2)) / k2;
    const int a = (col % k2) / sw.degree_k;
    const int b = col % sw.degree_k;
    auto perturbed = [&](double d) {
      ChebSurrogate w2 = sw, e2 = se;
      ChebSurrogate& target = (surf == 0) ? w2 : e2;
      target.coeffs[static_cast<std::size_t>(chan)](a, b) += d;
      return step(s, u, h, p, w2, e2).to_vector();
    };
    const Vec7 fd = (perturbed(e) - perturbed(-e)) / (2 * e);
    const double scale = std::max(1e-4, fd.cwiseAbs().maxCoeff());
    CHECK((W.col(col) - fd).cwiseAbs().maxCoeff() / scale < 1e-5);
  }
}

TEST_CASE("lambda-contracted second derivatives match finite differences") {
  const GliderParams p;
  const ChebSurrogate& sur = naca_surrogate();
  GliderState s = perching_like_state();
  s.theta = 0.1;
  s.phi = -0.15;
  s.thetadot = 0.6;
  const double u = 0.8, h = 0.035;
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> un(-1.0, 1.0);
  Vec7 lambda;
  for (int i = 0; i < 7; ++i) lambda[i] = un(rng);

  const Mat9 H = step_lambda_hessian(s, u, h, p, sur, sur, lambda);

  // Gradient of lambda^T step over (x,u,h) via the first-order Jacobians.
  auto grad9 = [&](const Vec7& sv, double uu, double hh) {
    Mat7 A;
    Vec7 B, C;
    step_jacobians(GliderState::from_vector(sv), uu, hh, p, sur, sur, A, B, C);
    Vec9 g;
    g.head<7>() = A.transpose() * lambda;
    g[7] = B.dot(lambda);
    g[8] = C.dot(lambda);
    return g;
  };
  const double e = 1e-6;
  const Vec7 sv = s.to_vector();
  for (int i = 0; i < 9; ++i) {
    Vec7 sp = sv, sm = sv;
    double up = u, um = u, hp = h, hm = h;
    if (i < 7) {
      sp[i] += e;
      sm[i] -= e;
    } else if (i == 7) {
      up += e;
      um -= e;
    } else {
      hp += e;
      hm -= e;
    }
    const Vec9 fd = (grad9(sp, up, hp) - grad9(sm, um, hm)) / (2 * e);
    for (int r = 0; r < 9; ++r) {
      CHECK(std::abs(H(i, r) - fd[r]) / std::max(1e-2, std::abs(fd[r])) < 2e-5);
    }
  }

  // Cross term: d/dz of lambda^T W columns.
  const Eigen::MatrixXd X = step_lambda_cross_w(s, u, h, p, sur, sur, lambda);
  auto lamW = [&](const Vec7& sv2, double uu, double hh) {
    return Eigen::VectorXd(step_w_jacobian(GliderState::from_vector(sv2), uu, hh, p, sur, sur)
                               .transpose() *
                           lambda);
  };
  for (int i = 0; i < 9; ++i) {
    Vec7 sp = sv, sm = sv;
    double up = u, um = u, hp = h, hm = h;
    if (i < 7) {
      sp[i] += e;
      sm[i] -= e;
    } else if (i == 7) {
      up += e;
      um -= e;
    } else {
      hp += e;
      hm -= e;
    }
    const Eigen::VectorXd fd = (lamW(sp, up, hp) - lamW(sm, um, hm)) / (2 * e);
    const double scale = std::max(1e-3, fd.cwiseAbs().maxCoeff());
    CHECK((X.row(i).transpose() - fd).cwiseAbs().maxCoeff() / scale < 2e-5);
  }
}

TEST_CASE("static glide trim exists for the 4412 analytic surrogate") {
  const GliderParams p;
  const ChebSurrogate& sur = naca_surrogate();
  // Unknowns (theta, phi, xdot, zdot); residual = accelerations.
  Eigen::Vector4d q(-0.14, -0.10, 6.0, -0.6);
  auto residual = [&](const Eigen::Vector4d& v) {
    GliderState s;
    s.theta = v[0];
    s.phi = v[1];
    s.xdot = v[2];
    s.zdot = v[3];
    const Vec7 d = continuous_dynamics(s, 0.0, p, sur, sur);
    return Eigen::Vector3d(d[4], d[5], d[6]);
  };
  double lm = 1e-4;
  for (int it = 0; it < 200; ++it) {
    const Eigen::Vector3d r = residual(q);
    if (r.norm() < 1e-9) break;
    Eigen::Matrix<double, 3, 4> J;
    const double e = 1e-7;
    for (int i = 0; i < 4; ++i) {
      Eigen::Vector4d qp = q, qm = q;
      qp[i] += e;
      qm[i] -= e;
      J.col(i) = (residual(qp) - residual(qm)) / (2 * e);
    }
    const Eigen::Matrix4d JtJ = J.transpose() * J + lm * Eigen::Matrix4d::Identity();
    const Eigen::Vector4d dq = JtJ.ldlt().solve(-J.transpose() * r);
    if (residual(q + dq).norm() < r.norm()) {
      q += dq;
      lm = std::max(lm * 0.5, 1e-10);
    } else {
      lm *= 10.0;
    }
  }
  CHECK(residual(q).norm() < 1e-3);
  // Regression fixture: a forward steady glide at a few m/s, pitched near
  // level, slightly descending.
  CHECK(q[2] > 1.0);
  CHECK(q[2] < 12.0);
  CHECK(q[3] < 0.0);
  CHECK(std::abs(q[0]) < 0.5);
}
