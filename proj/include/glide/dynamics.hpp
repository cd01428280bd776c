#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>

#include "glide/chebfit.hpp"
#include "glide/dual.hpp"

namespace glide {

using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

/// Planar glider state. Conventions: world x forward, z up, pitch theta
/// nose-up positive, phi the elevator angle relative to the fuselage
/// (positive leading-edge up). Vector order [x z theta phi xdot zdot thetadot].
struct GliderState {
  double x = 0, z = 0, theta = 0, phi = 0, xdot = 0, zdot = 0, thetadot = 0;

  Vec7 to_vector() const {
    Vec7 v;
    v << x, z, theta, phi, xdot, zdot, thetadot;
    return v;
  }
  static GliderState from_vector(const Eigen::Ref<const Vec7>& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
  }
};

/// Three-body glider parameters. Body-frame x points forward; the fuselage
/// and wing points sit at their signed offsets, the elevator hinge at -l,
/// and the elevator aerodynamic center l_e behind the hinge along the
/// deflected elevator chord. Inertia defaults to the point-mass value about
/// the composite center of mass frozen at phi = 0.
struct GliderParams {
  double m_f = 0.026, m_w = 0.035, m_e = 0.004;  // kg
  double l = 0.260;                              // m, origin -> elevator hinge (aft)
  double l_e = 0.020;                            // m, hinge -> elevator AC
  double l_f = -0.027, l_w = -0.010;             // m, body-x of fuselage / wing points
  double s_w = 0.158, s_e = 0.017;               // m^2
  double chord_w = 0.15, chord_e = 0.06;         // m, mean chords (assumed)
  double rho = 1.204;                            // kg/m^3
  double g = 9.81;                               // m/s^2
  double mu_air = 1.81e-5;                       // Pa s
  double inertia;                                // kg m^2 about the CoM

  GliderParams() { inertia = derived_inertia(); }

  double total_mass() const { return m_f + m_w + m_e; }
  double com_x() const { return (m_f * l_f + m_w * l_w + m_e * (-l)) / total_mass(); }
  double derived_inertia() const {
    const double c = com_x();
    auto sq = [](double v) { return v * v; };
    return m_f * sq(l_f - c) + m_w * sq(l_w - c) + m_e * sq(-l - c);
  }
};

enum class LiftSurface { Wing, Elevator };

struct SurfaceKinematicsResult {
  Eigen::Vector2d v_rel;  // airflow velocity relative to the surface (world)
  double alpha = 0.0;     // rad, chord line vs airflow, wrapped to (-pi, pi]
  double re = 0.0;        // Reynolds number (0 when at rest)
};

/// Aerodynamic-center kinematics. phidot contributes the hinge-rotation
/// velocity for the elevator (pass the current elevator rate command).
SurfaceKinematicsResult surface_kinematics(const GliderState& state, const GliderParams& params,
                                           LiftSurface surface, double phidot = 0.0);

/// Force (world N) and pitching moment (N m) from one surface through a
/// fitted surrogate. Zero-velocity queries return zero loads.
std::pair<Eigen::Vector2d, double> surface_loads(const GliderState& state,
                                                 const GliderParams& params, LiftSurface surface,
                                                 const ChebSurrogate& s, double phidot = 0.0);

Vec7 continuous_dynamics(const GliderState& state, double u, const GliderParams& params,
                         const ChebSurrogate& s_w, const ChebSurrogate& s_e);

/// Explicit RK4 step of length h with piecewise-constant elevator rate u.
GliderState step(const GliderState& state, double u, double h, const GliderParams& params,
                 const ChebSurrogate& s_w, const ChebSurrogate& s_e);

/// Exact derivatives of the RK4 map w.r.t. state, control, and step length.
void step_jacobians(const GliderState& state, double u, double h, const GliderParams& params,
                    const ChebSurrogate& s_w, const ChebSurrogate& s_e, Mat7& A, Vec7& B, Vec7& C);

/// d(step)/d(w): sensitivity to the stacked surrogate coefficients
/// [wing C_L, wing C_D, wing C_M, elev C_L, elev C_D, elev C_M], k^2 each.
Eigen::MatrixXd step_w_jacobian(const GliderState& state, double u, double h,
                                const GliderParams& params, const ChebSurrogate& s_w,
                                const ChebSurrogate& s_e);

/// sum_i lambda_i * Hessian of step_i over (state, u, h) -- exact, 9x9.
Mat9 step_lambda_hessian(const GliderState& state, double u, double h, const GliderParams& params,
                         const ChebSurrogate& s_w, const ChebSurrogate& s_e, const Vec7& lambda);

/// d^2 (lambda^T step) / d(state,u,h) d(w) -- exact, 9 x 6k^2.
Eigen::MatrixXd step_lambda_cross_w(const GliderState& state, double u, double h,
                                    const GliderParams& params, const ChebSurrogate& s_w,
                                    const ChebSurrogate& s_e, const Vec7& lambda);

/// Soft envelope penalty density for one stage: squared hinge distances of
/// the raw per-surface (alpha, Re) queries outside the surrogate envelope
/// (Re measured relative to the violated bound so the penalty stays bounded
/// as the speed drops to zero). Multiply by weight * h_t in the stage cost.
double envelope_penalty_density(const GliderState& state, double u, const GliderParams& params,
                                const ChebSurrogate& s_w, const ChebSurrogate& s_e,
                                Eigen::Matrix<double, 8, 1>* grad = nullptr,
                                Eigen::Matrix<double, 8, 8>* hess = nullptr);

// ---------------------------------------------------------------------------
// Templated internals (shared by the exact-derivative passes).

template <typename T>
struct Vec2T {
  T x{0.0}, z{0.0};
};

template <typename T>
struct SurfaceAir {
  Vec2T<T> v;        // AC velocity relative to still air (world frame)
  T speed2{0.0};
  T alpha_raw{0.0};  // wrapped
  T re_raw{0.0};
  T q_alpha{0.0}, q_logre{0.0};  // saturated into the envelope
  Vec2T<T> r_world;              // CoM -> AC
  bool moving = false;
};

inline constexpr double kSpeedGuard2 = 1e-12;
inline constexpr double kEnvelopeSaturationSharpness = 40.0;

template <typename T>
SurfaceAir<T> surface_air(const std::array<T, 7>& s, const T& phidot, const GliderParams& P,
                          LiftSurface which, const Envelope& env) {
  using std::atan2;
  using std::cos;
  using std::log10;
  using std::sin;
  using std::sqrt;
  const T& th = s[2];
  const T& ph = s[3];
  T cth = cos(th), sth = sin(th);

  // Body-frame AC relative to the (phi = 0 frozen) center of mass.
  const double cx = P.com_x();
  Vec2T<T> r_b;
  Vec2T<T> dr_dphi;  // only the elevator AC moves with phi
  T chord_angle = th;
  if (which == LiftSurface::Wing) {
    r_b.x = T(P.l_w - cx);
    r_b.z = T(0.0);
  } else {
    T cph = cos(ph), sph = sin(ph);
    r_b.x = -P.l - P.l_e * cph - cx;
    r_b.z = -P.l_e * sph;
    dr_dphi.x = P.l_e * sph;
    dr_dphi.z = -P.l_e * cph;
    chord_angle = th + ph;
  }

  SurfaceAir<T> out;
  // World-frame offset and AC velocity: translation + rotation + hinge rate.
  out.r_world.x = cth * r_b.x - sth * r_b.z;
  out.r_world.z = sth * r_b.x + cth * r_b.z;
  out.v.x = s[4] - s[6] * out.r_world.z;
  out.v.z = s[5] + s[6] * out.r_world.x;
  if (which == LiftSurface::Elevator) {
    out.v.x += phidot * (cth * dr_dphi.x - sth * dr_dphi.z);
    out.v.z += phidot * (sth * dr_dphi.x + cth * dr_dphi.z);
  }

  out.speed2 = out.v.x * out.v.x + out.v.z * out.v.z;
  out.moving = value_of(out.speed2) > kSpeedGuard2;
  if (!out.moving) {
    out.q_alpha = smooth_clamp(T(0.0), env.alpha_min, env.alpha_max,
                               kEnvelopeSaturationSharpness);
    out.q_logre = T(env.logre_min());
    return out;
  }

  T raw = chord_angle - atan2(out.v.z, out.v.x);
  out.alpha_raw = atan2(sin(raw), cos(raw));
  const double chord = (which == LiftSurface::Wing) ? P.chord_w : P.chord_e;
  out.re_raw = (P.rho * chord / P.mu_air) * sqrt(out.speed2);
  T logre = log10(P.rho * chord / P.mu_air) + 0.5 * log10(out.speed2);
  out.q_alpha = smooth_clamp(out.alpha_raw, env.alpha_min, env.alpha_max,
                             kEnvelopeSaturationSharpness);
  out.q_logre = smooth_clamp(logre, env.logre_min(), env.logre_max(),
                             kEnvelopeSaturationSharpness);
  return out;
}

/// Continuous dynamics, generic over the scalar type. channel_taps, when
/// given, are added to the six surrogate channel values (wing then elevator,
/// each L/D/M) so callers can seed derivative directions through them.
template <typename T>
std::array<T, 7> glider_rhs(const std::array<T, 7>& s, const T& u, const GliderParams& P,
                            const ChebSurrogate& s_w, const ChebSurrogate& s_e,
                            const std::array<T, 6>* channel_taps = nullptr) {
  using std::sqrt;
  const double mass = P.total_mass();
  T fx(0.0), fz(0.0), tau(0.0);

  for (int si = 0; si < 2; ++si) {
    const LiftSurface which = (si == 0) ? LiftSurface::Wing : LiftSurface::Elevator;
    const ChebSurrogate& sur = (si == 0) ? s_w : s_e;
    const double area = (si == 0) ? P.s_w : P.s_e;
    const double chord = (si == 0) ? P.chord_w : P.chord_e;
    const SurfaceAir<T> air = surface_air(s, u, P, which, sur.envelope);

    std::array<T, 3> ch;
    if (air.moving) {
      ch = cheb_channels(sur, air.q_alpha, air.q_logre);
    } else {
      ch = {T(0.0), T(0.0), T(0.0)};
    }
    if (channel_taps) {
      for (int c = 0; c < 3; ++c) {
        ch[static_cast<std::size_t>(c)] += (*channel_taps)[static_cast<std::size_t>(3 * si + c)];
      }
    }
    if (!air.moving) continue;

    T qbar = 0.5 * P.rho * area * air.speed2;
    T inv_speed = T(1.0) / sqrt(air.speed2);
    Vec2T<T> n{air.v.x * inv_speed, air.v.z * inv_speed};
    Vec2T<T> nperp{-n.z, n.x};
    // Drag opposes the surface's motion through the air; lift is the
    // 90-degree counterclockwise rotation (up in forward level flight).
    Vec2T<T> F{qbar * (ch[0] * nperp.x - ch[1] * n.x), qbar * (ch[0] * nperp.z - ch[1] * n.z)};
    T moment = qbar * chord * ch[2];
    fx += F.x;
    fz += F.z;
    tau += air.r_world.x * F.z - air.r_world.z * F.x + moment;
  }

  std::array<T, 7> out;
  out[0] = s[4];
  out[1] = s[5];
  out[2] = s[6];
  out[3] = u;
  out[4] = fx * (1.0 / mass);
  out[5] = fz * (1.0 / mass) - P.g;
  out[6] = tau * (1.0 / P.inertia);
  return out;
}

template <typename T>
std::array<T, 7> rk4_step(const std::array<T, 7>& s, const T& u, const T& h,
                          const GliderParams& P, const ChebSurrogate& s_w,
                          const ChebSurrogate& s_e) {
  auto axpy = [](const std::array<T, 7>& a, const T& c, const std::array<T, 7>& b) {
    std::array<T, 7> r;
    for (int i = 0; i < 7; ++i) r[static_cast<std::size_t>(i)] =
        a[static_cast<std::size_t>(i)] + c * b[static_cast<std::size_t>(i)];
    return r;
  };
  const std::array<T, 7> k1 = glider_rhs(s, u, P, s_w, s_e);
  const std::array<T, 7> k2 = glider_rhs(axpy(s, h * 0.5, k1), u, P, s_w, s_e);
  const std::array<T, 7> k3 = glider_rhs(axpy(s, h * 0.5, k2), u, P, s_w, s_e);
  const std::array<T, 7> k4 = glider_rhs(axpy(s, h, k3), u, P, s_w, s_e);
  std::array<T, 7> out;
  for (int i = 0; i < 7; ++i) {
    const auto j = static_cast<std::size_t>(i);
    out[j] = s[j] + (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  return out;
}

}  // namespace glide
