#include "glide/dynamics.hpp"

#include <stdexcept>

namespace glide {
namespace {

using Dual8 = Dual<double, 8>;

std::array<double, 7> to_array(const Vec7& v) {
  std::array<double, 7> a;
  for (int i = 0; i < 7; ++i) a[static_cast<std::size_t>(i)] = v[i];
  return a;
}

Vec7 to_vec(const std::array<double, 7>& a) {
  Vec7 v;
  for (int i = 0; i < 7; ++i) v[i] = a[static_cast<std::size_t>(i)];
  return v;
}

// Per-stage values used by the coefficient-sensitivity passes: the stage
// derivative, its state Jacobian, the load shapes per surrogate channel,
// and the tensor basis at the stage's envelope-saturated queries. Generic
// over V so the same pass yields plain numbers or z-gradients.
template <typename V>
struct StageData {
  std::array<V, 7> k;
  std::array<std::array<V, 7>, 7> fx;     // fx[row][col]
  std::array<std::array<V, 7>, 6> shape;  // shape[channel][row]
  std::vector<V> basis_w, basis_e;
};

template <typename V>
void stage_eval(const std::array<V, 7>& xin, const V& u, const GliderParams& P,
                const ChebSurrogate& sw, const ChebSurrogate& se, StageData<V>& out) {
  using S = Dual<V, 13>;
  std::array<S, 7> xs;
  for (int i = 0; i < 7; ++i) xs[static_cast<std::size_t>(i)] =
      S::seeded(xin[static_cast<std::size_t>(i)], i);
  S us;
  us.v = u;
  std::array<S, 6> taps;
  for (int c = 0; c < 6; ++c) taps[static_cast<std::size_t>(c)] = S::seeded(V(0.0), 7 + c);
  const auto r = glider_rhs<S>(xs, us, P, sw, se, &taps);
  for (int row = 0; row < 7; ++row) {
    const auto rr = static_cast<std::size_t>(row);
    out.k[rr] = r[rr].v;
    for (int col = 0; col < 7; ++col) out.fx[rr][static_cast<std::size_t>(col)] = r[rr].d[col];
    for (int c = 0; c < 6; ++c) out.shape[static_cast<std::size_t>(c)][rr] = r[rr].d[7 + c];
  }
  const SurfaceAir<V> aw = surface_air(xin, u, P, LiftSurface::Wing, sw.envelope);
  const SurfaceAir<V> ae = surface_air(xin, u, P, LiftSurface::Elevator, se.envelope);
  cheb_basis(sw, aw.q_alpha, aw.q_logre, out.basis_w);
  cheb_basis(se, ae.q_alpha, ae.q_logre, out.basis_e);
}

}  // namespace

SurfaceKinematicsResult surface_kinematics(const GliderState& state, const GliderParams& params,
                                           LiftSurface surface, double phidot) {
  const Envelope env;  // saturation bounds are irrelevant to the raw outputs
  const SurfaceAir<double> air = surface_air(to_array(state.to_vector()), phidot, params, surface, env);
  SurfaceKinematicsResult r;
  // The airflow seen by the surface is the negative of its own velocity.
  r.v_rel = Eigen::Vector2d(-air.v.x, -air.v.z);
  r.alpha = air.moving ? air.alpha_raw : 0.0;
  r.re = air.moving ? air.re_raw : 0.0;
  return r;
}

std::pair<Eigen::Vector2d, double> surface_loads(const GliderState& state,
                                                 const GliderParams& params, LiftSurface surface,
                                                 const ChebSurrogate& s, double phidot) {
  const SurfaceAir<double> air =
      surface_air(to_array(state.to_vector()), phidot, params, surface, s.envelope);
  if (!air.moving) return {Eigen::Vector2d::Zero(), 0.0};
  const auto ch = cheb_channels(s, air.q_alpha, air.q_logre);
  const double area = (surface == LiftSurface::Wing) ? params.s_w : params.s_e;
  const double chord = (surface == LiftSurface::Wing) ? params.chord_w : params.chord_e;
  const double qbar = 0.5 * params.rho * area * air.speed2;
  const double speed = std::sqrt(air.speed2);
  const Eigen::Vector2d n(air.v.x / speed, air.v.z / speed);
  const Eigen::Vector2d nperp(-n.y(), n.x());
  const Eigen::Vector2d F = qbar * (ch[0] * nperp - ch[1] * n);
  return {F, qbar * chord * ch[2]};
}

Vec7 continuous_dynamics(const GliderState& state, double u, const GliderParams& params,
                         const ChebSurrogate& s_w, const ChebSurrogate& s_e) {
  const auto out = glider_rhs<double>(to_array(state.to_vector()), u, params, s_w, s_e);
  return to_vec(out);
}

GliderState step(const GliderState& state, double u, double h, const GliderParams& params,
                 const ChebSurrogate& s_w, const ChebSurrogate& s_e) {
  if (!(h > 0.0)) throw std::invalid_argument("step: h must be positive");
  const auto out = rk4_step<double>(to_array(state.to_vector()), u, h, params, s_w, s_e);
  const Vec7 v = to_vec(out);
  if (!v.allFinite()) throw std::runtime_error("step: non-finite state (diverged)");
  return GliderState::from_vector(v);
}

void step_jacobians(const GliderState& state, double u, double h, const GliderParams& params,
                    const ChebSurrogate& s_w, const ChebSurrogate& s_e, Mat7& A, Vec7& B, Vec7& C) {
  const Vec7 sv = state.to_vector();
  std::array<Dual9, 7> xs;
  for (int i = 0; i < 7; ++i) xs[static_cast<std::size_t>(i)] = Dual9::seeded(sv[i], i);
  const auto out = rk4_step<Dual9>(xs, Dual9::seeded(u, 7), Dual9::seeded(h, 8), params, s_w, s_e);
  for (int r = 0; r < 7; ++r) {
    const auto rr = static_cast<std::size_t>(r);
    for (int c = 0; c < 7; ++c) A(r, c) = out[rr].d[c];
    B[r] = out[rr].d[7];
    C[r] = out[rr].d[8];
  }
}

Eigen::MatrixXd step_w_jacobian(const GliderState& state, double u, double h,
                                const GliderParams& params, const ChebSurrogate& s_w,
                                const ChebSurrogate& s_e) {
  const int kw2 = s_w.coeff_count(), ke2 = s_e.coeff_count();
  const int wdim = 3 * kw2 + 3 * ke2;

  std::array<std::array<double, 7>, 4> xin;
  std::array<StageData<double>, 4> st;
  xin[0] = to_array(state.to_vector());
  stage_eval(xin[0], u, params, s_w, s_e, st[0]);
  auto advance = [&](int from, double c) {
    std::array<double, 7> next;
    for (int i = 0; i < 7; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      next[ii] = xin[0][ii] + c * st[static_cast<std::size_t>(from)].k[ii];
    }
    return next;
  };
  xin[1] = advance(0, 0.5 * h);
  stage_eval(xin[1], u, params, s_w, s_e, st[1]);
  xin[2] = advance(1, 0.5 * h);
  stage_eval(xin[2], u, params, s_w, s_e, st[2]);
  xin[3] = advance(2, h);
  stage_eval(xin[3], u, params, s_w, s_e, st[3]);

  auto add_fw = [&](const StageData<double>& sd, Eigen::MatrixXd& M) {
    for (int c = 0; c < 6; ++c) {
      const auto& basis = (c < 3) ? sd.basis_w : sd.basis_e;
      const int k2 = (c < 3) ? kw2 : ke2;
      const int off = (c < 3) ? c * kw2 : 3 * kw2 + (c - 3) * ke2;
      Eigen::Matrix<double, 7, 1> shape;
      for (int r = 0; r < 7; ++r) shape[r] = sd.shape[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
      if (shape.isZero(0.0)) continue;
      M.block(0, off, 7, k2).noalias() +=
          shape * Eigen::Map<const Eigen::RowVectorXd>(basis.data(), k2);
    }
  };
  auto fx_mat = [&](const StageData<double>& sd) {
    Mat7 F;
    for (int r = 0; r < 7; ++r) {
      for (int c = 0; c < 7; ++c) F(r, c) = sd.fx[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    return F;
  };

  Eigen::MatrixXd M1 = Eigen::MatrixXd::Zero(7, wdim);
  add_fw(st[0], M1);
  Eigen::MatrixXd M2 = fx_mat(st[1]) * ((0.5 * h) * M1);
  add_fw(st[1], M2);
  Eigen::MatrixXd M3 = fx_mat(st[2]) * ((0.5 * h) * M2);
  add_fw(st[2], M3);
  Eigen::MatrixXd M4 = fx_mat(st[3]) * (h * M3);
  add_fw(st[3], M4);
  return (h / 6.0) * (M1 + 2.0 * M2 + 2.0 * M3 + M4);
}

Mat9 step_lambda_hessian(const GliderState& state, double u, double h, const GliderParams& params,
                         const ChebSurrogate& s_w, const ChebSurrogate& s_e, const Vec7& lambda) {
  using DD = Dual<Dual9, 9>;
  const Vec7 sv = state.to_vector();
  std::array<DD, 7> xs;
  for (int i = 0; i < 7; ++i) xs[static_cast<std::size_t>(i)] = DD::seeded(Dual9::seeded(sv[i], i), i);
  const DD ud = DD::seeded(Dual9::seeded(u, 7), 7);
  const DD hd = DD::seeded(Dual9::seeded(h, 8), 8);
  const auto out = rk4_step<DD>(xs, ud, hd, params, s_w, s_e);
  Mat9 H = Mat9::Zero();
  for (int j = 0; j < 7; ++j) {
    if (lambda[j] == 0.0) continue;
    for (int p = 0; p < 9; ++p) {
      for (int q = 0; q < 9; ++q) H(p, q) += lambda[j] * out[static_cast<std::size_t>(j)].d[p].d[q];
    }
  }
  return 0.5 * (H + H.transpose());
}

Eigen::MatrixXd step_lambda_cross_w(const GliderState& state, double u, double h,
                                    const GliderParams& params, const ChebSurrogate& s_w,
                                    const ChebSurrogate& s_e, const Vec7& lambda) {
  const int kw2 = s_w.coeff_count(), ke2 = s_e.coeff_count();
  const int wdim = 3 * kw2 + 3 * ke2;
  const Vec7 sv = state.to_vector();

  std::array<Dual9, 7> x0;
  for (int i = 0; i < 7; ++i) x0[static_cast<std::size_t>(i)] = Dual9::seeded(sv[i], i);
  const Dual9 ud = Dual9::seeded(u, 7);
  const Dual9 hd = Dual9::seeded(h, 8);

  std::array<StageData<Dual9>, 4> st;
  std::array<std::array<Dual9, 7>, 4> xin;
  xin[0] = x0;
  stage_eval(xin[0], ud, params, s_w, s_e, st[0]);
  auto advance = [&](int from, const Dual9& c) {
    std::array<Dual9, 7> next;
    for (int i = 0; i < 7; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      next[ii] = x0[ii] + c * st[static_cast<std::size_t>(from)].k[ii];
    }
    return next;
  };
  xin[1] = advance(0, hd * 0.5);
  stage_eval(xin[1], ud, params, s_w, s_e, st[1]);
  xin[2] = advance(1, hd * 0.5);
  stage_eval(xin[2], ud, params, s_w, s_e, st[2]);
  xin[3] = advance(2, hd);
  stage_eval(xin[3], ud, params, s_w, s_e, st[3]);

  // lambda^T d(step)/dw = sum_i c_i^T fw_i with the stage adjoints below;
  // evaluating the chain in Dual9 arithmetic carries the (x,u,h) gradients.
  std::array<std::array<Dual9, 7>, 4> cvec;
  auto fxT_times = [&](const StageData<Dual9>& sd, const std::array<Dual9, 7>& v) {
    std::array<Dual9, 7> r;
    for (int col = 0; col < 7; ++col) {
      Dual9 acc(0.0);
      for (int row = 0; row < 7; ++row) {
        acc += sd.fx[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] *
               v[static_cast<std::size_t>(row)];
      }
      r[static_cast<std::size_t>(col)] = acc;
    }
    return r;
  };
  for (int i = 0; i < 7; ++i) cvec[3][static_cast<std::size_t>(i)] = hd * (lambda[i] / 6.0);
  {
    auto t = fxT_times(st[3], cvec[3]);
    for (int i = 0; i < 7; ++i) cvec[2][static_cast<std::size_t>(i)] =
        hd * (lambda[i] * (2.0 / 6.0)) + hd * t[static_cast<std::size_t>(i)];
  }
  {
    auto t = fxT_times(st[2], cvec[2]);
    for (int i = 0; i < 7; ++i) cvec[1][static_cast<std::size_t>(i)] =
        hd * (lambda[i] * (2.0 / 6.0)) + (hd * 0.5) * t[static_cast<std::size_t>(i)];
  }
  {
    auto t = fxT_times(st[1], cvec[1]);
    for (int i = 0; i < 7; ++i) cvec[0][static_cast<std::size_t>(i)] =
        hd * (lambda[i] / 6.0) + (hd * 0.5) * t[static_cast<std::size_t>(i)];
  }

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(9, wdim);
  for (int stage = 0; stage < 4; ++stage) {
    const auto& sd = st[static_cast<std::size_t>(stage)];
    const auto& ci = cvec[static_cast<std::size_t>(stage)];
    for (int c = 0; c < 6; ++c) {
      Dual9 g(0.0);
      for (int row = 0; row < 7; ++row) {
        g += ci[static_cast<std::size_t>(row)] * sd.shape[static_cast<std::size_t>(c)][static_cast<std::size_t>(row)];
      }
      const auto& basis = (c < 3) ? sd.basis_w : sd.basis_e;
      const int k2 = (c < 3) ? kw2 : ke2;
      const int off = (c < 3) ? c * kw2 : 3 * kw2 + (c - 3) * ke2;
      for (int j = 0; j < k2; ++j) {
        const Dual9 v = g * basis[static_cast<std::size_t>(j)];
        for (int p = 0; p < 9; ++p) out(p, off + j) += v.d[p];
      }
    }
  }
  return out;
}

namespace {

// Bounded envelope distances; the Re terms use bound-relative distances so
// the penalty saturates instead of diverging as the speed drops to zero.
// The Re terms are down-weighted: coefficient error at out-of-envelope Re
// carries load proportional to speed^2, so alpha trust dominates.
constexpr double kRePenaltyWeight = 0.01;

template <typename T>
T envelope_density_t(const std::array<T, 7>& s, const T& u, const GliderParams& P,
                     const ChebSurrogate& sw, const ChebSurrogate& se) {
  T total(0.0);
  for (int si = 0; si < 2; ++si) {
    const LiftSurface which = (si == 0) ? LiftSurface::Wing : LiftSurface::Elevator;
    const ChebSurrogate& sur = (si == 0) ? sw : se;
    const SurfaceAir<T> air = surface_air(s, u, P, which, sur.envelope);
    const Envelope& env = sur.envelope;
    if (!air.moving) {
      total += kRePenaltyWeight;  // fully below the Re floor
      continue;
    }
    total += box_hinge_sq(air.alpha_raw, env.alpha_min, env.alpha_max);
    const double relo = env.re_min, rehi = env.re_max;
    const double rev = value_of(air.re_raw);
    if (rev < relo) {
      T d = (relo - air.re_raw) * (1.0 / relo);
      total += kRePenaltyWeight * d * d;
    } else if (rev > rehi) {
      T d = (air.re_raw - rehi) * (1.0 / rehi);
      total += kRePenaltyWeight * d * d;
    }
  }
  return total;
}

}  // namespace

double envelope_penalty_density(const GliderState& state, double u, const GliderParams& params,
                                const ChebSurrogate& s_w, const ChebSurrogate& s_e,
                                Eigen::Matrix<double, 8, 1>* grad,
                                Eigen::Matrix<double, 8, 8>* hess) {
  const Vec7 sv = state.to_vector();
  if (!grad && !hess) {
    return envelope_density_t(to_array(sv), u, params, s_w, s_e);
  }
  using DD = Dual<Dual8, 8>;
  std::array<DD, 7> xs;
  for (int i = 0; i < 7; ++i) xs[static_cast<std::size_t>(i)] = DD::seeded(Dual8::seeded(sv[i], i), i);
  const DD ud = DD::seeded(Dual8::seeded(u, 7), 7);
  const DD val = envelope_density_t(xs, ud, params, s_w, s_e);
  if (grad) {
    for (int p = 0; p < 8; ++p) (*grad)[p] = val.d[p].v;
  }
  if (hess) {
    for (int p = 0; p < 8; ++p) {
      for (int q = 0; q < 8; ++q) (*hess)(p, q) = val.d[p].d[q];
    }
    *hess = 0.5 * (*hess + hess->transpose());
  }
  return value_of(val);
}

}  // namespace glide
