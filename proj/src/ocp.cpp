#include "glide/ocp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace glide {

Eigen::MatrixXd DiscreteDynamics::w_jacobian(const Eigen::VectorXd&, double, double) const {
  return Eigen::MatrixXd::Zero(state_dim(), w_dim());
}

Eigen::MatrixXd DiscreteDynamics::lambda_hessian(const Eigen::VectorXd&, double, double,
                                                 const Eigen::VectorXd&) const {
  throw std::logic_error("DiscreteDynamics::lambda_hessian not implemented");
}

Eigen::MatrixXd DiscreteDynamics::lambda_cross_w(const Eigen::VectorXd&, double, double,
                                                 const Eigen::VectorXd&) const {
  return Eigen::MatrixXd::Zero(state_dim() + 2, w_dim());
}

void Transcription::box_bounds(Eigen::VectorXd& lo, Eigen::VectorXd& hi) const {
  const double inf = std::numeric_limits<double>::infinity();
  lo = Eigen::VectorXd::Constant(nz(), -inf);
  hi = Eigen::VectorXd::Constant(nz(), inf);
  for (int t = 0; t < horizon_n; ++t) {
    for (const StateBound& b : state_bounds) {
      lo[x_index(t) + b.index] = b.lo;
      hi[x_index(t) + b.index] = b.hi;
    }
  }
  for (int t = 0; t < horizon_n - 1; ++t) {
    lo[u_index(t)] = u_lo;
    hi[u_index(t)] = u_hi;
    lo[h_index(t)] = h_lo;
    hi[h_index(t)] = h_hi;
  }
}

double Transcription::cost(const Eigen::VectorXd& z) const {
  const int n = nx();
  double total = 0.0;
  for (int t = 0; t < horizon_n - 1; ++t) {
    const auto dx = z.segment(x_index(t), n) - target_state;
    const double u = z[u_index(t)];
    const double h = z[h_index(t)];
    double stage = dx.cwiseProduct(q_weights).dot(dx) + r_weight * u * u;
    if (penalty && penalty_weight != 0.0) {
      stage += penalty_weight * penalty->density(z.segment(x_index(t), n), u, nullptr, nullptr);
    }
    total += h * stage + s_weight * h * h;
  }
  const auto dxn = z.segment(x_index(horizon_n - 1), n) - target_state;
  total += dxn.cwiseProduct(q_weights).dot(dxn);
  return total;
}

void Transcription::cost_derivatives(const Eigen::VectorXd& z, Eigen::VectorXd& grad,
                                     Eigen::MatrixXd* hess) const {
  const int n = nx();
  grad = Eigen::VectorXd::Zero(nz());
  if (hess) *hess = Eigen::MatrixXd::Zero(nz(), nz());
  Eigen::VectorXd pgrad;
  Eigen::MatrixXd phess;
  for (int t = 0; t < horizon_n - 1; ++t) {
    const int xi = x_index(t), ui = u_index(t), hi = h_index(t);
    const auto dx = z.segment(xi, n) - target_state;
    const double u = z[ui];
    const double h = z[hi];
    const Eigen::VectorXd qdx = q_weights.cwiseProduct(dx);
    double stage = dx.dot(qdx) + r_weight * u * u;

    grad.segment(xi, n) += 2.0 * h * qdx;
    grad[ui] += 2.0 * h * r_weight * u;
    grad[hi] += stage + 2.0 * s_weight * h;
    if (hess) {
      for (int i = 0; i < n; ++i) (*hess)(xi + i, xi + i) += 2.0 * h * q_weights[i];
      hess->block(xi, hi, n, 1) += 2.0 * qdx;
      hess->block(hi, xi, 1, n) += 2.0 * qdx.transpose();
      (*hess)(ui, ui) += 2.0 * h * r_weight;
      (*hess)(ui, hi) += 2.0 * r_weight * u;
      (*hess)(hi, ui) += 2.0 * r_weight * u;
      (*hess)(hi, hi) += 2.0 * s_weight;
    }
    if (penalty && penalty_weight != 0.0) {
      const double p = penalty->density(z.segment(xi, n), u, &pgrad, hess ? &phess : nullptr);
      grad.segment(xi, n) += penalty_weight * h * pgrad.head(n);
      grad[ui] += penalty_weight * h * pgrad[n];
      grad[hi] += penalty_weight * p;
      if (hess) {
        hess->block(xi, xi, n, n) += penalty_weight * h * phess.topLeftCorner(n, n);
        hess->block(xi, ui, n, 1) += penalty_weight * h * phess.block(0, n, n, 1);
        hess->block(ui, xi, 1, n) += penalty_weight * h * phess.block(n, 0, 1, n);
        (*hess)(ui, ui) += penalty_weight * h * phess(n, n);
        hess->block(xi, hi, n, 1) += penalty_weight * pgrad.head(n);
        hess->block(hi, xi, 1, n) += penalty_weight * pgrad.head(n).transpose();
        (*hess)(ui, hi) += penalty_weight * pgrad[n];
        (*hess)(hi, ui) += penalty_weight * pgrad[n];
      }
    }
  }
  const int xn = x_index(horizon_n - 1);
  const auto dxn = z.segment(xn, n) - target_state;
  grad.segment(xn, n) += 2.0 * q_weights.cwiseProduct(dxn);
  if (hess) {
    for (int i = 0; i < n; ++i) (*hess)(xn + i, xn + i) += 2.0 * q_weights[i];
  }
}

Eigen::VectorXd Transcription::constraints(const Eigen::VectorXd& z) const {
  const int n = nx();
  Eigen::VectorXd c(neq());
  c.head(n) = z.head(n) - initial_state;
  for (int t = 0; t < horizon_n - 1; ++t) {
    c.segment(n + t * n, n) =
        z.segment(x_index(t + 1), n) -
        dynamics->step(z.segment(x_index(t), n), z[u_index(t)], z[h_index(t)]);
  }
  return c;
}

Eigen::MatrixXd Transcription::constraint_jacobian(const Eigen::VectorXd& z) const {
  const int n = nx();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(neq(), nz());
  J.topLeftCorner(n, n).setIdentity();
  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd B(n), C(n);
  for (int t = 0; t < horizon_n - 1; ++t) {
    dynamics->jacobians(z.segment(x_index(t), n), z[u_index(t)], z[h_index(t)], A, B, C);
    const int row = n + t * n;
    J.block(row, x_index(t + 1), n, n).setIdentity();
    J.block(row, x_index(t), n, n) = -A;
    J.block(row, u_index(t), n, 1) = -B;
    J.block(row, h_index(t), n, 1) = -C;
  }
  return J;
}

namespace {

Eigen::VectorXd clamp_box(const Eigen::VectorXd& z, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi) {
  return z.cwiseMax(lo).cwiseMin(hi);
}

Eigen::VectorXd default_guess(const Transcription& tr, const Eigen::VectorXd& lo,
                              const Eigen::VectorXd& hi) {
  const int n = tr.nx();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(tr.nz());
  for (int t = 0; t < tr.horizon_n; ++t) {
    const double s = (tr.horizon_n > 1) ? static_cast<double>(t) / (tr.horizon_n - 1) : 0.0;
    z.segment(tr.x_index(t), n) = (1.0 - s) * tr.initial_state + s * tr.target_state;
  }
  for (int t = 0; t < tr.horizon_n - 1; ++t) {
    z[tr.u_index(t)] = 0.0;
    z[tr.h_index(t)] = 0.5 * (tr.h_lo + tr.h_hi);
  }
  return clamp_box(z, lo, hi);
}

// rho * J^T J accumulated stage-block-wise (J couples adjacent stages only).
void add_scaled_jtj(const Transcription& tr, const Eigen::MatrixXd& J, double rho,
                    Eigen::MatrixXd& H) {
  const int n = tr.nx();
  // Initial pin: identity block on x_0.
  for (int i = 0; i < n; ++i) H(i, i) += rho;
  const int m = 2 * n + 2;
  Eigen::MatrixXd L(n, m);
  std::vector<int> cols(static_cast<std::size_t>(m));
  for (int t = 0; t < tr.horizon_n - 1; ++t) {
    const int row = n + t * n;
    for (int i = 0; i < n; ++i) {
      cols[static_cast<std::size_t>(i)] = tr.x_index(t) + i;
      cols[static_cast<std::size_t>(n + 2 + i)] = tr.x_index(t + 1) + i;
    }
    cols[static_cast<std::size_t>(n)] = tr.u_index(t);
    cols[static_cast<std::size_t>(n + 1)] = tr.h_index(t);
    for (int i = 0; i < m; ++i) L.col(i) = J.block(row, cols[static_cast<std::size_t>(i)], n, 1);
    const Eigen::MatrixXd LtL = rho * (L.transpose() * L);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        H(cols[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]) += LtL(a, b);
      }
    }
  }
}

}  // namespace

double kkt_residual_norm(const Transcription& tr, const Eigen::VectorXd& z,
                         const Eigen::VectorXd& lambda, Eigen::VectorXd* bound_mult,
                         Eigen::VectorXd* stationarity) {
  Eigen::VectorXd lo, hi;
  tr.box_bounds(lo, hi);
  Eigen::VectorXd grad;
  tr.cost_derivatives(z, grad, nullptr);
  const Eigen::MatrixXd J = tr.constraint_jacobian(z);
  const Eigen::VectorXd c = tr.constraints(z);
  const Eigen::VectorXd gL = grad + J.transpose() * lambda;

  const double act_tol = 1e-9;
  double crit = 0.0;
  if (bound_mult) *bound_mult = Eigen::VectorXd::Zero(tr.nz());
  for (int i = 0; i < tr.nz(); ++i) {
    const double pg = z[i] - std::min(std::max(z[i] - gL[i], lo[i]), hi[i]);
    crit = std::max(crit, std::abs(pg));
    if (bound_mult) {
      const bool at_lo = std::isfinite(lo[i]) && z[i] <= lo[i] + act_tol;
      const bool at_hi = std::isfinite(hi[i]) && z[i] >= hi[i] - act_tol;
      if (at_lo || at_hi) (*bound_mult)[i] = -gL[i];
    }
  }
  if (stationarity) *stationarity = gL;
  double feas = c.size() ? c.cwiseAbs().maxCoeff() : 0.0;
  for (int i = 0; i < tr.nz(); ++i) {
    if (std::isfinite(lo[i])) feas = std::max(feas, lo[i] - z[i]);
    if (std::isfinite(hi[i])) feas = std::max(feas, z[i] - hi[i]);
  }
  return std::max(crit, feas);
}

NlpSolution solve_nlp(const Transcription& tr, const NlpSolution* warm_start,
                      const SolveOptions& opts) {
  const int nz = tr.nz(), neq = tr.neq();
  Eigen::VectorXd lo, hi;
  tr.box_bounds(lo, hi);

  Eigen::VectorXd z = (warm_start && warm_start->z.size() == nz)
                          ? clamp_box(warm_start->z, lo, hi)
                          : default_guess(tr, lo, hi);
  Eigen::VectorXd lambda = (warm_start && warm_start->lambda.size() == neq)
                               ? warm_start->lambda
                               : Eigen::VectorXd::Zero(neq);
  if (!z.allFinite()) throw std::invalid_argument("solve_nlp: non-finite initial guess");

  double rho = opts.penalty_init;
  double reg = opts.reg_init;
  double omega = std::max(1e-2, opts.kkt_tol);
  int total_inner = 0;
  NlpSolution out;

  Eigen::VectorXd grad, c, gL;
  Eigen::MatrixXd Hcost, J;

  auto al_value = [&](const Eigen::VectorXd& zz) {
    const Eigen::VectorXd cc = tr.constraints(zz);
    return tr.cost(zz) + lambda.dot(cc) + 0.5 * rho * cc.squaredNorm();
  };

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    // Inner: box-projected regularized Newton on the augmented Lagrangian.
    const int inner_cap = 200;
    for (int inner = 0; inner < inner_cap && total_inner < opts.max_inner_total; ++inner) {
      tr.cost_derivatives(z, grad, &Hcost);
      c = tr.constraints(z);
      J = tr.constraint_jacobian(z);
      gL = grad + J.transpose() * (lambda + rho * c);

      double crit = 0.0;
      for (int i = 0; i < nz; ++i) {
        const double pg = z[i] - std::min(std::max(z[i] - gL[i], lo[i]), hi[i]);
        crit = std::max(crit, std::abs(pg));
      }
      if (crit <= omega) break;

      // Active coordinates stay pinned for this step.
      std::vector<int> free;
      free.reserve(static_cast<std::size_t>(nz));
      for (int i = 0; i < nz; ++i) {
        const bool at_lo = z[i] <= lo[i] + 1e-12 && gL[i] > 0.0;
        const bool at_hi = z[i] >= hi[i] - 1e-12 && gL[i] < 0.0;
        if (!(at_lo || at_hi)) free.push_back(i);
      }
      Eigen::MatrixXd HAL = Hcost;
      add_scaled_jtj(tr, J, rho, HAL);

      const int nf = static_cast<int>(free.size());
      Eigen::MatrixXd Hff(nf, nf);
      Eigen::VectorXd gf(nf);
      for (int a = 0; a < nf; ++a) {
        gf[a] = gL[free[static_cast<std::size_t>(a)]];
        for (int b = 0; b < nf; ++b) {
          Hff(a, b) = HAL(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
        }
      }

      Eigen::VectorXd d = Eigen::VectorXd::Zero(nz);
      bool solved = false;
      for (int attempt = 0; attempt < 60 && !solved; ++attempt) {
        Eigen::MatrixXd K = Hff;
        K.diagonal().array() += reg;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
        if (ldlt.info() == Eigen::Success) {
          const Eigen::VectorXd df = ldlt.solve(-gf);
          if (df.allFinite() && gf.dot(df) < 0.0) {
            for (int a = 0; a < nf; ++a) d[free[static_cast<std::size_t>(a)]] = df[a];
            solved = true;
            break;
          }
        }
        reg = std::min(reg * 10.0, 1e14);
      }
      if (!solved) break;

      const double m0 = al_value(z);
      bool accepted = false;
      double alpha = 1.0;
      Eigen::VectorXd z_new;
      for (int ls = 0; ls < 40; ++ls) {
        z_new = clamp_box(z + alpha * d, lo, hi);
        const Eigen::VectorXd s = z_new - z;
        if (s.cwiseAbs().maxCoeff() < 1e-16) break;
        const double m1 = al_value(z_new);
        const double slope = gL.dot(s);
        if (std::isfinite(m1) && m1 <= m0 + 1e-4 * slope) {
          const double pred = -(slope + 0.5 * s.dot(HAL.selfadjointView<Eigen::Lower>() * s));
          const double ratio = (pred > 0.0) ? (m0 - m1) / pred : 1.0;
          if (ratio > 0.75) {
            reg = std::max(reg * 0.25, 1e-12);
          } else if (ratio < 0.1) {
            reg = std::min(reg * 4.0, 1e14);
          }
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        reg = std::min(reg * 100.0, 1e14);
        if (reg >= 1e14) break;
        continue;
      }
      z = z_new;
      ++total_inner;
    }

    c = tr.constraints(z);
    const Eigen::VectorXd lambda_hat = lambda + rho * c;
    const double kkt = kkt_residual_norm(tr, z, lambda_hat);
    const double feas = c.size() ? c.cwiseAbs().maxCoeff() : 0.0;
    if (opts.verbose) {
      std::printf("[al] outer %d rho %.1e feas %.2e kkt %.2e inner %d\n", outer, rho, feas, kkt,
                  total_inner);
    }
    if (kkt <= opts.kkt_tol) {
      lambda = lambda_hat;
      out.converged = true;
      break;
    }
    if (total_inner >= opts.max_inner_total) break;

    if (feas <= std::max(10.0 * opts.kkt_tol / rho, 1e-14) || feas <= 1e-12) {
      lambda = lambda_hat;
    } else if (feas <= omega * 10.0) {
      lambda = lambda_hat;
      omega = std::max(omega * 0.2, 0.5 * opts.kkt_tol);
    } else {
      rho = std::min(rho * opts.penalty_growth, opts.penalty_max);
      omega = std::max(omega * 0.5, 0.5 * opts.kkt_tol);
    }
  }

  out.z = z;
  out.lambda = lambda;
  out.cost = tr.cost(z);
  out.iterations = total_inner;
  out.kkt_residual = kkt_residual_norm(tr, z, lambda, &out.bound_mult);
  out.converged = out.converged && out.kkt_residual <= opts.kkt_tol;
  return out;
}

// ---------------------------------------------------------------------------
// Glider adapters

namespace {

class GliderStepDynamics final : public DiscreteDynamics {
 public:
  GliderStepDynamics(GliderParams params, ChebSurrogate sw, ChebSurrogate se)
      : params_(params), sw_(std::move(sw)), se_(std::move(se)) {}

  int state_dim() const override { return 7; }
  int w_dim() const override { return 3 * sw_.coeff_count() + 3 * se_.coeff_count(); }

  Eigen::VectorXd step(const Eigen::VectorXd& x, double u, double h) const override {
    std::array<double, 7> s;
    for (int i = 0; i < 7; ++i) s[static_cast<std::size_t>(i)] = x[i];
    const auto n = rk4_step<double>(s, u, h, params_, sw_, se_);
    Eigen::VectorXd out(7);
    for (int i = 0; i < 7; ++i) out[i] = n[static_cast<std::size_t>(i)];
    return out;
  }

  void jacobians(const Eigen::VectorXd& x, double u, double h, Eigen::MatrixXd& A,
                 Eigen::VectorXd& B, Eigen::VectorXd& C) const override {
    Mat7 A7;
    Vec7 B7, C7;
    step_jacobians(GliderState::from_vector(x), u, h, params_, sw_, se_, A7, B7, C7);
    A = A7;
    B = B7;
    C = C7;
  }

  Eigen::MatrixXd w_jacobian(const Eigen::VectorXd& x, double u, double h) const override {
    return step_w_jacobian(GliderState::from_vector(x), u, h, params_, sw_, se_);
  }

  Eigen::MatrixXd lambda_hessian(const Eigen::VectorXd& x, double u, double h,
                                 const Eigen::VectorXd& lambda) const override {
    return step_lambda_hessian(GliderState::from_vector(x), u, h, params_, sw_, se_, Vec7(lambda));
  }

  Eigen::MatrixXd lambda_cross_w(const Eigen::VectorXd& x, double u, double h,
                                 const Eigen::VectorXd& lambda) const override {
    return step_lambda_cross_w(GliderState::from_vector(x), u, h, params_, sw_, se_, Vec7(lambda));
  }

 private:
  GliderParams params_;
  ChebSurrogate sw_, se_;
};

class EnvelopeDensity final : public StageDensity {
 public:
  EnvelopeDensity(GliderParams params, ChebSurrogate sw, ChebSurrogate se)
      : params_(params), sw_(std::move(sw)), se_(std::move(se)) {}

  double density(const Eigen::VectorXd& x, double u, Eigen::VectorXd* grad,
                 Eigen::MatrixXd* hess) const override {
    Eigen::Matrix<double, 8, 1> g;
    Eigen::Matrix<double, 8, 8> H;
    const bool need = grad || hess;
    const double p = envelope_penalty_density(GliderState::from_vector(x), u, params_, sw_, se_,
                                              need ? &g : nullptr, hess ? &H : nullptr);
    if (grad) *grad = g;
    if (hess) *hess = H;
    return p;
  }

 private:
  GliderParams params_;
  ChebSurrogate sw_, se_;
};

}  // namespace

std::shared_ptr<const DiscreteDynamics> make_glider_dynamics(const GliderParams& params,
                                                             const ChebSurrogate& s_w,
                                                             const ChebSurrogate& s_e) {
  return std::make_shared<GliderStepDynamics>(params, s_w, s_e);
}

Transcription build(const OCPProblem& problem, const ChebSurrogate& s_w, const ChebSurrogate& s_e,
                    const GliderParams& params) {
  if (problem.horizon_n < 2) throw std::invalid_argument("build: horizon must be >= 2");
  if ((problem.q_weights.array() < 0.0).any() || problem.r_weight < 0.0 || problem.s_weight < 0.0) {
    throw std::invalid_argument("build: cost weights must be nonnegative");
  }
  Transcription tr;
  tr.dynamics = make_glider_dynamics(params, s_w, s_e);
  tr.horizon_n = problem.horizon_n;
  tr.initial_state = problem.initial_state.to_vector();
  tr.target_state = problem.target_state.to_vector();
  tr.q_weights = problem.q_weights;
  tr.r_weight = problem.r_weight;
  tr.s_weight = problem.s_weight;
  tr.state_bounds = {{3, problem.phi_bounds[0], problem.phi_bounds[1]}};
  tr.u_lo = -problem.rate_bound;
  tr.u_hi = problem.rate_bound;
  tr.h_lo = problem.h_bounds[0];
  tr.h_hi = problem.h_bounds[1];
  tr.penalty_weight = problem.envelope_penalty_weight;
  if (problem.envelope_penalty_weight != 0.0) {
    tr.penalty = std::make_shared<EnvelopeDensity>(params, s_w, s_e);
  }
  return tr;
}

Eigen::VectorXd OCPSolution::to_decision_vector() const {
  const int N = static_cast<int>(states.size());
  Eigen::VectorXd z(7 * N + 2 * (N - 1));
  for (int t = 0; t < N; ++t) z.segment(7 * t, 7) = states[static_cast<std::size_t>(t)].to_vector();
  z.segment(7 * N, N - 1) = controls;
  z.segment(7 * N + (N - 1), N - 1) = timesteps;
  return z;
}

double OCPSolution::max_defect(const Transcription& tr) const {
  const Eigen::VectorXd c = tr.constraints(to_decision_vector());
  return c.tail(c.size() - tr.nx()).cwiseAbs().maxCoeff();
}

OCPSolution solve(const OCPProblem& problem, const ChebSurrogate& s_w, const ChebSurrogate& s_e,
                  const GliderParams& params, const OCPSolution* warm_start,
                  const SolveOptions& opts) {
  const Transcription tr = build(problem, s_w, s_e, params);
  NlpSolution warm;
  const NlpSolution* warm_ptr = nullptr;
  if (warm_start && !warm_start->states.empty() &&
      static_cast<int>(warm_start->states.size()) == problem.horizon_n) {
    warm.z = warm_start->to_decision_vector();
    warm.lambda = warm_start->eq_multipliers;
    warm_ptr = &warm;
  }
  const NlpSolution sol = solve_nlp(tr, warm_ptr, opts);

  OCPSolution out;
  const int N = problem.horizon_n;
  out.states.resize(static_cast<std::size_t>(N));
  for (int t = 0; t < N; ++t) {
    out.states[static_cast<std::size_t>(t)] = GliderState::from_vector(sol.z.segment(7 * t, 7));
  }
  out.controls = sol.z.segment(7 * N, N - 1);
  out.timesteps = sol.z.segment(7 * N + (N - 1), N - 1);
  out.eq_multipliers = sol.lambda;
  out.bound_multipliers = sol.bound_mult;
  out.kkt_residual = sol.kkt_residual;
  out.total_cost = sol.cost;
  out.iterations = sol.iterations;
  out.converged = sol.converged;
  const Vec7 dxn = out.states.back().to_vector() - problem.target_state.to_vector();
  out.terminal_cost = dxn.cwiseProduct(problem.q_weights).dot(dxn);
  return out;
}

std::pair<double, double> evaluate_cost(const OCPSolution& solution, const OCPProblem& problem,
                                        const ChebSurrogate* s_w, const ChebSurrogate* s_e,
                                        const GliderParams& params) {
  const int N = static_cast<int>(solution.states.size());
  double total = 0.0;
  for (int t = 0; t + 1 < N; ++t) {
    const Vec7 dx = solution.states[static_cast<std::size_t>(t)].to_vector() -
                    problem.target_state.to_vector();
    const double u = solution.controls[t];
    const double h = solution.timesteps[t];
    double stage = dx.cwiseProduct(problem.q_weights).dot(dx) + problem.r_weight * u * u;
    if (s_w && s_e && problem.envelope_penalty_weight != 0.0) {
      stage += problem.envelope_penalty_weight *
               envelope_penalty_density(solution.states[static_cast<std::size_t>(t)], u, params,
                                        *s_w, *s_e);
    }
    total += h * stage + problem.s_weight * h * h;
  }
  const Vec7 dxn = solution.states.back().to_vector() - problem.target_state.to_vector();
  const double terminal = dxn.cwiseProduct(problem.q_weights).dot(dxn);
  total += terminal;
  return {total, terminal};
}

}  // namespace glide
