#pragma once

#include <Eigen/Core>
#include <limits>
#include <memory>
#include <vector>

#include "glide/dynamics.hpp"

namespace glide {

/// Discrete dynamics with a scalar control and a per-step length, plus the
/// exact derivative surface the transcription and the solution-sensitivity
/// machinery consume. w is an optional vector of model parameters the step
/// map depends on (the stacked surrogate coefficients for the glider).
class DiscreteDynamics {
 public:
  virtual ~DiscreteDynamics() = default;
  virtual int state_dim() const = 0;
  virtual int w_dim() const { return 0; }
  virtual Eigen::VectorXd step(const Eigen::VectorXd& x, double u, double h) const = 0;
  virtual void jacobians(const Eigen::VectorXd& x, double u, double h, Eigen::MatrixXd& A,
                         Eigen::VectorXd& B, Eigen::VectorXd& C) const = 0;
  virtual Eigen::MatrixXd w_jacobian(const Eigen::VectorXd& x, double u, double h) const;
  /// sum_i lambda_i Hessian_i over (x, u, h); exact, (nx+2)^2.
  virtual Eigen::MatrixXd lambda_hessian(const Eigen::VectorXd& x, double u, double h,
                                         const Eigen::VectorXd& lambda) const;
  /// d^2(lambda^T step)/d(x,u,h)d(w); exact, (nx+2) x w_dim.
  virtual Eigen::MatrixXd lambda_cross_w(const Eigen::VectorXd& x, double u, double h,
                                         const Eigen::VectorXd& lambda) const;
};

/// Smooth extra stage-cost density p(x, u); enters the cost as
/// weight * h_t * p(x_t, u_t). Derivatives are over (x, u).
class StageDensity {
 public:
  virtual ~StageDensity() = default;
  virtual double density(const Eigen::VectorXd& x, double u, Eigen::VectorXd* grad,
                         Eigen::MatrixXd* hess) const = 0;
};

struct StateBound {
  int index;
  double lo, hi;
};

/// Direct transcription of the finite-horizon problem. Decision vector
/// z = [x_0..x_{N-1}, u_0..u_{N-2}, h_0..h_{N-2}]; equality constraints are
/// the initial-state pin followed by the N-1 dynamics defects
/// x_{t+1} - f(x_t, u_t, h_t).
struct Transcription {
  std::shared_ptr<const DiscreteDynamics> dynamics;
  int horizon_n = 0;
  Eigen::VectorXd initial_state, target_state;
  Eigen::VectorXd q_weights;
  double r_weight = 0.0, s_weight = 0.0;
  std::vector<StateBound> state_bounds;
  double u_lo = -std::numeric_limits<double>::infinity();
  double u_hi = std::numeric_limits<double>::infinity();
  double h_lo = 1e-3, h_hi = 1.0;
  double penalty_weight = 0.0;
  std::shared_ptr<const StageDensity> penalty;

  int nx() const { return static_cast<int>(q_weights.size()); }
  int nz() const { return horizon_n * nx() + 2 * (horizon_n - 1); }
  int neq() const { return horizon_n * nx(); }  // pin + (N-1) defects
  int x_index(int t) const { return t * nx(); }
  int u_index(int t) const { return horizon_n * nx() + t; }
  int h_index(int t) const { return horizon_n * nx() + (horizon_n - 1) + t; }

  /// Elementwise bounds over the decision vector (infinite where free).
  void box_bounds(Eigen::VectorXd& lo, Eigen::VectorXd& hi) const;

  double cost(const Eigen::VectorXd& z) const;
  void cost_derivatives(const Eigen::VectorXd& z, Eigen::VectorXd& grad,
                        Eigen::MatrixXd* hess) const;
  Eigen::VectorXd constraints(const Eigen::VectorXd& z) const;
  Eigen::MatrixXd constraint_jacobian(const Eigen::VectorXd& z) const;
};

struct SolveOptions {
  int max_outer = 50;
  int max_inner_total = 4000;
  double kkt_tol = 1e-6;
  double penalty_init = 1e2;
  double penalty_growth = 10.0;
  double penalty_max = 1e12;
  double reg_init = 1e-4;
  bool verbose = false;
};

struct NlpSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd lambda;      // equality multipliers (pin + defects)
  Eigen::VectorXd bound_mult;  // signed; nu_i with grad L + sum nu_i e_i = 0 at active coords
  double kkt_residual = std::numeric_limits<double>::infinity();
  double cost = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Augmented-Lagrangian outer loop with a box-projected, Levenberg-regularized
/// Newton inner minimizer (Gauss-Newton treatment of constraint curvature).
NlpSolution solve_nlp(const Transcription& tr, const NlpSolution* warm_start,
                      const SolveOptions& opts = {});

/// Projected-gradient criticality + feasibility infinity norm; also recovers
/// the signed bound multipliers when requested.
double kkt_residual_norm(const Transcription& tr, const Eigen::VectorXd& z,
                         const Eigen::VectorXd& lambda, Eigen::VectorXd* bound_mult = nullptr,
                         Eigen::VectorXd* stationarity = nullptr);

// ---------------------------------------------------------------------------
// Glider-level problem per the task presets.

struct OCPProblem {
  int horizon_n = 40;
  GliderState initial_state, target_state;
  Vec7 q_weights = Vec7::Zero();
  double r_weight = 1e-3;
  double s_weight = 1e-2;
  std::array<double, 2> phi_bounds{-M_PI / 3.0, M_PI / 8.0};
  double rate_bound = 13.0;
  std::array<double, 2> h_bounds{0.005, 0.1};
  double envelope_penalty_weight = 1e2;
};

struct OCPSolution {
  std::vector<GliderState> states;
  Eigen::VectorXd controls;   // N-1
  Eigen::VectorXd timesteps;  // N-1
  Eigen::VectorXd eq_multipliers;
  Eigen::VectorXd bound_multipliers;
  double kkt_residual = std::numeric_limits<double>::infinity();
  double total_cost = std::numeric_limits<double>::infinity();
  double terminal_cost = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;

  Eigen::VectorXd to_decision_vector() const;
  /// Max dynamics defect of the stored trajectory under the given model.
  double max_defect(const Transcription& tr) const;
};

/// Glider step dynamics behind the DiscreteDynamics interface.
std::shared_ptr<const DiscreteDynamics> make_glider_dynamics(const GliderParams& params,
                                                             const ChebSurrogate& s_w,
                                                             const ChebSurrogate& s_e);

Transcription build(const OCPProblem& problem, const ChebSurrogate& s_w, const ChebSurrogate& s_e,
                    const GliderParams& params = {});

OCPSolution solve(const OCPProblem& problem, const ChebSurrogate& s_w, const ChebSurrogate& s_e,
                  const GliderParams& params = {}, const OCPSolution* warm_start = nullptr,
                  const SolveOptions& opts = {});

/// Recomputes (total_cost, terminal_cost) from the stored trajectory.
/// Surrogates are needed only when the problem carries an envelope penalty.
std::pair<double, double> evaluate_cost(const OCPSolution& solution, const OCPProblem& problem,
                                        const ChebSurrogate* s_w = nullptr,
                                        const ChebSurrogate* s_e = nullptr,
                                        const GliderParams& params = {});

}  // namespace glide
