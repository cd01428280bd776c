#include "glide/sensitivity.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace glide {
namespace {

struct StageParts {
  std::vector<int> xfree;  // free coordinates of x_t (empty at t = 0)
  std::vector<int> sfree;  // free stage variables: 0 = u_t, 1 = h_t
  Eigen::MatrixXd A;       // nx x nx
  Eigen::MatrixXd Bs;      // nx x 2, columns (B, C)
  Eigen::MatrixXd W;       // nx x nw
  Eigen::MatrixXd H;       // (nx+2)^2 Lagrangian stage Hessian
  Eigen::MatrixXd R;       // (nx+2) x nw linear terms (= -Cross)
};

struct Parts {
  int N = 0, nx = 0, nw = 0;
  std::vector<StageParts> stages;
  Eigen::MatrixXd Hf;
  std::vector<char> pinned;  // per decision index
  std::vector<int> active_set, dropped;
};

Parts assemble(const Transcription& tr, const NlpSolution& sol) {
  if (sol.lambda.size() != tr.neq()) {
    throw std::invalid_argument("sensitivity: solution carries no equality multipliers");
  }
  if (sol.bound_mult.size() != tr.nz()) {
    throw std::invalid_argument("sensitivity: solution carries no bound multipliers");
  }
  Parts P;
  P.N = tr.horizon_n;
  P.nx = tr.nx();
  P.nw = tr.dynamics->w_dim();

  Eigen::VectorXd lo, hi;
  tr.box_bounds(lo, hi);
  P.pinned.assign(static_cast<std::size_t>(tr.nz()), 0);
  for (int i = 0; i < tr.nz(); ++i) {
    const bool at_lo = std::isfinite(lo[i]) && sol.z[i] - lo[i] < kActiveSlackTol;
    const bool at_hi = std::isfinite(hi[i]) && hi[i] - sol.z[i] < kActiveSlackTol;
    if (!(at_lo || at_hi)) continue;
    if (std::abs(sol.bound_mult[i]) <= kStrictComplementarityTol) {
      // Degenerate active bound: drop from the frozen set, record a warning.
      P.dropped.push_back(i);
      continue;
    }
    P.pinned[static_cast<std::size_t>(i)] = 1;
    P.active_set.push_back(i);
  }

  Eigen::VectorXd grad;
  Eigen::MatrixXd Hcost;
  tr.cost_derivatives(sol.z, grad, &Hcost);

  const int nx = P.nx;
  P.stages.resize(static_cast<std::size_t>(P.N - 1));
  for (int t = 0; t < P.N - 1; ++t) {
    StageParts& st = P.stages[static_cast<std::size_t>(t)];
    const Eigen::VectorXd x = sol.z.segment(tr.x_index(t), nx);
    const double u = sol.z[tr.u_index(t)];
    const double h = sol.z[tr.h_index(t)];
    const Eigen::VectorXd lambda_t = sol.lambda.segment(nx + t * nx, nx);

    Eigen::MatrixXd A;
    Eigen::VectorXd B, C;
    tr.dynamics->jacobians(x, u, h, A, B, C);
    st.A = A;
    st.Bs.resize(nx, 2);
    st.Bs.col(0) = B;
    st.Bs.col(1) = C;
    st.W = tr.dynamics->w_jacobian(x, u, h);

    // Stage Hessian of the Lagrangian: cost block minus the lambda-contracted
    // curvature of the step map (the defect is x_{t+1} - step).
    st.H.resize(nx + 2, nx + 2);
    const int xi = tr.x_index(t), ui = tr.u_index(t), hi_i = tr.h_index(t);
    st.H.topLeftCorner(nx, nx) = Hcost.block(xi, xi, nx, nx);
    st.H.block(0, nx, nx, 1) = Hcost.block(xi, ui, nx, 1);
    st.H.block(nx, 0, 1, nx) = Hcost.block(ui, xi, 1, nx);
    st.H.block(0, nx + 1, nx, 1) = Hcost.block(xi, hi_i, nx, 1);
    st.H.block(nx + 1, 0, 1, nx) = Hcost.block(hi_i, xi, 1, nx);
    st.H(nx, nx) = Hcost(ui, ui);
    st.H(nx, nx + 1) = Hcost(ui, hi_i);
    st.H(nx + 1, nx) = Hcost(hi_i, ui);
    st.H(nx + 1, nx + 1) = Hcost(hi_i, hi_i);
    st.H -= tr.dynamics->lambda_hessian(x, u, h, lambda_t);

    st.R = -tr.dynamics->lambda_cross_w(x, u, h, lambda_t);

    if (t > 0) {
      for (int i = 0; i < nx; ++i) {
        if (!P.pinned[static_cast<std::size_t>(tr.x_index(t) + i)]) st.xfree.push_back(i);
      }
    }
    if (!P.pinned[static_cast<std::size_t>(ui)]) st.sfree.push_back(0);
    if (!P.pinned[static_cast<std::size_t>(hi_i)]) st.sfree.push_back(1);
  }
  const int xn = tr.x_index(P.N - 1);
  P.Hf = Hcost.block(xn, xn, nx, nx);
  return P;
}

std::vector<int> terminal_free(const Transcription& tr, const Parts& P) {
  std::vector<int> f;
  for (int i = 0; i < P.nx; ++i) {
    if (!P.pinned[static_cast<std::size_t>(tr.x_index(P.N - 1) + i)]) f.push_back(i);
  }
  return f;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& M, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), M.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = M.row(rows[r]);
  return out;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& M, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = M(rows[r], cols[c]);
    }
  }
  return out;
}

SolutionSensitivity package(const Transcription& tr, const Parts& P,
                            const std::vector<Eigen::MatrixXd>& dx,
                            const Eigen::MatrixXd& du, const Eigen::MatrixXd& dh) {
  SolutionSensitivity out;
  out.dx_dw = dx;
  out.du_dw = du;
  out.dh_dw = dh;
  out.active_set = P.active_set;
  out.dropped_degenerate = P.dropped;
  (void)tr;
  return out;
}

}  // namespace

Eigen::VectorXd kkt_residual_vector(const Transcription& tr, const NlpSolution& sol) {
  if (sol.lambda.size() != tr.neq()) {
    throw std::invalid_argument("kkt_residual: solution carries no multipliers");
  }
  Eigen::VectorXd grad;
  tr.cost_derivatives(sol.z, grad, nullptr);
  const Eigen::MatrixXd J = tr.constraint_jacobian(sol.z);
  Eigen::VectorXd gL = grad + J.transpose() * sol.lambda;
  if (sol.bound_mult.size() == tr.nz()) gL += sol.bound_mult;
  const Eigen::VectorXd c = tr.constraints(sol.z);
  Eigen::VectorXd out(gL.size() + c.size());
  out << gL, c;
  return out;
}

SolutionSensitivity dense_sensitivities(const Transcription& tr, const NlpSolution& sol) {
  if (tr.horizon_n > 120) {
    throw std::invalid_argument("dense_sensitivities: horizon beyond the N = 120 guard");
  }
  const Parts P = assemble(tr, sol);
  const int nz = tr.nz(), neq = tr.neq(), na = static_cast<int>(P.active_set.size());
  const int dim = nz + neq + na;
  const int nx = P.nx;

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(dim, P.nw);

  // Hessian block and stationarity RHS.
  for (int t = 0; t < P.N - 1; ++t) {
    const StageParts& st = P.stages[static_cast<std::size_t>(t)];
    std::array<int, 2> sidx{tr.u_index(t), tr.h_index(t)};
    std::vector<int> idx(static_cast<std::size_t>(nx + 2));
    for (int i = 0; i < nx; ++i) idx[static_cast<std::size_t>(i)] = tr.x_index(t) + i;
    idx[static_cast<std::size_t>(nx)] = sidx[0];
    idx[static_cast<std::size_t>(nx + 1)] = sidx[1];
    for (int a = 0; a < nx + 2; ++a) {
      rhs.row(idx[static_cast<std::size_t>(a)]) -= st.R.row(a);  // rhs = +Cross = -R
      for (int b = 0; b < nx + 2; ++b) {
        K(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]) += st.H(a, b);
      }
    }
  }
  const int xn = tr.x_index(P.N - 1);
  K.block(xn, xn, nx, nx) += P.Hf;

  // Equality Jacobian blocks.
  const Eigen::MatrixXd J = tr.constraint_jacobian(sol.z);
  K.block(nz, 0, neq, nz) = J;
  K.block(0, nz, nz, neq) = J.transpose();
  for (int t = 0; t < P.N - 1; ++t) {
    rhs.block(nz + nx + t * nx, 0, nx, P.nw) = P.stages[static_cast<std::size_t>(t)].W;
  }

  // Active bound rows.
  for (int a = 0; a < na; ++a) {
    K(nz + neq + a, P.active_set[static_cast<std::size_t>(a)]) = 1.0;
    K(P.active_set[static_cast<std::size_t>(a)], nz + neq + a) = 1.0;
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
  const Eigen::MatrixXd sol_mat = lu.solve(rhs);
  if (!sol_mat.allFinite()) {
    throw std::runtime_error("dense_sensitivities: singular KKT system");
  }

  std::vector<Eigen::MatrixXd> dx(static_cast<std::size_t>(P.N));
  for (int t = 0; t < P.N; ++t) {
    dx[static_cast<std::size_t>(t)] = sol_mat.block(tr.x_index(t), 0, nx, P.nw);
  }
  Eigen::MatrixXd du(P.N - 1, P.nw), dh(P.N - 1, P.nw);
  for (int t = 0; t < P.N - 1; ++t) {
    du.row(t) = sol_mat.row(tr.u_index(t));
    dh.row(t) = sol_mat.row(tr.h_index(t));
  }
  return package(tr, P, dx, du, dh);
}

SolutionSensitivity solution_sensitivities(const Transcription& tr, const NlpSolution& sol) {
  const Parts P = assemble(tr, sol);
  const int nx = P.nx, nw = P.nw, N = P.N;

  // Backward sweep: value function over the free coordinates of x_t,
  // V_t(dx) = 1/2 dx' Pmat dx + dx' pmat[:, j] per w column j.
  std::vector<int> Ffree = terminal_free(tr, P);
  Eigen::MatrixXd Pmat = submatrix(P.Hf, Ffree, Ffree);
  Eigen::MatrixXd pmat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(Ffree.size()), nw);

  struct Gains {
    Eigen::MatrixXd S;   // m x n_t
    Eigen::MatrixXd s0;  // m x nw
  };
  std::vector<Gains> gains(static_cast<std::size_t>(N - 1));

  for (int t = N - 2; t >= 0; --t) {
    const StageParts& st = P.stages[static_cast<std::size_t>(t)];
    const std::vector<int>& xf = st.xfree;  // empty at t = 0
    const int m = static_cast<int>(st.sfree.size());
    const std::vector<int>& Fn = Ffree;  // free coords of x_{t+1}
    std::vector<int> Pn;                 // pinned coords of x_{t+1}
    {
      std::vector<char> isfree(static_cast<std::size_t>(nx), 0);
      for (int i : Fn) isfree[static_cast<std::size_t>(i)] = 1;
      for (int i = 0; i < nx; ++i) {
        if (!isfree[static_cast<std::size_t>(i)]) Pn.push_back(i);
      }
    }
    const int np = static_cast<int>(Pn.size());
    const int n_t = static_cast<int>(xf.size());

    std::vector<int> scol;  // columns of H/R for the free stage variables
    for (int s : st.sfree) scol.push_back(nx + s);

    const Eigen::MatrixXd Qxx = submatrix(st.H, xf, xf);
    const Eigen::MatrixXd Qxs = submatrix(st.H, xf, scol);
    const Eigen::MatrixXd Qss = submatrix(st.H, scol, scol);
    const Eigen::MatrixXd Rx = rows_of(st.R, xf);
    const Eigen::MatrixXd Rs = rows_of(st.R, scol);

    std::vector<int> sfree_cols = st.sfree;
    Eigen::MatrixXd Bfull(nx, m);
    for (int c = 0; c < m; ++c) Bfull.col(c) = st.Bs.col(sfree_cols[static_cast<std::size_t>(c)]);

    const Eigen::MatrixXd A_F = submatrix(st.A, Fn, xf);
    const Eigen::MatrixXd B_F = rows_of(Bfull, Fn);
    const Eigen::MatrixXd W_F = rows_of(st.W, Fn);
    const Eigen::MatrixXd A_P = submatrix(st.A, Pn, xf);
    const Eigen::MatrixXd B_P = rows_of(Bfull, Pn);
    const Eigen::MatrixXd W_P = rows_of(st.W, Pn);

    const Eigen::MatrixXd Fm = Qss + B_F.transpose() * Pmat * B_F;
    const Eigen::MatrixXd G = Qxs.transpose() + B_F.transpose() * Pmat * A_F;
    const Eigen::MatrixXd g = Rs + B_F.transpose() * (pmat + Pmat * W_F);

    Eigen::MatrixXd M(m + np, m + np);
    M.setZero();
    M.topLeftCorner(m, m) = Fm;
    M.topRightCorner(m, np) = B_P.transpose();
    M.bottomLeftCorner(np, m) = B_P;
    Eigen::MatrixXd rhs_dx(m + np, n_t), rhs_c(m + np, nw);
    rhs_dx.topRows(m) = G;
    rhs_dx.bottomRows(np) = A_P;
    rhs_c.topRows(m) = g;
    rhs_c.bottomRows(np) = W_P;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) {
      throw std::runtime_error(
          "solution_sensitivities: singular reduced stage system (pinned coordinates not "
          "absorbable); use dense_sensitivities");
    }
    const Eigen::MatrixXd SU = -lu.solve(rhs_dx);
    const Eigen::MatrixXd su0 = -lu.solve(rhs_c);
    const Eigen::MatrixXd S = SU.topRows(m);
    const Eigen::MatrixXd U = SU.bottomRows(np);
    const Eigen::MatrixXd s0 = su0.topRows(m);
    const Eigen::MatrixXd u0 = su0.bottomRows(np);

    gains[static_cast<std::size_t>(t)] = {S, s0};

    Eigen::MatrixXd Pnew = Qxx + Qxs * S + A_F.transpose() * Pmat * (A_F + B_F * S) +
                           A_P.transpose() * U;
    Eigen::MatrixXd pnew = Rx + Qxs * s0 +
                           A_F.transpose() * (Pmat * (B_F * s0 + W_F) + pmat) +
                           A_P.transpose() * u0;
    Pmat = 0.5 * (Pnew + Pnew.transpose());
    pmat = pnew;
    Ffree = xf;
  }

  // Forward pass.
  std::vector<Eigen::MatrixXd> dx(static_cast<std::size_t>(N));
  Eigen::MatrixXd du = Eigen::MatrixXd::Zero(N - 1, nw);
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(N - 1, nw);
  dx[0] = Eigen::MatrixXd::Zero(nx, nw);
  Eigen::MatrixXd dxF(0, nw);  // free coords of dx_t
  for (int t = 0; t < N - 1; ++t) {
    const StageParts& st = P.stages[static_cast<std::size_t>(t)];
    const int m = static_cast<int>(st.sfree.size());
    const Gains& gn = gains[static_cast<std::size_t>(t)];
    Eigen::MatrixXd s = gn.s0;
    if (dxF.rows() > 0 && m > 0) s += gn.S * dxF;
    for (int c = 0; c < m; ++c) {
      if (st.sfree[static_cast<std::size_t>(c)] == 0) {
        du.row(t) = s.row(c);
      } else {
        dh.row(t) = s.row(c);
      }
    }
    // Next free state coordinates.
    std::vector<int> Fn;
    if (t + 1 == N - 1) {
      Fn = terminal_free(tr, P);
    } else {
      Fn = P.stages[static_cast<std::size_t>(t + 1)].xfree;
    }
    Eigen::MatrixXd Bfull(nx, m);
    for (int c = 0; c < m; ++c) Bfull.col(c) = st.Bs.col(st.sfree[static_cast<std::size_t>(c)]);
    const Eigen::MatrixXd A_F = submatrix(st.A, Fn, st.xfree);
    const Eigen::MatrixXd B_F = rows_of(Bfull, Fn);
    const Eigen::MatrixXd W_F = rows_of(st.W, Fn);
    Eigen::MatrixXd nxt = W_F;
    if (dxF.rows() > 0) nxt += A_F * dxF;
    if (m > 0) nxt += B_F * s;
    dx[static_cast<std::size_t>(t + 1)] = Eigen::MatrixXd::Zero(nx, nw);
    for (std::size_t r = 0; r < Fn.size(); ++r) {
      dx[static_cast<std::size_t>(t + 1)].row(Fn[r]) = nxt.row(static_cast<Eigen::Index>(r));
    }
    dxF = nxt;
  }
  return package(tr, P, dx, du, dh);
}

NlpSolution to_nlp_solution(const OCPSolution& solution) {
  NlpSolution s;
  s.z = solution.to_decision_vector();
  s.lambda = solution.eq_multipliers;
  s.bound_mult = solution.bound_multipliers;
  s.kkt_residual = solution.kkt_residual;
  s.cost = solution.total_cost;
  s.converged = solution.converged;
  return s;
}

Eigen::VectorXd kkt_residual_vector(const OCPSolution& solution, const OCPProblem& problem,
                                    const ChebSurrogate& s_w, const ChebSurrogate& s_e,
                                    const GliderParams& params) {
  return kkt_residual_vector(build(problem, s_w, s_e, params), to_nlp_solution(solution));
}

SolutionSensitivity solution_sensitivities(const OCPSolution& solution, const OCPProblem& problem,
                                           const ChebSurrogate& s_w, const ChebSurrogate& s_e,
                                           const GliderParams& params) {
  return solution_sensitivities(build(problem, s_w, s_e, params), to_nlp_solution(solution));
}

SolutionSensitivity dense_sensitivities(const OCPSolution& solution, const OCPProblem& problem,
                                        const ChebSurrogate& s_w, const ChebSurrogate& s_e,
                                        const GliderParams& params) {
  return dense_sensitivities(build(problem, s_w, s_e, params), to_nlp_solution(solution));
}

}  // namespace glide
