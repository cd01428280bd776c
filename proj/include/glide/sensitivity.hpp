#pragma once

#include <vector>

#include "glide/ocp.hpp"

namespace glide {

/// Sensitivities of a converged OCP solution with respect to the stacked
/// surrogate coefficient vector w (wing C_L/C_D/C_M then elevator, k^2
/// coefficients each, alpha-degree major).
struct SolutionSensitivity {
  std::vector<Eigen::MatrixXd> dx_dw;  // N entries, nx x |w|
  Eigen::MatrixXd du_dw;               // (N-1) x |w|
  Eigen::MatrixXd dh_dw;               // (N-1) x |w|
  std::vector<int> active_set;         // decision indices frozen at a bound
  std::vector<int> dropped_degenerate; // active indices dropped for weak multipliers
};

/// KKT residual vector at a solution: Lagrangian stationarity (bound
/// multipliers folded in), then equality constraint values. Throws if the
/// solution carries no multipliers.
Eigen::VectorXd kkt_residual_vector(const Transcription& tr, const NlpSolution& sol);
Eigen::VectorXd kkt_residual_vector(const OCPSolution& solution, const OCPProblem& problem,
                                    const ChebSurrogate& s_w, const ChebSurrogate& s_e,
                                    const GliderParams& params = {});

/// Implicit differentiation of the frozen-active-set KKT system via a
/// stagewise backward/forward sweep over the block-tridiagonal structure;
/// O(N |w|). Falls back on an error for stages whose pinned coordinates
/// cannot be absorbed by the free stage variables.
SolutionSensitivity solution_sensitivities(const Transcription& tr, const NlpSolution& sol);
SolutionSensitivity solution_sensitivities(const OCPSolution& solution, const OCPProblem& problem,
                                           const ChebSurrogate& s_w, const ChebSurrogate& s_e,
                                           const GliderParams& params = {});

/// Dense assembly of the same KKT system, solved by LU; the verification
/// oracle for the structured path. Guarded to N <= 120.
SolutionSensitivity dense_sensitivities(const Transcription& tr, const NlpSolution& sol);
SolutionSensitivity dense_sensitivities(const OCPSolution& solution, const OCPProblem& problem,
                                        const ChebSurrogate& s_w, const ChebSurrogate& s_e,
                                        const GliderParams& params = {});

/// Strict-complementarity threshold under which an active bound is dropped
/// from the frozen set (with a warning recorded in the result).
inline constexpr double kActiveSlackTol = 1e-8;
inline constexpr double kStrictComplementarityTol = 1e-8;

NlpSolution to_nlp_solution(const OCPSolution& solution);

}  // namespace glide
