#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "glide/aero.hpp"

namespace glide {

struct FitCache;

/// Local bivariate Chebyshev approximation of an aerodynamic model at a
/// fixed design. Channels ordered (C_L, C_D, C_M); per channel a k x k
/// coefficient matrix indexed (alpha degree, log10-Re degree). Flattened
/// coefficient vectors are row-major, i.e. alpha-degree major.
struct ChebSurrogate {
  int degree_k = 0;
  int node_count_m = 0;
  Envelope envelope;
  std::array<Eigen::MatrixXd, 3> coeffs;
  std::array<double, 3> rms_residual{0.0, 0.0, 0.0};
  std::uint64_t design_hash = 0;
  std::shared_ptr<const FitCache> cache;

  int coeff_count() const { return degree_k * degree_k; }
};

/// Chebyshev-Gauss points mapped to [lo, hi], ascending.
std::vector<double> chebyshev_nodes(int m, double lo, double hi);

std::uint64_t design_hash_of(const KulfanAirfoil& airfoil);

/// Least-squares tensor-Chebyshev fit on an m x m node grid over
/// (alpha, log10 Re). Solved by column-pivoted QR; throws on rank
/// deficiency. m >= degree_k required.
ChebSurrogate fit(const AeroModel& model, const KulfanAirfoil& airfoil, const Envelope& envelope,
                  int degree_k, int m);

struct ChebEval {
  std::array<double, 3> value{};
  std::array<double, 3> d_alpha{};
  std::array<double, 3> d_logre{};
  std::array<double, 3> d2_alpha_alpha{};
  std::array<double, 3> d2_alpha_logre{};
  std::array<double, 3> d2_logre_logre{};
};

/// Clenshaw evaluation with derivatives from the Chebyshev derivative
/// recurrence. Out-of-envelope queries throw unless clamp is set, in which
/// case they are evaluated at the nearest envelope point.
ChebEval eval(const ChebSurrogate& s, double alpha, double logre, bool clamp = false);

/// Sensitivity of the flattened fit coefficients to the design parameters,
/// (3 k^2) x 18 with channel-major rows [C_L; C_D; C_M]. Reuses the fit's
/// QR factorization; throws if the surrogate was fit for a different design.
Eigen::MatrixXd fit_jacobian(const AeroModel& model, const KulfanAirfoil& airfoil,
                             const ChebSurrogate& s);

std::string to_json_text(const ChebSurrogate& s);
ChebSurrogate surrogate_from_json_text(const std::string& text);

namespace detail {

/// Chebyshev polynomial values T_0..T_{k-1} at x by the three-term recurrence.
template <typename T>
void cheb_values(int k, const T& x, std::vector<T>& out) {
  out.resize(static_cast<std::size_t>(k));
  if (k > 0) out[0] = T(1.0);
  if (k > 1) out[1] = x;
  for (int j = 2; j < k; ++j) {
    out[static_cast<std::size_t>(j)] =
        2.0 * x * out[static_cast<std::size_t>(j - 1)] - out[static_cast<std::size_t>(j - 2)];
  }
}

template <typename T>
T clenshaw(const Eigen::Ref<const Eigen::VectorXd>& c, const T& x) {
  T b1(0.0), b2(0.0);
  for (Eigen::Index j = c.size() - 1; j >= 1; --j) {
    T b0 = 2.0 * x * b1 - b2 + c[j];
    b2 = b1;
    b1 = b0;
  }
  return x * b1 - b2 + c[0];
}

/// Coefficients of the derivative series (same length, zero-padded), in the
/// unit variable; scale by 2/(hi-lo) separately for a mapped axis.
Eigen::VectorXd cheb_derivative_coeffs(const Eigen::Ref<const Eigen::VectorXd>& c);
Eigen::MatrixXd cheb_derivative_matrix(const Eigen::MatrixXd& C, int axis);

}  // namespace detail

template <typename T>
struct MappedQuery {
  T a_hat, r_hat;
};

template <typename T>
MappedQuery<T> map_to_unit(const ChebSurrogate& s, const T& alpha, const T& logre) {
  const double a_lo = s.envelope.alpha_min, a_hi = s.envelope.alpha_max;
  const double r_lo = s.envelope.logre_min(), r_hi = s.envelope.logre_max();
  MappedQuery<T> q;
  q.a_hat = (2.0 * alpha - (a_lo + a_hi)) * (1.0 / (a_hi - a_lo));
  q.r_hat = (2.0 * logre - (r_lo + r_hi)) * (1.0 / (r_hi - r_lo));
  return q;
}

/// (C_L, C_D, C_M) at (alpha, logre), generic over the scalar type so dual
/// numbers can flow through the dynamics. No envelope handling here.
template <typename T>
std::array<T, 3> cheb_channels(const ChebSurrogate& s, const T& alpha, const T& logre) {
  const auto q = map_to_unit(s, alpha, logre);
  const int k = s.degree_k;
  std::array<T, 3> out;
  std::vector<T> inner(static_cast<std::size_t>(k));
  for (int ch = 0; ch < 3; ++ch) {
    const Eigen::MatrixXd& C = s.coeffs[static_cast<std::size_t>(ch)];
    for (int a = 0; a < k; ++a) {
      inner[static_cast<std::size_t>(a)] = detail::clenshaw(C.row(a).transpose(), q.r_hat);
    }
    // Outer Clenshaw over the alpha degrees with the inner results.
    T b1(0.0), b2(0.0);
    for (int a = k - 1; a >= 1; --a) {
      T b0 = 2.0 * q.a_hat * b1 - b2 + inner[static_cast<std::size_t>(a)];
      b2 = b1;
      b1 = b0;
    }
    out[static_cast<std::size_t>(ch)] = q.a_hat * b1 - b2 + inner[0];
  }
  return out;
}

/// Tensor basis vector phi (k^2, alpha-degree major) at (alpha, logre).
template <typename T>
void cheb_basis(const ChebSurrogate& s, const T& alpha, const T& logre, std::vector<T>& phi) {
  const auto q = map_to_unit(s, alpha, logre);
  const int k = s.degree_k;
  std::vector<T> ta, tr;
  detail::cheb_values(k, q.a_hat, ta);
  detail::cheb_values(k, q.r_hat, tr);
  phi.resize(static_cast<std::size_t>(k * k));
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      phi[static_cast<std::size_t>(a * k + b)] =
          ta[static_cast<std::size_t>(a)] * tr[static_cast<std::size_t>(b)];
    }
  }
}

}  // namespace glide
