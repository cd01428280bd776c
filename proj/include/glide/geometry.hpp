#pragma once

#include <Eigen/Core>
#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace glide {

using Vector18 = Eigen::Matrix<double, 18, 1>;

/// Kulfan CST airfoil: class function sqrt(x)(1-x) times a degree-7
/// Bernstein shape expansion per surface, plus a linear trailing-edge
/// thickness term and a leading-edge modification term.
///
/// Flat-vector ordering (18 entries): upper weights 0-7, lower weights 8-15,
/// le_weight 16, te_thickness 17.
///
/// Surface heights, both measured positive up:
///   upper(x) = C(x) * S_u(x) + x * te_thickness + le_weight * L(x)
///   lower(x) = C(x) * S_l(x) - x * te_thickness - le_weight * L(x)
/// with C(x) = sqrt(x)(1-x), S the Bernstein expansion of the surface's
/// weights, and L(x) = x (1-x)^7.5 the leading-edge bump (opposite sign per
/// surface, so positive le_weight thickens the nose).
struct KulfanAirfoil {
  std::array<double, 8> upper_weights{};
  std::array<double, 8> lower_weights{};
  double le_weight = 0.0;
  double te_thickness = 0.0;

  static constexpr int kParamCount = 18;

  Vector18 to_vector() const;
  static KulfanAirfoil from_vector(const Eigen::Ref<const Eigen::VectorXd>& v);
};

enum class Side { Upper, Lower };

/// Height of one surface at chord fraction x in [0, 1].
double surface_height(const KulfanAirfoil& airfoil, double x, Side side);

/// Gradient of surface_height w.r.t. the 18 parameters. The height is linear
/// in the parameters, so the gradient depends on (x, side) only.
Vector18 surface_height_grad(double x, Side side);

/// Upper height minus lower height at x.
double thickness(const KulfanAirfoil& airfoil, double x);
Vector18 thickness_grad(double x);

/// min over samples of (thickness(x) - 0.05). Ties resolved by first index.
double min_thickness_margin(const KulfanAirfoil& airfoil, std::span<const double> x_samples);
double min_thickness_margin_of(std::span<const double> thicknesses);
int min_thickness_index(const KulfanAirfoil& airfoil, std::span<const double> x_samples);

constexpr double kMinThicknessFraction = 0.05;

/// n cosine-clustered stations on the open interval (lo, hi).
std::vector<double> cosine_stations(int n, double lo, double hi);

/// NACA 4-digit closed forms (sharp trailing-edge thickness polynomial).
double naca4_camber(double x, double max_camber, double camber_pos);
double naca4_thickness(double x, double max_thickness);

/// Least-squares CST fit to analytic NACA 4412 coordinates. Throws if the
/// max coordinate residual exceeds 1e-3 chord.
KulfanAirfoil fit_naca4412();

/// Selig-format coordinate text: name line, then x/y pairs from the trailing
/// edge over the upper surface to the leading edge and back along the lower
/// surface. n_points stations per surface, cosine spaced, LE point shared.
std::string export_selig(const KulfanAirfoil& airfoil, int n_points,
                         std::string_view name = "glide airfoil");

}  // namespace glide
