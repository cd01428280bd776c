#include "glide/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace glide {
namespace {

constexpr int kBernsteinDegree = 7;
constexpr std::array<double, 8> kBinom{1, 7, 21, 35, 35, 21, 7, 1};

double class_fn(double x) { return std::sqrt(x) * (1.0 - x); }

double bernstein(int i, double x) {
  return kBinom[static_cast<std::size_t>(i)] * std::pow(x, i) *
         std::pow(1.0 - x, kBernsteinDegree - i);
}

// Leading-edge bump, zero at both ends of the chord.
double le_shape(double x) { return x * std::pow(1.0 - x, 7.5); }

void check_chord_fraction(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error("chord fraction outside [0, 1]");
  }
}

}  // namespace

Vector18 KulfanAirfoil::to_vector() const {
  Vector18 v;
  for (int i = 0; i < 8; ++i) v[i] = upper_weights[static_cast<std::size_t>(i)];
  for (int i = 0; i < 8; ++i) v[8 + i] = lower_weights[static_cast<std::size_t>(i)];
  v[16] = le_weight;
  v[17] = te_thickness;
  return v;
}

KulfanAirfoil KulfanAirfoil::from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != kParamCount) {
    throw std::invalid_argument("KulfanAirfoil vector must have 18 entries");
  }
  KulfanAirfoil a;
  for (int i = 0; i < 8; ++i) a.upper_weights[static_cast<std::size_t>(i)] = v[i];
  for (int i = 0; i < 8; ++i) a.lower_weights[static_cast<std::size_t>(i)] = v[8 + i];
  a.le_weight = v[16];
  a.te_thickness = v[17];
  return a;
}

double surface_height(const KulfanAirfoil& airfoil, double x, Side side) {
  check_chord_fraction(x);
  const auto& w = (side == Side::Upper) ? airfoil.upper_weights : airfoil.lower_weights;
  double shape = 0.0;
  for (int i = 0; i <= kBernsteinDegree; ++i) {
    shape += w[static_cast<std::size_t>(i)] * bernstein(i, x);
  }
  const double sign = (side == Side::Upper) ? 1.0 : -1.0;
  return class_fn(x) * shape + sign * (x * airfoil.te_thickness + airfoil.le_weight * le_shape(x));
}

Vector18 surface_height_grad(double x, Side side) {
  check_chord_fraction(x);
  Vector18 g = Vector18::Zero();
  const int offset = (side == Side::Upper) ? 0 : 8;
  const double c = class_fn(x);
  for (int i = 0; i <= kBernsteinDegree; ++i) {
    g[offset + i] = c * bernstein(i, x);
  }
  const double sign = (side == Side::Upper) ? 1.0 : -1.0;
  g[16] = sign * le_shape(x);
  g[17] = sign * x;
  return g;
}

double thickness(const KulfanAirfoil& airfoil, double x) {
  return surface_height(airfoil, x, Side::Upper) - surface_height(airfoil, x, Side::Lower);
}

Vector18 thickness_grad(double x) {
  return surface_height_grad(x, Side::Upper) - surface_height_grad(x, Side::Lower);
}

double min_thickness_margin_of(std::span<const double> thicknesses) {
  if (thicknesses.empty()) {
    throw std::invalid_argument("min_thickness_margin: empty sample list");
  }
  double best = thicknesses[0];
  for (double t : thicknesses) {
    if (t < best) best = t;
  }
  return best - kMinThicknessFraction;
}

int min_thickness_index(const KulfanAirfoil& airfoil, std::span<const double> x_samples) {
  if (x_samples.empty()) {
    throw std::invalid_argument("min_thickness_margin: empty sample list");
  }
  int best = 0;
  double best_t = thickness(airfoil, x_samples[0]);
  for (std::size_t i = 1; i < x_samples.size(); ++i) {
    double t = thickness(airfoil, x_samples[i]);
    if (t < best_t) {
      best_t = t;
      best = static_cast<int>(i);
    }
  }
  return best;
}

double min_thickness_margin(const KulfanAirfoil& airfoil, std::span<const double> x_samples) {
  if (x_samples.empty()) {
    throw std::invalid_argument("min_thickness_margin: empty sample list");
  }
  std::vector<double> t(x_samples.size());
  for (std::size_t i = 0; i < x_samples.size(); ++i) t[i] = thickness(airfoil, x_samples[i]);
  return min_thickness_margin_of(t);
}

std::vector<double> cosine_stations(int n, double lo, double hi) {
  if (n < 1) throw std::invalid_argument("cosine_stations: n must be positive");
  std::vector<double> x(static_cast<std::size_t>(n));
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  for (int i = 0; i < n; ++i) {
    // Midpoint cosine rule keeps every station strictly inside (lo, hi).
    double theta = M_PI * (2.0 * i + 1.0) / (2.0 * n);
    x[static_cast<std::size_t>(i)] = mid - half * std::cos(theta);
  }
  return x;
}

double naca4_camber(double x, double max_camber, double camber_pos) {
  const double m = max_camber;
  const double p = camber_pos;
  if (x < p) {
    return m / (p * p) * (2.0 * p * x - x * x);
  }
  return m / ((1.0 - p) * (1.0 - p)) * ((1.0 - 2.0 * p) + 2.0 * p * x - x * x);
}

double naca4_thickness(double x, double max_thickness) {
  // Sharp trailing-edge variant (last coefficient -0.1036).
  const double s = std::sqrt(x);
  return 5.0 * max_thickness *
         (0.2969 * s - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x -
          0.1036 * x * x * x * x);
}

KulfanAirfoil fit_naca4412() {
  const double m = 0.04, p = 0.4, t = 0.12;
  const int n_stations = 120;
  const std::vector<double> xs = cosine_stations(n_stations, 0.0, 1.0);

  Eigen::MatrixXd A(2 * n_stations, KulfanAirfoil::kParamCount);
  Eigen::VectorXd y(2 * n_stations);
  for (int j = 0; j < n_stations; ++j) {
    const double x = xs[static_cast<std::size_t>(j)];
    const double yc = naca4_camber(x, m, p);
    const double yt = naca4_thickness(x, t);
    A.row(2 * j) = surface_height_grad(x, Side::Upper).transpose();
    A.row(2 * j + 1) = surface_height_grad(x, Side::Lower).transpose();
    y[2 * j] = yc + yt;
    y[2 * j + 1] = yc - yt;
  }

  Eigen::VectorXd theta = A.colPivHouseholderQr().solve(y);
  if (theta[17] < 0.0) {
    // te_thickness must stay nonnegative; refit with the column removed.
    Eigen::MatrixXd A17 = A.leftCols(17);
    Eigen::VectorXd theta17 = A17.colPivHouseholderQr().solve(y);
    theta.head(17) = theta17;
    theta[17] = 0.0;
  }

  const double residual = (A * theta - y).cwiseAbs().maxCoeff();
  if (residual > 1e-3) {
    throw std::runtime_error("fit_naca4412: residual " + std::to_string(residual) +
                             " exceeds 1e-3 (basis misconfigured)");
  }
  return KulfanAirfoil::from_vector(theta);
}

std::string export_selig(const KulfanAirfoil& airfoil, int n_points, std::string_view name) {
  if (n_points < 20) throw std::invalid_argument("export_selig: need n_points >= 20");
  std::string out(name);
  out += "\n";
  char buf[80];
  auto emit = [&](double x, double yv) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", x, yv);
    out += buf;
  };
  // TE -> LE along the upper surface.
  for (int i = 0; i < n_points; ++i) {
    double x = 0.5 * (1.0 + std::cos(M_PI * i / (n_points - 1)));
    if (i == 0) x = 1.0;
    if (i == n_points - 1) x = 0.0;
    emit(x, surface_height(airfoil, x, Side::Upper));
  }
  // LE -> TE along the lower surface, LE point shared.
  for (int i = 1; i < n_points; ++i) {
    double x = 0.5 * (1.0 + std::cos(M_PI * (n_points - 1 - i) / (n_points - 1)));
    if (i == n_points - 1) x = 1.0;
    emit(x, surface_height(airfoil, x, Side::Lower));
  }
  return out;
}

}  // namespace glide
