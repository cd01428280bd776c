#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>

#include "glide/dual.hpp"
#include "glide/geometry.hpp"

namespace glide {

/// Aerodynamic coefficients at one (airfoil, alpha, Re) query.
struct AeroCoeffs {
  double c_l = 0.0;
  double c_d = 0.0;
  double c_m = 0.0;
  double confidence = 1.0;
};

/// Derivatives of (c_l, c_d, c_m, confidence), rows in that order.
struct AeroGrad {
  Eigen::Matrix<double, 4, 18> dpsi = Eigen::Matrix<double, 4, 18>::Zero();
  Eigen::Vector4d dalpha = Eigen::Vector4d::Zero();
  Eigen::Vector4d dlogre = Eigen::Vector4d::Zero();
  Eigen::Vector4d d2_alpha_alpha = Eigen::Vector4d::Zero();
  Eigen::Vector4d d2_alpha_logre = Eigen::Vector4d::Zero();
  Eigen::Vector4d d2_logre_logre = Eigen::Vector4d::Zero();
};

/// Flight envelope in angle of attack and Reynolds number. The Re axis is
/// stored in natural units but always sampled and fit in log10.
struct Envelope {
  double alpha_min = -30.0 * M_PI / 180.0;
  double alpha_max = 60.0 * M_PI / 180.0;
  double re_min = 1e4;
  double re_max = 1e6;

  double logre_min() const { return std::log10(re_min); }
  double logre_max() const { return std::log10(re_max); }
  void validate() const;
};

/// Differentiable map (psi, alpha, Re) -> (C_L, C_D, C_M, confidence).
class AeroModel {
 public:
  virtual ~AeroModel() = default;
  virtual AeroCoeffs eval(const KulfanAirfoil& airfoil, double alpha, double re) const = 0;
  /// Exact analytic derivatives; second derivatives cover (alpha, log10 Re).
  virtual AeroCoeffs eval_grad(const KulfanAirfoil& airfoil, double alpha, double re,
                               AeroGrad& grad) const = 0;
  virtual std::string name() const = 0;
};

/// Tunable constants of the built-in analytic model (all documented with
/// the closed forms in aero.cpp).
struct AnalyticModelConfig {
  double stall_alpha = 17.0 * M_PI / 180.0;  // 50%-attached angle for a thin section
  double stall_per_le_thickness = 0.5;       // rad of extra stall angle per unit t(0.05)
  double drag_floor = 1e-4;
  double induced_drag_k = 0.01;
  double skin_friction_coeff = 2.656;  // laminar two-sided flat plate, / sqrt(Re)
  // Confidence component scales: logistic((a - feature)/s) per feature.
  double conf_mag_center = 6.0, conf_mag_scale = 1.5;
  double conf_osc_center = 3.0, conf_osc_scale = 0.6;
  double conf_thk_center = 0.03, conf_thk_scale = 0.008;
  // Out-of-distribution drag attenuation gate, driven by the shape-score
  // part of the confidence: 0.5 + 0.5 tanh((c_shape - center)/width).
  double artifact_center = 0.45, artifact_width = 0.15;
};

/// Smooth closed-form stand-in for a learned surrogate. Thin-airfoil lift
/// and moment in the attached regime, bluff-body trigonometric laws past
/// stall, sigmoid-blended and 2*pi periodic in alpha. The drag channel
/// decays toward its floor as the geometry leaves the plausible set, the
/// same failure mode the confidence channel exists to flag.
class AnalyticAeroModel : public AeroModel {
 public:
  explicit AnalyticAeroModel(AnalyticModelConfig config = {});

  AeroCoeffs eval(const KulfanAirfoil& airfoil, double alpha, double re) const override;
  AeroCoeffs eval_grad(const KulfanAirfoil& airfoil, double alpha, double re,
                       AeroGrad& grad) const override;
  std::string name() const override { return "analytic"; }

  const AnalyticModelConfig& config() const { return cfg_; }

  /// psi-linear geometric features feeding the model.
  struct Features {
    double alpha0;       // zero-lift angle (thin-airfoil camber integral)
    double cm0;          // quarter-chord moment at zero lift
    double thickness_ff; // front-weighted effective thickness (drag form factor)
    double thickness_le; // thickness at 5% chord (stall delay)
    double thickness_int;// integral thickness (confidence floor feature)
    double mag2;         // sum of squared shape weights
    double osc2;         // sum of squared second differences of the weights
  };
  Features features(const KulfanAirfoil& airfoil) const;
  /// d(feature)/d(psi) rows ordered as in Features.
  Eigen::Matrix<double, 7, 18> feature_jacobian(const KulfanAirfoil& airfoil) const;

 private:
  AnalyticModelConfig cfg_;
  // Constant gradients of the psi-linear features.
  Vector18 alpha0_vec_, cm0_vec_, thk_ff_vec_, thk_le_vec_, thk_int_vec_;
};

/// Loads a feed-forward network from the JSON weight-file schema
/// {version, layers, activation: "tanh", weights, biases,
///  input_normalization: {means, scales}}. Input layout:
/// [psi (18), sin alpha, cos alpha, log10 Re], normalized per file.
/// Linear 4-output head; sigmoid applied to the confidence channel.
class MlpAeroModel : public AeroModel {
 public:
  static MlpAeroModel load(const std::string& path);
  static MlpAeroModel from_json_text(const std::string& text);

  AeroCoeffs eval(const KulfanAirfoil& airfoil, double alpha, double re) const override;
  AeroCoeffs eval_grad(const KulfanAirfoil& airfoil, double alpha, double re,
                       AeroGrad& grad) const override;
  std::string name() const override { return "mlp"; }

  const std::vector<int>& layers() const { return layers_; }

 private:
  std::vector<int> layers_;  // sizes including input and output
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  Eigen::VectorXd in_means_, in_scales_;
};

}  // namespace glide
