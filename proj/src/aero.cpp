#include "glide/aero.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace glide {
namespace {

constexpr double kPi = M_PI;
constexpr double kLn10 = 2.302585092994046;

// d/dx of class * Bernstein_i, for the camber-slope quadratures.
double class_bernstein_dx(int i, double x) {
  constexpr std::array<double, 8> kBinom{1, 7, 21, 35, 35, 21, 7, 1};
  const int n = 7;
  const double c = std::sqrt(x) * (1.0 - x);
  const double cdx = (1.0 - 3.0 * x) / (2.0 * std::sqrt(x));
  const double b = kBinom[static_cast<std::size_t>(i)] * std::pow(x, i) * std::pow(1.0 - x, n - i);
  double bdx = 0.0;
  if (i > 0) bdx += i * std::pow(x, i - 1) * std::pow(1.0 - x, n - i);
  if (i < n) bdx -= (n - i) * std::pow(x, i) * std::pow(1.0 - x, n - i - 1);
  bdx *= kBinom[static_cast<std::size_t>(i)];
  return cdx * b + c * bdx;
}

// Camber slope dy_c/dx is linear in psi; this is its gradient at x.
// The trailing-edge and leading-edge terms cancel between the surfaces.
Vector18 camber_slope_basis(double x) {
  Vector18 g = Vector18::Zero();
  for (int i = 0; i < 8; ++i) {
    const double v = 0.5 * class_bernstein_dx(i, x);
    g[i] = v;
    g[8 + i] = v;
  }
  return g;
}

template <typename T>
struct CoreOut {
  T c_l, c_d, c_m, conf;
};

// The closed-form model. Features (all psi-linear except mag2/osc2):
//   f[0] alpha0, f[1] cm0, f[2] thickness_ff, f[3] thickness_le,
//   f[4] thickness_int, f[5] mag2, f[6] osc2.
//
// Lift:   attached 2 pi sin(a - alpha0), post-stall 2 sin a cos a, blended by
//         a logistic in t = (1 - cos(a - alpha0))/2 centered at the stall
//         angle; the t variable keeps the blend smooth and 2 pi periodic.
// Drag:   c_d0 = c_f(Re) * (1 + 2.7 t_ff + 100 t_ff^4), c_f laminar
//         Re^(-1/2); plus k C_L^2 and the post-stall 2 sin^2 a term. The
//         physical value is attenuated toward drag_floor by a tanh gate in
//         the confidence, mimicking how a fitted surrogate under-predicts
//         drag for out-of-distribution geometry.
// Moment: quarter-chord cm0 from thin-airfoil camber, blended toward
//         -0.1 sin a past stall.
// Confidence: product of logistic plausibility scores on weight magnitude,
//         weight oscillation, and integral thickness.
template <typename T>
CoreOut<T> analytic_core(const AnalyticModelConfig& cfg, const std::array<T, 7>& f,
                         const T& alpha, const T& logre) {
  using std::cos;
  using std::exp;
  using std::sin;
  using std::tanh;
  const T& alpha0 = f[0];
  const T& cm0 = f[1];
  const T& thk_ff = f[2];
  const T& thk_le = f[3];
  const T& thk_int = f[4];
  const T& mag2 = f[5];
  const T& osc2 = f[6];

  T rel = alpha - alpha0;
  T alpha_stall = cfg.stall_alpha + cfg.stall_per_le_thickness * thk_le;
  T t_var = 0.5 * (1.0 - cos(rel));
  T t_stall = 0.5 * (1.0 - cos(alpha_stall));
  // Attached-flow weight: a Gaussian bump in the periodic distance variable
  // t = (1 - cos(alpha - alpha0))/2, worth 1/2 at the stall angle. Its
  // derivative vanishes at alpha0, so the attached lift slope stays exactly
  // 2 pi there, and the roll-off is gentle enough for moderate-degree
  // Chebyshev fits to track.
  T ratio = t_var * (1.0 / t_stall);
  T attached = exp((-M_LN2) * ratio * ratio);

  T cl_att = 2.0 * kPi * sin(rel);
  T cl_post = 2.0 * sin(alpha) * cos(alpha);
  T c_l = attached * cl_att + (1.0 - attached) * cl_post;

  T c_f = cfg.skin_friction_coeff * exp(logre * (-0.5 * kLn10));
  T form = 1.0 + 2.7 * thk_ff + 100.0 * thk_ff * thk_ff * thk_ff * thk_ff;
  T sa = sin(alpha);
  T cd_phys = c_f * form + cfg.induced_drag_k * c_l * c_l + (1.0 - attached) * 2.0 * sa * sa;

  // Shape-plausibility score (magnitude + oscillation); the thickness floor
  // joins it for the reported confidence but not for the drag gate, so a
  // thin flat plate still behaves like one.
  T conf_shape = logistic((cfg.conf_mag_center - mag2) * (1.0 / cfg.conf_mag_scale)) *
                 logistic((cfg.conf_osc_center - osc2) * (1.0 / cfg.conf_osc_scale));
  T conf = conf_shape * logistic((thk_int - cfg.conf_thk_center) * (1.0 / cfg.conf_thk_scale));

  T gate = 0.5 + 0.5 * tanh((conf_shape - cfg.artifact_center) * (1.0 / cfg.artifact_width));
  T c_d = cfg.drag_floor + (cd_phys - cfg.drag_floor) * gate;

  T c_m = attached * cm0 + (1.0 - attached) * (-0.1) * sa;

  return {c_l, c_d, c_m, conf};
}

}  // namespace

void Envelope::validate() const {
  if (!(alpha_min < alpha_max)) throw std::invalid_argument("envelope: alpha_min >= alpha_max");
  if (!(re_min > 0.0 && re_min < re_max)) {
    throw std::invalid_argument("envelope: need 0 < re_min < re_max");
  }
}

AnalyticAeroModel::AnalyticAeroModel(AnalyticModelConfig config) : cfg_(config) {
  // Thin-airfoil quadratures on theta in (0, pi), x = (1 - cos theta)/2.
  const int nq = 64;
  const double dtheta = kPi / nq;
  alpha0_vec_ = Vector18::Zero();
  Vector18 a1 = Vector18::Zero(), a2 = Vector18::Zero();
  for (int q = 0; q < nq; ++q) {
    const double theta = dtheta * (q + 0.5);
    const double x = 0.5 * (1.0 - std::cos(theta));
    const Vector18 slope = camber_slope_basis(x);
    alpha0_vec_ += (1.0 / kPi) * (1.0 - std::cos(theta)) * dtheta * slope;
    a1 += (2.0 / kPi) * std::cos(theta) * dtheta * slope;
    a2 += (2.0 / kPi) * std::cos(2.0 * theta) * dtheta * slope;
  }
  cm0_vec_ = (kPi / 4.0) * (a2 - a1);

  const int nx = 96;
  const double dx = 1.0 / nx;
  thk_ff_vec_ = Vector18::Zero();
  thk_int_vec_ = Vector18::Zero();
  for (int j = 0; j < nx; ++j) {
    const double x = dx * (j + 0.5);
    const Vector18 tg = thickness_grad(x);
    thk_ff_vec_ += 3.0 * (1.0 - x) * (1.0 - x) * dx * tg;
    thk_int_vec_ += dx * tg;
  }
  thk_le_vec_ = thickness_grad(0.05);
}

AnalyticAeroModel::Features AnalyticAeroModel::features(const KulfanAirfoil& a) const {
  const Vector18 psi = a.to_vector();
  Features f;
  f.alpha0 = alpha0_vec_.dot(psi);
  f.cm0 = cm0_vec_.dot(psi);
  f.thickness_ff = thk_ff_vec_.dot(psi);
  f.thickness_le = thk_le_vec_.dot(psi);
  f.thickness_int = thk_int_vec_.dot(psi);
  double mag2 = 0.0, osc2 = 0.0;
  for (int i = 0; i < 8; ++i) {
    mag2 += a.upper_weights[i] * a.upper_weights[i] + a.lower_weights[i] * a.lower_weights[i];
  }
  for (const auto& w : {a.upper_weights, a.lower_weights}) {
    for (int i = 1; i < 7; ++i) {
      const double s = w[i + 1] - 2.0 * w[i] + w[i - 1];
      osc2 += s * s;
    }
  }
  f.mag2 = mag2;
  f.osc2 = osc2;
  return f;
}

Eigen::Matrix<double, 7, 18> AnalyticAeroModel::feature_jacobian(const KulfanAirfoil& a) const {
  Eigen::Matrix<double, 7, 18> J = Eigen::Matrix<double, 7, 18>::Zero();
  J.row(0) = alpha0_vec_.transpose();
  J.row(1) = cm0_vec_.transpose();
  J.row(2) = thk_ff_vec_.transpose();
  J.row(3) = thk_le_vec_.transpose();
  J.row(4) = thk_int_vec_.transpose();
  for (int i = 0; i < 8; ++i) {
    J(5, i) = 2.0 * a.upper_weights[i];
    J(5, 8 + i) = 2.0 * a.lower_weights[i];
  }
  for (int surf = 0; surf < 2; ++surf) {
    const auto& w = (surf == 0) ? a.upper_weights : a.lower_weights;
    const int base = 8 * surf;
    for (int i = 1; i < 7; ++i) {
      const double s = 2.0 * (w[i + 1] - 2.0 * w[i] + w[i - 1]);
      J(6, base + i + 1) += s;
      J(6, base + i) -= 2.0 * s;
      J(6, base + i - 1) += s;
    }
  }
  return J;
}

AeroCoeffs AnalyticAeroModel::eval(const KulfanAirfoil& airfoil, double alpha, double re) const {
  if (!(re > 0.0)) throw std::domain_error("aero eval: Re must be positive");
  const Features f = features(airfoil);
  const std::array<double, 7> fv{f.alpha0, f.cm0, f.thickness_ff, f.thickness_le,
                                 f.thickness_int, f.mag2, f.osc2};
  const auto out = analytic_core<double>(cfg_, fv, alpha, std::log10(re));
  return {out.c_l, out.c_d, out.c_m, out.conf};
}

AeroCoeffs AnalyticAeroModel::eval_grad(const KulfanAirfoil& airfoil, double alpha, double re,
                                        AeroGrad& grad) const {
  if (!(re > 0.0)) throw std::domain_error("aero eval: Re must be positive");
  const Features f = features(airfoil);
  const std::array<double, 7> fv{f.alpha0, f.cm0, f.thickness_ff, f.thickness_le,
                                 f.thickness_int, f.mag2, f.osc2};
  const double logre = std::log10(re);

  // First derivatives: 7 feature directions + alpha + logre.
  std::array<Dual9, 7> fd;
  for (int j = 0; j < 7; ++j) fd[j] = Dual9::seeded(fv[j], j);
  const auto o1 = analytic_core<Dual9>(cfg_, fd, Dual9::seeded(alpha, 7), Dual9::seeded(logre, 8));

  const Eigen::Matrix<double, 7, 18> Jf = feature_jacobian(airfoil);
  const std::array<const Dual9*, 4> chans{&o1.c_l, &o1.c_d, &o1.c_m, &o1.conf};
  for (int c = 0; c < 4; ++c) {
    Eigen::Matrix<double, 1, 18> row = Eigen::Matrix<double, 1, 18>::Zero();
    for (int j = 0; j < 7; ++j) row += chans[c]->d[j] * Jf.row(j);
    grad.dpsi.row(c) = row;
    grad.dalpha[c] = chans[c]->d[7];
    grad.dlogre[c] = chans[c]->d[8];
  }

  // Second derivatives in (alpha, logre), features held fixed.
  using D2 = Dual<Dual2, 2>;
  std::array<D2, 7> f2;
  for (int j = 0; j < 7; ++j) f2[j] = D2(fv[j]);
  D2 a2 = D2::seeded(Dual2::seeded(alpha, 0), 0);
  D2 r2 = D2::seeded(Dual2::seeded(logre, 1), 1);
  const auto o2 = analytic_core<D2>(cfg_, f2, a2, r2);
  const std::array<const D2*, 4> chans2{&o2.c_l, &o2.c_d, &o2.c_m, &o2.conf};
  for (int c = 0; c < 4; ++c) {
    grad.d2_alpha_alpha[c] = chans2[c]->d[0].d[0];
    grad.d2_alpha_logre[c] = chans2[c]->d[0].d[1];
    grad.d2_logre_logre[c] = chans2[c]->d[1].d[1];
  }

  return {o1.c_l.v, o1.c_d.v, o1.c_m.v, o1.conf.v};
}

// ---------------------------------------------------------------------------
// MLP evaluator

namespace {

template <typename T>
void mlp_forward(const std::vector<Eigen::MatrixXd>& weights,
                 const std::vector<Eigen::VectorXd>& biases, const Eigen::VectorXd& means,
                 const Eigen::VectorXd& scales, std::vector<T>& act, std::array<T, 4>& out) {
  using std::tanh;
  for (std::size_t i = 0; i < act.size(); ++i) {
    act[i] = (act[i] - means[static_cast<Eigen::Index>(i)]) *
             (1.0 / scales[static_cast<Eigen::Index>(i)]);
  }
  std::vector<T> next;
  for (std::size_t layer = 0; layer < weights.size(); ++layer) {
    const auto& W = weights[layer];
    const auto& b = biases[layer];
    next.assign(static_cast<std::size_t>(W.rows()), T(0.0));
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      T acc = T(b[r]);
      for (Eigen::Index c = 0; c < W.cols(); ++c) {
        acc += W(r, c) * act[static_cast<std::size_t>(c)];
      }
      next[static_cast<std::size_t>(r)] = acc;
    }
    act.swap(next);
    if (layer + 1 < weights.size()) {
      for (auto& a : act) a = tanh(a);
    }
  }
  out = {act[0], act[1], act[2], logistic(act[3])};
}

}  // namespace

MlpAeroModel MlpAeroModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("mlp load: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

MlpAeroModel MlpAeroModel::from_json_text(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.contains("version") || j["version"].get<int>() != 1) {
    throw std::runtime_error("mlp load: unknown weight-file version");
  }
  if (j.at("activation").get<std::string>() != "tanh") {
    throw std::runtime_error("mlp load: unsupported activation");
  }
  MlpAeroModel m;
  m.layers_ = j.at("layers").get<std::vector<int>>();
  if (m.layers_.size() < 2 || m.layers_.front() != 21 || m.layers_.back() != 4) {
    throw std::runtime_error("mlp load: layers must map 21 inputs to 4 outputs");
  }
  const auto& jw = j.at("weights");
  const auto& jb = j.at("biases");
  if (jw.size() != m.layers_.size() - 1 || jb.size() != m.layers_.size() - 1) {
    throw std::runtime_error("mlp load: weight/bias count does not match layers");
  }
  for (std::size_t l = 0; l + 1 < m.layers_.size(); ++l) {
    const int rows = m.layers_[l + 1], cols = m.layers_[l];
    const auto wf = jw[l].get<std::vector<double>>();
    const auto bf = jb[l].get<std::vector<double>>();
    if (static_cast<int>(wf.size()) != rows * cols || static_cast<int>(bf.size()) != rows) {
      throw std::runtime_error("mlp load: layer " + std::to_string(l) + " dimension mismatch");
    }
    Eigen::MatrixXd W(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) W(r, c) = wf[static_cast<std::size_t>(r * cols + c)];
    }
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(bf.data(), rows);
    if (!W.allFinite() || !b.allFinite()) {
      throw std::runtime_error("mlp load: non-finite weights");
    }
    m.weights_.push_back(std::move(W));
    m.biases_.push_back(std::move(b));
  }
  const auto& norm = j.at("input_normalization");
  const auto mv = norm.at("means").get<std::vector<double>>();
  const auto sv = norm.at("scales").get<std::vector<double>>();
  if (static_cast<int>(mv.size()) != m.layers_.front() ||
      static_cast<int>(sv.size()) != m.layers_.front()) {
    throw std::runtime_error("mlp load: normalization size mismatch");
  }
  m.in_means_ = Eigen::Map<const Eigen::VectorXd>(mv.data(), static_cast<Eigen::Index>(mv.size()));
  m.in_scales_ = Eigen::Map<const Eigen::VectorXd>(sv.data(), static_cast<Eigen::Index>(sv.size()));
  for (double s : sv) {
    if (!(s != 0.0)) throw std::runtime_error("mlp load: zero normalization scale");
  }
  return m;
}

AeroCoeffs MlpAeroModel::eval(const KulfanAirfoil& airfoil, double alpha, double re) const {
  if (!(re > 0.0)) throw std::domain_error("aero eval: Re must be positive");
  const Vector18 psi = airfoil.to_vector();
  std::vector<double> in(21);
  for (int i = 0; i < 18; ++i) in[static_cast<std::size_t>(i)] = psi[i];
  in[18] = std::sin(alpha);
  in[19] = std::cos(alpha);
  in[20] = std::log10(re);
  std::array<double, 4> out;
  mlp_forward(weights_, biases_, in_means_, in_scales_, in, out);
  return {out[0], out[1], out[2], out[3]};
}

AeroCoeffs MlpAeroModel::eval_grad(const KulfanAirfoil& airfoil, double alpha, double re,
                                   AeroGrad& grad) const {
  if (!(re > 0.0)) throw std::domain_error("aero eval: Re must be positive");
  const Vector18 psi = airfoil.to_vector();
  const double logre = std::log10(re);

  // 18 psi directions + alpha (dir 18) + logre (dir 19).
  using D20 = Dual<double, 20>;
  std::vector<D20> in(21);
  for (int i = 0; i < 18; ++i) in[static_cast<std::size_t>(i)] = D20::seeded(psi[i], i);
  D20 a = D20::seeded(alpha, 18);
  D20 r = D20::seeded(logre, 19);
  in[18] = sin(a);
  in[19] = cos(a);
  in[20] = r;
  std::array<D20, 4> out;
  mlp_forward(weights_, biases_, in_means_, in_scales_, in, out);
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < 18; ++i) grad.dpsi(c, i) = out[static_cast<std::size_t>(c)].d[i];
    grad.dalpha[c] = out[static_cast<std::size_t>(c)].d[18];
    grad.dlogre[c] = out[static_cast<std::size_t>(c)].d[19];
  }

  using D2n = Dual<Dual2, 2>;
  std::vector<D2n> in2(21);
  for (int i = 0; i < 18; ++i) in2[static_cast<std::size_t>(i)] = D2n(psi[i]);
  D2n a2 = D2n::seeded(Dual2::seeded(alpha, 0), 0);
  D2n r2 = D2n::seeded(Dual2::seeded(logre, 1), 1);
  in2[18] = sin(a2);
  in2[19] = cos(a2);
  in2[20] = r2;
  std::array<D2n, 4> out2;
  mlp_forward(weights_, biases_, in_means_, in_scales_, in2, out2);
  for (int c = 0; c < 4; ++c) {
    grad.d2_alpha_alpha[c] = out2[static_cast<std::size_t>(c)].d[0].d[0];
    grad.d2_alpha_logre[c] = out2[static_cast<std::size_t>(c)].d[0].d[1];
    grad.d2_logre_logre[c] = out2[static_cast<std::size_t>(c)].d[1].d[1];
  }

  return {value_of(out[0]), value_of(out[1]), value_of(out[2]), value_of(out[3])};
}

}  // namespace glide
