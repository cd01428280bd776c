#include "glide/chebfit.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace glide {

struct FitCache {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  std::vector<double> node_alpha;
  std::vector<double> node_logre;  // per grid row, alpha-major
};

std::vector<double> chebyshev_nodes(int m, double lo, double hi) {
  if (m < 2) throw std::invalid_argument("chebyshev_nodes: need m >= 2");
  if (!(lo < hi)) throw std::invalid_argument("chebyshev_nodes: need lo < hi");
  std::vector<double> x(static_cast<std::size_t>(m));
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (int i = 0; i < m; ++i) {
    // cos((2i+1) pi / 2m) descends with i; negate for ascending order.
    x[static_cast<std::size_t>(i)] = mid - half * std::cos((2.0 * i + 1.0) * M_PI / (2.0 * m));
  }
  return x;
}

std::uint64_t design_hash_of(const KulfanAirfoil& airfoil) {
  const Vector18 v = airfoil.to_vector();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
  for (std::size_t i = 0; i < sizeof(double) * 18; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

namespace detail {

Eigen::VectorXd cheb_derivative_coeffs(const Eigen::Ref<const Eigen::VectorXd>& c) {
  const Eigen::Index n = c.size();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  if (n < 2) return d;
  d[n - 2] = 2.0 * static_cast<double>(n - 1) * c[n - 1];
  for (Eigen::Index j = n - 3; j >= 0; --j) {
    d[j] = d[j + 2] + 2.0 * static_cast<double>(j + 1) * c[j + 1];
  }
  d[0] *= 0.5;
  return d;
}

Eigen::MatrixXd cheb_derivative_matrix(const Eigen::MatrixXd& C, int axis) {
  Eigen::MatrixXd D(C.rows(), C.cols());
  if (axis == 0) {
    for (Eigen::Index b = 0; b < C.cols(); ++b) {
      D.col(b) = cheb_derivative_coeffs(C.col(b));
    }
  } else {
    for (Eigen::Index a = 0; a < C.rows(); ++a) {
      D.row(a) = cheb_derivative_coeffs(C.row(a).transpose()).transpose();
    }
  }
  return D;
}

}  // namespace detail

namespace {

double eval_matrix(const Eigen::MatrixXd& C, double a_hat, double r_hat) {
  const int k = static_cast<int>(C.rows());
  Eigen::VectorXd inner(k);
  for (int a = 0; a < k; ++a) {
    inner[a] = detail::clenshaw(C.row(a).transpose(), r_hat);
  }
  return detail::clenshaw(inner, a_hat);
}

}  // namespace

ChebSurrogate fit(const AeroModel& model, const KulfanAirfoil& airfoil, const Envelope& envelope,
                  int degree_k, int m) {
  envelope.validate();
  if (degree_k < 1) throw std::invalid_argument("fit: degree_k must be positive");
  if (m < degree_k) throw std::invalid_argument("fit: need m >= degree_k");

  const std::vector<double> an = chebyshev_nodes(m, envelope.alpha_min, envelope.alpha_max);
  const std::vector<double> rn = chebyshev_nodes(m, envelope.logre_min(), envelope.logre_max());

  ChebSurrogate s;
  s.degree_k = degree_k;
  s.node_count_m = m;
  s.envelope = envelope;
  s.design_hash = design_hash_of(airfoil);

  const int rows = m * m, cols = degree_k * degree_k;
  Eigen::MatrixXd A(rows, cols);
  Eigen::MatrixXd y(rows, 3);
  auto cache = std::make_shared<FitCache>();
  cache->node_alpha.reserve(static_cast<std::size_t>(rows));
  cache->node_logre.reserve(static_cast<std::size_t>(rows));

  std::vector<double> phi;
  for (int ia = 0; ia < m; ++ia) {
    for (int ib = 0; ib < m; ++ib) {
      const int row = ia * m + ib;
      const double alpha = an[static_cast<std::size_t>(ia)];
      const double logre = rn[static_cast<std::size_t>(ib)];
      cache->node_alpha.push_back(alpha);
      cache->node_logre.push_back(logre);
      // Basis row; the surrogate's envelope is already set, so reuse it.
      cheb_basis(s, alpha, logre, phi);
      for (int c = 0; c < cols; ++c) A(row, c) = phi[static_cast<std::size_t>(c)];
      const AeroCoeffs coeffs = model.eval(airfoil, alpha, std::pow(10.0, logre));
      y(row, 0) = coeffs.c_l;
      y(row, 1) = coeffs.c_d;
      y(row, 2) = coeffs.c_m;
    }
  }

  cache->qr.compute(A);
  if (cache->qr.rank() < cols) {
    throw std::runtime_error("chebfit: rank-deficient basis matrix (check degree_k and m)");
  }
  const Eigen::MatrixXd w = cache->qr.solve(y);
  for (int ch = 0; ch < 3; ++ch) {
    Eigen::MatrixXd C(degree_k, degree_k);
    for (int a = 0; a < degree_k; ++a) {
      for (int b = 0; b < degree_k; ++b) C(a, b) = w(a * degree_k + b, ch);
    }
    s.coeffs[static_cast<std::size_t>(ch)] = std::move(C);
    s.rms_residual[static_cast<std::size_t>(ch)] =
        std::sqrt((A * w.col(ch) - y.col(ch)).squaredNorm() / rows);
  }
  s.cache = std::move(cache);
  return s;
}

ChebEval eval(const ChebSurrogate& s, double alpha, double logre, bool clamp) {
  const Envelope& e = s.envelope;
  const double rlo = e.logre_min(), rhi = e.logre_max();
  if (alpha < e.alpha_min || alpha > e.alpha_max || logre < rlo || logre > rhi) {
    if (!clamp) {
      throw std::domain_error("chebfit eval: query outside envelope and clamping disabled");
    }
    alpha = std::min(std::max(alpha, e.alpha_min), e.alpha_max);
    logre = std::min(std::max(logre, rlo), rhi);
  }
  const auto q = map_to_unit(s, alpha, logre);
  const double sa = 2.0 / (e.alpha_max - e.alpha_min);
  const double sr = 2.0 / (rhi - rlo);

  ChebEval out;
  for (int ch = 0; ch < 3; ++ch) {
    const Eigen::MatrixXd& C = s.coeffs[static_cast<std::size_t>(ch)];
    const Eigen::MatrixXd Ca = detail::cheb_derivative_matrix(C, 0);
    const Eigen::MatrixXd Cr = detail::cheb_derivative_matrix(C, 1);
    const Eigen::MatrixXd Caa = detail::cheb_derivative_matrix(Ca, 0);
    const Eigen::MatrixXd Car = detail::cheb_derivative_matrix(Ca, 1);
    const Eigen::MatrixXd Crr = detail::cheb_derivative_matrix(Cr, 1);
    out.value[static_cast<std::size_t>(ch)] = eval_matrix(C, q.a_hat, q.r_hat);
    out.d_alpha[static_cast<std::size_t>(ch)] = sa * eval_matrix(Ca, q.a_hat, q.r_hat);
    out.d_logre[static_cast<std::size_t>(ch)] = sr * eval_matrix(Cr, q.a_hat, q.r_hat);
    out.d2_alpha_alpha[static_cast<std::size_t>(ch)] = sa * sa * eval_matrix(Caa, q.a_hat, q.r_hat);
    out.d2_alpha_logre[static_cast<std::size_t>(ch)] = sa * sr * eval_matrix(Car, q.a_hat, q.r_hat);
    out.d2_logre_logre[static_cast<std::size_t>(ch)] = sr * sr * eval_matrix(Crr, q.a_hat, q.r_hat);
  }
  return out;
}

Eigen::MatrixXd fit_jacobian(const AeroModel& model, const KulfanAirfoil& airfoil,
                             const ChebSurrogate& s) {
  if (!s.cache) {
    throw std::invalid_argument("fit_jacobian: surrogate carries no fit factorization");
  }
  if (design_hash_of(airfoil) != s.design_hash) {
    throw std::invalid_argument("fit_jacobian: stale surrogate (design hash mismatch)");
  }
  const int rows = static_cast<int>(s.cache->node_alpha.size());
  const int k2 = s.coeff_count();
  Eigen::MatrixXd dy_l(rows, 18), dy_d(rows, 18), dy_m(rows, 18);
  AeroGrad g;
  for (int r = 0; r < rows; ++r) {
    const double alpha = s.cache->node_alpha[static_cast<std::size_t>(r)];
    const double re = std::pow(10.0, s.cache->node_logre[static_cast<std::size_t>(r)]);
    model.eval_grad(airfoil, alpha, re, g);
    dy_l.row(r) = g.dpsi.row(0);
    dy_d.row(r) = g.dpsi.row(1);
    dy_m.row(r) = g.dpsi.row(2);
  }
  Eigen::MatrixXd out(3 * k2, 18);
  out.topRows(k2) = s.cache->qr.solve(dy_l);
  out.middleRows(k2, k2) = s.cache->qr.solve(dy_d);
  out.bottomRows(k2) = s.cache->qr.solve(dy_m);
  return out;
}

std::string to_json_text(const ChebSurrogate& s) {
  nlohmann::json j;
  j["degree"] = s.degree_k;
  j["node_count"] = s.node_count_m;
  j["design_hash"] = s.design_hash;
  j["envelope"] = {{"alpha_min", s.envelope.alpha_min},
                   {"alpha_max", s.envelope.alpha_max},
                   {"re_min", s.envelope.re_min},
                   {"re_max", s.envelope.re_max}};
  const char* names[3] = {"c_l", "c_d", "c_m"};
  for (int ch = 0; ch < 3; ++ch) {
    std::vector<double> flat;
    const auto& C = s.coeffs[static_cast<std::size_t>(ch)];
    flat.reserve(static_cast<std::size_t>(C.size()));
    for (int a = 0; a < C.rows(); ++a) {
      for (int b = 0; b < C.cols(); ++b) flat.push_back(C(a, b));
    }
    j["coeffs"][names[ch]] = flat;
    j["rms_residual"][names[ch]] = s.rms_residual[static_cast<std::size_t>(ch)];
  }
  return j.dump(2);
}

ChebSurrogate surrogate_from_json_text(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ChebSurrogate s;
  s.degree_k = j.at("degree").get<int>();
  s.node_count_m = j.at("node_count").get<int>();
  s.design_hash = j.at("design_hash").get<std::uint64_t>();
  const auto& e = j.at("envelope");
  s.envelope.alpha_min = e.at("alpha_min").get<double>();
  s.envelope.alpha_max = e.at("alpha_max").get<double>();
  s.envelope.re_min = e.at("re_min").get<double>();
  s.envelope.re_max = e.at("re_max").get<double>();
  const char* names[3] = {"c_l", "c_d", "c_m"};
  for (int ch = 0; ch < 3; ++ch) {
    const auto flat = j.at("coeffs").at(names[ch]).get<std::vector<double>>();
    const int k = s.degree_k;
    if (static_cast<int>(flat.size()) != k * k) {
      throw std::runtime_error("surrogate load: coefficient count mismatch");
    }
    Eigen::MatrixXd C(k, k);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) C(a, b) = flat[static_cast<std::size_t>(a * k + b)];
    }
    s.coeffs[static_cast<std::size_t>(ch)] = std::move(C);
    if (j.contains("rms_residual")) {
      s.rms_residual[static_cast<std::size_t>(ch)] = j.at("rms_residual").at(names[ch]).get<double>();
    }
  }
  return s;
}

}  // namespace glide
