#include "densefactor/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace densefactor {

void QuadratureSpec::validate() const {
  if (node_count < 3) throw std::invalid_argument("QuadratureSpec: node_count must be >= 3");
  if (!(abs_tol > 0.0)) throw std::invalid_argument("QuadratureSpec: abs_tol must be > 0");
  if (fallback_lo != -fallback_hi || !(fallback_hi > 0.0)) {
    throw std::invalid_argument("QuadratureSpec: fallback interval must be symmetric about 0");
  }
}

namespace {

// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
GaussHermiteRule build_rule(int n) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw SolverError("Gauss-Hermite eigen solve failed");

  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    rule.nodes[k] = es.eigenvalues()(k);
    const double v0 = es.eigenvectors()(0, k);
    rule.weights[k] = v0 * v0;
  }
  // enforce exact mirror symmetry so odd integrands vanish
  for (int k = 0; k < n / 2; ++k) {
    const int j = n - 1 - k;
    const double z = 0.5 * (rule.nodes[j] - rule.nodes[k]);
    const double w = 0.5 * (rule.weights[j] + rule.weights[k]);
    rule.nodes[k] = -z;
    rule.nodes[j] = z;
    rule.weights[k] = w;
    rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite_rule(int node_count) {
  if (node_count < 3) throw std::invalid_argument("gauss_hermite_rule: node_count must be >= 3");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(node_count);
  if (it == cache.end()) {
    it = cache.emplace(node_count, std::make_unique<GaussHermiteRule>(build_rule(node_count))).first;
  }
  return *it->second;
}

double std_gauss_expect_adaptive(const std::function<double(double)>& f,
                                 const QuadratureSpec& spec) {
  auto integrand = [&](double z) {
    const double fz = f(z);
    if (!std::isfinite(fz)) {
      throw EvaluationError("non-finite integrand at z=" + std::to_string(z));
    }
    return normal_pdf(z) * fz;
  };
  double err = 0.0;
  // relative tolerance for boost; integrands here are O(1)
  const double tol = std::max(spec.abs_tol, 1e-15);
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, spec.fallback_lo, spec.fallback_hi, 15, tol, &err);
  return value;
}

double shifted_gauss_expect(const std::function<double(double)>& g, double mu, double s) {
  if (!std::isfinite(mu) || !std::isfinite(s)) throw EvaluationError("shifted_gauss_expect: non-finite mean or scale");
  s = std::abs(s);
  if (s == 0.0) return g(mu);
  constexpr double kHalfRange = 10.0;
  auto integrand = [&](double z) {
    const double gz = g(mu + s * z);
    if (!std::isfinite(gz)) throw EvaluationError("non-finite integrand at z=" + std::to_string(z));
    return normal_pdf(z) * gz;
  };
  // Panels are at most 1 wide in z, and at most max(1, distance to x = 0) wide in x.
  double acc = 0.0;
  std::vector<std::pair<double, double>> stack;
  for (int k = static_cast<int>(2 * kHalfRange) - 1; k >= 0; --k) {
    stack.emplace_back(-kHalfRange + k, -kHalfRange + k + 1);
  }
  while (!stack.empty()) {
    const auto [za, zb] = stack.back();
    stack.pop_back();
    const double xa = mu + s * za, xb = mu + s * zb;
    const double dist = (xa <= 0.0 && xb >= 0.0) ? 0.0 : std::min(std::abs(xa), std::abs(xb));
    if (xb - xa > std::max(1.0, dist)) {
      const double zm = 0.5 * (za + zb);
      stack.emplace_back(zm, zb);
      stack.emplace_back(za, zm);
      continue;
    }
    acc += boost::math::quadrature::gauss<double, 15>::integrate(integrand, za, zb);
  }
  return acc;
}

double h_func(double x) { return 0.5 * std::erfc(x / kSqrt2); }

namespace {

// H(x)/phi(x) by modified Lentz on x + 1/(x + 2/(x + 3/(x + ...)))
double mills_ratio_cf(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double c = f;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    d = x + k * d;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    c = x + k / c;
    if (std::abs(c) < tiny) c = tiny;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / f;
}

constexpr double kTailSwitch = 5.0;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

}  // namespace

double h_log_deriv(double x) {
  if (x >= kTailSwitch) return -1.0 / mills_ratio_cf(x);
  return -normal_pdf(x) / h_func(x);
}

double log_h(double x) {
  if (x >= kTailSwitch) return -0.5 * x * x - kLogSqrt2Pi + std::log(mills_ratio_cf(x));
  if (x <= -kTailSwitch) return std::log1p(-h_func(-x));
  return std::log(h_func(x));
}

FixedPointResult damped_fixed_point(const std::function<double(double)>& map, double x0,
                                    double damping, double tol, long max_iter) {
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw std::invalid_argument("damped_fixed_point: damping must lie in (0,1]");
  }
  auto clamp = [](double x) { return std::clamp(x, 0.0, 1.0 - kClampEps); };
  FixedPointResult out;
  double x = clamp(x0);
  for (long k = 1; k <= max_iter; ++k) {
    const double y = map(x);
    if (!std::isfinite(y)) {
      throw SolverError("damped_fixed_point: non-finite map value at x=" + std::to_string(x));
    }
    out.value = x;
    out.iterations = k;
    out.residual = std::abs(y - x);
    if (out.residual <= tol) {
      out.converged = true;
      return out;
    }
    x = clamp(x + damping * (y - x));
  }
  out.value = x;
  out.residual = std::abs(map(x) - x);
  out.converged = out.residual <= tol;
  return out;
}

double bracket_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (!std::isfinite(flo) || !std::isfinite(fhi)) {
    throw EvaluationError("bracket_root: non-finite value at bracket end");
  }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw BracketError("bracket_root: no sign change on [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
  }
  auto done = [tol](double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return std::abs(b - a) <= std::max(tol, 4.0 * std::numeric_limits<double>::epsilon() * scale);
  };
  std::uintmax_t max_iter = 2000;
  const auto r = boost::math::tools::bisect(f, lo, hi, done, max_iter);
  return 0.5 * (r.first + r.second);
}

double minimize_scalar(const std::function<double(double)>& f, double lo, double hi) {
  const int bits = std::numeric_limits<double>::digits / 2;
  return boost::math::tools::brent_find_minima(f, lo, hi, bits).first;
}

}  // namespace densefactor
