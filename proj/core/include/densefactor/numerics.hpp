#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace densefactor {

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BracketError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * Settings for expectations over a standard normal variable.
 * node_count is the Gauss-Hermite order; the fallback interval is used by
 * the adaptive rule for integrands built from H-ratios.
 */
struct QuadratureSpec {
  int node_count = 101;
  double fallback_lo = -10.0;
  double fallback_hi = 10.0;
  double abs_tol = 1e-12;

  void validate() const;
};

// Nodes and weights for E[f(z)], z ~ N(0,1). Weights sum to 1.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GaussHermiteRule& gauss_hermite_rule(int node_count);

template <class F>
double std_gauss_expect(F&& f, const QuadratureSpec& spec = {}) {
  const GaussHermiteRule& rule = gauss_hermite_rule(spec.node_count);
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double fz = f(rule.nodes[k]);
    if (!std::isfinite(fz)) {
      throw EvaluationError("non-finite integrand at Gauss-Hermite node " +
                            std::to_string(k) + " (z=" + std::to_string(rule.nodes[k]) + ")");
    }
    acc += rule.weights[k] * fz;
  }
  return acc;
}

// Adaptive Gauss-Kronrod over the fallback interval, weighted by the
// standard normal density. Used when the integrand is not polynomial-like.
double std_gauss_expect_adaptive(const std::function<double(double)>& f,
                                 const QuadratureSpec& spec = {});

// E[g(mu + s z)], z ~ N(0,1), for g whose complex singularities lie on the imaginary axis
// at |Im x| >= pi/2 (tanh, log cosh). Composite Gauss-Legendre over z in [-10, 10],
// refined in x towards the origin.
double shifted_gauss_expect(const std::function<double(double)>& g, double mu, double s);

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kSqrt2 = 1.41421356237309504880;

inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// H(x) = erfc(x / sqrt 2) / 2, the standard normal upper tail.
double h_func(double x);

// H'(x)/H(x) = -phi(x)/H(x). Uses a continued fraction for the Mills
// ratio in the upper tail so that nothing underflows for |x| <= 40.
double h_log_deriv(double x);

// ln H(x), stable in both tails.
double log_h(double x);

struct FixedPointResult {
  double value = 0.0;
  long iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

inline constexpr double kClampEps = 1e-12;

FixedPointResult damped_fixed_point(const std::function<double(double)>& map, double x0,
                                    double damping = 0.5, double tol = 1e-10,
                                    long max_iter = 100000);

// Bisection on a sign-changing bracket. Throws BracketError when
// f(lo) and f(hi) have the same strict sign.
double bracket_root(const std::function<double(double)>& f, double lo, double hi,
                    double tol = 1e-14);

// Minimizer of a unimodal function on [lo, hi] (Brent).
double minimize_scalar(const std::function<double(double)>& f, double lo, double hi);

}  // namespace densefactor
