#include "densefactor/replica.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

namespace densefactor {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMMax = 1.0 - kClampEps;

double clamp_m(double m) { return std::clamp(m, 0.0, kMMax); }

double ising_map(double K, const QuadratureSpec&) {
  if (K <= 0.0) return 0.0;
  return shifted_gauss_expect([](double x) { return std::tanh(x); }, K, std::sqrt(K));
}

double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

double ising_log_cosh(double K, const QuadratureSpec&) {
  if (K <= 0.0) return 0.0;
  return shifted_gauss_expect(log_cosh, K, std::sqrt(K));
}

// K with ising_map(K) = m
double ising_map_inverse(double m, const QuadratureSpec& quad) {
  if (m <= 0.0) return 0.0;
  static std::mutex mu;
  static std::map<std::pair<int, double>, double> cache;
  const auto key = std::make_pair(quad.node_count, m);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  double hi = 1.0;
  while (ising_map(hi, quad) < m && hi < 1e6) hi *= 2.0;
  double K = kInf;
  if (ising_map(hi, quad) >= m) {
    K = bracket_root([&](double k) { return ising_map(k, quad) - m; }, 0.0, hi, 1e-14 * hi);
  }
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, K);
  return K;
}

double sign_kappa_integral(double m, int p, const QuadratureSpec& quad) {
  const double mp = std::pow(clamp_m(m), p);
  const double k = std::sqrt(mp / (1.0 - mp));
  return std_gauss_expect_adaptive(
      [k](double z) {
        const double X = -k * z;
        return normal_pdf(X) * -h_log_deriv(X);
      },
      quad);
}

double sign_entropy_integral(double m, int p, const QuadratureSpec& quad) {
  const double mp = std::pow(clamp_m(m), p);
  const double k = std::sqrt(mp / (1.0 - mp));
  return std_gauss_expect_adaptive(
      [k](double z) {
        const double X = -k * z;
        return h_func(X) * log_h(X);
      },
      quad);
}

// alpha lambda^2 m^{p-1} / (1 + lambda^2 (1 - m^p)), or its lambda -> inf limit
double gauss_channel_field(double m, double alpha, double lambda, int p, bool lambda_infinite) {
  if (alpha == 0.0) return 0.0;
  const double mp1 = std::pow(m, p - 1);
  const double one_minus = 1.0 - std::pow(m, p);
  if (lambda_infinite) return alpha * mp1 / one_minus;
  const double l2 = lambda * lambda;
  return alpha * l2 * mp1 / (1.0 + l2 * one_minus);
}

double delta_f_term(double m, double alpha, double lambda, int p, bool lambda_infinite) {
  if (alpha == 0.0) return 0.0;
  const double l2 = lambda * lambda;
  const double r = lambda_infinite ? 1.0 : l2 / (1.0 + l2);
  return alpha / (2.0 * p) * std::log1p(-r * std::pow(m, p));
}

bool is_gaussian_prior(const ModelFamily& f) { return f.kind != ModelFamily::Kind::IsingGauss; }

double target_field(const ModelFamily& family, double m, const QuadratureSpec& quad) {
  if (family.kind == ModelFamily::Kind::IsingGauss) return ising_map_inverse(m, quad);
  return m / (1.0 - m);
}

std::vector<double> scan_grid(int uniform_points) {
  std::vector<double> g;
  for (int k = 40; k >= 4; --k) g.push_back(std::pow(10.0, -k / 4.0));
  for (int k = 1; k < uniform_points; ++k) g.push_back(static_cast<double>(k) / uniform_points);
  for (int k = 8; k <= 48; ++k) g.push_back(1.0 - std::pow(10.0, -k / 4.0));
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

std::vector<double> inversion_grid(const ModelFamily& family) {
  std::vector<double> g;
  for (int k = 24; k >= 4; --k) g.push_back(std::pow(10.0, -k / 4.0));
  for (int k = 1; k < 600; ++k) g.push_back(k / 600.0);
  const int deepest = family.kind == ModelFamily::Kind::IsingGauss ? 36 : 44;
  for (int k = 10; k <= deepest; ++k) g.push_back(1.0 - std::pow(10.0, -k / 4.0));
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

BranchWindow window_from_curve(const std::function<double(double)>& curve, const std::vector<double>& grid) {
  std::vector<double> c(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) c[k] = curve(grid[k]);
  auto finite_or_big = [&](double m) {
    const double v = curve(m);
    return std::isfinite(v) ? v : 1e300;
  };
  BranchWindow w;
  std::optional<std::size_t> k_min;
  for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
    if (!std::isfinite(c[k])) continue;
    if (c[k] < c[k - 1] && c[k] <= c[k + 1]) k_min = k;
  }
  if (k_min) {
    const std::size_t k = *k_min;
    const double m = minimize_scalar(finite_or_big, grid[k - 1], grid[k + 1]);
    w.m_lower = m;
    w.lower = std::min(finite_or_big(m), c[k]);
    if (c[k] < finite_or_big(m)) w.m_lower = grid[k];
  }
  std::optional<std::size_t> k_max;
  const std::size_t k_end = k_min ? *k_min : grid.size() - 1;
  for (std::size_t j = 1; j < k_end; ++j) {
    if (!std::isfinite(c[j]) || !std::isfinite(c[j - 1]) || !std::isfinite(c[j + 1])) continue;
    if (c[j] > c[j - 1] && c[j] >= c[j + 1]) k_max = j;
  }
  if (k_max) {
    const std::size_t j = *k_max;
    const double mm = minimize_scalar([&](double x) { return -finite_or_big(x); }, grid[j - 1], grid[j + 1]);
    w.m_upper = mm;
    w.upper = std::max(finite_or_big(mm), c[j]);
    if (c[j] > finite_or_big(mm)) w.m_upper = grid[j];
  }
  return w;
}

double lambda_of_m(const ModelFamily& family, double alpha, double m, const QuadratureSpec& quad) {
  const double K = target_field(family, m, quad);
  if (!std::isfinite(K)) return kInf;
  if (family.kind == ModelFamily::Kind::MixedGaussGauss) {
    auto resid = [&](double L) {
      const double lam = std::sqrt(L);
      return gauss_channel_field(m, family.alpha1, lam, family.p, false) +
             gauss_channel_field(m, alpha, lam, family.p2, false) - K;
    };
    const double limit = gauss_channel_field(m, family.alpha1, 0.0, family.p, true) +
                         gauss_channel_field(m, alpha, 0.0, family.p2, true);
    if (limit <= K) return kInf;
    double hi = 1.0;
    while (resid(hi) < 0.0) {
      hi *= 4.0;
      if (hi > 1e14) return kInf;
    }
    return std::sqrt(bracket_root(resid, 0.0, hi, 1e-15 * hi));
  }
  const int p = family.p;
  const double den = alpha * std::pow(m, p - 1) - K * (1.0 - std::pow(m, p));
  if (den <= 0.0) return kInf;
  return std::sqrt(K / den);
}

struct RootScan {
  std::vector<double> roots;  // nonzero fixed points, sorted
  std::vector<std::string> diagnostics;
};

RootScan scan_roots(const ModelFamily& family, double alpha, double lambda, const ReplicaOptions& opt) {
  auto rhs = [&](double m) { return eos_rhs(family, m, alpha, lambda, opt); };
  auto resid = [&](double m) { return rhs(m) - m; };
  const std::vector<double> grid = scan_grid(opt.scan_points);
  std::vector<double> r(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) r[k] = resid(grid[k]);
  RootScan out;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    if (r[k] == 0.0) {
      out.roots.push_back(grid[k]);
    } else if ((r[k] > 0.0) != (r[k + 1] > 0.0) && r[k + 1] != 0.0) {
      out.roots.push_back(bracket_root(resid, grid[k], grid[k + 1], 1e-15));
    }
  }
  for (double x0 : {1e-6, 0.5, 1.0 - 1e-6}) {
    FixedPointResult fp;
    try {
      fp = damped_fixed_point(rhs, x0, 0.5, 1e-10, 2000);
    } catch (const std::exception& err) {
      out.diagnostics.push_back(fmt::format("iteration from {} failed: {}", x0, err.what()));
      continue;
    }
    if (!fp.converged) {
      out.diagnostics.push_back(fmt::format("iteration from {} did not converge (residual {:.3g}); dropped", x0, fp.residual));
      continue;
    }
    if (fp.value <= opt.dedup_tol) continue;
    const bool known = std::any_of(out.roots.begin(), out.roots.end(),
                                   [&](double x) { return std::abs(x - fp.value) <= 1e-6; });
    if (!known) out.roots.push_back(fp.value);
  }
  std::sort(out.roots.begin(), out.roots.end());
  std::vector<double> dedup;
  for (double x : out.roots) {
    if (x <= opt.dedup_tol) continue;
    if (dedup.empty() || x - dedup.back() > opt.dedup_tol) dedup.push_back(x);
  }
  out.roots = std::move(dedup);
  return out;
}

bool root_is_stable(const ModelFamily& family, double m, double alpha, double lambda, const ReplicaOptions& opt) {
  const double h = 1e-6 * std::min(m, 1.0 - m);
  const double d = (eos_rhs(family, m + h, alpha, lambda, opt) - eos_rhs(family, m - h, alpha, lambda, opt)) / (2.0 * h);
  return std::abs(d) < 1.0;
}

BranchWindow window_for(const ModelFamily& family, double alpha, double lambda, const ReplicaOptions& opt) {
  if (family.has_lambda()) return branch_window(family, alpha, opt);
  return alpha_branch_window(family, lambda, opt);
}

}  // namespace

std::string to_string(const ModelFamily& f) {
  std::string base;
  switch (f.kind) {
    case ModelFamily::Kind::IsingGauss: base = fmt::format("ising-gauss(p={})", f.p); break;
    case ModelFamily::Kind::GaussGauss: base = fmt::format("gauss-gauss(p={})", f.p); break;
    case ModelFamily::Kind::GaussSign: base = fmt::format("gauss-sign(p={})", f.p); break;
    case ModelFamily::Kind::MixedGaussGauss:
      base = fmt::format("mixed(p1={},alpha1={},p2={})", f.p, f.alpha1, f.p2);
      break;
  }
  return f.lambda_infinite ? base + "[lambda=inf]" : base;
}

ModelFamily parse_family(const std::string& name, int p, int p2, double alpha1) {
  if (name == "ising-gauss") return ModelFamily::ising_gauss(p);
  if (name == "gauss-gauss") return ModelFamily::gauss_gauss(p);
  if (name == "gauss-sign") return ModelFamily::gauss_sign(p);
  if (name == "mixed") return ModelFamily::mixed(p, alpha1, p2);
  throw std::invalid_argument("unknown family '" + name + "' (expected ising-gauss|gauss-gauss|gauss-sign|mixed)");
}

double eos_field(const ModelFamily& family, double m, double alpha, double lambda, const ReplicaOptions& opt) {
  m = clamp_m(m);
  switch (family.kind) {
    case ModelFamily::Kind::IsingGauss:
    case ModelFamily::Kind::GaussGauss:
      return gauss_channel_field(m, alpha, lambda, family.p, family.lambda_infinite);
    case ModelFamily::Kind::MixedGaussGauss:
      return gauss_channel_field(m, family.alpha1, lambda, family.p, family.lambda_infinite) +
             gauss_channel_field(m, alpha, lambda, family.p2, family.lambda_infinite);
    case ModelFamily::Kind::GaussSign: {
      if (alpha == 0.0 || m == 0.0) return 0.0;
      const double I = sign_kappa_integral(m, family.p, opt.quad);
      return 2.0 * alpha * std::pow(m, family.p - 1) * I / (1.0 - std::pow(m, family.p));
    }
  }
  return 0.0;
}

double eos_rhs(const ModelFamily& family, double m, double alpha, double lambda, const ReplicaOptions& opt) {
  const double K = eos_field(family, m, alpha, lambda, opt);
  if (family.kind == ModelFamily::Kind::IsingGauss) return ising_map(K, opt.quad);
  return K / (1.0 + K);
}

double gaussian_delta_f(const ModelFamily& family, double m, double alpha, double lambda) {
  if (!is_gaussian_prior(family) || family.kind == ModelFamily::Kind::GaussSign) {
    throw std::invalid_argument("gaussian_delta_f: family must have Gaussian prior and additive noise");
  }
  if (!(m >= 0.0 && m < 1.0)) throw std::out_of_range("gaussian_delta_f: m must lie in [0,1)");
  double df = 0.5 * std::log1p(-m) + 0.5 * m;
  if (family.kind == ModelFamily::Kind::MixedGaussGauss) {
    df -= delta_f_term(m, family.alpha1, lambda, family.p, family.lambda_infinite);
    df -= delta_f_term(m, alpha, lambda, family.p2, family.lambda_infinite);
  } else {
    df -= delta_f_term(m, alpha, lambda, family.p, family.lambda_infinite);
  }
  return df;
}

double free_energy(const ModelFamily& family, double m, double alpha, double lambda, const ReplicaOptions& opt) {
  if (!(m >= 0.0 && m < 1.0)) throw std::out_of_range("free_energy: m must lie in [0,1)");
  m = clamp_m(m);
  const int p = family.p;
  switch (family.kind) {
    case ModelFamily::Kind::IsingGauss: {
      const double K = eos_field(family, m, alpha, lambda, opt);
      const double l2 = lambda * lambda;
      const double last = family.lambda_infinite ? std::log1p(-std::pow(m, p))
                                                 : std::log1p(l2 * (1.0 - std::pow(m, p)));
      return 0.5 * K * (1.0 + m) - ising_log_cosh(K, opt.quad) + alpha / (2.0 * p) * last;
    }
    case ModelFamily::Kind::GaussGauss:
    case ModelFamily::Kind::MixedGaussGauss:
      return -gaussian_delta_f(family, m, alpha, lambda);
    case ModelFamily::Kind::GaussSign:
      return -(0.5 * (m + std::log1p(-m)) + 2.0 * alpha / p * sign_entropy_integral(m, p, opt.quad));
  }
  return 0.0;
}

std::string to_string(BranchKind kind) {
  switch (kind) {
    case BranchKind::Paramagnet: return "paramagnet";
    case BranchKind::Low: return "low";
    case BranchKind::High: return "high";
    case BranchKind::Unstable: return "unstable";
  }
  return "unknown";
}

const EosSolution* EosBranches::find(BranchKind kind) const {
  const EosSolution* hit = nullptr;
  for (const auto& s : solutions) {
    if (s.kind == kind) hit = &s;
  }
  return hit;
}

PmStability paramagnet_stability(const ModelFamily& family, double alpha, double lambda) {
  PmStability out;
  auto p2_rule = [&](double a) {
    const double l2 = lambda * lambda;
    const double slope = family.lambda_infinite ? a : a * l2 / (1.0 + l2);
    out.stable = slope < 1.0;
    if (!family.lambda_infinite && a > 1.0) out.lambda_star = 1.0 / std::sqrt(a - 1.0);
  };
  switch (family.kind) {
    case ModelFamily::Kind::IsingGauss:
    case ModelFamily::Kind::GaussGauss:
      if (family.p == 2) p2_rule(alpha);
      break;
    case ModelFamily::Kind::MixedGaussGauss:
      if (family.p == 2) {
        p2_rule(family.alpha1);
      } else if (family.p2 == 2) {
        p2_rule(alpha);
      }
      break;
    case ModelFamily::Kind::GaussSign:
      if (family.p == 2) out.stable = 2.0 * alpha / M_PI < 1.0;
      break;
  }
  return out;
}

namespace {

// Closed-form (m_d, lambda_d) for the pure p=3 Gaussian family; empty when alpha <= 3.
std::optional<std::pair<double, double>> gauss_p3_spinodal(const ModelFamily& family, double alpha) {
  if (family.kind != ModelFamily::Kind::GaussGauss || family.p != 3 || family.lambda_infinite) return std::nullopt;
  if (alpha <= 3.0) return std::nullopt;
  const double md = (alpha - std::sqrt(alpha * (alpha - 3.0))) / 3.0;
  return std::make_pair(md, 1.0 / std::sqrt(md * md * md - alpha * md * md + alpha * md - 1.0));
}

}  // namespace

BranchWindow branch_window(const ModelFamily& family, double alpha, const ReplicaOptions& opt) {
  if (!family.has_lambda()) return {};
  BranchWindow w = window_from_curve([&](double m) { return lambda_of_m(family, alpha, m, opt.quad); },
                                     inversion_grid(family));
  if (const auto exact = gauss_p3_spinodal(family, alpha)) {
    w.m_lower = exact->first;
    w.lower = exact->second;
  }
  return w;
}

BranchWindow alpha_branch_window(const ModelFamily& family, double lambda, const ReplicaOptions& opt) {
  auto curve = [&](double m) {
    const double K = target_field(family, m, opt.quad);
    if (!std::isfinite(K)) return kInf;
    const double base = eos_field(family, m, 0.0, lambda, opt);
    const double unit = eos_field(family, m, 1.0, lambda, opt) - base;
    if (!(unit > 0.0)) return kInf;
    const double a = (K - base) / unit;
    return a > 0.0 ? a : kInf;
  };
  return window_from_curve(curve, inversion_grid(family));
}

EosBranches solve_eos(const ModelFamily& family, double alpha, double lambda, const ReplicaOptions& opt) {
  if (!(alpha > 0.0)) throw std::invalid_argument("solve_eos: alpha must be > 0");
  if (family.has_lambda() && !(lambda > 0.0)) throw std::invalid_argument("solve_eos: lambda must be > 0");
  EosBranches out;
  RootScan scan = scan_roots(family, alpha, lambda, opt);
  out.diagnostics = std::move(scan.diagnostics);

  const PmStability pm = paramagnet_stability(family, alpha, lambda);
  out.solutions.push_back({0.0, free_energy(family, 0.0, alpha, lambda, opt), BranchKind::Paramagnet, pm.stable});
  std::optional<BranchWindow> window;
  for (double m : scan.roots) {
    EosSolution s;
    s.m = m;
    s.stable = root_is_stable(family, m, alpha, lambda, opt);
    s.free_energy = free_energy(family, m, alpha, lambda, opt);
    if (!s.stable) {
      s.kind = BranchKind::Unstable;
    } else {
      if (!window) window = window_for(family, alpha, lambda, opt);
      s.kind = window->lower && m >= window->m_lower ? BranchKind::High : BranchKind::Low;
    }
    out.solutions.push_back(s);
  }
  double best = kInf;
  bool any_stable = std::any_of(out.solutions.begin(), out.solutions.end(), [](const EosSolution& s) { return s.stable; });
  for (std::size_t k = 0; k < out.solutions.size(); ++k) {
    const auto& s = out.solutions[k];
    if (any_stable && !s.stable) continue;
    if (s.free_energy < best) {
      best = s.free_energy;
      out.dominant = k;
    }
  }
  return out;
}

std::optional<double> spinodal(const ModelFamily& family, double alpha, const ReplicaOptions& opt) {
  if (!family.has_lambda()) return std::nullopt;
  return branch_window(family, alpha, opt).lower;
}

std::optional<double> critical_line(const ModelFamily& family, double alpha, const ReplicaOptions& opt) {
  if (!family.has_lambda()) return std::nullopt;
  const auto lambda_d = spinodal(family, alpha, opt);
  if (!lambda_d) return std::nullopt;
  // f(high) - f(competitor); competitor is the PM when stable, else the low branch
  auto gap = [&](double lambda) {
    const RootScan scan = scan_roots(family, alpha, lambda, opt);
    std::vector<double> stable;
    for (double m : scan.roots) {
      if (root_is_stable(family, m, alpha, lambda, opt)) stable.push_back(m);
    }
    if (stable.empty()) return 1.0;
    const double f_high = free_energy(family, stable.back(), alpha, lambda, opt);
    if (paramagnet_stability(family, alpha, lambda).stable) {
      return f_high - free_energy(family, 0.0, alpha, lambda, opt);
    }
    if (stable.size() < 2) return -1.0;
    return f_high - free_energy(family, stable.front(), alpha, lambda, opt);
  };
  const double lo = *lambda_d * (1.0 + 1e-7);
  if (gap(lo) <= 0.0) return lo;
  double hi = 10.0 * *lambda_d;
  while (gap(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e6) return std::nullopt;
  }
  return bracket_root(gap, lo, hi, 1e-10 * *lambda_d);
}

CodeLimit shannon_code_limit(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("shannon_code_limit: rate must be > 0");
  const double c0 = 1.0 + std::log(2.0 * M_PI);
  // -f(0) and -f(1) of the random-code limit
  auto neg_f0 = [&](double lam) { return std::log(2.0) - (c0 + std::log1p(lam * lam)) / (2.0 * rate); };
  auto neg_f1 = [&](double) { return -c0 / (2.0 * rate); };
  auto diff = [&](double lam) { return neg_f0(lam) - neg_f1(lam); };
  double hi = std::exp2(rate) + 1.0;
  while (diff(hi) > 0.0) hi *= 2.0;
  CodeLimit out;
  out.lambda_c = bracket_root(diff, 0.0, hi, 0.0);
  out.capacity_check = 0.5 * std::log2(1.0 + out.lambda_c * out.lambda_c);
  return out;
}

std::string classify_phase(const ModelFamily& family, double alpha, double lambda, const ReplicaOptions& opt) {
  const PmStability pm = paramagnet_stability(family, alpha, lambda);
  const RootScan scan = scan_roots(family, alpha, lambda, opt);
  std::vector<double> stable;
  for (double m : scan.roots) {
    if (root_is_stable(family, m, alpha, lambda, opt)) stable.push_back(m);
  }
  const bool ising_p2 = family.kind == ModelFamily::Kind::IsingGauss && family.p == 2 && family.has_lambda();
  if (!ising_p2) {
    if (!pm.stable) return "easy";
    return stable.empty() ? "impossible" : "hard";
  }
  if (pm.stable) return stable.empty() ? "PM" : "I";
  if (stable.size() >= 2) return "II";
  if (stable.empty()) return "PM";
  const BranchWindow w = branch_window(family, alpha, opt);
  if (!w.lower) return "IV";
  if (lambda < *w.lower) return "V";
  if (w.upper && lambda <= *w.upper) return "II";
  return "III";
}

PhaseDiagram trace_phase_diagram(const ModelFamily& family, const std::vector<double>& alpha_grid,
                                 const std::vector<double>& lambda_grid, const ReplicaOptions& opt, int jobs) {
  PhaseDiagram d;
  d.points.resize(alpha_grid.size() * lambda_grid.size());
  d.lines.resize(alpha_grid.size());
  const std::size_t n_tasks = d.points.size() + d.lines.size();
  auto work = [&](std::size_t task) {
    if (task < d.points.size()) {
      const double a = alpha_grid[task / lambda_grid.size()];
      const double l = lambda_grid[task % lambda_grid.size()];
      PhasePoint pt;
      pt.alpha = a;
      pt.lambda = l;
      pt.region = classify_phase(family, a, l, opt);
      const EosBranches br = solve_eos(family, a, l, opt);
      const double f_para = br.solutions.front().free_energy;
      if (const auto* s = br.find(BranchKind::Low)) {
        pt.m_low = s->m;
        pt.f_low_minus_f_para = s->free_energy - f_para;
      }
      if (const auto* s = br.find(BranchKind::High)) {
        pt.m_high = s->m;
        pt.f_high_minus_f_para = s->free_energy - f_para;
      }
      d.points[task] = pt;
    } else {
      const std::size_t k = task - d.points.size();
      TransitionLines line;
      line.alpha = alpha_grid[k];
      line.lambda_star = paramagnet_stability(family, line.alpha, 1.0).lambda_star;
      line.lambda_d = spinodal(family, line.alpha, opt);
      line.lambda_c = critical_line(family, line.alpha, opt);
      d.lines[k] = line;
    }
  };
  const std::size_t n_threads = static_cast<std::size_t>(std::max(1, jobs));
  if (n_threads == 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) work(t);
    return d;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex fail_mu;
  for (std::size_t w = 0; w < n_threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t t = w; t < n_tasks; t += n_threads) work(t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fail_mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return d;
}

namespace {

std::string opt_num(const std::optional<double>& x) { return x ? fmt::format("{:.12g}", *x) : std::string(); }

}  // namespace

void write_phase_csv(std::ostream& os, const PhaseDiagram& d) {
  os << "alpha,lambda,region,m_para,m_low,m_high,f_low_minus_f_para,f_high_minus_f_para\n";
  for (const auto& pt : d.points) {
    os << fmt::format("{:.12g},{:.12g},{},0,{},{},{},{}\n", pt.alpha, pt.lambda, pt.region, opt_num(pt.m_low),
                      opt_num(pt.m_high), opt_num(pt.f_low_minus_f_para), opt_num(pt.f_high_minus_f_para));
  }
}

void write_lines_csv(std::ostream& os, const PhaseDiagram& d) {
  os << "alpha,lambda_star,lambda_d,lambda_c\n";
  for (const auto& l : d.lines) {
    os << fmt::format("{:.12g},{},{},{}\n", l.alpha, opt_num(l.lambda_star), opt_num(l.lambda_d), opt_num(l.lambda_c));
  }
}

}  // namespace densefactor
