#include "densefactor/state_evolution.hpp"

#include "densefactor/mp_engine.hpp"

#include <algorithm>
#include <cmath>

namespace densefactor {

namespace {

constexpr double kCovRegularizer = 1e-14;
constexpr double kBayesTol = 1e-12;

double clamp_overlap(double x) { return std::clamp(x, 0.0, 1.0 - kClampEps); }

}  // namespace

double theta0(double lambda, double Q0, double Q, double m, double q, int p) {
  const double l2 = lambda * lambda;
  const double num = l2 * (std::pow(Q0, p) - 2.0 * std::pow(m, p) + std::pow(q, p)) + 1.0;
  const double den = l2 * (std::pow(Q, p) - std::pow(q, p)) + 1.0;
  return num / (den * den);
}

double theta1(double lambda, double Q0, double Q, double m, double q, int p) {
  const double l2 = lambda * lambda;
  return theta0(lambda, Q0, Q, m, q, p) - 1.0 / (l2 * (std::pow(Q, p) - std::pow(q, p)) + 1.0);
}

Hats se_hats_general(const SEState& st, const SEModel& model, int p) {
  const double l2 = model.lambda * model.lambda;
  const double qp = std::pow(st.q, p);
  const double mp = std::pow(st.m, p);
  const double Q0p = 1.0;
  const double c11 = l2 * qp + kCovRegularizer;
  const double c12 = l2 * mp;
  const double c22 = l2 * Q0p + kCovRegularizer;
  if (c11 * c22 - c12 * c12 < -1e-10 * c22 * c22) {
    throw DomainError("se_hats: covariance is indefinite (m^2p > q^p)");
  }
  const double L11 = std::sqrt(c11);
  const double L21 = c12 / L11;
  const double s2 = std::max(c22 - L21 * L21, kCovRegularizer);
  const double s = std::sqrt(s2);
  const double V = std::max(l2 * (std::pow(st.Q, p) - qp), kVarMin);
  const Channel& ch = model.channel;

  if (ch.kind == Channel::Kind::AdditiveGaussian) {
    const double d2 = ch.noiseless() ? 0.0 : ch.noise_std * ch.noise_std;
    const double sy = std::sqrt(s2 + d2);
    const GaussHermiteRule& rule = gauss_hermite_rule(model.quad.node_count);
    Hats h;
    for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
      const double z1 = rule.nodes[a];
      const double xi = L11 * z1;
      const double mu = L21 * z1;
      double in_chi = 0.0, in_m = 0.0, in_q = 0.0;
      for (std::size_t b = 0; b < rule.nodes.size(); ++b) {
        const double y = mu + sy * rule.nodes[b];
        const OutputScore sc = output_score(ch, xi, y, V);
        in_chi += rule.weights[b] * (-sc.dg);
        in_q += rule.weights[b] * sc.g * sc.g;
        // E[(pi - mu) | y] = s2 / (s2 + d2) * (y - mu)
        in_m += rule.weights[b] * sc.g * (y - mu) / (s2 + d2);
      }
      h.chi += rule.weights[a] * in_chi;
      h.m += rule.weights[a] * in_m;
      h.q += rule.weights[a] * in_q;
    }
    return h;
  }

  auto expect = [&](auto&& body) {
    return std_gauss_expect_adaptive([&](double z1) { return body(L11 * z1, L21 * z1); }, model.quad);
  };
  Hats h;
  h.chi = expect([&](double xi, double mu) {
    const double pp = h_func(-mu / s);
    const OutputScore a = output_score(ch, xi, 1.0, V);
    const OutputScore b = output_score(ch, xi, -1.0, V);
    return -(pp * a.dg + (1.0 - pp) * b.dg);
  });
  h.q = expect([&](double xi, double mu) {
    const double pp = h_func(-mu / s);
    const OutputScore a = output_score(ch, xi, 1.0, V);
    const OutputScore b = output_score(ch, xi, -1.0, V);
    return pp * a.g * a.g + (1.0 - pp) * b.g * b.g;
  });
  // Stein: E[d g / d pi] = E[g (pi - mu)] / s2, and the sign likelihood
  // integrates that to phi(mu/s)/s * (g(+1) - g(-1)).
  h.m = expect([&](double xi, double mu) {
    const OutputScore a = output_score(ch, xi, 1.0, V);
    const OutputScore b = output_score(ch, xi, -1.0, V);
    return normal_pdf(mu / s) / s * (a.g - b.g);
  });
  return h;
}

Hats se_hats(const SEState& st, const SEModel& model, int p) {
  if (model.force_general) return se_hats_general(st, model, p);
  const Channel& ch = model.channel;
  if (ch.kind == Channel::Kind::AdditiveGaussian) {
    if (std::pow(st.m, 2 * p) > std::pow(st.q, p) * (1.0 + 1e-10) + 1e-14) {
      throw DomainError("se_hats: covariance is indefinite (m^2p > q^p)");
    }
    if (ch.noiseless()) {
      const double l2 = model.lambda * model.lambda;
      const double V = std::max(l2 * (std::pow(st.Q, p) - std::pow(st.q, p)), kVarMin);
      const double err = l2 * (1.0 - 2.0 * std::pow(st.m, p) + std::pow(st.q, p));
      return {1.0 / V, 1.0 / V, err / (V * V)};
    }
    // (lambda, Delta) -> (lambda / Delta, 1); hats scale by 1 / Delta^2
    const double d2 = ch.noise_std * ch.noise_std;
    const double lr = model.lambda / ch.noise_std;
    const double t0 = theta0(lr, 1.0, st.Q, st.m, st.q, p);
    const double t1 = theta1(lr, 1.0, st.Q, st.m, st.q, p);
    return {(t0 - t1) / d2, (t0 - t1) / d2, t0 / d2};
  }
  const bool bayes = std::abs(st.m - st.q) <= kBayesTol && std::abs(st.Q - 1.0) <= kBayesTol;
  if (!bayes) return se_hats_general(st, model, p);
  const double qp = std::pow(clamp_overlap(st.q), p);
  const double V = std::max(model.lambda * model.lambda * (1.0 - qp), kVarMin);
  const double k = std::sqrt(qp / (1.0 - qp));
  const double I = std_gauss_expect_adaptive(
      [k](double z) {
        const double X = -k * z;
        return normal_pdf(X) * -h_log_deriv(X);
      },
      model.quad);
  const double hat = 2.0 / V * I;
  return {hat, hat, hat};
}

SEState se_step(const SEState& in, const SEModel& model) {
  // Snap to m = q, Q = 1 when within kBayesTol; rounding errors grow along the transverse
  // direction near some fixed points.
  SEState st = in;
  if (std::abs(st.m - st.q) <= kBayesTol && std::abs(st.Q - 1.0) <= kBayesTol) {
    st.m = st.q = 0.5 * (st.m + st.q);
    st.Q = 1.0;
  }
  const double l2 = model.lambda * model.lambda;
  double A = 0.0, B = 0.0, X = 0.0;
  SEState out;
  bool first = true;
  for (const auto& sp : model.species) {
    if (sp.alpha == 0.0) continue;
    const Hats h = se_hats(st, model, sp.p);
    const double qp1 = std::pow(st.q, sp.p - 1);
    A += sp.alpha * l2 * std::pow(st.m, sp.p - 1) * h.m;
    B += sp.alpha * l2 * qp1 * h.q;
    X += sp.alpha * l2 * qp1 * h.chi;
    if (first) {
      out.hat_chi = h.chi;
      out.hat_m = h.m;
      out.hat_q = h.q;
      out.v_eff = l2 * (std::pow(st.Q, sp.p) - std::pow(st.q, sp.p));
      first = false;
    }
  }
  if (model.prior == Prior::Ising) {
    const double sb = std::sqrt(std::max(B, 0.0));
    out.m = shifted_gauss_expect([](double x) { return std::tanh(x); }, A, sb);
    out.q = shifted_gauss_expect([](double x) {
      const double t = std::tanh(x);
      return t * t;
    }, A, sb);
    out.Q = 1.0;
  } else {
    const double den = 1.0 + X;
    out.m = A / den;
    out.q = (A * A + B) / (den * den);
    out.Q = out.q + 1.0 / den;
  }
  return out;
}

Trajectory run_se(double m0, double q0, double Q0, const SEModel& model, const SEOptions& opt) {
  if (opt.max_t < 1) throw std::invalid_argument("run_se: max_t must be >= 1");
  if (model.species.empty()) throw std::invalid_argument("run_se: model has no species");
  if (!(opt.damping > 0.0 && opt.damping <= 1.0)) throw std::invalid_argument("run_se: damping must be in (0, 1]");
  const int p = model.species.front().p;
  Trajectory traj;
  SEState st;
  st.m = m0;
  st.q = q0;
  st.Q = Q0;
  auto push = [&](int t, double D) {
    const ErrorMetrics err = error_metrics(st.m, st.q, model.lambda, p);
    traj.records.push_back({t, st.m, st.q, st.Q, D, err.mse_input, err.mse_output});
  };
  push(0, 0.0);
  for (int t = 1; t <= opt.max_t; ++t) {
    SEState next = se_step(st, model);
    if (!std::isfinite(next.m) || !std::isfinite(next.q) || !std::isfinite(next.Q)) {
      traj.diverged = true;
      traj.diverged_step = t;
      traj.diagnostic = "non-finite state evolution iterate";
      break;
    }
    const double D = std::max({std::abs(next.m - st.m), std::abs(next.q - st.q), std::abs(next.Q - st.Q)});
    if (opt.damping != 1.0) {
      next.m = st.m + opt.damping * (next.m - st.m);
      next.q = st.q + opt.damping * (next.q - st.q);
      next.Q = st.Q + opt.damping * (next.Q - st.Q);
    }
    st = next;
    traj.steps = t;
    push(t, D);
    if (D <= opt.conv_tol) {
      traj.converged = true;
      break;
    }
  }
  return traj;
}

}  // namespace densefactor
