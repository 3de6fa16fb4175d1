#include "densefactor/mp_engine.hpp"

#include "densefactor/numerics.hpp"
#include "densefactor/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace densefactor {

namespace {

void check_scheme(const InitScheme& scheme) {
  if (scheme.kind != InitScheme::Kind::Informative && !(scheme.a > 0.0 && scheme.a < 1.0)) {
    throw std::invalid_argument("init scheme parameter a must lie in (0,1), got " + std::to_string(scheme.a));
  }
}

void init_values(const InitScheme& scheme, const Instance& inst, std::uint64_t seed,
                 std::vector<double>& m, std::vector<double>& v) {
  check_scheme(scheme);
  const std::size_t n = inst.truth.size();
  m.assign(n, 0.0);
  v.assign(n, 1.0);
  auto rng = make_stream(seed, StreamLabel::Init);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double a = scheme.a;
  const double spread = std::sqrt(std::max(a - a * a, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    const double x = inst.truth[k];
    switch (scheme.kind) {
      case InitScheme::Kind::Informative:
        m[k] = x;
        v[k] = inst.prior == Prior::Ising ? 1.0 : x * x;
        break;
      case InitScheme::Kind::Uninformative:
        m[k] = a * x + spread * normal(rng);
        break;
      case InitScheme::Kind::TrulyRandom:
        m[k] = std::sqrt(a) * normal(rng);
        break;
      case InitScheme::Kind::SignInformative:
        m[k] = x * (a + spread * normal(rng));
        v[k] = m[k] * m[k] / a;
        break;
    }
  }
}

[[noreturn]] void diverge(const char* where, std::size_t var, int mu, std::size_t edge) {
  throw DivergenceError(std::string(where) + ": non-finite value at variable " + std::to_string(var) +
                            ", component " + std::to_string(mu) + ", edge " + std::to_string(edge),
                        var, mu, edge);
}

// prefix/suffix leave-one-out products of x[0..p)
template <int P>
inline void leave_one_out(const double* x, int p, double* out) {
  const int n = P > 0 ? P : p;
  double pre = 1.0;
  for (int k = 0; k < n; ++k) {
    out[k] = pre;
    pre *= x[k];
  }
  double suf = 1.0;
  for (int k = n - 1; k >= 0; --k) {
    out[k] *= suf;
    suf *= x[k];
  }
}

// Per-edge G-AMP kernels over the mu axis. The fixed-arity versions are
// elementwise so the compiler can vectorize them; reductions are summed by the caller.
struct EdgeRows {
  std::array<const double*, kMaxArity> m{}, v{}, mp{};
  std::array<double*, kMaxArity> is{}, ts{};
};

template <int P>
struct GampKernel {
  static void factor(const EdgeRows& r, int p, const double* a, double gp, double* om, double* vv, std::size_t M) {
    for (std::size_t mu = 0; mu < M; ++mu) {
      double mk[kMaxArity], w[kMaxArity], loo[kMaxArity];
      double prod_m = 1.0, prod_v = 1.0;
      for (int k = 0; k < p; ++k) {
        mk[k] = r.m[k][mu];
        w[k] = mk[k] * r.mp[k][mu];
        prod_m *= mk[k];
        prod_v *= r.v[k][mu];
      }
      // sum_j (v_j - m_j^2) prod_{k != j} m_k m_prev_k
      leave_one_out<0>(w, p, loo);
      double mem = 0.0;
      for (int j = 0; j < p; ++j) mem += (r.v[j][mu] - mk[j] * mk[j]) * loo[j];
      om[mu] = a[mu] * (prod_m - a[mu] * gp * mem);
      vv[mu] = a[mu] * a[mu] * (prod_v - prod_m * prod_m);
    }
  }
  static void accumulate(const EdgeRows& r, int p, const double* a, double g, double mdg, double gp, std::size_t M) {
    for (std::size_t mu = 0; mu < M; ++mu) {
      double mk[kMaxArity], w[kMaxArity], c[kMaxArity], cav[kMaxArity];
      for (int k = 0; k < p; ++k) {
        mk[k] = r.m[k][mu];
        w[k] = mk[k] * r.mp[k][mu];
        c[k] = r.v[k][mu] - mk[k] * mk[k];
      }
      leave_one_out<0>(mk, p, cav);
      for (int s = 0; s < p; ++s) {
        // sum_{j != s} c_j prod_{k not in {s,j}} w_k
        double mem = 0.0;
        for (int j = 0; j < p; ++j) {
          if (j == s) continue;
          double prod = c[j];
          for (int k = 0; k < p; ++k) {
            if (k != s && k != j) prod *= w[k];
          }
          mem += prod;
        }
        r.is[s][mu] += a[mu] * a[mu] * mdg * cav[s] * cav[s];
        r.ts[s][mu] += a[mu] * g * (cav[s] - a[mu] * gp * r.mp[s][mu] * mem);
      }
    }
  }
};

template <>
struct GampKernel<2> {
  static void factor(const EdgeRows& r, int, const double* __restrict a, double gp, double* __restrict om,
                     double* __restrict vv, std::size_t M) {
    const double* __restrict m0 = r.m[0];
    const double* __restrict m1 = r.m[1];
    const double* __restrict v0 = r.v[0];
    const double* __restrict v1 = r.v[1];
    const double* __restrict p0 = r.mp[0];
    const double* __restrict p1 = r.mp[1];
    for (std::size_t mu = 0; mu < M; ++mu) {
      const double prod = m0[mu] * m1[mu];
      const double mem = (v0[mu] - m0[mu] * m0[mu]) * m1[mu] * p1[mu] + (v1[mu] - m1[mu] * m1[mu]) * m0[mu] * p0[mu];
      om[mu] = a[mu] * (prod - a[mu] * gp * mem);
      vv[mu] = a[mu] * a[mu] * (v0[mu] * v1[mu] - prod * prod);
    }
  }
  static void accumulate(const EdgeRows& r, int, const double* __restrict a, double g, double mdg, double gp,
                         std::size_t M) {
    const double* __restrict m0 = r.m[0];
    const double* __restrict m1 = r.m[1];
    const double* __restrict v0 = r.v[0];
    const double* __restrict v1 = r.v[1];
    const double* __restrict p0 = r.mp[0];
    const double* __restrict p1 = r.mp[1];
    double* __restrict is0 = r.is[0];
    double* __restrict is1 = r.is[1];
    double* __restrict ts0 = r.ts[0];
    double* __restrict ts1 = r.ts[1];
    for (std::size_t mu = 0; mu < M; ++mu) {
      const double c0 = v0[mu] - m0[mu] * m0[mu];
      const double c1 = v1[mu] - m1[mu] * m1[mu];
      const double a2 = a[mu] * a[mu] * mdg;
      is0[mu] += a2 * m1[mu] * m1[mu];
      is1[mu] += a2 * m0[mu] * m0[mu];
      ts0[mu] += a[mu] * g * (m1[mu] - a[mu] * gp * p0[mu] * c1);
      ts1[mu] += a[mu] * g * (m0[mu] - a[mu] * gp * p1[mu] * c0);
    }
  }
};

template <>
struct GampKernel<3> {
  static void factor(const EdgeRows& r, int, const double* __restrict a, double gp, double* __restrict om,
                     double* __restrict vv, std::size_t M) {
    const double* __restrict m0 = r.m[0];
    const double* __restrict m1 = r.m[1];
    const double* __restrict m2 = r.m[2];
    const double* __restrict v0 = r.v[0];
    const double* __restrict v1 = r.v[1];
    const double* __restrict v2 = r.v[2];
    const double* __restrict p0 = r.mp[0];
    const double* __restrict p1 = r.mp[1];
    const double* __restrict p2 = r.mp[2];
    for (std::size_t mu = 0; mu < M; ++mu) {
      const double w0 = m0[mu] * p0[mu];
      const double w1 = m1[mu] * p1[mu];
      const double w2 = m2[mu] * p2[mu];
      const double prod = m0[mu] * m1[mu] * m2[mu];
      const double mem = (v0[mu] - m0[mu] * m0[mu]) * w1 * w2 + (v1[mu] - m1[mu] * m1[mu]) * w0 * w2 +
                         (v2[mu] - m2[mu] * m2[mu]) * w0 * w1;
      om[mu] = a[mu] * (prod - a[mu] * gp * mem);
      vv[mu] = a[mu] * a[mu] * (v0[mu] * v1[mu] * v2[mu] - prod * prod);
    }
  }
  static void accumulate(const EdgeRows& r, int, const double* __restrict a, double g, double mdg, double gp,
                         std::size_t M) {
    const double* __restrict m0 = r.m[0];
    const double* __restrict m1 = r.m[1];
    const double* __restrict m2 = r.m[2];
    const double* __restrict v0 = r.v[0];
    const double* __restrict v1 = r.v[1];
    const double* __restrict v2 = r.v[2];
    const double* __restrict p0 = r.mp[0];
    const double* __restrict p1 = r.mp[1];
    const double* __restrict p2 = r.mp[2];
    double* __restrict is0 = r.is[0];
    double* __restrict is1 = r.is[1];
    double* __restrict is2 = r.is[2];
    double* __restrict ts0 = r.ts[0];
    double* __restrict ts1 = r.ts[1];
    double* __restrict ts2 = r.ts[2];
    for (std::size_t mu = 0; mu < M; ++mu) {
      const double w0 = m0[mu] * p0[mu];
      const double w1 = m1[mu] * p1[mu];
      const double w2 = m2[mu] * p2[mu];
      const double c0 = v0[mu] - m0[mu] * m0[mu];
      const double c1 = v1[mu] - m1[mu] * m1[mu];
      const double c2 = v2[mu] - m2[mu] * m2[mu];
      const double cav0 = m1[mu] * m2[mu];
      const double cav1 = m0[mu] * m2[mu];
      const double cav2 = m0[mu] * m1[mu];
      const double a2 = a[mu] * a[mu] * mdg;
      const double ag = a[mu] * g;
      const double agp = a[mu] * gp;
      is0[mu] += a2 * cav0 * cav0;
      is1[mu] += a2 * cav1 * cav1;
      is2[mu] += a2 * cav2 * cav2;
      ts0[mu] += ag * (cav0 - agp * p0[mu] * (c1 * w2 + c2 * w1));
      ts1[mu] += ag * (cav1 - agp * p1[mu] * (c0 * w2 + c2 * w0));
      ts2[mu] += ag * (cav2 - agp * p2[mu] * (c0 * w1 + c1 * w0));
    }
  }
};

EdgeRows edge_rows(GampState& st, const FactorGraph& graph, std::size_t e, int p, std::size_t M) {
  EdgeRows r;
  const std::size_t off = graph.edge_offset(e);
  for (int k = 0; k < p; ++k) {
    const std::size_t row = static_cast<std::size_t>(graph.members()[off + k]) * M;
    r.m[k] = st.m.data() + row;
    r.v[k] = st.v.data() + row;
    r.mp[k] = st.m_prev.data() + row;
    r.is[k] = st.inv_sigma.data() + row;
    r.ts[k] = st.t_sigma.data() + row;
  }
  return r;
}

// a_mu = lambda F_mu / sqrt(M) for every edge, written to coef.
const double* edge_coefficients(const Instance& inst, std::size_t e, std::vector<double>& coef) {
  const std::size_t M = coef.size();
  const double scale = inst.lambda / std::sqrt(static_cast<double>(M));
  if (inst.spread.empty()) return coef.data();  // filled once with scale
  const double* F = inst.spread.data() + e * M;
  for (std::size_t mu = 0; mu < M; ++mu) coef[mu] = scale * F[mu];
  return coef.data();
}

template <int P>
void gamp_factor_side(GampState& st, const Instance& inst) {
  const FactorGraph& graph = inst.graph;
  const std::size_t M = static_cast<std::size_t>(inst.m_dim);
  std::vector<double> coef(M, inst.lambda / std::sqrt(static_cast<double>(M)));
  std::vector<double> om(M), vv(M);
  for (std::size_t e = 0; e < graph.n_edges(); ++e) {
    const int p = P > 0 ? P : graph.arity(e);
    const EdgeRows r = edge_rows(st, graph, e, p, M);
    const double* a = edge_coefficients(inst, e, coef);
    GampKernel<P>::factor(r, p, a, st.g_prev[e], om.data(), vv.data(), M);
    double om_sum = 0.0;
    double vv_sum = 0.0;
    for (std::size_t mu = 0; mu < M; ++mu) {
      om_sum += om[mu];
      vv_sum += vv[mu];
    }
    if (vv_sum < kVarMin) {
      vv_sum = kVarMin;
      ++st.clamped;
    }
    st.omega[e] = om_sum;
    st.V[e] = vv_sum;
    const OutputScore sc = output_score(inst.channel, om_sum, inst.y[e], vv_sum);
    if (!std::isfinite(sc.g) || !std::isfinite(sc.dg)) diverge("gamp factor side", 0, -1, e);
    st.g[e] = sc.g;
    st.dg[e] = sc.dg;
  }
}

template <int P>
void gamp_accumulate(GampState& st, const Instance& inst) {
  const FactorGraph& graph = inst.graph;
  const std::size_t M = static_cast<std::size_t>(inst.m_dim);
  std::vector<double> coef(M, inst.lambda / std::sqrt(static_cast<double>(M)));
  for (std::size_t e = 0; e < graph.n_edges(); ++e) {
    const int p = P > 0 ? P : graph.arity(e);
    const EdgeRows r = edge_rows(st, graph, e, p, M);
    const double* a = edge_coefficients(inst, e, coef);
    GampKernel<P>::accumulate(r, p, a, st.g[e], -st.dg[e], st.g_prev[e], M);
  }
}

template <int P>
void rbp_factor_side(RbpState& st, const Instance& inst, std::vector<double>& term,
                     std::vector<double>& term_v) {
  const FactorGraph& graph = inst.graph;
  const std::size_t M = static_cast<std::size_t>(inst.m_dim);
  const double scale = inst.lambda / std::sqrt(static_cast<double>(M));
  for (std::size_t e = 0; e < graph.n_edges(); ++e) {
    const int p = P > 0 ? P : graph.arity(e);
    const std::size_t off = graph.edge_offset(e);
    const double* F = inst.spread.empty() ? nullptr : inst.spread.data() + e * M;
    double s_om = 0.0;
    double s_v = 0.0;
    for (std::size_t mu = 0; mu < M; ++mu) {
      const double a = F ? scale * F[mu] : scale;
      double prod_m = 1.0, prod_m2 = 1.0, prod_v = 1.0;
      for (int k = 0; k < p; ++k) {
        const double mk = st.m_msg[(off + k) * M + mu];
        prod_m *= mk;
        prod_m2 *= mk * mk;
        prod_v *= st.v_msg[(off + k) * M + mu];
      }
      term[mu] = a * prod_m;
      term_v[mu] = a * a * (prod_v - prod_m2);
      s_om += term[mu];
      s_v += term_v[mu];
    }
    for (std::size_t mu = 0; mu < M; ++mu) {
      const double a = F ? scale * F[mu] : scale;
      const double om = s_om - term[mu];
      double vv = s_v - term_v[mu];
      if (vv < kVarMin) {
        vv = kVarMin;
        ++st.clamped;
      }
      const OutputScore sc = output_score(inst.channel, om, inst.y[e], vv);
      if (!std::isfinite(sc.g) || !std::isfinite(sc.dg)) diverge("rbp factor side", 0, static_cast<int>(mu), e);
      double mk[kMaxArity], cav[kMaxArity];
      for (int k = 0; k < p; ++k) mk[k] = st.m_msg[(off + k) * M + mu];
      leave_one_out<P>(mk, p, cav);
      for (int s = 0; s < p; ++s) {
        const std::size_t idx = (off + s) * M + mu;
        st.acc_a[idx] = a * a * (-sc.dg) * cav[s] * cav[s];
        st.acc_b[idx] = a * sc.g * cav[s];
      }
    }
  }
}

int uniform_arity(const FactorGraph& graph) {
  const auto& sp = graph.species();
  int p = 0;
  for (const auto& s : sp) {
    if (s.edge_count == 0) continue;
    if (p != 0 && s.p != p) return 0;
    p = s.p;
  }
  return p;
}

}  // namespace

RbpState init_rbp(const InitScheme& scheme, const Instance& inst, std::uint64_t seed) {
  RbpState st;
  init_values(scheme, inst, seed, st.m_node, st.v_node);
  const FactorGraph& graph = inst.graph;
  const std::size_t M = static_cast<std::size_t>(inst.m_dim);
  st.m_msg.resize(graph.n_slots() * M);
  st.v_msg.resize(graph.n_slots() * M);
  for (std::size_t slot = 0; slot < graph.n_slots(); ++slot) {
    const std::size_t row = static_cast<std::size_t>(graph.members()[slot]) * M;
    std::copy_n(st.m_node.begin() + static_cast<std::ptrdiff_t>(row), M, st.m_msg.begin() + static_cast<std::ptrdiff_t>(slot * M));
    std::copy_n(st.v_node.begin() + static_cast<std::ptrdiff_t>(row), M, st.v_msg.begin() + static_cast<std::ptrdiff_t>(slot * M));
  }
  st.acc_a.assign(graph.n_slots() * M, 0.0);
  st.acc_b.assign(graph.n_slots() * M, 0.0);
  return st;
}

GampState init_gamp(const InitScheme& scheme, const Instance& inst, std::uint64_t seed) {
  GampState st;
  init_values(scheme, inst, seed, st.m, st.v);
  st.m_prev = st.m;
  const std::size_t E = inst.graph.n_edges();
  st.omega.assign(E, 0.0);
  st.V.assign(E, 0.0);
  st.g.assign(E, 0.0);
  st.dg.assign(E, 0.0);
  st.g_prev.assign(E, 0.0);
  st.inv_sigma.assign(st.m.size(), 0.0);
  st.t_sigma.assign(st.m.size(), 0.0);
  return st;
}

double gamp_sweep(GampState& st, const Instance& inst, double damping) {
  const int p = uniform_arity(inst.graph);
  switch (p) {
    case 2: gamp_factor_side<2>(st, inst); break;
    case 3: gamp_factor_side<3>(st, inst); break;
    default: gamp_factor_side<0>(st, inst); break;
  }
  std::fill(st.inv_sigma.begin(), st.inv_sigma.end(), 0.0);
  std::fill(st.t_sigma.begin(), st.t_sigma.end(), 0.0);
  switch (p) {
    case 2: gamp_accumulate<2>(st, inst); break;
    case 3: gamp_accumulate<3>(st, inst); break;
    default: gamp_accumulate<0>(st, inst); break;
  }
  const std::size_t M = static_cast<std::size_t>(inst.m_dim);
  double dsum = 0.0;
  for (std::size_t idx = 0; idx < st.m.size(); ++idx) {
    const double is = std::max(st.inv_sigma[idx], kSigmaMin);
    const double ts = st.t_sigma[idx] + st.m[idx] * is;
    const InputMoments in = input_moments_field(inst.prior, is, ts);
    if (!std::isfinite(in.f) || !std::isfinite(in.f_ii)) {
      diverge("gamp variable side", idx / M, static_cast<int>(idx % M), 0);
    }
    dsum += std::abs(in.f - st.m[idx]);
    st.m_prev[idx] = st.m[idx];
    st.m[idx] += damping * (in.f - st.m[idx]);
    st.v[idx] += damping * (in.f_ii - st.v[idx]);
  }
  st.g_prev = st.g;
  return st.m.empty() ? 0.0 : dsum / static_cast<double>(st.m.size());
}

double rbp_sweep(RbpState& st, const Instance& inst, double damping) {
  const FactorGraph& graph = inst.graph;
  const std::size_t M = static_cast<std::size_t>(inst.m_dim);
  std::vector<double> term(M), term_v(M);
  switch (uniform_arity(graph)) {
    case 2: rbp_factor_side<2>(st, inst, term, term_v); break;
    case 3: rbp_factor_side<3>(st, inst, term, term_v); break;
    default: rbp_factor_side<0>(st, inst, term, term_v); break;
  }
  double dsum = 0.0;
  for (std::size_t i = 0; i < graph.n_vars(); ++i) {
    const auto slots = graph.incident_slots(i);
    for (std::size_t mu = 0; mu < M; ++mu) {
      double ta = 0.0;
      double tb = 0.0;
      for (std::size_t slot : slots) {
        ta += st.acc_a[slot * M + mu];
        tb += st.acc_b[slot * M + mu];
      }
      const InputMoments full = input_moments_field(inst.prior, std::max(ta, kSigmaMin), tb);
      if (!std::isfinite(full.f) || !std::isfinite(full.f_ii)) diverge("rbp marginal", i, static_cast<int>(mu), 0);
      st.m_node[i * M + mu] = full.f;
      st.v_node[i * M + mu] = full.f_ii;
      for (std::size_t slot : slots) {
        const std::size_t idx = slot * M + mu;
        const double ca = std::max(ta - st.acc_a[idx], kSigmaMin);
        const double cb = tb - st.acc_b[idx];
        const InputMoments in = input_moments_field(inst.prior, ca, cb);
        if (!std::isfinite(in.f) || !std::isfinite(in.f_ii)) {
          diverge("rbp message", i, static_cast<int>(mu), graph.slot_edge(slot));
        }
        dsum += std::abs(in.f - st.m_msg[idx]);
        st.m_msg[idx] += damping * (in.f - st.m_msg[idx]);
        st.v_msg[idx] += damping * (in.f_ii - st.v_msg[idx]);
      }
    }
  }
  return st.m_msg.empty() ? 0.0 : dsum / static_cast<double>(st.m_msg.size());
}

OrderParams measure_order_params(const std::vector<double>& means, const std::vector<double>& vars,
                                 const Instance& inst) {
  const std::size_t n = inst.truth.size();
  double sm = 0.0, sq = 0.0, sQ = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sm += inst.truth[k] * means[k];
    sq += means[k] * means[k];
    sQ += vars[k];
  }
  const double inv = 1.0 / static_cast<double>(n);
  return {sm * inv, sq * inv, inst.prior == Prior::Ising ? 1.0 : sQ * inv};
}

double corrected_magnetization(const std::vector<double>& means, const Instance& inst) {
  const std::size_t M = static_cast<std::size_t>(inst.m_dim);
  const std::size_t N = inst.graph.n_vars();
  std::vector<double> plane(M, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t mu = 0; mu < M; ++mu) plane[mu] += inst.truth[i * M + mu] * means[i * M + mu];
  }
  double total = 0.0;
  for (double s : plane) total += std::abs(s / static_cast<double>(N));
  return total / static_cast<double>(M);
}

ErrorMetrics error_metrics(double m, double q, double lambda, int p) {
  return {1.0 - 2.0 * m + q, lambda * lambda * (1.0 - 2.0 * std::pow(m, p) + std::pow(q, p))};
}

double default_damping(Algorithm algorithm) { return algorithm == Algorithm::RBP ? 0.5 : 1.0; }

Spreading default_spreading(const std::vector<int>& species_p) {
  if (species_p.size() == 1 && species_p[0] >= 3) return Spreading::Deterministic;
  return Spreading::Rademacher;
}

Trajectory run_mp(const Instance& inst, const MpOptions& opt) {
  if (opt.max_t < 1) throw std::invalid_argument("run_mp: max_t must be >= 1");
  const double eps = opt.damping > 0.0 ? opt.damping : default_damping(opt.algorithm);
  if (eps > 1.0) throw std::invalid_argument("run_mp: damping must lie in (0,1]");
  const int p = inst.graph.species().empty() ? 2 : inst.graph.species().front().p;

  RbpState rbp;
  GampState gamp;
  if (opt.algorithm == Algorithm::RBP) {
    rbp = init_rbp(opt.scheme, inst, opt.init_seed);
  } else {
    gamp = init_gamp(opt.scheme, inst, opt.init_seed);
  }
  auto record = [&](int t, double D) {
    const bool is_rbp = opt.algorithm == Algorithm::RBP;
    const std::vector<double>& means = is_rbp ? rbp.m_node : gamp.m;
    OrderParams op = is_rbp ? measure_order_params(rbp, inst) : measure_order_params(gamp, inst);
    if (opt.corrected) op.m = corrected_magnetization(means, inst);
    const ErrorMetrics err = error_metrics(op.m, op.q, inst.lambda, p);
    return TrajectoryRecord{t, op.m, op.q, op.Q, D, err.mse_input, err.mse_output};
  };

  Trajectory traj;
  traj.records.push_back(record(0, 0.0));
  for (int t = 1; t <= opt.max_t; ++t) {
    double D = 0.0;
    try {
      D = opt.algorithm == Algorithm::RBP ? rbp_sweep(rbp, inst, eps) : gamp_sweep(gamp, inst, eps);
    } catch (const DivergenceError& err) {
      traj.diverged = true;
      traj.diverged_step = t;
      traj.diagnostic = err.what();
      break;
    }
    traj.steps = t;
    if (!std::isfinite(D) || D > opt.divergence_threshold) {
      traj.diverged = true;
      traj.diverged_step = t;
      traj.diagnostic = "D=" + format_number(D) + " exceeds divergence threshold";
      break;
    }
    traj.records.push_back(record(t, D));
    if (D <= opt.conv_tol) {
      traj.converged = true;
      break;
    }
  }
  traj.clamped = opt.algorithm == Algorithm::RBP ? rbp.clamped : gamp.clamped;
  return traj;
}

std::string to_string(Algorithm algorithm) { return algorithm == Algorithm::RBP ? "rbp" : "gamp"; }

std::string to_string(const InitScheme& scheme) {
  switch (scheme.kind) {
    case InitScheme::Kind::Informative: return "informative";
    case InitScheme::Kind::Uninformative: return "uninformative";
    case InitScheme::Kind::TrulyRandom: return "random";
    case InitScheme::Kind::SignInformative: return "sign-informative";
  }
  return "unknown";
}

InitScheme parse_init_scheme(const std::string& name, double a) {
  if (name == "informative") return InitScheme::informative();
  if (name == "uninformative") return InitScheme::uninformative(a > 0.0 ? a : 0.01);
  if (name == "random") return InitScheme::truly_random(a > 0.0 ? a : 0.01);
  if (name == "sign-informative") return InitScheme::sign_informative(a > 0.0 ? a : 0.99);
  throw std::invalid_argument("unknown init scheme '" + name +
                              "' (expected informative|uninformative|random|sign-informative)");
}

}  // namespace densefactor
