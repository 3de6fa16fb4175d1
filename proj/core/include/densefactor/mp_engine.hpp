#pragma once

#include "densefactor/instance.hpp"
#include "densefactor/trajectory.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace densefactor {

enum class Algorithm { RBP, GAMP };

struct InitScheme {
  enum class Kind { Informative, Uninformative, TrulyRandom, SignInformative };
  Kind kind = Kind::Informative;
  double a = 0.0;

  static InitScheme informative() { return {Kind::Informative, 1.0}; }
  static InitScheme uninformative(double a = 0.01) { return {Kind::Uninformative, a}; }
  static InitScheme truly_random(double a = 0.01) { return {Kind::TrulyRandom, a}; }
  static InitScheme sign_informative(double a = 0.99) { return {Kind::SignInformative, a}; }
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t var, int mu, std::size_t edge)
      : std::runtime_error(what), var_(var), mu_(mu), edge_(edge) {}
  std::size_t var() const { return var_; }
  int mu() const { return mu_; }
  std::size_t edge() const { return edge_; }

 private:
  std::size_t var_;
  int mu_;
  std::size_t edge_;
};

// r-BP state. Directed messages are indexed by graph slot: m_msg[slot * M + mu]
// is the message from variable component (members[slot], mu) to slot_edge(slot).
struct RbpState {
  std::vector<double> m_msg;
  std::vector<double> v_msg;
  std::vector<double> m_node;  // marginals, N x M
  std::vector<double> v_node;
  std::vector<double> acc_a;  // per-slot contributions to 1/Sigma
  std::vector<double> acc_b;  // per-slot contributions to T/Sigma
  std::size_t clamped = 0;
};

struct GampState {
  std::vector<double> m;  // N x M
  std::vector<double> v;
  std::vector<double> m_prev;
  std::vector<double> omega;  // per edge
  std::vector<double> V;
  std::vector<double> g;
  std::vector<double> dg;
  std::vector<double> g_prev;
  std::vector<double> inv_sigma;  // workspace, N x M
  std::vector<double> t_sigma;
  std::size_t clamped = 0;
};

RbpState init_rbp(const InitScheme& scheme, const Instance& inst, std::uint64_t seed);
GampState init_gamp(const InitScheme& scheme, const Instance& inst, std::uint64_t seed);

// One synchronous pass. Returns D = mean |f_input - m| over the updated
// quantities (directed messages for r-BP, node means for G-AMP).
double rbp_sweep(RbpState& state, const Instance& inst, double damping);
double gamp_sweep(GampState& state, const Instance& inst, double damping);

struct OrderParams {
  double m = 0.0;
  double q = 0.0;
  double Q = 0.0;
};

OrderParams measure_order_params(const std::vector<double>& means, const std::vector<double>& vars,
                                 const Instance& inst);
inline OrderParams measure_order_params(const GampState& s, const Instance& inst) {
  return measure_order_params(s.m, s.v, inst);
}
inline OrderParams measure_order_params(const RbpState& s, const Instance& inst) {
  return measure_order_params(s.m_node, s.v_node, inst);
}

// (1/M) sum_mu |(1/N) sum_i x*_{i mu} m_{i mu}|
double corrected_magnetization(const std::vector<double>& means, const Instance& inst);

struct ErrorMetrics {
  double mse_input = 0.0;
  double mse_output = 0.0;
};

ErrorMetrics error_metrics(double m, double q, double lambda, int p);

double default_damping(Algorithm algorithm);

// Rademacher for p=2 and mixed graphs, deterministic for pure p>=3.
Spreading default_spreading(const std::vector<int>& species_p);

struct MpOptions {
  Algorithm algorithm = Algorithm::GAMP;
  InitScheme scheme = InitScheme::informative();
  double damping = 0.0;  // <= 0 selects default_damping(algorithm)
  int max_t = 200;
  double conv_tol = 1e-7;
  bool corrected = false;  // report corrected_magnetization as m
  std::uint64_t init_seed = 0;
  double divergence_threshold = 1e3;
};

Trajectory run_mp(const Instance& inst, const MpOptions& options);

std::string to_string(Algorithm algorithm);
std::string to_string(const InitScheme& scheme);
InitScheme parse_init_scheme(const std::string& name, double a);

}  // namespace densefactor
