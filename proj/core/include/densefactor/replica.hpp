#pragma once

#include "densefactor/numerics.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace densefactor {

struct ModelFamily {
  enum class Kind { IsingGauss, GaussGauss, GaussSign, MixedGaussGauss };
  Kind kind = Kind::IsingGauss;
  int p = 2;
  int p2 = 3;           // second species of the mixed family
  double alpha1 = 0.0;  // fixed alpha of the first mixed species; the call-site alpha is alpha2
  bool lambda_infinite = false;

  static ModelFamily ising_gauss(int p) { return {Kind::IsingGauss, p, 0, 0.0, false}; }
  static ModelFamily gauss_gauss(int p) { return {Kind::GaussGauss, p, 0, 0.0, false}; }
  static ModelFamily gauss_sign(int p) { return {Kind::GaussSign, p, 0, 0.0, false}; }
  static ModelFamily mixed(int p1, double alpha1, int p2) { return {Kind::MixedGaussGauss, p1, p2, alpha1, false}; }

  // noiseless limit: lambda^2 / (1 + lambda^2 (1 - m^p)) -> 1 / (1 - m^p)
  ModelFamily at_lambda_infinity() const {
    ModelFamily f = *this;
    f.lambda_infinite = true;
    return f;
  }
  bool has_lambda() const { return kind != Kind::GaussSign && !lambda_infinite; }
};

std::string to_string(const ModelFamily& family);
ModelFamily parse_family(const std::string& name, int p, int p2, double alpha1);

struct ReplicaOptions {
  QuadratureSpec quad;
  double dedup_tol = 1e-8;
  int scan_points = 200;
};

// Effective field K(m); Gaussian priors satisfy m = K/(1+K), Ising m = E tanh(K + sqrt(K) z).
double eos_field(const ModelFamily& family, double m, double alpha, double lambda,
                 const ReplicaOptions& opt = {});
double eos_rhs(const ModelFamily& family, double m, double alpha, double lambda,
               const ReplicaOptions& opt = {});

// Free energy to be minimized, up to m-independent constants:
//   Ising:  1/2 K (1+m) - E ln cosh(K + sqrt(K) z) + alpha/(2p) ln(1 + lambda^2 (1 - m^p))
//   Gauss:  -Delta f(m), so that f(0) = 0
//   Sign:   -(1/2)[m + ln(1-m)] - (2 alpha / p) E H(X) ln H(X)
double free_energy(const ModelFamily& family, double m, double alpha, double lambda,
                   const ReplicaOptions& opt = {});

// Delta f(m) = f(0) - f(m) for the Gaussian prior families, positive when
// the magnetized state is preferred.
double gaussian_delta_f(const ModelFamily& family, double m, double alpha, double lambda);

enum class BranchKind { Paramagnet, Low, High, Unstable };
std::string to_string(BranchKind kind);

struct EosSolution {
  double m = 0.0;
  double free_energy = 0.0;
  BranchKind kind = BranchKind::Paramagnet;
  bool stable = false;
};

struct EosBranches {
  std::vector<EosSolution> solutions;  // sorted by m, solutions[0].m == 0
  std::size_t dominant = 0;
  std::vector<std::string> diagnostics;

  const EosSolution* find(BranchKind kind) const;
};

EosBranches solve_eos(const ModelFamily& family, double alpha, double lambda,
                      const ReplicaOptions& opt = {});

struct PmStability {
  bool stable = true;
  std::optional<double> lambda_star;
};

PmStability paramagnet_stability(const ModelFamily& family, double alpha, double lambda);

/**
 * Extrema of the branch-existence curve obtained by inverting the equation of
 * state for lambda (or for alpha when the family has no lambda). lower is the
 * interior minimum, where the high branch appears; upper is the interior
 * maximum, where the low branch disappears.
 */
struct BranchWindow {
  std::optional<double> lower;
  double m_lower = 0.0;
  std::optional<double> upper;
  double m_upper = 0.0;
};

BranchWindow branch_window(const ModelFamily& family, double alpha, const ReplicaOptions& opt = {});
BranchWindow alpha_branch_window(const ModelFamily& family, double lambda, const ReplicaOptions& opt = {});

std::optional<double> spinodal(const ModelFamily& family, double alpha, const ReplicaOptions& opt = {});
std::optional<double> critical_line(const ModelFamily& family, double alpha, const ReplicaOptions& opt = {});

struct CodeLimit {
  double lambda_c = 0.0;
  double capacity_check = 0.0;
};

CodeLimit shannon_code_limit(double rate);

std::string classify_phase(const ModelFamily& family, double alpha, double lambda,
                           const ReplicaOptions& opt = {});

struct PhasePoint {
  double alpha = 0.0;
  double lambda = 0.0;
  std::string region;
  std::optional<double> m_low;
  std::optional<double> m_high;
  std::optional<double> f_low_minus_f_para;
  std::optional<double> f_high_minus_f_para;
};

struct TransitionLines {
  double alpha = 0.0;
  std::optional<double> lambda_star;
  std::optional<double> lambda_d;
  std::optional<double> lambda_c;
};

struct PhaseDiagram {
  std::vector<PhasePoint> points;
  std::vector<TransitionLines> lines;
};

PhaseDiagram trace_phase_diagram(const ModelFamily& family, const std::vector<double>& alpha_grid,
                                 const std::vector<double>& lambda_grid, const ReplicaOptions& opt = {},
                                 int jobs = 1);

void write_phase_csv(std::ostream& os, const PhaseDiagram& diagram);
void write_lines_csv(std::ostream& os, const PhaseDiagram& diagram);

}  // namespace densefactor
