#pragma once

#include "densefactor/channels.hpp"
#include "densefactor/numerics.hpp"
#include "densefactor/trajectory.hpp"

#include <vector>

namespace densefactor {

struct SpeciesParam {
  int p = 2;
  double alpha = 1.0;
};

/**
 * Macroscopic model. Several species add their A, B and chi terms; the
 * additive channel noise_std enters through lambda -> lambda / Delta.
 * force_general disables the closed-form hat paths.
 */
struct SEModel {
  Prior prior = Prior::Ising;
  Channel channel;
  double lambda = 1.0;
  std::vector<SpeciesParam> species{{2, 1.0}};
  QuadratureSpec quad;
  bool force_general = false;
};

struct SEState {
  double m = 0.0;
  double q = 0.0;
  double Q = 1.0;
  double hat_chi = 0.0;
  double hat_m = 0.0;
  double hat_q = 0.0;
  double v_eff = 0.0;
};

struct Hats {
  double chi = 0.0;
  double m = 0.0;
  double q = 0.0;
};

// Closed forms for unit-variance additive noise.
double theta0(double lambda, double Q0, double Q, double m, double q, int p);
double theta1(double lambda, double Q0, double Q, double m, double q, int p);

Hats se_hats(const SEState& state, const SEModel& model, int p);

// Bivariate quadrature over (omega, pi*) after a Cholesky factorization of the
// covariance; valid for any (m, q, Q) with a positive semidefinite covariance.
Hats se_hats_general(const SEState& state, const SEModel& model, int p);

SEState se_step(const SEState& state, const SEModel& model);

struct SEOptions {
  int max_t = 10000;
  double conv_tol = 1e-10;
  double damping = 1.0;  // state <- state + damping * (se_step(state) - state)
};

// Records the initial state at t=0. D is max(|dm|, |dq|, |dQ|) of the undamped update.
Trajectory run_se(double m0, double q0, double Q0, const SEModel& model, const SEOptions& options = {});

}  // namespace densefactor
