#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace densefactor {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Prior { Ising, Gaussian };
enum class Spreading { Deterministic, Rademacher, GaussianUnit };

struct Channel {
  enum class Kind { AdditiveGaussian, Sign };
  Kind kind = Kind::AdditiveGaussian;
  double noise_std = 1.0;

  static Channel additive(double delta);
  static Channel sign() { return {Kind::Sign, 0.0}; }

  // noise_std at or below this value means y = pi exactly
  static constexpr double kNoiselessFlag = 1e-300;
  bool noiseless() const { return kind == Kind::AdditiveGaussian && noise_std <= kNoiselessFlag; }
};

inline constexpr double kSigmaMin = 1e-12;
inline constexpr double kVarMin = 1e-12;

struct InputMoments {
  double f = 0.0;
  double f_ii = 0.0;
};

// Posterior mean and second moment of x under prior * exp(-x^2/(2 sigma) + x t/sigma).
InputMoments input_moments(Prior prior, double sigma, double t_field);

// Same, parametrized by 1/sigma and t/sigma as the message-passing sweeps
// produce them. inv_sigma = 0 returns the prior moments.
inline InputMoments input_moments_field(Prior prior, double inv_sigma, double t_over_sigma);

struct OutputScore {
  double g = 0.0;
  double dg = 0.0;  // derivative of g with respect to omega
};

OutputScore output_score(const Channel& channel, double omega, double y, double v);

std::vector<double> sample_prior(Prior prior, std::size_t count, std::uint64_t seed);

double channel_forward(const Channel& channel, double pi, double noise_draw);

std::string to_string(Prior prior);
std::string to_string(Spreading spreading);
std::string to_string(const Channel& channel);
Prior parse_prior(const std::string& s);
Spreading parse_spreading(const std::string& s);
Channel parse_channel(const std::string& s, double delta);

}  // namespace densefactor

#include <cmath>

namespace densefactor {

inline InputMoments input_moments_field(Prior prior, double inv_sigma, double t_over_sigma) {
  if (prior == Prior::Ising) {
    const double f = std::tanh(t_over_sigma);
    return {f, 1.0};
  }
  const double var = 1.0 / (1.0 + inv_sigma);
  const double f = t_over_sigma * var;
  return {f, var + f * f};
}

}  // namespace densefactor
