#include "densefactor/channels.hpp"

#include "densefactor/numerics.hpp"
#include "densefactor/random.hpp"

#include <algorithm>
#include <cmath>

namespace densefactor {

Channel Channel::additive(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("additive channel: noise_std must be finite and > 0");
  }
  return {Kind::AdditiveGaussian, delta};
}

InputMoments input_moments(Prior prior, double sigma, double t_field) {
  if (!std::isfinite(sigma) || !std::isfinite(t_field)) {
    throw EvaluationError("input_moments: non-finite input");
  }
  sigma = std::max(sigma, kSigmaMin);
  return input_moments_field(prior, 1.0 / sigma, t_field / sigma);
}

OutputScore output_score(const Channel& channel, double omega, double y, double v) {
  v = std::max(v, kVarMin);
  if (channel.kind == Channel::Kind::AdditiveGaussian) {
    const double d2 = channel.noiseless() ? 0.0 : channel.noise_std * channel.noise_std;
    const double inv = 1.0 / (v + d2);
    return {(y - omega) * inv, -inv};
  }
  if (y != 1.0 && y != -1.0) {
    throw DomainError("sign channel observation must be +1 or -1, got " + std::to_string(y));
  }
  const double sv = std::sqrt(v);
  const double x = -y * omega / sv;
  const double r = h_log_deriv(x);
  // r' = -x r - r^2, and dg/domega = r'(x) / v
  return {-y / sv * r, (-x * r - r * r) / v};
}

std::vector<double> sample_prior(Prior prior, std::size_t count, std::uint64_t seed) {
  auto rng = make_stream(seed, StreamLabel::Prior);
  std::vector<double> out(count);
  if (prior == Prior::Ising) {
    std::bernoulli_distribution coin(0.5);
    for (double& x : out) x = coin(rng) ? 1.0 : -1.0;
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& x : out) x = normal(rng);
  }
  return out;
}

double channel_forward(const Channel& channel, double pi, double noise_draw) {
  if (channel.kind == Channel::Kind::Sign) return pi >= 0.0 ? 1.0 : -1.0;
  if (channel.noiseless()) return pi;
  return pi + channel.noise_std * noise_draw;
}

std::string to_string(Prior prior) { return prior == Prior::Ising ? "ising" : "gaussian"; }

std::string to_string(Spreading spreading) {
  switch (spreading) {
    case Spreading::Deterministic: return "deterministic";
    case Spreading::Rademacher: return "rademacher";
    case Spreading::GaussianUnit: return "gaussian";
  }
  return "unknown";
}

std::string to_string(const Channel& channel) {
  return channel.kind == Channel::Kind::Sign ? "sign" : "additive";
}

Prior parse_prior(const std::string& s) {
  if (s == "ising") return Prior::Ising;
  if (s == "gaussian") return Prior::Gaussian;
  throw std::invalid_argument("unknown prior '" + s + "' (expected ising|gaussian)");
}

Spreading parse_spreading(const std::string& s) {
  if (s == "deterministic") return Spreading::Deterministic;
  if (s == "rademacher") return Spreading::Rademacher;
  if (s == "gaussian") return Spreading::GaussianUnit;
  throw std::invalid_argument("unknown spreading '" + s + "' (expected deterministic|rademacher|gaussian)");
}

Channel parse_channel(const std::string& s, double delta) {
  if (s == "additive") return Channel::additive(delta);
  if (s == "sign") return Channel::sign();
  throw std::invalid_argument("unknown channel '" + s + "' (expected additive|sign)");
}

}  // namespace densefactor
