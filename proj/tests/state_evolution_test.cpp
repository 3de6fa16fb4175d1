#include "densefactor/state_evolution.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace df = densefactor;
using df::testing::for_all;
using df::testing::Gen;

namespace {

// Ising map E tanh(A + sqrt(A) z) at A = 0.8, from 50-digit quadrature.
constexpr double kIsingMapA08 = 0.4812407913688217;

df::SEModel model(df::Prior prior, df::Channel ch, double lambda, std::vector<df::SpeciesParam> species) {
  df::SEModel m;
  m.prior = prior;
  m.channel = ch;
  m.lambda = lambda;
  m.species = std::move(species);
  return m;
}

df::SEState state(double m, double q, double Q) {
  df::SEState s;
  s.m = m;
  s.q = q;
  s.Q = Q;
  return s;
}

}  // namespace

TEST(Theta, NishimoriGridVanishes) {
  for (double m : {0.0, 0.25, 0.5, 0.9}) {
    for (double lambda : {0.5, 1.0, 2.0, 5.0}) {
      for (int p : {2, 3}) {
        EXPECT_NEAR(df::theta1(lambda, 1.0, 1.0, m, m, p), 0.0, 1e-10) << m << " " << lambda << " " << p;
      }
    }
  }
}

TEST(SeHats, AdditiveBayesOptimalCollapse) {
  const auto mod = model(df::Prior::Gaussian, df::Channel::additive(1.0), 1.7, {{3, 2.0}});
  const auto h = df::se_hats(state(0.4, 0.4, 1.0), mod, 3);
  const double t0 = df::theta0(1.7, 1.0, 1.0, 0.4, 0.4, 3);
  EXPECT_NEAR(h.chi, t0, 1e-14);
  EXPECT_NEAR(h.m, t0, 1e-14);
  EXPECT_NEAR(h.q, t0, 1e-14);
}

TEST(SeHats, ParamagnetTheta0) {
  for (double lambda : {0.3, 1.0, 2.5}) {
    EXPECT_NEAR(df::theta0(lambda, 1.0, 1.0, 0.0, 0.0, 2), 1.0 / (1.0 + lambda * lambda), 1e-15);
    const auto h = df::se_hats(state(0.0, 0.0, 1.0), model(df::Prior::Ising, df::Channel::additive(1.0), lambda, {{2, 1.0}}), 2);
    EXPECT_NEAR(h.q, 1.0 / (1.0 + lambda * lambda), 1e-15);
  }
}

TEST(SeHats, SignSmallOverlapLimit) {
  const double lambda = 1.3;
  const auto mod = model(df::Prior::Gaussian, df::Channel::sign(), lambda, {{2, 1.0}});
  const double q = 1e-9;
  const auto h = df::se_hats(state(q, q, 1.0), mod, 2);
  const double V = lambda * lambda;
  EXPECT_NEAR(h.m * V, 2.0 / M_PI, 1e-6);
  EXPECT_EQ(h.m, h.q);
  EXPECT_EQ(h.m, h.chi);
  // linear coefficient of the Gaussian-prior map: alpha lambda^2 q^{p-1} hat / q -> 2 alpha / pi
  const double alpha = 0.8;
  EXPECT_NEAR(alpha * V * h.m, 2.0 * alpha / M_PI, 1e-6);
}

TEST(SeHats, IndefiniteCovarianceRejected) {
  const auto mod = model(df::Prior::Gaussian, df::Channel::additive(1.0), 1.0, {{2, 1.0}});
  EXPECT_THROW(df::se_hats(state(0.8, 0.1, 1.0), mod, 2), df::DomainError);
  auto gen = mod;
  gen.force_general = true;
  EXPECT_THROW(df::se_hats(state(0.8, 0.1, 1.0), gen, 2), df::DomainError);
}

TEST(SeHats, GeneralPathMatchesClosedForms) {
  for_all(40, 101, [](Gen& g, int) {
    const int p = g.integer(2, 3);
    const double q = g.uniform(0.02, 0.9);
    const bool bayes = g.coin();
    const double m = bayes ? q : std::sqrt(q) * g.uniform(0.2, 0.99);  // m^2p <= q^p
    const double Q = bayes ? 1.0 : q + g.uniform(0.05, 1.0);
    const bool sign = bayes && g.coin();
    const df::Channel ch = sign ? df::Channel::sign() : df::Channel::additive(g.uniform(0.5, 1.5));
    auto mod = model(df::Prior::Gaussian, ch, g.uniform(0.5, 2.5), {{p, 1.0}});
    const auto st = state(m, q, Q);
    const auto closed = df::se_hats(st, mod, p);
    mod.force_general = true;
    const auto general = df::se_hats_general(st, mod, p);
    EXPECT_NEAR(general.chi, closed.chi, 1e-6 * (1.0 + std::abs(closed.chi)));
    EXPECT_NEAR(general.m, closed.m, 1e-6 * (1.0 + std::abs(closed.m)));
    EXPECT_NEAR(general.q, closed.q, 1e-6 * (1.0 + std::abs(closed.q)));
  });
}

TEST(SeStep, ParamagnetIsFixedPoint) {
  for (auto prior : {df::Prior::Ising, df::Prior::Gaussian}) {
    for (int p : {2, 3, 4}) {
      const auto next = df::se_step(state(0.0, 0.0, 1.0), model(prior, df::Channel::additive(1.0), 2.0, {{p, 2.0}}));
      EXPECT_EQ(next.m, 0.0);
      EXPECT_NEAR(next.q, 0.0, 1e-300);
    }
  }
  const auto s = df::se_step(state(0.0, 0.0, 1.0), model(df::Prior::Gaussian, df::Channel::sign(), 2.0, {{2, 1.0}}));
  EXPECT_EQ(s.m, 0.0);
}

TEST(SeStep, IsingMatchesReplicaMap) {
  const auto next = df::se_step(state(0.5, 0.5, 1.0), model(df::Prior::Ising, df::Channel::additive(1.0), 2.0, {{2, 1.6}}));
  EXPECT_NEAR(next.m, kIsingMapA08, 1e-10);
  EXPECT_NEAR(next.q, kIsingMapA08, 1e-10);
  EXPECT_EQ(next.Q, 1.0);
}

TEST(SeStep, GaussianEqualHatsPropagateNishimori) {
  for_all(50, 111, [](Gen& g, int) {
    const double m = g.uniform(0.0, 0.95);
    const auto next = df::se_step(state(m, m, 1.0), model(df::Prior::Gaussian, df::Channel::additive(1.0),
                                                           g.uniform(0.3, 3.0), {{g.integer(2, 3), g.uniform(0.5, 6.0)}}));
    EXPECT_NEAR(next.q, next.m, 1e-14);
    EXPECT_NEAR(next.Q, 1.0, 1e-14);
  });
}

TEST(SeStep, MixedWithZeroAlphaReducesToPure) {
  const auto pure = df::se_step(state(0.3, 0.3, 1.0), model(df::Prior::Gaussian, df::Channel::additive(1.0), 1.5, {{2, 1.2}}));
  const auto mixed = df::se_step(state(0.3, 0.3, 1.0),
                                 model(df::Prior::Gaussian, df::Channel::additive(1.0), 1.5, {{2, 1.2}, {3, 0.0}}));
  EXPECT_EQ(pure.m, mixed.m);
  EXPECT_EQ(pure.q, mixed.q);
  EXPECT_EQ(pure.Q, mixed.Q);
}

TEST(SeStep, MixedAddsSpeciesFields) {
  const double lambda = 1.5, m = 0.3;
  const auto mixed = df::se_step(state(m, m, 1.0),
                                 model(df::Prior::Gaussian, df::Channel::additive(1.0), lambda, {{2, 1.2}, {3, 2.0}}));
  double K = 0.0;
  for (auto [p, a] : {std::pair{2, 1.2}, std::pair{3, 2.0}}) {
    K += a * lambda * lambda * std::pow(m, p - 1) / (1.0 + lambda * lambda * (1.0 - std::pow(m, p)));
  }
  EXPECT_NEAR(mixed.m, K / (1.0 + K), 1e-14);
}

TEST(RunSe, ParamagnetStays) {
  const auto tr = df::run_se(0.0, 0.0, 1.0, model(df::Prior::Ising, df::Channel::additive(1.0), 2.0, {{2, 1.6}}));
  EXPECT_TRUE(tr.converged);
  EXPECT_EQ(tr.records.back().m, 0.0);
  EXPECT_EQ(tr.records.back().Q, 1.0);
}

TEST(RunSe, GaussianP2ClosedForm) {
  const auto tr = df::run_se(1.0, 1.0, 1.0, model(df::Prior::Gaussian, df::Channel::additive(1.0), 2.0, {{2, 1.5}}));
  EXPECT_TRUE(tr.converged);
  EXPECT_NEAR(tr.records.back().m, 0.75 - 0.5 * std::sqrt(1.25), 1e-8);
  EXPECT_EQ(tr.records.front().t, 0);
  EXPECT_EQ(tr.records.front().D, 0.0);
}

TEST(RunSe, IsingContinuousOnset) {
  auto run = [](double lambda) {
    df::SEOptions opt;
    opt.max_t = 20000;
    return df::run_se(0.01, 0.01, 1.0, model(df::Prior::Ising, df::Channel::additive(1.0), lambda, {{2, 1.6}}), opt)
        .records.back()
        .m;
  };
  EXPECT_GT(run(1.4), 0.01);
  EXPECT_LT(run(1.2), 0.001);
}

TEST(RunSe, NoiseScaleReduction) {
  const auto a = df::run_se(0.9, 0.9, 1.0, model(df::Prior::Gaussian, df::Channel::additive(2.0), 3.0, {{2, 2.0}}));
  const auto b = df::run_se(0.9, 0.9, 1.0, model(df::Prior::Gaussian, df::Channel::additive(1.0), 1.5, {{2, 2.0}}));
  EXPECT_NEAR(a.records.back().m, b.records.back().m, 1e-12);
}

TEST(RunSe, NishimoriInvariantAllFamilies) {
  struct Case {
    df::Prior prior;
    df::Channel ch;
    int p;
    double alpha, lambda;
  };
  const Case cases[] = {
      {df::Prior::Ising, df::Channel::additive(1.0), 2, 1.6, 2.0},
      {df::Prior::Ising, df::Channel::additive(1.0), 3, 3.0, 1.5},
      {df::Prior::Gaussian, df::Channel::additive(1.0), 2, 1.5, 2.0},
      {df::Prior::Gaussian, df::Channel::additive(1.0), 3, 5.0, 2.0},
      {df::Prior::Gaussian, df::Channel::sign(), 2, 2.5, 1.0},
      {df::Prior::Gaussian, df::Channel::sign(), 3, 4.0, 1.0},
  };
  for (const auto& c : cases) {
    for (double m0 : {0.05, 0.5, 1.0}) {
      df::SEOptions opt;
      opt.max_t = 100;
      opt.conv_tol = 0.0;
      const auto tr = df::run_se(m0, m0, 1.0, model(c.prior, c.ch, c.lambda, {{c.p, c.alpha}}), opt);
      ASSERT_FALSE(tr.diverged);
      for (const auto& r : tr.records) {
        ASSERT_NEAR(r.m, r.q, 1e-8) << "t=" << r.t << " p=" << c.p;
        ASSERT_NEAR(r.Q, 1.0, 1e-8) << "t=" << r.t << " p=" << c.p;
      }
    }
  }
}

TEST(RunSe, SignTrajectoryIndependentOfLambda) {
  df::SEOptions opt;
  opt.max_t = 60;
  const auto a = df::run_se(0.3, 0.3, 1.0, model(df::Prior::Gaussian, df::Channel::sign(), 1.0, {{2, 2.2}}), opt);
  const auto b = df::run_se(0.3, 0.3, 1.0, model(df::Prior::Gaussian, df::Channel::sign(), 3.0, {{2, 2.2}}), opt);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    EXPECT_NEAR(a.records[t].m, b.records[t].m, 1e-13);
    EXPECT_NEAR(a.records[t].q, b.records[t].q, 1e-13);
  }
}

TEST(RunSe, DampingKeepsFixedPoint) {
  const auto mod = model(df::Prior::Gaussian, df::Channel::additive(1.0), 2.0, {{2, 1.5}});
  df::SEOptions opt;
  opt.damping = 0.5;
  opt.max_t = 5000;
  const auto tr = df::run_se(1.0, 1.0, 1.0, mod, opt);
  EXPECT_TRUE(tr.converged);
  EXPECT_NEAR(tr.records.back().m, 0.75 - 0.5 * std::sqrt(1.25), 1e-8);
  opt.damping = 0.0;
  EXPECT_THROW(df::run_se(1.0, 1.0, 1.0, mod, opt), std::invalid_argument);
  opt.damping = 1.0;
  opt.max_t = 0;
  EXPECT_THROW(df::run_se(1.0, 1.0, 1.0, mod, opt), std::invalid_argument);
}

TEST(RunSe, UnconvergedFlagWhenBudgetTooSmall) {
  df::SEOptions opt;
  opt.max_t = 3;
  const auto tr = df::run_se(1.0, 1.0, 1.0, model(df::Prior::Ising, df::Channel::additive(1.0), 1.4, {{2, 1.6}}), opt);
  EXPECT_FALSE(tr.converged);
  EXPECT_EQ(tr.steps, 3);
  EXPECT_EQ(tr.records.size(), 4u);
}
