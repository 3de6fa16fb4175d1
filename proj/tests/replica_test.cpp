#include "densefactor/replica.hpp"
#include "densefactor/state_evolution.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace df = densefactor;
using df::testing::for_all;
using df::testing::Gen;

namespace {

// Frozen 50-digit values.
constexpr double kTanhIdentityA01 = 0.0913406012048779;
constexpr double kTanhIdentityA1 = 0.550400490793327;
constexpr double kTanhIdentityA5 = 0.961537188630617;
constexpr double kMd5 = 0.612574113277207;
constexpr double kLambdaD5 = 1.54949960473379;
constexpr double kMd10 = 0.544466578219748;
constexpr double kLambdaD10 = 0.780480805746563;

std::vector<double> nonzero(const df::EosBranches& br) {
  std::vector<double> out;
  for (const auto& s : br.solutions) {
    if (s.m > 0.0) out.push_back(s.m);
  }
  return out;
}

double ising_map_brute(double K) {
  return df::testing::gauss_expect_brute([K](double z) { return std::tanh(K + std::sqrt(K) * z); }, 4000);
}

}  // namespace

TEST(SolveEos, GaussianP2ClosedForm) {
  const auto br = df::solve_eos(df::ModelFamily::gauss_gauss(2), 1.5, 2.0);
  ASSERT_EQ(br.solutions.size(), 2u);
  EXPECT_EQ(br.solutions[0].m, 0.0);
  EXPECT_NEAR(br.solutions[1].m, 0.75 - 0.5 * std::sqrt(1.25), 1e-10);
  EXPECT_EQ(br.solutions[1].kind, df::BranchKind::Low);
  EXPECT_EQ(br.dominant, 1u);
  EXPECT_FALSE(br.solutions[0].stable);
}

TEST(SolveEos, GaussianP3BelowThresholdOnlyParamagnet) {
  for (double alpha : {2.0, 2.9}) {
    for (double lambda : {0.5, 2.0, 10.0, 100.0}) {
      const auto br = df::solve_eos(df::ModelFamily::gauss_gauss(3), alpha, lambda);
      EXPECT_TRUE(nonzero(br).empty()) << alpha << " " << lambda;
      EXPECT_TRUE(br.solutions[0].stable);
    }
  }
}

TEST(SolveEos, IsingNoiselessLargePApproachesTrivialSolutions) {
  double prev = 0.0;
  for (int p : {4, 8, 16}) {
    const auto br = df::solve_eos(df::ModelFamily::ising_gauss(p).at_lambda_infinity(), 1.0, 1.0);
    const auto roots = nonzero(br);
    ASSERT_FALSE(roots.empty()) << p;
    EXPECT_GT(roots.front(), prev) << p;
    EXPECT_GT(roots.front(), 0.9) << p;
    EXPECT_GT(roots.back(), 1.0 - 1e-6) << p;
    prev = roots.front();
  }
}

TEST(SolveEos, SolutionsSortedAndSelfConsistent) {
  const df::ModelFamily fams[] = {df::ModelFamily::ising_gauss(2), df::ModelFamily::ising_gauss(3),
                                  df::ModelFamily::gauss_gauss(3), df::ModelFamily::gauss_sign(2),
                                  df::ModelFamily::mixed(2, 0.8, 3)};
  for_all(25, 201, [&](Gen& g, int k) {
    const auto& fam = fams[k % 5];
    const double alpha = g.uniform(0.5, 8.0);
    const double lambda = g.uniform(0.5, 4.0);
    const auto br = df::solve_eos(fam, alpha, lambda);
    ASSERT_FALSE(br.solutions.empty());
    EXPECT_EQ(br.solutions[0].m, 0.0);
    EXPECT_EQ(br.solutions[0].kind, df::BranchKind::Paramagnet);
    df::ReplicaOptions doubled;
    doubled.quad.node_count = 202;
    for (std::size_t s = 1; s < br.solutions.size(); ++s) {
      const double m = br.solutions[s].m;
      EXPECT_GT(m, br.solutions[s - 1].m);
      EXPECT_TRUE(std::isfinite(br.solutions[s].free_energy));
      EXPECT_LE(std::abs(df::eos_rhs(fam, m, alpha, lambda, doubled) - m), 1e-9)
          << df::to_string(fam) << " alpha=" << alpha << " lambda=" << lambda << " m=" << m;
    }
    ASSERT_LT(br.dominant, br.solutions.size());
  });
}

TEST(SolveEos, SignIndependentOfLambda) {
  for (int p : {2, 3}) {
    for (double alpha : {1.2, 2.0, 4.0}) {
      const auto ref = df::solve_eos(df::ModelFamily::gauss_sign(p), alpha, 1.0);
      for (double lambda : {0.5, 4.0}) {
        const auto br = df::solve_eos(df::ModelFamily::gauss_sign(p), alpha, lambda);
        ASSERT_EQ(br.solutions.size(), ref.solutions.size());
        for (std::size_t s = 0; s < br.solutions.size(); ++s) {
          EXPECT_EQ(br.solutions[s].m, ref.solutions[s].m);
          EXPECT_EQ(br.solutions[s].free_energy, ref.solutions[s].free_energy);
        }
      }
    }
  }
}

TEST(SolveEos, MixedReducesToPure) {
  const auto mixed = df::ModelFamily::mixed(2, 0.0, 3);
  const auto pure = df::ModelFamily::gauss_gauss(3);
  for (double m : {0.1, 0.5, 0.9}) {
    EXPECT_EQ(df::eos_rhs(mixed, m, 5.0, 2.0), df::eos_rhs(pure, m, 5.0, 2.0));
    EXPECT_EQ(df::free_energy(mixed, m, 5.0, 2.0), df::free_energy(pure, m, 5.0, 2.0));
  }
  const auto a = df::solve_eos(mixed, 5.0, 2.0);
  const auto b = df::solve_eos(pure, 5.0, 2.0);
  ASSERT_EQ(a.solutions.size(), b.solutions.size());
  for (std::size_t s = 0; s < a.solutions.size(); ++s) EXPECT_EQ(a.solutions[s].m, b.solutions[s].m);
  const auto other = df::ModelFamily::mixed(2, 1.7, 3);
  for (double m : {0.1, 0.5, 0.9}) {
    EXPECT_EQ(df::eos_rhs(other, m, 0.0, 2.0), df::eos_rhs(df::ModelFamily::gauss_gauss(2), m, 1.7, 2.0));
  }
}

TEST(SolveEos, InvalidArguments) {
  EXPECT_THROW(df::solve_eos(df::ModelFamily::gauss_gauss(2), 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(df::solve_eos(df::ModelFamily::gauss_gauss(2), 1.0, -1.0), std::invalid_argument);
  EXPECT_NO_THROW(df::solve_eos(df::ModelFamily::gauss_sign(2), 1.0, -1.0));
}

TEST(IsingMap, TanhIdentity) {
  const std::pair<double, double> cases[] = {{0.1, kTanhIdentityA01}, {1.0, kTanhIdentityA1}, {5.0, kTanhIdentityA5}};
  for (auto [A, frozen] : cases) {
    const double s = std::sqrt(A);
    const double m = df::shifted_gauss_expect([](double x) { return std::tanh(x); }, A, s);
    const double q = df::shifted_gauss_expect([](double x) { return std::pow(std::tanh(x), 2); }, A, s);
    EXPECT_NEAR(m, q, 1e-10) << A;
    EXPECT_NEAR(m, frozen, 1e-10) << A;
  }
}

TEST(FreeEnergy, Examples) {
  const double alpha = 1.7, lambda = 1.3;
  for (int p : {2, 3}) {
    EXPECT_NEAR(df::free_energy(df::ModelFamily::ising_gauss(p), 0.0, alpha, lambda),
                alpha / (2.0 * p) * std::log(1.0 + lambda * lambda), 1e-14);
  }
  EXPECT_EQ(df::gaussian_delta_f(df::ModelFamily::gauss_gauss(3), 0.0, 5.0, 2.0), 0.0);
  EXPECT_EQ(df::free_energy(df::ModelFamily::gauss_gauss(3), 0.0, 5.0, 2.0), 0.0);
  EXPECT_THROW(df::free_energy(df::ModelFamily::gauss_gauss(3), 1.0, 5.0, 2.0), std::out_of_range);
  EXPECT_THROW(df::free_energy(df::ModelFamily::gauss_gauss(3), -0.1, 5.0, 2.0), std::out_of_range);
  EXPECT_THROW(df::gaussian_delta_f(df::ModelFamily::gauss_sign(2), 0.3, 5.0, 2.0), std::invalid_argument);
}

TEST(FreeEnergy, GaussianDeltaFClosedForm) {
  for_all(100, 211, [](Gen& g, int) {
    const int p = g.integer(2, 4);
    const double m = g.uniform(0.0, 0.99), alpha = g.uniform(0.5, 8.0), lambda = g.uniform(0.2, 4.0);
    const double l2 = lambda * lambda;
    const double expect = 0.5 * std::log(1.0 - m) + 0.5 * m - alpha / (2.0 * p) * std::log(1.0 - l2 / (1.0 + l2) * std::pow(m, p));
    EXPECT_NEAR(df::gaussian_delta_f(df::ModelFamily::gauss_gauss(p), m, alpha, lambda), expect, 1e-12);
  });
}

TEST(FreeEnergy, StationaryAtEosSolutions) {
  const std::tuple<df::ModelFamily, double, double> cases[] = {
      {df::ModelFamily::gauss_gauss(2), 1.5, 2.0}, {df::ModelFamily::gauss_gauss(3), 5.0, 2.0},
      {df::ModelFamily::ising_gauss(2), 1.6, 2.0}, {df::ModelFamily::ising_gauss(3), 4.0, 2.0},
      {df::ModelFamily::gauss_sign(2), 2.0, 1.0}, {df::ModelFamily::gauss_sign(3), 3.0, 1.0}};
  for (const auto& [fam, alpha, lambda] : cases) {
    const auto br = df::solve_eos(fam, alpha, lambda);
    for (double m : nonzero(br)) {
      const double h = 1e-5;
      const double d = (df::free_energy(fam, m + h, alpha, lambda) - df::free_energy(fam, m - h, alpha, lambda)) / (2 * h);
      EXPECT_NEAR(d, 0.0, 1e-6) << df::to_string(fam) << " m=" << m;
    }
  }
}

TEST(FreeEnergy, SignContinuousAtParamagnet) {
  const auto fam = df::ModelFamily::gauss_sign(2);
  const double f0 = df::free_energy(fam, 0.0, 1.0, 1.0);
  for (double m : {1e-3, 1e-5}) {
    EXPECT_NEAR(df::free_energy(fam, m, 1.0, 1.0), f0, 10 * m * m);
  }
}

TEST(PmStability, Examples) {
  auto s = df::paramagnet_stability(df::ModelFamily::gauss_gauss(2), 2.0, 0.5);
  ASSERT_TRUE(s.lambda_star.has_value());
  EXPECT_DOUBLE_EQ(*s.lambda_star, 1.0);
  EXPECT_TRUE(s.stable);
  s = df::paramagnet_stability(df::ModelFamily::ising_gauss(2), 2.0, 1.5);
  EXPECT_FALSE(s.stable);
  s = df::paramagnet_stability(df::ModelFamily::ising_gauss(3), 10.0, 50.0);
  EXPECT_TRUE(s.stable);
  s = df::paramagnet_stability(df::ModelFamily::mixed(2, 2.0, 3), 1.0, 0.5);
  ASSERT_TRUE(s.lambda_star.has_value());
  EXPECT_DOUBLE_EQ(*s.lambda_star, 1.0);
  s = df::paramagnet_stability(df::ModelFamily::gauss_gauss(2), 0.9, 100.0);
  EXPECT_TRUE(s.stable);
  EXPECT_FALSE(s.lambda_star.has_value());
  EXPECT_TRUE(df::paramagnet_stability(df::ModelFamily::gauss_sign(2), 1.5, 1.0).stable);
  EXPECT_FALSE(df::paramagnet_stability(df::ModelFamily::gauss_sign(2), 1.6, 1.0).stable);
}

TEST(PmStability, MatchesFreeEnergyCurvature) {
  const auto fam = df::ModelFamily::ising_gauss(2);
  for_all(40, 221, [&](Gen& g, int) {
    const double alpha = g.uniform(0.3, 4.0), lambda = g.uniform(0.3, 4.0);
    const double slope = alpha * lambda * lambda / (1.0 + lambda * lambda);
    if (std::abs(slope - 1.0) < 0.05) return;
    const double m = 1e-4, h = 1e-5;
    const double f2 = (df::free_energy(fam, m + h, alpha, lambda) - 2.0 * df::free_energy(fam, m, alpha, lambda) +
                       df::free_energy(fam, m - h, alpha, lambda)) / (h * h);
    EXPECT_EQ(f2 > 0.0, df::paramagnet_stability(fam, alpha, lambda).stable)
        << "alpha=" << alpha << " lambda=" << lambda << " f''=" << f2;
  });
}

TEST(Spinodal, GaussianP3ClosedForms) {
  const auto fam = df::ModelFamily::gauss_gauss(3);
  EXPECT_NEAR(*df::spinodal(fam, 4.0), std::sqrt(27.0 / 5.0), 1e-12);
  EXPECT_NEAR(df::branch_window(fam, 4.0).m_lower, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(*df::spinodal(fam, 5.0), kLambdaD5, 1e-12);
  EXPECT_NEAR(df::branch_window(fam, 5.0).m_lower, kMd5, 1e-12);
  EXPECT_NEAR(*df::spinodal(fam, 10.0), kLambdaD10, 1e-12);
  EXPECT_NEAR(df::branch_window(fam, 10.0).m_lower, kMd10, 1e-12);
  EXPECT_FALSE(df::spinodal(fam, 2.5).has_value());
  // the numeric curve inversion of the mixed family locates the same minimum
  const auto numeric = df::branch_window(df::ModelFamily::mixed(2, 0.0, 3), 5.0);
  ASSERT_TRUE(numeric.lower.has_value());
  EXPECT_NEAR(*numeric.lower, kLambdaD5, 1e-8);
  EXPECT_NEAR(numeric.m_lower, kMd5, 1e-5);
}

TEST(Spinodal, HighBranchAppearsAtSpinodal) {
  const auto fam = df::ModelFamily::gauss_gauss(3);
  const double ld = *df::spinodal(fam, 5.0);
  EXPECT_TRUE(nonzero(df::solve_eos(fam, 5.0, ld * 0.999)).empty());
  EXPECT_FALSE(nonzero(df::solve_eos(fam, 5.0, ld * 1.001)).empty());
}

TEST(Spinodal, IsingNoiselessBranchMerger) {
  // Independent oracle: alpha(m) = K(m) (1 - m^2) / m with K the inverse of the Ising map,
  // maximized over m; both pieces evaluated by brute-force Simpson quadrature.
  auto K_of = [](double m) {
    double lo = 0.0, hi = 1.0;
    while (ising_map_brute(hi) < m) hi *= 2.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ising_map_brute(mid) < m ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  auto alpha_of = [&](double m) { return K_of(m) * (1.0 - m * m) / m; };
  double best = -1.0;
  double m_best = 0.0;
  for (double m = 0.30; m < 0.95; m += 0.01) {
    const double a = alpha_of(m);
    if (a > best) {
      best = a;
      m_best = m;
    }
  }
  for (double step = 0.005; step > 1e-6; step /= 2.0) {
    for (double m : {m_best - step, m_best + step}) {
      const double a = alpha_of(m);
      if (a > best) {
        best = a;
        m_best = m;
      }
    }
  }
  const auto w = df::alpha_branch_window(df::ModelFamily::ising_gauss(2).at_lambda_infinity(), 1.0);
  ASSERT_TRUE(w.upper.has_value());
  EXPECT_NEAR(*w.upper, best, 1e-6);
  EXPECT_NEAR(w.m_upper, m_best, 1e-3);
  EXPECT_FALSE(w.lower.has_value());
}

TEST(CriticalLine, GaussianP3Ordering) {
  const auto fam = df::ModelFamily::gauss_gauss(3);
  const auto ld = df::spinodal(fam, 5.0);
  const auto lc = df::critical_line(fam, 5.0);
  ASSERT_TRUE(ld && lc);
  EXPECT_LT(*ld, *lc);
  const auto below = df::solve_eos(fam, 5.0, *lc * 0.99);
  const auto above = df::solve_eos(fam, 5.0, *lc * 1.01);
  EXPECT_EQ(below.dominant, 0u);
  EXPECT_NE(above.dominant, 0u);
  EXPECT_FALSE(df::critical_line(fam, 2.5).has_value());
}

TEST(CodeLimit, CapacityConsistency) {
  for (double R : {0.5, 1.0, 2.0, 4.0}) {
    const auto c = df::shannon_code_limit(R);
    EXPECT_NEAR(c.capacity_check, R, 1e-10) << R;
    EXPECT_NEAR(c.lambda_c, std::sqrt(std::pow(4.0, R) - 1.0), 1e-10 * c.lambda_c) << R;
  }
  EXPECT_NEAR(df::shannon_code_limit(1.0).lambda_c, std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(df::shannon_code_limit(2.0).lambda_c, std::sqrt(15.0), 1e-11);
  EXPECT_LT(df::shannon_code_limit(1e-6).lambda_c, 1e-2);
  EXPECT_THROW(df::shannon_code_limit(0.0), std::invalid_argument);
}

TEST(ClassifyPhase, Examples) {
  // below alpha = 1 the paramagnet is stable and no magnetized branch exists
  EXPECT_EQ(df::classify_phase(df::ModelFamily::ising_gauss(2), 0.5, 3.0), "PM");
  EXPECT_EQ(df::classify_phase(df::ModelFamily::ising_gauss(2), 1.05, 4.0), "I");
  EXPECT_EQ(df::classify_phase(df::ModelFamily::ising_gauss(2), 1.6, 3.0), "III");
  EXPECT_EQ(df::classify_phase(df::ModelFamily::gauss_gauss(2), 2.0, 0.5), "impossible");
  EXPECT_EQ(df::classify_phase(df::ModelFamily::gauss_gauss(2), 2.0, 1.5), "easy");
  EXPECT_EQ(df::classify_phase(df::ModelFamily::gauss_gauss(3), 5.0, 2.0), "hard");
  EXPECT_EQ(df::classify_phase(df::ModelFamily::gauss_gauss(3), 2.0, 2.0), "impossible");
}

TEST(TracePhaseDiagram, GaussianP2BoundaryStraddlesThreshold) {
  std::vector<double> alphas, lambdas;
  for (int k = 0; k < 9; ++k) alphas.push_back(1.25 + 0.2 * k);
  for (int k = 0; k < 29; ++k) lambdas.push_back(0.2 + 0.1 * k);
  const auto d = df::trace_phase_diagram(df::ModelFamily::gauss_gauss(2), alphas, lambdas, {}, 2);
  ASSERT_EQ(d.points.size(), alphas.size() * lambdas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    const double star = 1.0 / std::sqrt(alphas[a] - 1.0);
    for (std::size_t l = 0; l + 1 < lambdas.size(); ++l) {
      const auto& lo = d.points[a * lambdas.size() + l];
      const auto& hi = d.points[a * lambdas.size() + l + 1];
      if (lo.region != hi.region) {
        EXPECT_LE(lo.lambda, star);
        EXPECT_GE(hi.lambda, star);
      }
    }
    ASSERT_TRUE(d.lines[a].lambda_star.has_value());
    EXPECT_NEAR(*d.lines[a].lambda_star, star, 1e-14);
  }
  std::ostringstream os, ls;
  df::write_phase_csv(os, d);
  df::write_lines_csv(ls, d);
  EXPECT_EQ(os.str().rfind("alpha,lambda,region,m_para,m_low,m_high,f_low_minus_f_para,f_high_minus_f_para\n", 0), 0u);
  EXPECT_EQ(ls.str().rfind("alpha,lambda_star,lambda_d,lambda_c\n", 0), 0u);
}

TEST(TracePhaseDiagram, ParallelMatchesSerial) {
  const std::vector<double> alphas{3.5, 5.0}, lambdas{1.0, 1.6, 2.2};
  const auto a = df::trace_phase_diagram(df::ModelFamily::gauss_gauss(3), alphas, lambdas, {}, 1);
  const auto b = df::trace_phase_diagram(df::ModelFamily::gauss_gauss(3), alphas, lambdas, {}, 3);
  std::ostringstream sa, sb;
  df::write_phase_csv(sa, a);
  df::write_phase_csv(sb, b);
  df::write_lines_csv(sa, a);
  df::write_lines_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(ReplicaVsSe, FixedPointsAgree) {
  struct Case {
    df::ModelFamily fam;
    df::Prior prior;
    df::Channel ch;
    double alpha, lambda;
  };
  const Case cases[] = {
      {df::ModelFamily::gauss_gauss(2), df::Prior::Gaussian, df::Channel::additive(1.0), 2.0, 1.5},
      {df::ModelFamily::ising_gauss(2), df::Prior::Ising, df::Channel::additive(1.0), 1.6, 2.0},
      {df::ModelFamily::gauss_gauss(3), df::Prior::Gaussian, df::Channel::additive(1.0), 5.0, 2.0},
      {df::ModelFamily::gauss_sign(2), df::Prior::Gaussian, df::Channel::sign(), 2.5, 1.0},
  };
  for (const auto& c : cases) {
    df::SEModel mod;
    mod.prior = c.prior;
    mod.channel = c.ch;
    mod.lambda = c.lambda;
    mod.species = {{c.fam.p, c.alpha}};
    df::SEOptions opt;
    opt.conv_tol = 1e-13;
    opt.max_t = 100000;
    const auto tr = df::run_se(1.0 - 1e-9, 1.0 - 1e-9, 1.0, mod, opt);
    ASSERT_TRUE(tr.converged) << df::to_string(c.fam);
    const auto br = df::solve_eos(c.fam, c.alpha, c.lambda);
    const double m_se = tr.records.back().m;
    double best = 1.0;
    for (const auto& s : br.solutions) best = std::min(best, std::abs(s.m - m_se));
    EXPECT_LT(best, 1e-8) << df::to_string(c.fam) << " m_se=" << m_se;
  }
}

TEST(ModelFamily, Names) {
  EXPECT_EQ(df::to_string(df::ModelFamily::gauss_gauss(3)), "gauss-gauss(p=3)");
  EXPECT_EQ(df::parse_family("gauss-sign", 2, 0, 0.0).kind, df::ModelFamily::Kind::GaussSign);
  EXPECT_THROW(df::parse_family("nope", 2, 0, 0.0), std::invalid_argument);
  EXPECT_FALSE(df::ModelFamily::gauss_sign(2).has_lambda());
  EXPECT_FALSE(df::ModelFamily::ising_gauss(2).at_lambda_infinity().has_lambda());
}
