#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "adavar/confidence.hpp"

using namespace adavar;

namespace {

// Hand transcriptions, kept independent of the library code.
double ref_bernstein(double rho, double v, double r, double k, double delta) {
  const double lg = std::log(4.0 * k * k / delta);
  return 16.0 * rho * std::sqrt(v * lg) + 6.0 * rho * r * lg;
}

double ref_save(int ell, double k, double big_l, double delta, double r, double varhat) {
  const double s = std::pow(2.0, -ell);
  const double inner = std::log(4.0 * (k + 1) * (k + 1) * big_l / delta);
  const double outer = std::log(4.0 * k * k * big_l / delta);
  return 16.0 * s * std::sqrt((8.0 * varhat + 6.0 * r * r * inner + std::pow(2.0, -2 * ell + 4)) * outer) +
         6.0 * s * r * outer + std::pow(2.0, -ell + 1);
}

double ref_mdp(int ell, double k, double h, double big_l, double delta, double lambda, double b,
               double varhat) {
  const double s = std::pow(2.0, -ell);
  const double lg = std::log(4.0 * k * k * h * h * big_l / delta);
  return 16.0 * s * std::sqrt((8.0 * varhat + 8.0 * lg + std::pow(2.0, -2 * ell + 5) * lambda * b * b) * lg) +
         6.0 * s * lg + s * std::sqrt(lambda) * b;
}

}  // namespace

TEST(Radius, BernsteinValues) {
  EXPECT_NEAR(bernstein_radius({1.0, 0.0, 1.0, 1, 0.1}), 6.0 * std::log(40.0), 1e-12);
  EXPECT_NEAR(bernstein_radius({1.0, 0.0, 1.0, 1, 0.1}), 22.1327, 1e-3);
  EXPECT_NEAR(bernstein_radius({0.5, 1.0, 2.0, 10, 0.05}), ref_bernstein(0.5, 1.0, 2.0, 10, 0.05), 1e-12);
  EXPECT_NEAR(bernstein_radius({0.5, 1.0, 2.0, 10, 0.05}), 77.909, 0.02);
}

TEST(Radius, BernsteinHomogeneousInRho) {
  const double base = bernstein_radius({0.3, 2.5, 1.5, 17, 0.05});
  EXPECT_NEAR(bernstein_radius({0.3 * 7.0, 2.5, 1.5, 17, 0.05}), 7.0 * base, 1e-12 * base);
}

TEST(Radius, RejectsBadDelta) {
  EXPECT_THROW(bernstein_radius({1.0, 0.0, 1.0, 1, 0.0}), std::invalid_argument);
  EXPECT_THROW(bernstein_radius({1.0, 0.0, 1.0, 1, 1.0}), std::invalid_argument);
  EXPECT_THROW(save_radius({1, 1, 1, 1.5, 1.0, 0.0, 0}), std::invalid_argument);
  EXPECT_THROW(mdp_radius({1, 1, 1, -0.1, 1, 1.0, 1.0, 0.0, 0}), std::invalid_argument);
  EXPECT_THROW(freedman_radius(1.0, 1.0, 1.0), std::invalid_argument);
}

TEST(Radius, SaveMatchesTranscription) {
  for (int ell = 1; ell <= 6; ++ell) {
    for (std::uint64_t k : {1u, 2u, 50u, 10000u}) {
      for (double varhat : {0.0, 0.3, 12.0}) {
        const double got = save_radius({ell, k, 6, 0.05, 0.7, varhat, 3});
        EXPECT_NEAR(got, ref_save(ell, static_cast<double>(k), 6, 0.05, 0.7, varhat), 1e-12 * got);
      }
    }
  }
  EXPECT_NEAR(save_radius({1, 1, 1, 0.1, 1.0, 0.0, 0}), 102.26, 0.01);
}

TEST(Radius, SaveHalvesPerLayer) {
  // With varhat = 0 and without the 2^{-2l+4} term the radius scales as 2^{-l}.
  for (int ell = 1; ell <= 8; ++ell) {
    const double a = save_radius({ell, 100, 10, 0.05, 1.0, 0.0, 0});
    const double b = save_radius({ell + 1, 100, 10, 0.05, 1.0, 0.0, 0});
    EXPECT_NEAR(b / a, 0.5, 0.05);
  }
}

TEST(Radius, VarhatBranch) {
  EXPECT_DOUBLE_EQ(varhat_branch(10, 1, 1, 0.1, 1.0, 0.7, 5), 0.7);
  // threshold 64 sqrt(log 160) ~ 144.2 > 2
  EXPECT_NEAR(64.0 * std::sqrt(std::log(160.0)), 144.2, 0.1);
  EXPECT_FALSE(save_uses_residual_branch(1, 1, 1, 0.1));
  EXPECT_DOUBLE_EQ(varhat_branch(1, 1, 1, 0.1, 2.0, 0.7, 5), 4.0 * 5);
  EXPECT_DOUBLE_EQ(varhat_branch(1, 1, 1, 0.1, 2.0, 0.7, 0), 0.0);
}

TEST(Radius, MdpValues) {
  EXPECT_NEAR(mdp_radius({1, 1, 1, 0.1, 1, 1.0, 1.0, 0.0, 0}), 105.68, 0.01);
  for (int ell = 1; ell <= 5; ++ell) {
    const double got = mdp_radius({ell, 37, 7, 0.05, 5, 0.25, 2.0, 1.3, 4});
    EXPECT_NEAR(got, ref_mdp(ell, 37, 5, 7, 0.05, 0.25, 2.0, 1.3), 1e-12 * got);
  }
}

TEST(Radius, MdpLastTermWithInverseSquaredB) {
  // lambda = 1/B^2 turns 2^{-l} sqrt(lambda) B into 2^{-l}
  const double b = 3.0;
  const double lambda = 1.0 / (b * b);
  const int ell = 2;
  const double lg = std::log(4.0 * 9.0 * 25.0 * 4.0 / 0.05);
  const double first = 16.0 * 0.25 * std::sqrt((8.0 * lg + std::pow(2.0, 1)) * lg) + 6.0 * 0.25 * lg;
  EXPECT_NEAR(mdp_radius({ell, 3, 4, 0.05, 5, lambda, b, 0.0, 0}) - first, 0.25, 1e-12);
}

TEST(Radius, MonotoneInVarianceAndConfidence) {
  double prev_save = 0.0, prev_mdp = 0.0, prev_b = 0.0, prev_f = 0.0;
  for (double v : {0.0, 0.1, 1.0, 10.0, 100.0}) {
    const double s = save_radius({2, 10, 5, 0.05, 1.0, v, 0});
    const double m = mdp_radius({2, 10, 5, 0.05, 3, 1.0, 1.0, v, 0});
    const double b = bernstein_radius({1.0, v, 1.0, 10, 0.05});
    const double f = freedman_radius(v, 1.0, 0.05);
    if (v > 0.0) {
      EXPECT_GT(s, prev_save);
      EXPECT_GT(m, prev_mdp);
      EXPECT_GT(b, prev_b);
      EXPECT_GT(f, prev_f);
    }
    EXPECT_GT(s, 0.0);
    EXPECT_GT(m, 0.0);
    prev_save = s, prev_mdp = m, prev_b = b, prev_f = f;
  }
  EXPECT_GT(save_radius({2, 10, 5, 0.01, 1.0, 1.0, 0}), save_radius({2, 10, 5, 0.05, 1.0, 1.0, 0}));
  EXPECT_GT(mdp_radius({2, 10, 5, 0.01, 3, 1.0, 1.0, 1.0, 0}),
            mdp_radius({2, 10, 5, 0.05, 3, 1.0, 1.0, 1.0, 0}));
  EXPECT_GT(freedman_radius(1.0, 1.0, 0.01), freedman_radius(1.0, 1.0, 0.05));
}

TEST(Radius, MdpVarhatBranchAndFactor) {
  EXPECT_FALSE(mdp_uses_residual_branch(1, 1, 1, 1, 0.1));
  EXPECT_DOUBLE_EQ(mdp_varhat_branch(1, 1, 1, 1, 0.1, 0.4, 6), 6.0);
  EXPECT_TRUE(mdp_uses_residual_branch(12, 1, 1, 12, 0.1));
  EXPECT_DOUBLE_EQ(mdp_varhat_branch(12, 1, 1, 12, 0.1, 0.4, 6), 8.0 * 0.4);
  EXPECT_DOUBLE_EQ(mdp_varhat_branch(12, 1, 1, 12, 0.1, 0.4, 6, 1.0), 0.4);
}

TEST(Radius, Freedman) {
  EXPECT_NEAR(freedman_radius(0.0, 1.0, std::exp(-1.0)), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(freedman_radius(2.0, 3.0, 0.05), std::sqrt(4.0 * std::log(20.0)) + 2.0 * std::log(20.0),
              1e-12);
  EXPECT_NEAR(freedman_radius(2.0, 3.0, 0.05), 9.4538, 1e-3);
  const double t1 = freedman_radius(1.5, 1e-300, 0.05);
  const double t4 = freedman_radius(6.0, 1e-300, 0.05);
  EXPECT_NEAR(t4, 2.0 * t1, 1e-12);
}

// ---------------------------------------------------------------------------

namespace {

FalsifierConfig small_falsifier() {
  FalsifierConfig cfg;
  cfg.dim = 2;
  cfg.steps = 200;
  cfg.trials = 64;
  cfg.noise.levels = {0.1, 0.5};
  cfg.noise.bound = 0.5;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST(Falsifier, ZeroNoiseNeverViolates) {
  FalsifierConfig cfg = small_falsifier();
  cfg.noise.levels = {0.0};
  cfg.noise.bound = 3.0;
  const auto rep = martingale_falsifier(cfg);
  EXPECT_EQ(rep.violation_fraction, 0.0);
  for (const auto& t : rep.trials) {
    EXPECT_EQ(t.first_violation_step, -1);
    EXPECT_EQ(t.max_ratio, 0.0);
  }
}

TEST(Falsifier, ParallelMatchesSerial) {
  const FalsifierConfig cfg = small_falsifier();
  const auto serial = martingale_falsifier_serial(cfg);
  for (int threads : {1, 2, 4}) {
    const auto par = martingale_falsifier(cfg, threads);
    ASSERT_EQ(par.trials.size(), serial.trials.size());
    for (std::size_t i = 0; i < serial.trials.size(); ++i) {
      EXPECT_EQ(par.trials[i].trial, serial.trials[i].trial);
      EXPECT_EQ(par.trials[i].first_violation_step, serial.trials[i].first_violation_step);
      EXPECT_EQ(par.trials[i].max_ratio, serial.trials[i].max_ratio);
    }
    EXPECT_EQ(par.violation_fraction, serial.violation_fraction);
  }
}

TEST(Falsifier, RejectsUnboundedNoise) {
  FalsifierConfig cfg = small_falsifier();
  cfg.noise.bound = std::numeric_limits<double>::infinity();
  EXPECT_THROW(martingale_falsifier(cfg), std::invalid_argument);
  cfg.noise.bound = 0.2;  // below the 0.5 level
  EXPECT_THROW(martingale_falsifier_serial(cfg), std::invalid_argument);
}

TEST(Falsifier, AllowedFraction) {
  FalsifierConfig cfg = small_falsifier();
  cfg.trials = 500;
  cfg.steps = 5;
  const auto rep = martingale_falsifier(cfg);
  EXPECT_NEAR(rep.allowed_fraction, 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / 500.0), 1e-15);
  EXPECT_NEAR(rep.allowed_fraction, 0.079, 1e-3);
}

// Scalar case: x_k = e_1. The (1 - delta) quantile of sup_k LHS / beta_k
// must sit below 1.
TEST(Falsifier, ScalarQuantileBelowBound) {
  FalsifierConfig cfg = small_falsifier();
  cfg.dim = 1;
  cfg.fixed_direction = true;
  cfg.trials = 400;
  cfg.steps = 300;
  const auto rep = martingale_falsifier(cfg);
  std::vector<double> ratios;
  for (const auto& t : rep.trials) {
    ratios.push_back(t.max_ratio);
  }
  std::sort(ratios.begin(), ratios.end());
  const double q = ratios[static_cast<std::size_t>(0.95 * static_cast<double>(ratios.size()))];
  EXPECT_LT(q, 1.0);
  EXPECT_LE(rep.violation_fraction, rep.allowed_fraction);
}
