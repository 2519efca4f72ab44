#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "adavar/linalg.hpp"
#include "adavar/rng.hpp"

using adavar::Matrix;
using adavar::PsdAccumulator;
using adavar::Vector;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) {
    v(i++) = x;
  }
  return v;
}

// Random vector inside the unit ball.
Vector ball_vector(std::size_t d, adavar::Rng& rng) {
  return adavar::random_unit_vector(d, rng) * adavar::uniform01(rng);
}

struct Logged {
  double w;
  Vector x;
  double y;
};

}  // namespace

TEST(Accumulator, FreshScalar) {
  PsdAccumulator acc(1, 0.25);
  EXPECT_DOUBLE_EQ(acc.gram()(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(acc.gram_inv()(0, 0), 4.0);
  EXPECT_EQ(acc.count(), 0u);
}

TEST(Accumulator, FreshIdentity) {
  PsdAccumulator acc(3, 1.0);
  EXPECT_TRUE(acc.gram().isApprox(Matrix::Identity(3, 3)));
  EXPECT_TRUE(acc.gram_inv().isApprox(Matrix::Identity(3, 3)));
  EXPECT_EQ(acc.moment(), Vector::Zero(3));
}

TEST(Accumulator, FirstLayerRegularizer) {
  PsdAccumulator acc(2, std::ldexp(1.0, -2));
  EXPECT_TRUE(acc.gram().isApprox(0.25 * Matrix::Identity(2, 2)));
}

TEST(Accumulator, RejectsBadConstruction) {
  EXPECT_THROW(PsdAccumulator(0, 1.0), std::invalid_argument);
  EXPECT_THROW(PsdAccumulator(2, 0.0), std::invalid_argument);
  EXPECT_THROW(PsdAccumulator(2, -1.0), std::invalid_argument);
}

TEST(Accumulator, ZeroWeightOnlyCounts) {
  PsdAccumulator acc(2, 0.5);
  const Matrix g = acc.gram();
  const Matrix gi = acc.gram_inv();
  acc.rank_one_update(0.0, vec({0.3, -0.7}), 5.0);
  EXPECT_EQ(acc.count(), 1u);
  EXPECT_EQ(acc.gram(), g);
  EXPECT_EQ(acc.gram_inv(), gi);
  EXPECT_EQ(acc.moment(), Vector::Zero(2));
}

TEST(Accumulator, OneDimClosedForm) {
  PsdAccumulator acc(1, 1.0);
  acc.rank_one_update(1.0, vec({2.0}), 3.0);
  EXPECT_DOUBLE_EQ(acc.gram()(0, 0), 5.0);
  EXPECT_NEAR(acc.gram_inv()(0, 0), 0.2, 1e-15);
  // w^2 y x = 6; the ridge solution 6 / 5 agrees
  EXPECT_DOUBLE_EQ(acc.moment()(0), 6.0);
  EXPECT_NEAR(acc.solve_theta()(0), 1.2, 1e-15);
}

TEST(Accumulator, RejectsBadUpdates) {
  PsdAccumulator acc(2, 1.0);
  EXPECT_THROW(acc.rank_one_update(-0.1, vec({1.0, 0.0}), 0.0), std::invalid_argument);
  EXPECT_THROW(acc.rank_one_update(NAN, vec({1.0, 0.0}), 0.0), std::invalid_argument);
  EXPECT_THROW(acc.rank_one_update(1.0, vec({1.0}), 0.0), std::invalid_argument);
  EXPECT_THROW(acc.rank_one_update(1.0, vec({INFINITY, 0.0}), 0.0), std::invalid_argument);
}

TEST(Accumulator, InverseMatchesLu) {
  adavar::Rng rng(11);
  PsdAccumulator acc(3, 1.0);
  for (int i = 0; i < 5; ++i) {
    acc.rank_one_update(adavar::uniform01(rng), ball_vector(3, rng), adavar::uniform01(rng));
  }
  const Matrix direct = acc.gram().lu().inverse();
  EXPECT_LE((direct - acc.gram_inv()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Accumulator, EllipticalNorm) {
  PsdAccumulator fresh(1, 0.25);
  EXPECT_DOUBLE_EQ(fresh.elliptical_norm(vec({1.0})), 2.0);
  EXPECT_EQ(fresh.elliptical_norm(vec({0.0})), 0.0);

  adavar::Rng rng(12);
  PsdAccumulator acc(4, 0.1);
  for (int i = 0; i < 50; ++i) {
    acc.rank_one_update(adavar::uniform01(rng), ball_vector(4, rng), 0.0);
  }
  const Matrix inv = acc.gram().lu().inverse();
  for (int i = 0; i < 20; ++i) {
    const Vector x = ball_vector(4, rng);
    EXPECT_NEAR(acc.elliptical_norm(x), std::sqrt(x.dot(inv * x)), 1e-9);
  }
}

TEST(Accumulator, SolveMatchesDenseSolve) {
  PsdAccumulator empty(3, 1.0);
  EXPECT_EQ(empty.solve_theta(), Vector::Zero(3));

  adavar::Rng rng(13);
  PsdAccumulator acc(3, 0.5);
  for (int i = 0; i < 20; ++i) {
    acc.rank_one_update(adavar::uniform01(rng), ball_vector(3, rng), 2.0 * adavar::uniform01(rng) - 1.0);
  }
  const Vector direct = acc.gram().lu().solve(acc.moment());
  EXPECT_LE((direct - acc.solve_theta()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Accumulator, QuadraticFormData) {
  PsdAccumulator fresh(2, 3.0);
  EXPECT_EQ(fresh.quadratic_form_data(vec({1.0, -2.0})), 0.0);

  PsdAccumulator one(1, 1.0);
  one.rank_one_update(0.5, vec({2.0}), 7.0);
  EXPECT_NEAR(one.quadratic_form_data(vec({3.0})), 9.0, 1e-12);

  adavar::Rng rng(14);
  PsdAccumulator acc(3, 0.25);
  std::vector<Logged> log;
  for (int i = 0; i < 200; ++i) {
    Logged e{adavar::uniform01(rng), ball_vector(3, rng), 0.0};
    acc.rank_one_update(e.w, e.x, e.y);
    log.push_back(e);
  }
  const Vector v = adavar::random_unit_vector(3, rng);
  double brute = 0.0;
  for (const auto& e : log) {
    brute += e.w * e.w * std::pow(v.dot(e.x), 2);
  }
  EXPECT_NEAR(acc.quadratic_form_data(v), brute, 1e-9 * std::max(1.0, brute));
}

// Enough updates to cross a refactor boundary; the maintained inverse must
// track the dense one the whole way.
TEST(Accumulator, LongSequenceStaysAccurate) {
  adavar::Rng rng(15);
  const std::size_t d = 16;
  PsdAccumulator acc(d, std::ldexp(1.0, -8));
  const std::uint64_t steps = PsdAccumulator::kRefactorPeriod + 1000;
  for (std::uint64_t i = 0; i < steps; ++i) {
    acc.rank_one_update(adavar::uniform01(rng), ball_vector(d, rng), adavar::uniform01(rng));
    if (i % 997 == 0 || i + 1 == steps) {
      const Matrix direct = acc.gram().lu().inverse();
      ASSERT_LE((direct - acc.gram_inv()).cwiseAbs().maxCoeff(), 1e-8) << "step " << i;
      ASSERT_LE((acc.gram() * acc.solve_theta() - acc.moment()).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
  EXPECT_EQ(acc.count(), steps);
}

TEST(Accumulator, NormNeverGrowsUnderUpdates) {
  adavar::Rng rng(16);
  PsdAccumulator acc(3, 1.0);
  const Vector x = adavar::random_unit_vector(3, rng);
  double prev = acc.elliptical_norm(x);
  for (int i = 0; i < 500; ++i) {
    acc.rank_one_update(adavar::uniform01(rng), ball_vector(3, rng), 0.0);
    const double now = acc.elliptical_norm(x);
    ASSERT_LE(now, prev + 1e-12);
    prev = now;
  }
}

TEST(Accumulator, GramSymmetricAndPositive) {
  adavar::Rng rng(17);
  PsdAccumulator acc(5, 0.5);
  for (int i = 0; i < 300; ++i) {
    acc.rank_one_update(adavar::uniform01(rng), ball_vector(5, rng), 0.0);
  }
  EXPECT_EQ(acc.gram(), acc.gram().transpose());
  EXPECT_EQ(acc.gram_inv(), acc.gram_inv().transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(acc.gram());
  EXPECT_GE(es.eigenvalues().minCoeff(), 0.5 - 1e-9);
}

TEST(Rng, StreamsAreIndependentAndRepeatable) {
  auto a = adavar::make_rng(5, adavar::Stream::kNoise, 0);
  auto b = adavar::make_rng(5, adavar::Stream::kNoise, 0);
  auto c = adavar::make_rng(5, adavar::Stream::kDecisionSet, 0);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
}
