#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adavar/bandit.hpp"

namespace adavar {

double SigmaSchedule::sigma(std::uint64_t k, std::uint64_t seed) const {
  switch (kind) {
    case Kind::kConstant:
      return levels.at(0);
    case Kind::kAlternating:
      return levels[(k - 1) % levels.size()];
    case Kind::kRandomLevels:
      return levels[splitmix64(splitmix64(seed) ^ k) % levels.size()];
    case Kind::kTwoPhase:
      return k < switch_round ? levels.at(0) : levels.at(1);
  }
  return levels.at(0);
}

double SigmaSchedule::max_level() const {
  return *std::max_element(levels.begin(), levels.end());
}

BanditInstance BanditInstance::build(const BanditSpec& spec, std::uint64_t seed) {
  if (spec.dim == 0 || spec.horizon == 0) {
    throw std::invalid_argument("bandit: dim and horizon must be positive");
  }
  if (!(spec.theta_norm > 0.0 && spec.theta_norm <= 1.0)) {
    throw std::invalid_argument("bandit: theta_norm must lie in (0, 1]");
  }
  if (!(spec.big_r > 0.0)) {
    throw std::invalid_argument("bandit: R must be positive");
  }
  if (spec.sigma.levels.empty()) {
    throw std::invalid_argument("bandit: sigma schedule needs at least one level");
  }
  if (spec.sigma.kind == SigmaSchedule::Kind::kTwoPhase && spec.sigma.levels.size() < 2) {
    throw std::invalid_argument("bandit: two-phase schedule needs two levels");
  }
  for (double s : spec.sigma.levels) {
    if (s < 0.0 || s > spec.big_r) {
      throw std::invalid_argument("bandit: every sigma level must lie in [0, R]");
    }
  }
  if (spec.arms != ArmGenerator::kHardTwoArm && spec.n_arms == 0) {
    throw std::invalid_argument("bandit: n_arms must be positive");
  }

  BanditInstance inst;
  inst.spec_ = spec;
  inst.seed_ = seed;
  Rng rng = make_rng(seed, Stream::kInstance);
  const auto d = static_cast<Eigen::Index>(spec.dim);

  if (spec.arms == ArmGenerator::kHardTwoArm) {
    if (spec.dim < 2) {
      throw std::invalid_argument("bandit: the two-arm instance needs dim >= 2");
    }
    if (!(spec.gap > 0.0 && spec.gap <= 2.0)) {
      throw std::invalid_argument("bandit: gap must lie in (0, 2]");
    }
    inst.theta_star_ = Vector::Unit(d, 0) * spec.theta_norm;
    const double c = 1.0 - spec.gap;
    Vector worse = Vector::Zero(d);
    worse[0] = c;
    worse[1] = std::sqrt(std::max(0.0, 1.0 - c * c));
    inst.fixed_arms_ = {worse, Vector::Unit(d, 0)};
  } else {
    inst.theta_star_ = random_unit_vector(spec.dim, rng) * spec.theta_norm;
    if (spec.arms == ArmGenerator::kFixedSphere) {
      inst.fixed_arms_.reserve(spec.n_arms);
      for (std::size_t i = 0; i < spec.n_arms; ++i) {
        inst.fixed_arms_.push_back(random_unit_vector(spec.dim, rng));
      }
    }
  }
  return inst;
}

std::vector<Vector> BanditInstance::decision_set(std::uint64_t, Rng& rng) const {
  if (spec_.arms != ArmGenerator::kFreshSphere) {
    return fixed_arms_;
  }
  std::vector<Vector> arms;
  arms.reserve(spec_.n_arms);
  for (std::size_t i = 0; i < spec_.n_arms; ++i) {
    arms.push_back(random_unit_vector(spec_.dim, rng));
  }
  return arms;
}

double BanditInstance::sample_reward(std::uint64_t k, const Vector& arm, Rng& rng) const {
  const double s = sigma(k);
  if (s > spec_.big_r) {
    throw std::invalid_argument("sample_reward: sigma_k exceeds R");
  }
  const double mean = theta_star_.dot(arm);
  if (spec_.noise == NoiseLaw::kTwoPoint) {
    // Always consume one draw so the noise stream stays aligned across learners.
    const bool up = coin(rng);
    return s == 0.0 ? mean : mean + (up ? s : -s);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  const double eps = std::clamp(s * normal(rng), -spec_.big_r, spec_.big_r);
  return mean + eps;
}

std::size_t best_arm(std::span<const Vector> arms, const Vector& theta_star) {
  if (arms.empty()) {
    throw std::invalid_argument("best_arm: empty decision set");
  }
  std::size_t best = 0;
  double best_val = arms[0].dot(theta_star);
  for (std::size_t i = 1; i < arms.size(); ++i) {
    const double v = arms[i].dot(theta_star);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  return best;
}

}  // namespace adavar
