#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adavar/linalg.hpp"
#include "adavar/rng.hpp"

namespace adavar {

// ---------------------------------------------------------------------------
// Environments

enum class ArmGenerator {
  kFixedSphere,  // N unit arms drawn once per instance
  kFreshSphere,  // N unit arms drawn every round
  kHardTwoArm,   // two unit arms with reward gap `gap`
};

enum class NoiseLaw {
  kTwoPoint,           // +-sigma_k with equal probability; exact variance
  kTruncatedGaussian,  // N(0, sigma_k^2) clipped to [-R, R]; variance is approximate
};

/// Per-round noise level sigma_k.
struct SigmaSchedule {
  enum class Kind { kConstant, kAlternating, kRandomLevels, kTwoPhase };
  Kind kind = Kind::kConstant;
  /// kConstant: {sigma}. kAlternating / kRandomLevels: the level set.
  /// kTwoPhase: {sigma before switch, sigma from switch on}.
  std::vector<double> levels{0.0};
  std::uint64_t switch_round = 0;

  /// Deterministic in (seed, k); k is 1-based.
  double sigma(std::uint64_t k, std::uint64_t seed) const;
  double max_level() const;
};

struct BanditSpec {
  std::size_t dim = 2;
  std::uint64_t horizon = 1000;
  double big_r = 1.0;
  ArmGenerator arms = ArmGenerator::kFreshSphere;
  std::size_t n_arms = 10;
  double gap = 0.5;
  SigmaSchedule sigma;
  NoiseLaw noise = NoiseLaw::kTwoPoint;
  /// ||theta*||_2; must be in (0, 1].
  double theta_norm = 1.0;
};

/// Heteroscedastic linear bandit: r_k = <theta*, a_k> + eps_k with
/// E[eps_k] = 0, E[eps_k^2] = sigma_k^2 and |eps_k| <= R.
class BanditInstance {
 public:
  /// Throws std::invalid_argument on an inconsistent spec (sigma above R,
  /// theta_norm outside (0, 1], empty arm set, ...).
  static BanditInstance build(const BanditSpec& spec, std::uint64_t seed);

  const Vector& theta_star() const { return theta_star_; }
  std::size_t dim() const { return spec_.dim; }
  std::uint64_t horizon() const { return spec_.horizon; }
  double big_r() const { return spec_.big_r; }
  /// Uniform bound A on ||a||_2.
  double arm_bound() const { return 1.0; }
  const BanditSpec& spec() const { return spec_; }

  /// D_k. Fresh generators draw from `rng`; fixed ones ignore it.
  std::vector<Vector> decision_set(std::uint64_t k, Rng& rng) const;
  double sigma(std::uint64_t k) const { return spec_.sigma.sigma(k, seed_); }
  /// Throws std::invalid_argument if sigma_k > R.
  double sample_reward(std::uint64_t k, const Vector& arm, Rng& rng) const;

 private:
  BanditSpec spec_;
  std::uint64_t seed_ = 0;
  Vector theta_star_;
  std::vector<Vector> fixed_arms_;
};

// ---------------------------------------------------------------------------
// Learners

/// Outcome of a learner's selection step.
struct Selection {
  std::size_t arm = 0;
  /// 1: optimistic choice; 3: exploration with an insertion at `layer`.
  int branch = 1;
  /// Layer at which the selection loop stopped (0 for single-layer learners).
  int layer = 0;
  /// Insertion weight when branch == 3.
  double weight = 0.0;
  /// Candidate set that survived elimination up to the stopping layer.
  std::vector<std::size_t> active;
};

struct Feedback {
  std::uint64_t k;
  Vector arm;
  double reward;
  /// True sigma_k. Only the oracle-variance baseline reads it.
  double oracle_sigma;
};

class BanditLearner {
 public:
  virtual ~BanditLearner() = default;
  virtual std::string_view name() const = 0;
  virtual Selection select(std::span<const Vector> arms, std::uint64_t k) = 0;
  virtual void update(const Selection& sel, const Feedback& fb) = 0;
  /// Whether theta* lies in every confidence ellipsoid the learner holds.
  virtual bool covers(const Vector& theta_star) const = 0;
};

/// L = max(1, ceil(log2(1/alpha))), adjusted so that 2^{-L} <= alpha holds
/// exactly in floating point.
int layer_count_for(double alpha);

struct SaveConfig {
  double alpha = 1e-3;
  double delta = 0.05;
  double big_r = 1.0;
  /// Layer l is regularized with 2^{-2l} * lambda.
  double lambda = 1.0;
};

/// Default alpha = 1 / (R K^{3/2}).
double save_default_alpha(double big_r, std::uint64_t horizon);

/// Per-layer state of the SAVE learner.
struct SaveLayer {
  SaveLayer(std::size_t dim, double reg);
  PsdAccumulator acc;
  Vector theta;
  double beta;
  double sum_w2r2 = 0.0;
  Vector sum_w2ra;
  /// sum w^2 (r - <theta, a>)^2 from the incremental identity.
  double residual_sum = 0.0;
  /// residual_sum or R^2 |Psi|, whichever the branch rule picks.
  double varhat = 0.0;
};

/// Multi-layer SupLin learner with variance-adaptive radii.
class SaveLearner final : public BanditLearner {
 public:
  SaveLearner(std::size_t dim, SaveConfig cfg);

  std::string_view name() const override { return "save"; }
  Selection select(std::span<const Vector> arms, std::uint64_t k) override;
  void update(const Selection& sel, const Feedback& fb) override;
  bool covers(const Vector& theta_star) const override;

  int num_layers() const { return static_cast<int>(layers_.size()); }
  /// 1-based layer access.
  const SaveLayer& layer(int ell) const { return layers_.at(static_cast<std::size_t>(ell - 1)); }
  const SaveConfig& config() const { return cfg_; }

 private:
  SaveConfig cfg_;
  std::vector<SaveLayer> layers_;
};

struct OfulConfig {
  double lambda = 1.0;
  double delta = 0.05;
  double big_r = 1.0;
  double arm_bound = 1.0;
  double theta_bound = 1.0;
  /// Replaces the radius with a constant (used to compare selection rules).
  std::optional<double> fixed_radius;
};

/// Unweighted ridge regression with the self-normalized radius
/// R sqrt(d log((1 + t A^2 / lambda) / delta)) + sqrt(lambda) S.
class OfulLearner final : public BanditLearner {
 public:
  OfulLearner(std::size_t dim, OfulConfig cfg);
  std::string_view name() const override { return "oful"; }
  Selection select(std::span<const Vector> arms, std::uint64_t k) override;
  void update(const Selection& sel, const Feedback& fb) override;
  bool covers(const Vector& theta_star) const override;
  double radius() const;
  const PsdAccumulator& accumulator() const { return acc_; }
  const Vector& theta() const { return theta_; }

 private:
  OfulConfig cfg_;
  PsdAccumulator acc_;
  Vector theta_;
};

struct WeightedOfulConfig {
  double lambda = 1.0;
  double delta = 0.05;
  double sigma_min = 0.01;
  double arm_bound = 1.0;
  double theta_bound = 1.0;
  std::optional<double> fixed_radius;
};

/// Oracle-variance baseline: sample k carries regression weight
/// 1 / max(sigma_k^2, sigma_min^2).
class WeightedOfulLearner final : public BanditLearner {
 public:
  WeightedOfulLearner(std::size_t dim, WeightedOfulConfig cfg);
  std::string_view name() const override { return "weighted_oful"; }
  Selection select(std::span<const Vector> arms, std::uint64_t k) override;
  void update(const Selection& sel, const Feedback& fb) override;
  bool covers(const Vector& theta_star) const override;
  double radius() const;
  const PsdAccumulator& accumulator() const { return acc_; }
  const Vector& theta() const { return theta_; }

 private:
  WeightedOfulConfig cfg_;
  PsdAccumulator acc_;
  Vector theta_;
};

// ---------------------------------------------------------------------------
// Simulation

struct RegretRecord {
  std::uint64_t k;
  std::size_t arm_index;
  double inst_regret;
  double cum_regret;
  int branch;
  int layer;
  bool coverage_flag;
  /// Whether a*_k survived every elimination step this round.
  bool optimal_retained;
};

/// Called after each round's update with the learner in its round-(k+1) state.
using BanditObserver =
    std::function<void(const Selection&, const Feedback&, const BanditLearner&)>;

/// Plays inst.horizon() rounds. Decision sets and noise come from
/// independent streams of `seed`, so different learners see the same
/// environment draws.
std::vector<RegretRecord> run_bandit(const BanditInstance& inst, BanditLearner& learner,
                                     std::uint64_t seed, const BanditObserver& observer = {});

/// Index of argmax <a, theta*> (lowest index on ties).
std::size_t best_arm(std::span<const Vector> arms, const Vector& theta_star);

/// Column order: k,arm_index,inst_regret,cum_regret,branch,layer,coverage_flag
void write_bandit_csv(std::ostream& os, std::span<const RegretRecord> records);

/// Elliptical-potential cap on |Psi_{K+1,l}| for SAVE:
/// 2^{2l} * 2d log(1 + 2^{2l} K A^2 / d).
double save_count_cap(int ell, std::size_t dim, std::uint64_t horizon, double arm_bound);
/// The same bound without the 2^{2l} prefactor.
double save_count_cap_unscaled(int ell, std::size_t dim, std::uint64_t horizon, double arm_bound);

}  // namespace adavar
