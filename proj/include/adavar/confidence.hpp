#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "adavar/linalg.hpp"

namespace adavar {

// Confidence radii. All logarithms are natural.

struct BernsteinRadiusInput {
  double rho;       // >= sup_k ||x_k||_{Z_{k-1}^{-1}}
  double v;         // cumulative conditional variance bound v_k
  double big_r;     // almost-sure noise bound
  std::uint64_t k;  // step index, >= 1
  double delta;
};

struct SaveRadiusInput {
  int ell;
  std::uint64_t k;
  int big_l;
  double delta;
  double big_r;
  double varhat;
  std::uint64_t psi_count;
};

struct MdpRadiusInput {
  int ell;
  std::uint64_t k;
  int big_l;
  double delta;
  int big_h;
  double lambda;
  double big_b;
  double varhat;
  std::uint64_t psi_count;
};

/// Vector-martingale Freedman bound:
/// 16 rho sqrt(v log(4k^2/delta)) + 6 rho R log(4k^2/delta).
double bernstein_radius(const BernsteinRadiusInput& in);

/// Layer-l radius of the SAVE learner after round k (used at round k + 1).
/// The caller passes varhat already selected by varhat_branch.
double save_radius(const SaveRadiusInput& in);

/// Variance estimate used by save_radius: the weighted residual sum when
/// 2^l >= 64 sqrt(log(4(k+1)^2 L / delta)), otherwise R^2 |Psi|.
double varhat_branch(int ell, std::uint64_t k, int big_l, double delta, double big_r,
                     double weighted_sq_residuals, std::uint64_t psi_count);

/// Layer-l radius of UCRL-AVE at episode k.
double mdp_radius(const MdpRadiusInput& in);

/// MDP counterpart of varhat_branch: leading_factor * residuals when
/// 2^l >= 64 sqrt(log(4k^2 H^2 L / delta)), otherwise |Psi|.
double mdp_varhat_branch(int ell, std::uint64_t k, int big_h, int big_l, double delta,
                         double weighted_sq_residuals, std::uint64_t psi_count,
                         double leading_factor = 8.0);

/// True when the residual branch is active for the MDP radius.
bool mdp_uses_residual_branch(int ell, std::uint64_t k, int big_h, int big_l, double delta);
/// True when the residual branch is active for the bandit radius.
bool save_uses_residual_branch(int ell, std::uint64_t k, int big_l, double delta);

/// Scalar Freedman bound sqrt(2 v log(1/delta)) + (2/3) M log(1/delta).
double freedman_radius(double v, double m, double delta);

// ---------------------------------------------------------------------------
// Monte-Carlo falsification of the vector-martingale bound.

/// Conditionally centered noise with known conditional variance. At step k
/// the level sigma_k is drawn (from the design stream, so it is predictable)
/// uniformly from `levels`, or cycled through them when `alternate` is set.
/// Two-point noise +-sigma_k is used, so |eta_k| <= max(levels) <= bound.
/// A non-finite bound marks noise without an almost-sure bound.
struct NoiseSpec {
  std::vector<double> levels;
  bool alternate = false;
  double bound = 1.0;
};

struct FalsifierConfig {
  std::size_t dim = 2;
  std::uint64_t steps = 500;
  std::uint64_t trials = 500;
  double delta = 0.05;
  double lambda = 1.0;
  /// Design vectors are scaled so that ||x_k||_{Z_{k-1}^{-1}} <= rho.
  double rho = 1.0;
  /// Use x_k = e_1 for every k (scalar self-normalized case).
  bool fixed_direction = false;
  NoiseSpec noise;
  std::uint64_t seed = 1;
};

struct TrialResult {
  std::uint64_t trial;
  std::int64_t first_violation_step;  // -1 when the bound held for all k
  double max_ratio;                   // sup_k LHS_k / beta_k
};

struct FalsifierReport {
  std::vector<TrialResult> trials;
  double violation_fraction = 0.0;
  /// delta + 3 sqrt(delta (1 - delta) / T)
  double allowed_fraction = 0.0;
};

/// Throws std::invalid_argument if the noise has no finite almost-sure bound,
/// if a level exceeds the bound, or if delta is outside (0, 1).
void validate_falsifier_config(const FalsifierConfig& cfg);

/// Runs one trial. Deterministic in (cfg.seed, trial).
TrialResult run_falsifier_trial(const FalsifierConfig& cfg, std::uint64_t trial);

/// Reference implementation: trials run in order on the calling thread.
FalsifierReport martingale_falsifier_serial(const FalsifierConfig& cfg);

/// Trials spread over OpenMP threads; identical output to the serial version.
FalsifierReport martingale_falsifier(const FalsifierConfig& cfg, int threads = 0);

}  // namespace adavar
