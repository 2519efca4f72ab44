#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adavar/linalg.hpp"
#include "adavar/rng.hpp"

namespace adavar {

/// Raw description of a tabular linear mixture MDP. Kernels are stored
/// row-major as [(s * A + a) * S + s'].
struct MdpSpec {
  int n_states = 0;
  int n_actions = 0;
  int horizon = 0;
  std::vector<std::vector<double>> basis;  // d kernels, each S*A*S
  std::vector<double> theta_star;          // on the probability simplex
  std::vector<double> reward;              // S*A
  int start_state = 0;
};

/// Validated linear mixture MDP. The mixed kernel is P = sum_j theta*_j P_j.
/// Features are phi(s'|s,a)_j = P_j(s'|s,a) / sqrt(d), so that
/// P(s'|s,a) = <phi(s'|s,a), sqrt(d) theta*> and ||phi_V(s,a)||_2 <= 1 for
/// every V with values in [0, 1].
class MixtureMdp {
 public:
  int n_states() const { return s_; }
  int n_actions() const { return a_; }
  int horizon() const { return h_; }
  std::size_t dim() const { return basis_.size(); }
  int start_state() const { return start_; }

  double reward(int s, int a) const { return reward_[idx(s, a)]; }
  /// Mixed transition probability P(s'|s,a).
  double p(int s, int a, int next) const { return mixed_[idx(s, a) * s_ + next]; }
  double basis_p(std::size_t j, int s, int a, int next) const {
    return basis_[j][idx(s, a) * s_ + next];
  }
  std::span<const double> mixed_row(int s, int a) const {
    return {mixed_.data() + idx(s, a) * s_, static_cast<std::size_t>(s_)};
  }
  const Vector& theta_star() const { return theta_; }
  /// sqrt(d) theta*, the parameter that pairs with the scaled features.
  Vector theta_eff() const;
  double feature_scale() const;
  /// Norm bound B = sqrt(d) on theta_eff.
  double big_b() const;

 private:
  friend MixtureMdp build_mixture_mdp(const MdpSpec& spec);
  std::size_t idx(int s, int a) const { return static_cast<std::size_t>(s * a_ + a); }

  int s_ = 0, a_ = 0, h_ = 0, start_ = 0;
  std::vector<std::vector<double>> basis_;
  std::vector<double> mixed_;
  std::vector<double> reward_;
  Vector theta_;
};

/// Validates `spec`: rows of every basis kernel are nonnegative and sum to 1
/// (within 1e-12), theta* lies on the simplex, rewards are in [0, 1] and the
/// total reward along any trajectory is at most 1. Throws
/// std::invalid_argument naming the violated condition.
MixtureMdp build_mixture_mdp(const MdpSpec& spec);

/// Random instance: basis rows with probabilities rounded to multiples of
/// 1/20, simplex theta*, rewards uniform in [0, 1/H].
MdpSpec random_mdp_spec(int n_states, int n_actions, int horizon, std::size_t dim,
                        std::uint64_t seed);
/// River-swim chain. Action 0 moves left deterministically; action 1 swims
/// right with a success probability that differs across basis kernels.
MdpSpec river_swim_spec(int n_states, int horizon, std::size_t dim, std::uint64_t seed);
/// Every basis kernel is a point mass and theta* is a simplex vertex, so the
/// mixed kernel is deterministic.
MdpSpec deterministic_mdp_spec(int n_states, int n_actions, int horizon, std::size_t dim,
                               std::uint64_t seed);
/// Goal-reward variant: reward 1 in a goal state that always moves to an
/// absorbing zero-reward sink, so it is collected at most once per episode.
MdpSpec goal_mdp_spec(int n_states, int n_actions, int horizon, std::size_t dim,
                      std::uint64_t seed);

/// phi_V(s,a) = sum_{s'} phi(s'|s,a) V(s'). V must lie in [0, 1] (1e-12 slack).
Vector phi_v(const MixtureMdp& mdp, int s, int a, std::span<const double> v);
/// [P V](s,a) from the mixed kernel.
double expected_value(const MixtureMdp& mdp, int s, int a, std::span<const double> v);
/// [P V^2](s,a) - ([P V](s,a))^2, clamped at 0 above -1e-12.
double conditional_variance(const MixtureMdp& mdp, int s, int a, std::span<const double> v);

/// Q_h for h in [1, H], V_h for h in [1, H + 1] (V_{H+1} = 0) and a greedy
/// deterministic policy.
class ValueTables {
 public:
  ValueTables() = default;
  ValueTables(int n_states, int n_actions, int horizon);

  double q(int h, int s, int a) const { return q_[qi(h, s, a)]; }
  double& q(int h, int s, int a) { return q_[qi(h, s, a)]; }
  double v(int h, int s) const { return v_[vi(h, s)]; }
  double& v(int h, int s) { return v_[vi(h, s)]; }
  int action(int h, int s) const { return pi_[pi_idx(h, s)]; }
  int& action(int h, int s) { return pi_[pi_idx(h, s)]; }
  /// V_h as a span over states.
  std::span<const double> v_row(int h) const {
    return {v_.data() + vi(h, 0), static_cast<std::size_t>(s_)};
  }
  int n_states() const { return s_; }
  int n_actions() const { return a_; }
  int horizon() const { return h_; }

  /// Sets V_h(s) = max_a Q_h(s,a) and the policy to the lowest maximizing action.
  void greedy(int h);

 private:
  std::size_t qi(int h, int s, int a) const {
    return static_cast<std::size_t>(((h - 1) * s_ + s) * a_ + a);
  }
  std::size_t vi(int h, int s) const { return static_cast<std::size_t>((h - 1) * s_ + s); }
  std::size_t pi_idx(int h, int s) const { return static_cast<std::size_t>((h - 1) * s_ + s); }

  int s_ = 0, a_ = 0, h_ = 0;
  std::vector<double> q_;
  std::vector<double> v_;
  std::vector<int> pi_;
};

/// Backward induction on the mixed kernel.
ValueTables exact_dp(const MixtureMdp& mdp);
/// Exact value V^pi_h(s) of the policy stored in `policy`; returned as
/// (H + 1) rows of S entries, row h - 1 holding V^pi_h.
std::vector<double> evaluate_policy(const MixtureMdp& mdp, const ValueTables& policy);

// ---------------------------------------------------------------------------
// Learners

struct StepRecord {
  std::uint64_t k;
  int h;
  int state;
  int action;
  int next_state;
  /// Layer that received the sample, or L + 1 when none did.
  int layer;
  double weight;
  Vector phi;
  double target;
};

class MdpLearner {
 public:
  virtual ~MdpLearner() = default;
  virtual std::string_view name() const = 0;
  /// Plans for episode k; the returned tables stay valid until the next call.
  virtual const ValueTables& plan(std::uint64_t k) = 0;
  /// Records the transition taken at stage h of episode k.
  virtual StepRecord observe(std::uint64_t k, int h, int s, int a, int next) = 0;
  virtual void end_episode(std::uint64_t k) = 0;
  /// |Psi| per layer (empty for single-policy learners).
  virtual std::vector<std::uint64_t> layer_counts() const { return {}; }
};

/// Plays the optimal policy from exact DP.
class OptimalPolicyLearner final : public MdpLearner {
 public:
  explicit OptimalPolicyLearner(const MixtureMdp& mdp);
  std::string_view name() const override { return "optimal"; }
  const ValueTables& plan(std::uint64_t) override { return tables_; }
  StepRecord observe(std::uint64_t k, int h, int s, int a, int next) override;
  void end_episode(std::uint64_t) override {}

 private:
  ValueTables tables_;
};

struct UcrlAveConfig {
  double alpha = 1e-3;
  double delta = 0.05;
  /// <= 0 selects 1 / B^2.
  double lambda = 0.0;
  /// <= 0 selects the instance's B = sqrt(d).
  double big_b = 0.0;
  /// Leading factor on the residual branch of the variance estimate.
  double varhat_leading_factor = 8.0;
};

/// Default alpha = 1 / (K H)^{3/2}.
double ucrl_default_alpha(std::uint64_t episodes, int horizon);

struct UcrlLayer {
  UcrlLayer(std::size_t dim, double reg);
  PsdAccumulator acc;
  Vector theta;
  double beta = 0.0;
  double sum_w2y2 = 0.0;
  Vector sum_w2y_phi;
  double residual_sum = 0.0;
  double varhat = 0.0;
  std::uint64_t count_at_refresh = 0;
};

/// Layered value-targeted regression with variance-adaptive radii.
class UcrlAveLearner final : public MdpLearner {
 public:
  UcrlAveLearner(const MixtureMdp& mdp, UcrlAveConfig cfg);

  std::string_view name() const override { return "ucrl_ave"; }
  const ValueTables& plan(std::uint64_t k) override;
  StepRecord observe(std::uint64_t k, int h, int s, int a, int next) override;
  void end_episode(std::uint64_t k) override;
  std::vector<std::uint64_t> layer_counts() const override;

  int num_layers() const { return static_cast<int>(layers_.size()); }
  const UcrlLayer& layer(int ell) const { return layers_.at(static_cast<std::size_t>(ell - 1)); }
  /// Overrides a layer's estimate and radius. From then on plan() uses the
  /// stored radii instead of recomputing them (used to test planning).
  void set_layer_estimate(int ell, const Vector& theta, double beta);
  double lambda() const { return lambda_; }
  double big_b() const { return big_b_; }
  const UcrlAveConfig& config() const { return cfg_; }
  /// phi_{V_{k,h+1}}(s,a) from the current plan.
  const Vector& cached_phi(int h, int s, int a) const;

 private:
  const MixtureMdp& mdp_;
  UcrlAveConfig cfg_;
  double lambda_;
  double big_b_;
  std::vector<UcrlLayer> layers_;
  ValueTables tables_;
  std::vector<Vector> phi_cache_;  // H*S*A
  bool fixed_estimates_ = false;
};

// ---------------------------------------------------------------------------
// Simulation

struct EpisodeRecord {
  std::uint64_t k;
  double regret;
  double cum_regret;
  double var_k_star_cum;
  bool optimism_flag;
  std::vector<std::uint64_t> layer_counts;
};

struct MdpObserver {
  std::function<void(const StepRecord&, const MdpLearner&)> on_step;
  std::function<void(std::uint64_t k, const MdpLearner&)> on_episode_end;
};

/// Runs K episodes from the designated start state. Regret is
/// V*_1(s_1) - V^{pi_k}_1(s_1) from exact policy evaluation.
std::vector<EpisodeRecord> run_mdp(const MixtureMdp& mdp, MdpLearner& learner,
                                   std::uint64_t episodes, std::uint64_t seed,
                                   const MdpObserver& observer = {});

/// Samples s' ~ P(.|s,a).
int sample_next_state(const MixtureMdp& mdp, int s, int a, Rng& rng);

/// Column order: k,regret,cum_regret,var_k_star_cum,optimism_flag,layer_counts
void write_mdp_csv(std::ostream& os, std::span<const EpisodeRecord> records);

/// Elliptical-potential cap on |Psi_{K+1,l}| for UCRL-AVE:
/// 2^{2l} * 2d log(1 + K H / (2^{-2l} d lambda)).
double mdp_count_cap(int ell, std::size_t dim, std::uint64_t episodes, int horizon,
                     double lambda);
/// The same bound without the 2^{2l} prefactor.
double mdp_count_cap_unscaled(int ell, std::size_t dim, std::uint64_t episodes, int horizon,
                              double lambda);

}  // namespace adavar
