#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adavar/bandit.hpp"
#include "adavar/confidence.hpp"
#include "adavar/mdp.hpp"

namespace adavar {

double ucrl_default_alpha(std::uint64_t episodes, int horizon) {
  return 1.0 / std::pow(static_cast<double>(episodes) * horizon, 1.5);
}

UcrlLayer::UcrlLayer(std::size_t dim, double reg)
    : acc(dim, reg),
      theta(Vector::Zero(static_cast<Eigen::Index>(dim))),
      sum_w2y_phi(Vector::Zero(static_cast<Eigen::Index>(dim))) {}

OptimalPolicyLearner::OptimalPolicyLearner(const MixtureMdp& mdp) : tables_(exact_dp(mdp)) {}

StepRecord OptimalPolicyLearner::observe(std::uint64_t k, int h, int s, int a, int next) {
  return {k, h, s, a, next, 0, 0.0, Vector(), 0.0};
}

UcrlAveLearner::UcrlAveLearner(const MixtureMdp& mdp, UcrlAveConfig cfg)
    : mdp_(mdp),
      cfg_(cfg),
      lambda_(0.0),
      big_b_(cfg.big_b > 0.0 ? cfg.big_b : mdp.big_b()),
      tables_(mdp.n_states(), mdp.n_actions(), mdp.horizon()),
      phi_cache_(static_cast<std::size_t>(mdp.horizon() * mdp.n_states() * mdp.n_actions())) {
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw std::invalid_argument("ucrl_ave: delta must lie in (0, 1)");
  }
  if (!(cfg.varhat_leading_factor > 0.0)) {
    throw std::invalid_argument("ucrl_ave: variance leading factor must be positive");
  }
  lambda_ = cfg.lambda > 0.0 ? cfg.lambda : 1.0 / (big_b_ * big_b_);
  const int big_l = layer_count_for(cfg.alpha);
  layers_.reserve(static_cast<std::size_t>(big_l));
  for (int ell = 1; ell <= big_l; ++ell) {
    layers_.emplace_back(mdp.dim(), std::ldexp(lambda_, -2 * ell));
  }
}

const Vector& UcrlAveLearner::cached_phi(int h, int s, int a) const {
  return phi_cache_[static_cast<std::size_t>(((h - 1) * mdp_.n_states() + s) * mdp_.n_actions() +
                                             a)];
}

void UcrlAveLearner::set_layer_estimate(int ell, const Vector& theta, double beta) {
  UcrlLayer& layer = layers_.at(static_cast<std::size_t>(ell - 1));
  layer.theta = theta;
  layer.beta = beta;
  fixed_estimates_ = true;
}

const ValueTables& UcrlAveLearner::plan(std::uint64_t k) {
  const int big_l = num_layers();
  if (!fixed_estimates_) {
    for (int ell = 1; ell <= big_l; ++ell) {
      UcrlLayer& layer = layers_[static_cast<std::size_t>(ell - 1)];
      layer.varhat = mdp_varhat_branch(ell, k, mdp_.horizon(), big_l, cfg_.delta,
                                       layer.residual_sum, layer.acc.count(),
                                       cfg_.varhat_leading_factor);
      layer.beta = mdp_radius({ell, k, big_l, cfg_.delta, mdp_.horizon(), lambda_, big_b_,
                               layer.varhat, layer.acc.count()});
    }
  }

  for (int h = mdp_.horizon(); h >= 1; --h) {
    const auto next = tables_.v_row(h + 1);
    for (int s = 0; s < mdp_.n_states(); ++s) {
      for (int a = 0; a < mdp_.n_actions(); ++a) {
        Vector& phi = phi_cache_[static_cast<std::size_t>(
            ((h - 1) * mdp_.n_states() + s) * mdp_.n_actions() + a)];
        phi = phi_v(mdp_, s, a, next);
        double q = 1.0;
        for (const UcrlLayer& layer : layers_) {
          q = std::min(q, mdp_.reward(s, a) + layer.theta.dot(phi) +
                              layer.beta * layer.acc.elliptical_norm(phi));
        }
        // An estimate can predict below zero; values stay in [0, 1].
        tables_.q(h, s, a) = std::max(q, 0.0);
      }
    }
    tables_.greedy(h);
  }
  return tables_;
}

StepRecord UcrlAveLearner::observe(std::uint64_t k, int h, int s, int a, int next) {
  const Vector& phi = cached_phi(h, s, a);
  const double y = tables_.v(h + 1, next);
  StepRecord rec{k, h, s, a, next, num_layers() + 1, 0.0, phi, y};
  for (int ell = 1; ell <= num_layers(); ++ell) {
    UcrlLayer& layer = layers_[static_cast<std::size_t>(ell - 1)];
    const double scale = std::ldexp(1.0, -ell);
    const double norm = layer.acc.elliptical_norm(phi);
    if (norm < scale) {
      continue;
    }
    const double w = scale / norm;
    if (std::abs(layer.acc.elliptical_norm(w * phi) - scale) > 1e-9) {
      throw std::logic_error("ucrl_ave: inserted feature violates ||w phi|| = 2^{-l}");
    }
    layer.acc.rank_one_update(w, phi, y);
    layer.sum_w2y2 += w * w * y * y;
    layer.sum_w2y_phi += (w * w * y) * phi;
    rec.layer = ell;
    rec.weight = w;
    break;
  }
  return rec;
}

void UcrlAveLearner::end_episode(std::uint64_t) {
  for (UcrlLayer& layer : layers_) {
    if (layer.acc.count() == layer.count_at_refresh) {
      continue;
    }
    layer.count_at_refresh = layer.acc.count();
    layer.theta = layer.acc.solve_theta();
    const double resid = layer.sum_w2y2 - 2.0 * layer.theta.dot(layer.sum_w2y_phi) +
                         layer.acc.quadratic_form_data(layer.theta);
    if (resid < -1e-9 * std::max(1.0, layer.sum_w2y2)) {
      throw std::logic_error("ucrl_ave: incremental variance estimate is negative");
    }
    layer.residual_sum = std::max(resid, 0.0);
  }
}

std::vector<std::uint64_t> UcrlAveLearner::layer_counts() const {
  std::vector<std::uint64_t> out;
  out.reserve(layers_.size());
  for (const auto& layer : layers_) {
    out.push_back(layer.acc.count());
  }
  return out;
}

}  // namespace adavar
