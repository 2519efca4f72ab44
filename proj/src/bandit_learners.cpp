#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "adavar/bandit.hpp"
#include "adavar/confidence.hpp"

namespace adavar {

int layer_count_for(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("alpha must be positive and finite");
  }
  int big_l = std::max(1, static_cast<int>(std::ceil(std::log2(1.0 / alpha))));
  while (std::ldexp(1.0, -big_l) > alpha) {
    ++big_l;
  }
  return big_l;
}

double save_default_alpha(double big_r, std::uint64_t horizon) {
  return 1.0 / (big_r * std::pow(static_cast<double>(horizon), 1.5));
}

SaveLayer::SaveLayer(std::size_t dim, double reg)
    : acc(dim, reg),
      theta(Vector::Zero(static_cast<Eigen::Index>(dim))),
      beta(0.0),
      sum_w2ra(Vector::Zero(static_cast<Eigen::Index>(dim))) {}

SaveLearner::SaveLearner(std::size_t dim, SaveConfig cfg) : cfg_(cfg) {
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw std::invalid_argument("save: delta must lie in (0, 1)");
  }
  if (!(cfg.big_r > 0.0) || !(cfg.lambda > 0.0)) {
    throw std::invalid_argument("save: R and lambda must be positive");
  }
  const int big_l = layer_count_for(cfg.alpha);
  layers_.reserve(static_cast<std::size_t>(big_l));
  for (int ell = 1; ell <= big_l; ++ell) {
    layers_.emplace_back(dim, std::ldexp(cfg.lambda, -2 * ell));
    layers_.back().beta = std::ldexp(1.0, -ell + 1);
  }
}

Selection SaveLearner::select(std::span<const Vector> arms, std::uint64_t) {
  if (arms.empty()) {
    throw std::invalid_argument("save: empty decision set");
  }
  std::vector<std::size_t> active(arms.size());
  std::iota(active.begin(), active.end(), std::size_t{0});
  std::vector<double> norms;

  for (int ell = 1; ell <= num_layers(); ++ell) {
    const SaveLayer& layer = layers_[static_cast<std::size_t>(ell - 1)];
    const double scale = std::ldexp(1.0, -ell);
    norms.resize(active.size());
    double max_norm = 0.0;
    for (std::size_t j = 0; j < active.size(); ++j) {
      norms[j] = layer.acc.elliptical_norm(arms[active[j]]);
      if (!std::isfinite(norms[j])) {
        throw std::invalid_argument("save: arm with non-finite norm");
      }
      max_norm = std::max(max_norm, norms[j]);
    }

    Selection sel;
    sel.layer = ell;
    if (max_norm <= cfg_.alpha) {
      // Every candidate is well estimated: optimistic choice, no insertion.
      std::size_t best = 0;
      double best_ucb = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < active.size(); ++j) {
        const double ucb = arms[active[j]].dot(layer.theta) + layer.beta * norms[j];
        if (ucb > best_ucb) {
          best_ucb = ucb;
          best = j;
        }
      }
      sel.branch = 1;
      sel.arm = active[best];
      sel.active = std::move(active);
      return sel;
    }

    if (max_norm <= scale) {
      double best_mean = -std::numeric_limits<double>::infinity();
      std::vector<double> means(active.size());
      for (std::size_t j = 0; j < active.size(); ++j) {
        means[j] = arms[active[j]].dot(layer.theta);
        best_mean = std::max(best_mean, means[j]);
      }
      const double cutoff = best_mean - 2.0 * scale * layer.beta;
      std::vector<std::size_t> kept;
      kept.reserve(active.size());
      for (std::size_t j = 0; j < active.size(); ++j) {
        if (means[j] >= cutoff) {
          kept.push_back(active[j]);
        }
      }
      active = std::move(kept);
      continue;
    }

    // Some candidate is uncertain at this scale: play the most uncertain one
    // and insert it into this layer.
    std::size_t best = 0;
    double best_norm = -1.0;
    for (std::size_t j = 0; j < active.size(); ++j) {
      if (norms[j] > scale && norms[j] > best_norm) {
        best_norm = norms[j];
        best = j;
      }
    }
    sel.branch = 3;
    sel.arm = active[best];
    sel.weight = scale / best_norm;
    sel.active = std::move(active);
    return sel;
  }
  // 2^{-L} <= alpha makes the first branch fire by layer L.
  throw std::logic_error("save: selection loop ran past the last layer");
}

void SaveLearner::update(const Selection& sel, const Feedback& fb) {
  if (sel.branch != 3) {
    return;
  }
  if (sel.layer < 1 || sel.layer > num_layers()) {
    throw std::logic_error("save: insertion layer out of range");
  }
  SaveLayer& layer = layers_[static_cast<std::size_t>(sel.layer - 1)];
  const double scale = std::ldexp(1.0, -sel.layer);
  const double w = sel.weight;
  if (std::abs(w * layer.acc.elliptical_norm(fb.arm) - scale) > 1e-9) {
    throw std::logic_error("save: inserted feature violates ||w a|| = 2^{-l}");
  }

  layer.acc.rank_one_update(w, fb.arm, fb.reward);
  layer.theta = layer.acc.solve_theta();
  const double w2 = w * w;
  layer.sum_w2r2 += w2 * fb.reward * fb.reward;
  layer.sum_w2ra += (w2 * fb.reward) * fb.arm;

  // sum w^2 (r - <theta, a>)^2 = sum w^2 r^2 - 2 theta^T sum w^2 r a
  //                              + theta^T (sum w^2 a a^T) theta
  double resid = layer.sum_w2r2 - 2.0 * layer.theta.dot(layer.sum_w2ra) +
                 layer.acc.quadratic_form_data(layer.theta);
  if (resid < -1e-9) {
    throw std::logic_error("save: incremental variance estimate is negative");
  }
  layer.residual_sum = std::max(resid, 0.0);

  const std::uint64_t count = layer.acc.count();
  layer.varhat = varhat_branch(sel.layer, fb.k, num_layers(), cfg_.delta, cfg_.big_r,
                               layer.residual_sum, count);
  layer.beta = save_radius(
      {sel.layer, fb.k, num_layers(), cfg_.delta, cfg_.big_r, layer.varhat, count});
}

bool SaveLearner::covers(const Vector& theta_star) const {
  return std::all_of(layers_.begin(), layers_.end(), [&](const SaveLayer& layer) {
    return layer.acc.gram_norm(layer.theta - theta_star) <= layer.beta;
  });
}

// ---------------------------------------------------------------------------

namespace {

std::size_t argmax_ucb(std::span<const Vector> arms, const Vector& theta,
                       const PsdAccumulator& acc, double beta) {
  if (arms.empty()) {
    throw std::invalid_argument("empty decision set");
  }
  std::size_t best = 0;
  double best_ucb = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const double ucb = arms[i].dot(theta) + beta * acc.elliptical_norm(arms[i]);
    if (ucb > best_ucb) {
      best_ucb = ucb;
      best = i;
    }
  }
  return best;
}

}  // namespace

OfulLearner::OfulLearner(std::size_t dim, OfulConfig cfg)
    : cfg_(cfg), acc_(dim, cfg.lambda), theta_(Vector::Zero(static_cast<Eigen::Index>(dim))) {
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw std::invalid_argument("oful: delta must lie in (0, 1)");
  }
}

double OfulLearner::radius() const {
  if (cfg_.fixed_radius) {
    return *cfg_.fixed_radius;
  }
  const double t = static_cast<double>(acc_.count());
  const double d = static_cast<double>(acc_.dim());
  const double a2 = cfg_.arm_bound * cfg_.arm_bound;
  return cfg_.big_r * std::sqrt(d * std::log((1.0 + t * a2 / cfg_.lambda) / cfg_.delta)) +
         std::sqrt(cfg_.lambda) * cfg_.theta_bound;
}

Selection OfulLearner::select(std::span<const Vector> arms, std::uint64_t) {
  Selection sel;
  sel.arm = argmax_ucb(arms, theta_, acc_, radius());
  return sel;
}

void OfulLearner::update(const Selection&, const Feedback& fb) {
  acc_.rank_one_update(1.0, fb.arm, fb.reward);
  theta_ = acc_.solve_theta();
}

bool OfulLearner::covers(const Vector& theta_star) const {
  return acc_.gram_norm(theta_ - theta_star) <= radius();
}

WeightedOfulLearner::WeightedOfulLearner(std::size_t dim, WeightedOfulConfig cfg)
    : cfg_(cfg), acc_(dim, cfg.lambda), theta_(Vector::Zero(static_cast<Eigen::Index>(dim))) {
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw std::invalid_argument("weighted_oful: delta must lie in (0, 1)");
  }
  if (!(cfg.sigma_min > 0.0)) {
    throw std::invalid_argument("weighted_oful: sigma_min must be positive");
  }
}

double WeightedOfulLearner::radius() const {
  if (cfg_.fixed_radius) {
    return *cfg_.fixed_radius;
  }
  // The normalized noise eps / sigma_bar is 1-sub-Gaussian and the normalized
  // features have norm at most A / sigma_min.
  const double t = static_cast<double>(acc_.count());
  const double d = static_cast<double>(acc_.dim());
  const double a2 = cfg_.arm_bound * cfg_.arm_bound / (cfg_.sigma_min * cfg_.sigma_min);
  return std::sqrt(d * std::log((1.0 + t * a2 / cfg_.lambda) / cfg_.delta)) +
         std::sqrt(cfg_.lambda) * cfg_.theta_bound;
}

Selection WeightedOfulLearner::select(std::span<const Vector> arms, std::uint64_t) {
  Selection sel;
  sel.arm = argmax_ucb(arms, theta_, acc_, radius());
  return sel;
}

void WeightedOfulLearner::update(const Selection&, const Feedback& fb) {
  const double sigma_bar = std::max(fb.oracle_sigma, cfg_.sigma_min);
  acc_.rank_one_update(1.0 / sigma_bar, fb.arm, fb.reward);
  theta_ = acc_.solve_theta();
}

bool WeightedOfulLearner::covers(const Vector& theta_star) const {
  return acc_.gram_norm(theta_ - theta_star) <= radius();
}

}  // namespace adavar
