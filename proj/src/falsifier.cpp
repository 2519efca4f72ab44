#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <omp.h>

#include "adavar/confidence.hpp"
#include "adavar/rng.hpp"

namespace adavar {

void validate_falsifier_config(const FalsifierConfig& cfg) {
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw std::invalid_argument("falsifier: delta must lie in (0, 1)");
  }
  if (cfg.dim == 0 || cfg.steps == 0 || cfg.trials == 0) {
    throw std::invalid_argument("falsifier: dim, steps and trials must be positive");
  }
  if (!(cfg.lambda > 0.0) || !(cfg.rho > 0.0)) {
    throw std::invalid_argument("falsifier: lambda and rho must be positive");
  }
  if (!std::isfinite(cfg.noise.bound) || !(cfg.noise.bound > 0.0)) {
    throw std::invalid_argument("falsifier: noise needs a finite almost-sure bound");
  }
  if (cfg.noise.levels.empty()) {
    throw std::invalid_argument("falsifier: noise needs at least one level");
  }
  for (double s : cfg.noise.levels) {
    if (s < 0.0 || s > cfg.noise.bound) {
      throw std::invalid_argument("falsifier: noise level outside [0, bound]");
    }
  }
}

TrialResult run_falsifier_trial(const FalsifierConfig& cfg, std::uint64_t trial) {
  Rng design = make_rng(cfg.seed, Stream::kFalsifierDesign, trial);
  Rng noise = make_rng(cfg.seed, Stream::kFalsifierNoise, trial);
  PsdAccumulator z(cfg.dim, cfg.lambda);
  const auto& levels = cfg.noise.levels;

  TrialResult out{trial, -1, 0.0};
  double v = 0.0;
  for (std::uint64_t k = 1; k <= cfg.steps; ++k) {
    const double sigma = cfg.noise.alternate
                             ? levels[(k - 1) % levels.size()]
                             : levels[static_cast<std::size_t>(design() % levels.size())];
    Vector a;
    if (cfg.fixed_direction) {
      a = Vector::Unit(static_cast<Eigen::Index>(cfg.dim), 0);
    } else {
      a = random_unit_vector(cfg.dim, design);
    }
    const double na = z.elliptical_norm(a);
    const Vector x = a * std::min(1.0, cfg.rho / na);
    const double eta = coin(noise) ? sigma : -sigma;
    z.rank_one_update(1.0, x, eta);
    v += sigma * sigma;

    const double lhs = z.elliptical_norm(z.moment());
    const double beta = bernstein_radius({cfg.rho, v, cfg.noise.bound, k, cfg.delta});
    const double ratio = lhs / beta;
    out.max_ratio = std::max(out.max_ratio, ratio);
    if (lhs > beta && out.first_violation_step < 0) {
      out.first_violation_step = static_cast<std::int64_t>(k);
    }
  }
  return out;
}

namespace {

FalsifierReport summarize(const FalsifierConfig& cfg, std::vector<TrialResult> trials) {
  FalsifierReport rep;
  std::size_t violations = 0;
  for (const auto& t : trials) {
    violations += t.first_violation_step >= 0 ? 1 : 0;
  }
  const double n = static_cast<double>(trials.size());
  rep.violation_fraction = static_cast<double>(violations) / n;
  rep.allowed_fraction = cfg.delta + 3.0 * std::sqrt(cfg.delta * (1.0 - cfg.delta) / n);
  rep.trials = std::move(trials);
  return rep;
}

}  // namespace

FalsifierReport martingale_falsifier_serial(const FalsifierConfig& cfg) {
  validate_falsifier_config(cfg);
  std::vector<TrialResult> trials;
  trials.reserve(cfg.trials);
  for (std::uint64_t t = 0; t < cfg.trials; ++t) {
    trials.push_back(run_falsifier_trial(cfg, t));
  }
  return summarize(cfg, std::move(trials));
}

FalsifierReport martingale_falsifier(const FalsifierConfig& cfg, int threads) {
  validate_falsifier_config(cfg);
  std::vector<TrialResult> trials(cfg.trials);
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
  const auto n = static_cast<std::int64_t>(cfg.trials);
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
  for (std::int64_t t = 0; t < n; ++t) {
    trials[static_cast<std::size_t>(t)] = run_falsifier_trial(cfg, static_cast<std::uint64_t>(t));
  }
  return summarize(cfg, std::move(trials));
}

}  // namespace adavar
