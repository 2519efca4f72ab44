#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "adavar/mdp.hpp"

namespace adavar {
namespace {

constexpr double kRowTol = 1e-12;

[[noreturn]] void reject(const std::string& what) {
  throw std::invalid_argument("mixture mdp: " + what);
}

void check_value_range(std::span<const double> v, std::size_t n_states, const char* where) {
  if (v.size() != n_states) {
    throw std::invalid_argument(std::string(where) + ": value table has wrong size");
  }
  for (double x : v) {
    if (!(x >= -kRowTol && x <= 1.0 + kRowTol)) {
      throw std::invalid_argument(std::string(where) + ": value outside [0, 1]");
    }
  }
}

// Row of probabilities that are multiples of 1/q, by largest remainder.
std::vector<double> rounded_row(std::size_t n, int q, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> p(n);
  for (auto& x : p) {
    x = expo(rng);
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  std::vector<int> units(n);
  std::vector<double> frac(n);
  int used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double scaled = p[i] / total * q;
    units[i] = static_cast<int>(std::floor(scaled));
    frac[i] = scaled - units[i];
    used += units[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; used < q; ++i, ++used) {
    ++units[order[i % n]];
  }
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    row[i] = static_cast<double>(units[i]) / q;
  }
  return row;
}

std::vector<double> random_simplex(std::size_t d, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> t(d);
  for (auto& x : t) {
    x = expo(rng);
  }
  const double total = std::accumulate(t.begin(), t.end(), 0.0);
  for (auto& x : t) {
    x /= total;
  }
  return t;
}

MdpSpec blank_spec(int n_states, int n_actions, int horizon, std::size_t dim) {
  if (n_states < 1 || n_actions < 1 || horizon < 1 || dim < 1) {
    reject("need S, A, H, d >= 1");
  }
  MdpSpec spec;
  spec.n_states = n_states;
  spec.n_actions = n_actions;
  spec.horizon = horizon;
  const auto cells = static_cast<std::size_t>(n_states * n_actions * n_states);
  spec.basis.assign(dim, std::vector<double>(cells, 0.0));
  spec.reward.assign(static_cast<std::size_t>(n_states * n_actions), 0.0);
  return spec;
}

}  // namespace

Vector MixtureMdp::theta_eff() const { return std::sqrt(static_cast<double>(dim())) * theta_; }

double MixtureMdp::feature_scale() const { return 1.0 / std::sqrt(static_cast<double>(dim())); }

double MixtureMdp::big_b() const { return std::sqrt(static_cast<double>(dim())); }

MixtureMdp build_mixture_mdp(const MdpSpec& spec) {
  const int s_n = spec.n_states, a_n = spec.n_actions;
  if (s_n < 1 || a_n < 1 || spec.horizon < 1) {
    reject("need S, A, H >= 1");
  }
  if (spec.basis.empty()) {
    reject("need at least one basis kernel");
  }
  if (spec.start_state < 0 || spec.start_state >= s_n) {
    reject("start state out of range");
  }
  const auto sa = static_cast<std::size_t>(s_n * a_n);
  const auto cells = sa * static_cast<std::size_t>(s_n);
  for (std::size_t j = 0; j < spec.basis.size(); ++j) {
    const auto& kernel = spec.basis[j];
    if (kernel.size() != cells) {
      reject("basis kernel " + std::to_string(j) + " has wrong size");
    }
    for (std::size_t row = 0; row < sa; ++row) {
      double sum = 0.0;
      for (int t = 0; t < s_n; ++t) {
        const double p = kernel[row * s_n + t];
        if (!(p >= 0.0) || !std::isfinite(p)) {
          reject("basis kernel " + std::to_string(j) + " has a negative entry");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowTol) {
        reject("basis kernel " + std::to_string(j) + " row " + std::to_string(row) +
               " does not sum to 1");
      }
    }
  }
  if (spec.theta_star.size() != spec.basis.size()) {
    reject("theta* dimension does not match the number of basis kernels");
  }
  double tsum = 0.0;
  for (double t : spec.theta_star) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      reject("theta* is not on the simplex (negative entry)");
    }
    tsum += t;
  }
  if (std::abs(tsum - 1.0) > kRowTol) {
    reject("theta* is not on the simplex (entries do not sum to 1)");
  }
  if (spec.reward.size() != sa) {
    reject("reward table has wrong size");
  }
  for (double r : spec.reward) {
    if (!(r >= 0.0 && r <= 1.0)) {
      reject("reward outside [0, 1]");
    }
  }

  MixtureMdp mdp;
  mdp.s_ = s_n;
  mdp.a_ = a_n;
  mdp.h_ = spec.horizon;
  mdp.start_ = spec.start_state;
  mdp.basis_ = spec.basis;
  mdp.reward_ = spec.reward;
  mdp.theta_ = Eigen::Map<const Vector>(spec.theta_star.data(),
                                        static_cast<Eigen::Index>(spec.theta_star.size()));
  mdp.mixed_.assign(cells, 0.0);
  for (std::size_t j = 0; j < spec.basis.size(); ++j) {
    for (std::size_t c = 0; c < cells; ++c) {
      mdp.mixed_[c] += spec.theta_star[j] * spec.basis[j][c];
    }
  }

  // Largest reward collectable along any trajectory the mixed kernel allows.
  std::vector<double> best(static_cast<std::size_t>(s_n), 0.0), next(best.size());
  for (int h = spec.horizon; h >= 1; --h) {
    for (int s = 0; s < s_n; ++s) {
      double m = 0.0;
      for (int a = 0; a < a_n; ++a) {
        double tail = 0.0;
        for (int t = 0; t < s_n; ++t) {
          if (mdp.p(s, a, t) > 0.0) {
            tail = std::max(tail, best[static_cast<std::size_t>(t)]);
          }
        }
        m = std::max(m, mdp.reward(s, a) + tail);
      }
      next[static_cast<std::size_t>(s)] = m;
    }
    best.swap(next);
  }
  for (double m : best) {
    if (m > 1.0 + kRowTol) {
      reject("total reward along some trajectory exceeds 1");
    }
  }
  return mdp;
}

MdpSpec random_mdp_spec(int n_states, int n_actions, int horizon, std::size_t dim,
                        std::uint64_t seed) {
  MdpSpec spec = blank_spec(n_states, n_actions, horizon, dim);
  Rng rng = make_rng(seed, Stream::kInstance);
  const auto s_n = static_cast<std::size_t>(n_states);
  for (auto& kernel : spec.basis) {
    for (std::size_t row = 0; row < spec.reward.size(); ++row) {
      const auto p = rounded_row(s_n, 20, rng);
      std::copy(p.begin(), p.end(), kernel.begin() + static_cast<std::ptrdiff_t>(row * s_n));
    }
  }
  spec.theta_star = random_simplex(dim, rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0 / horizon);
  for (auto& r : spec.reward) {
    r = unif(rng);
  }
  return spec;
}

MdpSpec river_swim_spec(int n_states, int horizon, std::size_t dim, std::uint64_t seed) {
  if (n_states < 2) {
    reject("river swim needs at least 2 states");
  }
  MdpSpec spec = blank_spec(n_states, 2, horizon, dim);
  Rng rng = make_rng(seed, Stream::kInstance);
  const auto s_n = static_cast<std::size_t>(n_states);
  auto at = [&](std::vector<double>& k, int s, int a, int t) -> double& {
    return k[(static_cast<std::size_t>(s) * 2 + a) * s_n + static_cast<std::size_t>(t)];
  };
  for (std::size_t j = 0; j < dim; ++j) {
    const double success = dim == 1 ? 0.6 : 0.3 + 0.6 * static_cast<double>(j) / (dim - 1);
    auto& k = spec.basis[j];
    for (int s = 0; s < n_states; ++s) {
      at(k, s, 0, std::max(s - 1, 0)) = 1.0;
      const int right = std::min(s + 1, n_states - 1);
      const int left = std::max(s - 1, 0);
      at(k, s, 1, right) += success;
      at(k, s, 1, left) += 0.05;
      at(k, s, 1, s) += 1.0 - success - 0.05;
    }
  }
  spec.theta_star = random_simplex(dim, rng);
  spec.reward[0] = 0.1 / horizon;                                          // (0, left)
  spec.reward[static_cast<std::size_t>((n_states - 1) * 2 + 1)] = 1.0 / horizon;  // (S-1, right)
  return spec;
}

MdpSpec deterministic_mdp_spec(int n_states, int n_actions, int horizon, std::size_t dim,
                               std::uint64_t seed) {
  MdpSpec spec = blank_spec(n_states, n_actions, horizon, dim);
  Rng rng = make_rng(seed, Stream::kInstance);
  const auto s_n = static_cast<std::size_t>(n_states);
  for (auto& kernel : spec.basis) {
    for (std::size_t row = 0; row < spec.reward.size(); ++row) {
      kernel[row * s_n + rng() % s_n] = 1.0;
    }
  }
  spec.theta_star.assign(dim, 0.0);
  spec.theta_star[rng() % dim] = 1.0;
  std::uniform_real_distribution<double> unif(0.0, 1.0 / horizon);
  for (auto& r : spec.reward) {
    r = unif(rng);
  }
  return spec;
}

MdpSpec goal_mdp_spec(int n_states, int n_actions, int horizon, std::size_t dim,
                      std::uint64_t seed) {
  if (n_states < 3) {
    reject("goal variant needs at least 3 states");
  }
  MdpSpec spec = blank_spec(n_states, n_actions, horizon, dim);
  Rng rng = make_rng(seed, Stream::kInstance);
  const auto s_n = static_cast<std::size_t>(n_states);
  const int goal = n_states - 2, sink = n_states - 1;
  for (auto& kernel : spec.basis) {
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        const std::size_t row = static_cast<std::size_t>(s * n_actions + a) * s_n;
        if (s >= goal) {
          kernel[row + static_cast<std::size_t>(sink)] = 1.0;
        } else {
          const auto p = rounded_row(s_n - 1, 20, rng);  // never straight to the sink
          std::copy(p.begin(), p.end(), kernel.begin() + static_cast<std::ptrdiff_t>(row));
        }
      }
    }
  }
  spec.theta_star = random_simplex(dim, rng);
  for (int a = 0; a < n_actions; ++a) {
    spec.reward[static_cast<std::size_t>(goal * n_actions + a)] = 1.0;
  }
  return spec;
}

Vector phi_v(const MixtureMdp& mdp, int s, int a, std::span<const double> v) {
  check_value_range(v, static_cast<std::size_t>(mdp.n_states()), "phi_v");
  Vector phi(static_cast<Eigen::Index>(mdp.dim()));
  for (std::size_t j = 0; j < mdp.dim(); ++j) {
    double acc = 0.0;
    for (int t = 0; t < mdp.n_states(); ++t) {
      acc += mdp.basis_p(j, s, a, t) * v[static_cast<std::size_t>(t)];
    }
    phi[static_cast<Eigen::Index>(j)] = mdp.feature_scale() * acc;
  }
  return phi;
}

double expected_value(const MixtureMdp& mdp, int s, int a, std::span<const double> v) {
  const auto row = mdp.mixed_row(s, a);
  double acc = 0.0;
  for (std::size_t t = 0; t < row.size(); ++t) {
    acc += row[t] * v[t];
  }
  return acc;
}

double conditional_variance(const MixtureMdp& mdp, int s, int a, std::span<const double> v) {
  check_value_range(v, static_cast<std::size_t>(mdp.n_states()), "conditional_variance");
  const auto row = mdp.mixed_row(s, a);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t t = 0; t < row.size(); ++t) {
    m1 += row[t] * v[t];
    m2 += row[t] * v[t] * v[t];
  }
  const double var = m2 - m1 * m1;
  if (var < -kRowTol) {
    throw std::logic_error("conditional_variance: negative variance");
  }
  return std::max(var, 0.0);
}

ValueTables::ValueTables(int n_states, int n_actions, int horizon)
    : s_(n_states),
      a_(n_actions),
      h_(horizon),
      q_(static_cast<std::size_t>(horizon * n_states * n_actions), 0.0),
      v_(static_cast<std::size_t>((horizon + 1) * n_states), 0.0),
      pi_(static_cast<std::size_t>(horizon * n_states), 0) {}

void ValueTables::greedy(int h) {
  for (int s = 0; s < s_; ++s) {
    int best = 0;
    for (int a = 1; a < a_; ++a) {
      if (q(h, s, a) > q(h, s, best)) {
        best = a;
      }
    }
    action(h, s) = best;
    v(h, s) = q(h, s, best);
  }
}

ValueTables exact_dp(const MixtureMdp& mdp) {
  ValueTables t(mdp.n_states(), mdp.n_actions(), mdp.horizon());
  for (int h = mdp.horizon(); h >= 1; --h) {
    const auto next = t.v_row(h + 1);
    for (int s = 0; s < mdp.n_states(); ++s) {
      for (int a = 0; a < mdp.n_actions(); ++a) {
        t.q(h, s, a) = mdp.reward(s, a) + expected_value(mdp, s, a, next);
      }
    }
    t.greedy(h);
  }
  return t;
}

std::vector<double> evaluate_policy(const MixtureMdp& mdp, const ValueTables& policy) {
  const auto s_n = static_cast<std::size_t>(mdp.n_states());
  std::vector<double> v((static_cast<std::size_t>(mdp.horizon()) + 1) * s_n, 0.0);
  for (int h = mdp.horizon(); h >= 1; --h) {
    const std::span<const double> next(v.data() + static_cast<std::size_t>(h) * s_n, s_n);
    for (int s = 0; s < mdp.n_states(); ++s) {
      const int a = policy.action(h, s);
      v[static_cast<std::size_t>(h - 1) * s_n + static_cast<std::size_t>(s)] =
          mdp.reward(s, a) + expected_value(mdp, s, a, next);
    }
  }
  return v;
}

int sample_next_state(const MixtureMdp& mdp, int s, int a, Rng& rng) {
  const auto row = mdp.mixed_row(s, a);
  const double u = uniform01(rng);
  double cum = 0.0;
  int last = 0;
  for (std::size_t t = 0; t < row.size(); ++t) {
    if (row[t] <= 0.0) {
      continue;
    }
    last = static_cast<int>(t);
    cum += row[t];
    if (u < cum) {
      return last;
    }
  }
  // Rounding left u above the final cumulative sum.
  return last;
}

}  // namespace adavar
