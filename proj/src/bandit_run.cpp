#include <algorithm>
#include <cmath>
#include <ostream>

#include "adavar/bandit.hpp"
#include "adavar/csv.hpp"

namespace adavar {

std::vector<RegretRecord> run_bandit(const BanditInstance& inst, BanditLearner& learner,
                                     std::uint64_t seed, const BanditObserver& observer) {
  Rng arm_rng = make_rng(seed, Stream::kDecisionSet);
  Rng noise_rng = make_rng(seed, Stream::kNoise);
  const Vector& theta_star = inst.theta_star();

  std::vector<RegretRecord> records;
  records.reserve(inst.horizon());
  double cum = 0.0;
  for (std::uint64_t k = 1; k <= inst.horizon(); ++k) {
    const std::vector<Vector> arms = inst.decision_set(k, arm_rng);
    const std::size_t star = best_arm(arms, theta_star);
    const bool covered = learner.covers(theta_star);

    Selection sel = learner.select(arms, k);
    if (sel.arm >= arms.size()) {
      throw std::logic_error("learner selected an arm outside the decision set");
    }
    const double reward = inst.sample_reward(k, arms[sel.arm], noise_rng);
    const Feedback fb{k, arms[sel.arm], reward, inst.sigma(k)};
    learner.update(sel, fb);

    const double regret = (arms[star] - arms[sel.arm]).dot(theta_star);
    cum += regret;
    const bool retained = sel.active.empty() ||
                          std::find(sel.active.begin(), sel.active.end(), star) != sel.active.end();
    records.push_back({k, sel.arm, regret, cum, sel.branch, sel.layer, covered, retained});
    if (observer) {
      observer(sel, fb, learner);
    }
  }
  return records;
}

void write_bandit_csv(std::ostream& os, std::span<const RegretRecord> records) {
  os << "k,arm_index,inst_regret,cum_regret,branch,layer,coverage_flag\n";
  for (const auto& r : records) {
    os << r.k << ',' << r.arm_index << ',' << format_double(r.inst_regret) << ','
       << format_double(r.cum_regret) << ',' << r.branch << ',' << r.layer << ','
       << (r.coverage_flag ? 1 : 0) << '\n';
  }
}

double save_count_cap_unscaled(int ell, std::size_t dim, std::uint64_t horizon,
                               double arm_bound) {
  const double d = static_cast<double>(dim);
  return 2.0 * d *
         std::log1p(std::ldexp(1.0, 2 * ell) * static_cast<double>(horizon) * arm_bound *
                    arm_bound / d);
}

double save_count_cap(int ell, std::size_t dim, std::uint64_t horizon, double arm_bound) {
  // Each insertion contributes exactly 2^{-2l} to the elliptical potential.
  return std::ldexp(1.0, 2 * ell) * save_count_cap_unscaled(ell, dim, horizon, arm_bound);
}

}  // namespace adavar
